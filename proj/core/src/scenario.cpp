#include "leosim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "leosim/version.hpp"

namespace leo::scenario {

using nlohmann::json;

const char* to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::Mrst: return "mrst";
        case PolicyKind::Mac: return "mac";
        case PolicyKind::Mis: return "mis";
        case PolicyKind::QLearning: return "qlearning";
        case PolicyKind::NashDqn: return "nash-dqn";
        case PolicyKind::NashSac: return "nash-sac";
    }
    return "?";
}

std::optional<PolicyKind> parse_policy(const std::string& name) {
    for (PolicyKind p : all_policies())
        if (name == to_string(p)) return p;
    return std::nullopt;
}

bool is_trained(PolicyKind p) {
    return p == PolicyKind::QLearning || p == PolicyKind::NashDqn || p == PolicyKind::NashSac;
}

std::vector<PolicyKind> all_policies() {
    return {PolicyKind::Mrst,      PolicyKind::Mac,     PolicyKind::Mis,
            PolicyKind::QLearning, PolicyKind::NashDqn, PolicyKind::NashSac};
}

namespace {

[[noreturn]] void config_error(const std::string& origin, const std::string& message) {
    throw std::runtime_error(origin + ": " + message);
}

void check_keys(const json& obj, const std::string& origin, const std::string& path,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key))
            config_error(origin, "unknown key '" + (path.empty() ? key : path + "." + key) + "'");
    }
}

class Section {
public:
    Section(const json* obj, std::string origin, std::string path,
            std::vector<std::string>* log)
        : obj_(obj), origin_(std::move(origin)), path_(std::move(path)), log_(log) {}

    bool has(const char* key) const { return obj_ && obj_->contains(key); }

    template <typename T>
    T get(const char* key, T fallback) const {
        if (!has(key)) {
            note_default(key, fallback);
            return fallback;
        }
        try {
            return obj_->at(key).get<T>();
        } catch (const json::exception&) {
            config_error(origin_, "invalid value for '" + dotted(key) + "'");
        }
    }

    const json* child(const char* key) const {
        if (!has(key)) return nullptr;
        if (!obj_->at(key).is_object())
            config_error(origin_, "'" + dotted(key) + "' must be an object");
        return &obj_->at(key);
    }

    std::string dotted(const char* key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    template <typename T>
    void note_default(const char* key, const T& value) const {
        if (!log_) return;
        std::ostringstream os;
        if constexpr (std::is_same_v<T, std::string>)
            os << dotted(key) << " = " << value << " (default)";
        else if constexpr (std::is_same_v<T, bool>)
            os << dotted(key) << " = " << (value ? "true" : "false") << " (default)";
        else
            os << dotted(key) << " = " << value << " (default)";
        log_->push_back(os.str());
    }

    const json* obj_;
    std::string origin_;
    std::string path_;
    std::vector<std::string>* log_;
};

std::array<double, mobility::kNumUserTypes> per_type_values(
    const json* obj, const std::string& origin, const std::string& path,
    std::array<double, mobility::kNumUserTypes> fallback, std::vector<std::string>* log) {
    if (obj) check_keys(*obj, origin, path, {"aircraft", "evtol", "uav", "ground"});
    Section s(obj, origin, path, log);
    std::array<double, mobility::kNumUserTypes> out{};
    const char* names[] = {"aircraft", "evtol", "uav", "ground"};
    for (int i = 0; i < mobility::kNumUserTypes; ++i) out[i] = s.get<double>(names[i], fallback[i]);
    return out;
}

mobility::LatLonBox box_values(const json* obj, const std::string& origin, const std::string& path,
                               mobility::LatLonBox fallback, std::vector<std::string>* log) {
    if (obj) check_keys(*obj, origin, path, {"lat_min", "lat_max", "lon_min", "lon_max"});
    Section s(obj, origin, path, log);
    mobility::LatLonBox b;
    b.lat_min_deg = s.get<double>("lat_min", fallback.lat_min_deg);
    b.lat_max_deg = s.get<double>("lat_max", fallback.lat_max_deg);
    b.lon_min_deg = s.get<double>("lon_min", fallback.lon_min_deg);
    b.lon_max_deg = s.get<double>("lon_max", fallback.lon_max_deg);
    return b;
}

}  // namespace

void ScenarioConfig::validate() const {
    constellation.validate();
    if (counts.total() < 1) throw std::runtime_error("config: users.total must be >= 1");
    if (sim.section_s <= 0.0) throw std::runtime_error("config: sim.section_s must be > 0");
    if (sim.num_sections < 1) throw std::runtime_error("config: sim.duration_s must cover at least one section");
    if (reward.beta <= 0.0) throw std::runtime_error("config: reward.beta must be > 0");
    if (reward.channels_per_sat < 1)
        throw std::runtime_error("config: reward.channels_per_sat must be >= 1");
    if (reward.cinr_scale_db <= 0.0)
        throw std::runtime_error("config: reward.cinr_scale_db must be > 0");
    if (link.carrier_frequency_ghz <= 0.0)
        throw std::runtime_error("config: link.carrier_frequency_ghz must be > 0");
    if (link.bandwidth_mhz <= 0.0) throw std::runtime_error("config: link.bandwidth_mhz must be > 0");
    if (link.min_elevation_deg <= 0.0 || link.min_elevation_deg >= 90.0)
        throw std::runtime_error("config: link.min_elevation_deg must be in (0, 90)");
    if (spawn.noise_temp_min_k > spawn.noise_temp_max_k)
        throw std::runtime_error("config: link.noise_temperature_k.min must be <= max");
    if (spawn.destinations.empty())
        throw std::runtime_error("config: users.destinations must not be empty");
    for (const auto& d : spawn.destinations)
        if (d.weight < 0.0) throw std::runtime_error("config: destination weight must be >= 0");
    if (train.sac.gamma <= 0.0 || train.sac.gamma >= 1.0)
        throw std::runtime_error("config: train.sac.gamma must be in (0, 1)");
    if (train.dqn.gamma <= 0.0 || train.dqn.gamma >= 1.0)
        throw std::runtime_error("config: train.dqn.gamma must be in (0, 1)");
    if (train.qlearn.gamma <= 0.0 || train.qlearn.gamma >= 1.0)
        throw std::runtime_error("config: train.qlearn.gamma must be in (0, 1)");
    if (train.sac.tau <= 0.0 || train.sac.tau > 1.0)
        throw std::runtime_error("config: train.sac.tau must be in (0, 1]");
    if (train.episodes < 0 || train.q_episodes < 0)
        throw std::runtime_error("config: training episode counts must be >= 0");
    if (seeds.empty()) throw std::runtime_error("config: seeds must not be empty");
    if (!parse_policy(policy)) throw std::runtime_error("config: unknown policy '" + policy + "'");
}

LoadReport parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "at line L, column C" in the message
        throw std::runtime_error(origin + ": " + e.what());
    }
    if (!root.is_object()) config_error(origin, "top level must be an object");

    LoadReport report;
    auto* log = &report.applied_defaults;
    ScenarioConfig& cfg = report.config;

    check_keys(root, origin, "",
               {"constellation", "users", "link", "reward", "sim", "scenario", "policy", "seeds",
                "train"});

    {
        const json* c = root.contains("constellation") ? &root.at("constellation") : nullptr;
        if (c)
            check_keys(*c, origin, "constellation",
                       {"num_planes", "sats_per_plane", "altitude_km", "inclination_deg",
                        "raan_spread_deg", "phase_offset", "elements_file"});
        Section s(c, origin, "constellation", log);
        cfg.constellation.num_planes = s.get<int>("num_planes", 12);
        cfg.constellation.sats_per_plane = s.get<int>("sats_per_plane", 49);
        cfg.constellation.altitude_km = s.get<double>("altitude_km", 1200.0);
        cfg.constellation.inclination_deg = s.get<double>("inclination_deg", 87.9);
        cfg.constellation.raan_spread_deg = s.get<double>("raan_spread_deg", 180.0);
        cfg.constellation.phase_offset = s.get<double>("phase_offset", 0.0);
        if (s.has("elements_file"))
            cfg.elements_file = s.get<std::string>("elements_file", std::string{});
    }

    {
        const json* u = root.contains("users") ? &root.at("users") : nullptr;
        if (u)
            check_keys(*u, origin, "users",
                       {"aircraft", "evtol", "uav", "ground", "ground_box", "fv_box",
                        "altitudes_km", "speeds_kmh", "destinations"});
        Section s(u, origin, "users", log);
        cfg.counts.aircraft = s.get<int>("aircraft", 10);
        cfg.counts.evtol = s.get<int>("evtol", 10);
        cfg.counts.uav = s.get<int>("uav", 10);
        cfg.counts.ground = s.get<int>("ground", 50);
        cfg.spawn.ground_box = box_values(u && u->contains("ground_box") ? &u->at("ground_box") : nullptr,
                                          origin, "users.ground_box", cfg.spawn.ground_box, log);
        cfg.spawn.fv_box = box_values(u && u->contains("fv_box") ? &u->at("fv_box") : nullptr,
                                      origin, "users.fv_box", cfg.spawn.fv_box, log);
        cfg.spawn.altitude_km =
            per_type_values(u && u->contains("altitudes_km") ? &u->at("altitudes_km") : nullptr,
                            origin, "users.altitudes_km", cfg.spawn.altitude_km, log);
        cfg.spawn.speed_kmh =
            per_type_values(u && u->contains("speeds_kmh") ? &u->at("speeds_kmh") : nullptr,
                            origin, "users.speeds_kmh", cfg.spawn.speed_kmh, log);
        if (u && u->contains("destinations")) {
            const auto& arr = u->at("destinations");
            if (!arr.is_array()) config_error(origin, "users.destinations must be an array");
            cfg.spawn.destinations.clear();
            for (const auto& d : arr) {
                check_keys(d, origin, "users.destinations[]", {"name", "lat", "lon", "weight"});
                mobility::Destination dest;
                dest.name = d.at("name").get<std::string>();
                dest.point = {d.at("lat").get<double>(), d.at("lon").get<double>(), 0.0};
                dest.weight = d.at("weight").get<double>();
                cfg.spawn.destinations.push_back(dest);
            }
        } else {
            log->push_back("users.destinations = Helsinki/Kiruna/Copenhagen/Oslo (default)");
        }
    }

    {
        const json* l = root.contains("link") ? &root.at("link") : nullptr;
        if (l)
            check_keys(*l, origin, "link",
                       {"carrier_frequency_ghz", "bandwidth_mhz", "eirp_dbm", "gt_over_t_db",
                        "polarization_isolation_db", "min_elevation_deg", "cinr_threshold_db",
                        "noise_temperature_k", "perturb_gt_with_noise_temp"});
        Section s(l, origin, "link", log);
        cfg.link.carrier_frequency_ghz = s.get<double>("carrier_frequency_ghz", 18.5);
        cfg.link.bandwidth_mhz = s.get<double>("bandwidth_mhz", 250.0);
        cfg.link.eirp_dbm = s.get<double>("eirp_dbm", 73.1);
        cfg.link.polarization_isolation_db = s.get<double>("polarization_isolation_db", 12.0);
        cfg.link.min_elevation_deg = s.get<double>("min_elevation_deg", 15.0);
        cfg.link.cinr_threshold_db = s.get<double>("cinr_threshold_db", 0.0);
        cfg.spawn.gt_over_t_db =
            per_type_values(l && l->contains("gt_over_t_db") ? &l->at("gt_over_t_db") : nullptr,
                            origin, "link.gt_over_t_db", cfg.spawn.gt_over_t_db, log);
        const json* nt =
            l && l->contains("noise_temperature_k") ? &l->at("noise_temperature_k") : nullptr;
        if (nt) check_keys(*nt, origin, "link.noise_temperature_k", {"min", "max"});
        Section nts(nt, origin, "link.noise_temperature_k", log);
        cfg.spawn.noise_temp_min_k = nts.get<double>("min", 213.15);
        cfg.spawn.noise_temp_max_k = nts.get<double>("max", 273.15);
        cfg.spawn.perturb_gt_with_noise_temp = s.get<bool>("perturb_gt_with_noise_temp", false);
    }

    {
        const json* r = root.contains("reward") ? &root.at("reward") : nullptr;
        if (r)
            check_keys(*r, origin, "reward",
                       {"beta", "w1", "w2", "w3", "channels_per_sat", "normalize",
                        "cinr_scale_db", "rho_scale_s"});
        Section s(r, origin, "reward", log);
        cfg.reward.beta = s.get<double>("beta", 1.0);
        cfg.reward.w1 = s.get<double>("w1", 1.0 / 3.0);
        cfg.reward.w2 = s.get<double>("w2", 1.0 / 3.0);
        cfg.reward.w3 = s.get<double>("w3", 1.0 / 3.0);
        cfg.reward.channels_per_sat = s.get<int>("channels_per_sat", 8);
        cfg.reward.normalize = s.get<bool>("normalize", true);
        cfg.reward.cinr_scale_db = s.get<double>("cinr_scale_db", 30.0);
        cfg.reward.rho_scale_s = s.get<double>("rho_scale_s", -1.0);  // -1: episode length
    }

    {
        const json* m = root.contains("sim") ? &root.at("sim") : nullptr;
        if (m) check_keys(*m, origin, "sim", {"section_s", "duration_s"});
        Section s(m, origin, "sim", log);
        cfg.sim.section_s = s.get<double>("section_s", 10.0);
        const double duration = s.get<double>("duration_s", 900.0);
        if (cfg.sim.section_s <= 0.0) config_error(origin, "sim.section_s must be > 0");
        const double sections = duration / cfg.sim.section_s;
        cfg.sim.num_sections = static_cast<int>(std::llround(sections));
        if (std::fabs(sections - cfg.sim.num_sections) > 1e-9)
            config_error(origin, "sim.section_s must divide sim.duration_s");
    }

    {
        const std::string tag =
            Section(&root, origin, "", log).get<std::string>("scenario", std::string("s2"));
        if (tag != "s1" && tag != "s2") config_error(origin, "scenario must be 's1' or 's2'");
        cfg.fv_priority = tag == "s1";
        cfg.policy = Section(&root, origin, "", nullptr).get<std::string>("policy", cfg.policy);
        if (root.contains("seeds")) {
            cfg.seeds.clear();
            for (const auto& v : root.at("seeds")) cfg.seeds.push_back(v.get<std::uint64_t>());
        } else {
            log->push_back("seeds = [1] (default)");
        }
    }

    {
        const json* t = root.contains("train") ? &root.at("train") : nullptr;
        if (t)
            check_keys(*t, origin, "train",
                       {"episodes", "q_episodes", "sac", "dqn", "qlearn",
                        "nash_max_rounds_factor", "nash_stochastic_rounds", "shared_weights"});
        Section s(t, origin, "train", log);
        cfg.train.episodes = s.get<int>("episodes", cfg.train.episodes);
        cfg.train.q_episodes = s.get<int>("q_episodes", cfg.train.q_episodes);
        cfg.train.nash_max_rounds_factor =
            s.get<int>("nash_max_rounds_factor", cfg.train.nash_max_rounds_factor);
        cfg.train.nash_stochastic_rounds =
            s.get<int>("nash_stochastic_rounds", cfg.train.nash_stochastic_rounds);
        cfg.train.shared_weights = s.get<bool>("shared_weights", cfg.train.shared_weights);

        const json* sac = t && t->contains("sac") ? &t->at("sac") : nullptr;
        if (sac)
            check_keys(*sac, origin, "train.sac",
                       {"hidden", "gamma", "tau", "lr_q", "lr_pi", "lr_alpha", "init_alpha",
                        "batch_size", "buffer_capacity", "min_buffer", "target_entropy_scale"});
        Section ss(sac, origin, "train.sac", log);
        if (ss.has("hidden")) cfg.train.sac.hidden = sac->at("hidden").get<std::vector<int>>();
        cfg.train.sac.gamma = ss.get<double>("gamma", cfg.train.sac.gamma);
        cfg.train.sac.tau = ss.get<double>("tau", cfg.train.sac.tau);
        cfg.train.sac.lr_q = ss.get<double>("lr_q", cfg.train.sac.lr_q);
        cfg.train.sac.lr_pi = ss.get<double>("lr_pi", cfg.train.sac.lr_pi);
        cfg.train.sac.lr_alpha = ss.get<double>("lr_alpha", cfg.train.sac.lr_alpha);
        cfg.train.sac.init_alpha = ss.get<double>("init_alpha", cfg.train.sac.init_alpha);
        cfg.train.sac.batch_size = ss.get<int>("batch_size", cfg.train.sac.batch_size);
        cfg.train.sac.buffer_capacity =
            ss.get<std::size_t>("buffer_capacity", cfg.train.sac.buffer_capacity);
        cfg.train.sac.min_buffer = ss.get<std::size_t>("min_buffer", cfg.train.sac.min_buffer);
        cfg.train.sac.target_entropy_scale =
            ss.get<double>("target_entropy_scale", cfg.train.sac.target_entropy_scale);

        const json* dqn = t && t->contains("dqn") ? &t->at("dqn") : nullptr;
        if (dqn)
            check_keys(*dqn, origin, "train.dqn",
                       {"hidden", "gamma", "tau", "lr", "batch_size", "buffer_capacity",
                        "min_buffer", "epsilon_start", "epsilon_end", "epsilon_decay_episodes"});
        Section ds(dqn, origin, "train.dqn", log);
        if (ds.has("hidden")) cfg.train.dqn.hidden = dqn->at("hidden").get<std::vector<int>>();
        cfg.train.dqn.gamma = ds.get<double>("gamma", cfg.train.dqn.gamma);
        cfg.train.dqn.tau = ds.get<double>("tau", cfg.train.dqn.tau);
        cfg.train.dqn.lr = ds.get<double>("lr", cfg.train.dqn.lr);
        cfg.train.dqn.batch_size = ds.get<int>("batch_size", cfg.train.dqn.batch_size);
        cfg.train.dqn.buffer_capacity =
            ds.get<std::size_t>("buffer_capacity", cfg.train.dqn.buffer_capacity);
        cfg.train.dqn.min_buffer = ds.get<std::size_t>("min_buffer", cfg.train.dqn.min_buffer);
        cfg.train.dqn.epsilon_start = ds.get<double>("epsilon_start", cfg.train.dqn.epsilon_start);
        cfg.train.dqn.epsilon_end = ds.get<double>("epsilon_end", cfg.train.dqn.epsilon_end);
        cfg.train.dqn.epsilon_decay_episodes =
            ds.get<int>("epsilon_decay_episodes", cfg.train.dqn.epsilon_decay_episodes);

        const json* ql = t && t->contains("qlearn") ? &t->at("qlearn") : nullptr;
        if (ql)
            check_keys(*ql, origin, "train.qlearn",
                       {"learning_rate", "gamma", "epsilon_start", "epsilon_end",
                        "epsilon_decay_episodes"});
        Section qs(ql, origin, "train.qlearn", log);
        cfg.train.qlearn.learning_rate =
            qs.get<double>("learning_rate", cfg.train.qlearn.learning_rate);
        cfg.train.qlearn.gamma = qs.get<double>("gamma", cfg.train.qlearn.gamma);
        cfg.train.qlearn.epsilon_start =
            qs.get<double>("epsilon_start", cfg.train.qlearn.epsilon_start);
        cfg.train.qlearn.epsilon_end = qs.get<double>("epsilon_end", cfg.train.qlearn.epsilon_end);
        cfg.train.qlearn.epsilon_decay_episodes =
            qs.get<int>("epsilon_decay_episodes", cfg.train.qlearn.epsilon_decay_episodes);
    }

    if (cfg.reward.rho_scale_s <= 0.0) cfg.reward.rho_scale_s = cfg.sim.episode_s();
    cfg.validate();
    return report;
}

LoadReport load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

std::string serialize_config(const ScenarioConfig& c) {
    json j;
    j["constellation"] = {{"num_planes", c.constellation.num_planes},
                          {"sats_per_plane", c.constellation.sats_per_plane},
                          {"altitude_km", c.constellation.altitude_km},
                          {"inclination_deg", c.constellation.inclination_deg},
                          {"raan_spread_deg", c.constellation.raan_spread_deg},
                          {"phase_offset", c.constellation.phase_offset}};
    if (c.elements_file) j["constellation"]["elements_file"] = *c.elements_file;
    json dests = json::array();
    for (const auto& d : c.spawn.destinations)
        dests.push_back({{"name", d.name},
                         {"lat", d.point.latitude_deg},
                         {"lon", d.point.longitude_deg},
                         {"weight", d.weight}});
    auto box = [](const mobility::LatLonBox& b) {
        return json{{"lat_min", b.lat_min_deg},
                    {"lat_max", b.lat_max_deg},
                    {"lon_min", b.lon_min_deg},
                    {"lon_max", b.lon_max_deg}};
    };
    auto per_type = [](const std::array<double, mobility::kNumUserTypes>& v) {
        return json{{"aircraft", v[0]}, {"evtol", v[1]}, {"uav", v[2]}, {"ground", v[3]}};
    };
    j["users"] = {{"aircraft", c.counts.aircraft}, {"evtol", c.counts.evtol},
                  {"uav", c.counts.uav},           {"ground", c.counts.ground},
                  {"ground_box", box(c.spawn.ground_box)}, {"fv_box", box(c.spawn.fv_box)},
                  {"altitudes_km", per_type(c.spawn.altitude_km)},
                  {"speeds_kmh", per_type(c.spawn.speed_kmh)}, {"destinations", dests}};
    j["link"] = {{"carrier_frequency_ghz", c.link.carrier_frequency_ghz},
                 {"bandwidth_mhz", c.link.bandwidth_mhz},
                 {"eirp_dbm", c.link.eirp_dbm},
                 {"gt_over_t_db", per_type(c.spawn.gt_over_t_db)},
                 {"polarization_isolation_db", c.link.polarization_isolation_db},
                 {"min_elevation_deg", c.link.min_elevation_deg},
                 {"cinr_threshold_db", c.link.cinr_threshold_db},
                 {"noise_temperature_k",
                  {{"min", c.spawn.noise_temp_min_k}, {"max", c.spawn.noise_temp_max_k}}},
                 {"perturb_gt_with_noise_temp", c.spawn.perturb_gt_with_noise_temp}};
    j["reward"] = {{"beta", c.reward.beta},
                   {"w1", c.reward.w1},
                   {"w2", c.reward.w2},
                   {"w3", c.reward.w3},
                   {"channels_per_sat", c.reward.channels_per_sat},
                   {"normalize", c.reward.normalize},
                   {"cinr_scale_db", c.reward.cinr_scale_db},
                   {"rho_scale_s", c.reward.rho_scale_s}};
    j["sim"] = {{"section_s", c.sim.section_s}, {"duration_s", c.sim.episode_s()}};
    j["scenario"] = c.fv_priority ? "s1" : "s2";
    j["policy"] = c.policy;
    j["seeds"] = c.seeds;
    j["train"] = {
        {"episodes", c.train.episodes},
        {"q_episodes", c.train.q_episodes},
        {"nash_max_rounds_factor", c.train.nash_max_rounds_factor},
        {"nash_stochastic_rounds", c.train.nash_stochastic_rounds},
        {"shared_weights", c.train.shared_weights},
        {"sac",
         {{"hidden", c.train.sac.hidden},
          {"gamma", c.train.sac.gamma},
          {"tau", c.train.sac.tau},
          {"lr_q", c.train.sac.lr_q},
          {"lr_pi", c.train.sac.lr_pi},
          {"lr_alpha", c.train.sac.lr_alpha},
          {"init_alpha", c.train.sac.init_alpha},
          {"batch_size", c.train.sac.batch_size},
          {"buffer_capacity", c.train.sac.buffer_capacity},
          {"min_buffer", c.train.sac.min_buffer},
          {"target_entropy_scale", c.train.sac.target_entropy_scale}}},
        {"dqn",
         {{"hidden", c.train.dqn.hidden},
          {"gamma", c.train.dqn.gamma},
          {"tau", c.train.dqn.tau},
          {"lr", c.train.dqn.lr},
          {"batch_size", c.train.dqn.batch_size},
          {"buffer_capacity", c.train.dqn.buffer_capacity},
          {"min_buffer", c.train.dqn.min_buffer},
          {"epsilon_start", c.train.dqn.epsilon_start},
          {"epsilon_end", c.train.dqn.epsilon_end},
          {"epsilon_decay_episodes", c.train.dqn.epsilon_decay_episodes}}},
        {"qlearn",
         {{"learning_rate", c.train.qlearn.learning_rate},
          {"gamma", c.train.qlearn.gamma},
          {"epsilon_start", c.train.qlearn.epsilon_start},
          {"epsilon_end", c.train.qlearn.epsilon_end},
          {"epsilon_decay_episodes", c.train.qlearn.epsilon_decay_episodes}}}};
    return j.dump(2);
}

std::uint64_t config_hash(const ScenarioConfig& config) {
    const std::string s = serialize_config(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const ScenarioConfig& config) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(config)));
    return buf;
}

std::string RunManifest::to_json() const {
    json j;
    j["run_id"] = run_id;
    j["policy"] = policy;
    j["seed"] = seed;
    j["L"] = L;
    j["scenario"] = scenario;
    j["config_hash"] = config_hash;
    j["version"] = version;
    return j.dump(2);
}

env::HandoverEnv build_env(const ScenarioConfig& config, std::uint64_t seed, int L,
                           bool fv_priority) {
    std::vector<orbits::SatelliteState> sats;
    if (config.elements_file) {
        sats = orbits::load_orbital_elements(*config.elements_file);
    } else {
        sats = orbits::generate_walker(config.constellation);
    }
    mobility::SpawnParams spawn = config.spawn;
    spawn.noise_temp_min_k = config.spawn.noise_temp_min_k;
    spawn.noise_temp_max_k = config.spawn.noise_temp_max_k;
    auto users = mobility::spawn_users(Rng(seed).child("spawn"), config.counts, spawn);
    env::RewardParams reward = config.reward;
    reward.channels_per_sat = L;
    reward.cinr_threshold_db = config.link.cinr_threshold_db;
    return env::HandoverEnv(std::move(sats), std::move(users), config.link, reward, config.sim,
                            fv_priority);
}

JointDecider make_heuristic_decider(PolicyKind policy) {
    std::shared_ptr<agents::Policy> impl;
    switch (policy) {
        case PolicyKind::Mrst: impl = std::make_shared<agents::MrstPolicy>(); break;
        case PolicyKind::Mac: impl = std::make_shared<agents::MacPolicy>(); break;
        case PolicyKind::Mis: impl = std::make_shared<agents::MisPolicy>(); break;
        default: throw std::invalid_argument("not a heuristic policy");
    }
    return [impl](const env::HandoverEnv& e) {
        std::vector<env::Action> actions(e.num_users());
        for (int k = 0; k < e.num_users(); ++k)
            actions[k] = impl->act(e.observation(k), {e.previous_association(k)});
        return actions;
    };
}

void run_episode(env::HandoverEnv& e, const JointDecider& decider) {
    e.reset();
    while (!e.done()) e.step(decider(e));
}

std::string run_id_for(const RunSpec& spec) {
    std::ostringstream os;
    os << to_string(spec.policy) << "_" << (spec.fv_priority ? "s1" : "s2") << "_L" << spec.L
       << "_seed" << spec.seed;
    return os.str();
}

namespace {

metrics::RunMetricsRow row_from_metrics(const RunSpec& spec, const std::string& run_id,
                                        const metrics::EpisodeMetrics& em) {
    metrics::RunMetricsRow row;
    row.run_id = run_id;
    row.policy = to_string(spec.policy);
    row.seed = spec.seed;
    row.L = spec.L;
    row.scenario = spec.fv_priority ? "s1" : "s2";
    row.total_handovers = em.total_handovers;
    row.avg_handovers_per_user = static_cast<double>(em.total_handovers) / em.num_users;
    row.blocking = em.blocking;
    row.psi_total = em.psi_total;
    row.psi_by_type = em.psi_by_type;
    return row;
}

std::vector<metrics::CdfRow> cdf_rows_for(const metrics::EpisodeMetrics& em,
                                          const std::string& scenario) {
    std::vector<metrics::CdfRow> rows;
    for (int ti = 0; ti < mobility::kNumUserTypes; ++ti) {
        std::vector<double> samples;
        for (const auto& u : em.users)
            if (static_cast<int>(u.type) == ti)
                samples.insert(samples.end(), u.cinr_samples_db.begin(),
                               u.cinr_samples_db.end());
        const auto type = static_cast<mobility::UserType>(ti);
        for (const auto& p : metrics::cinr_cdf(std::move(samples)))
            rows.push_back({scenario, mobility::to_string(type), p.value, p.cdf});
    }
    return rows;
}

metrics::EpisodeMetrics metrics_for_env(const env::HandoverEnv& e) {
    metrics::UtilityParams up;
    up.num_sections = e.num_sections();
    up.normalize = e.reward_params().normalize;
    up.cinr_scale_db = e.reward_params().cinr_scale_db;
    return metrics::compute_metrics(e.trace(), e.num_users(), e.num_sections(),
                                    e.reward_params().w1, e.reward_params().w2,
                                    e.reward_params().w3, up);
}

}  // namespace

RunOutput execute_run(const ScenarioConfig& config, const RunSpec& spec,
                      const std::string& out_dir, bool write_link_trace,
                      int episodes_override) {
    RunOutput out;
    const std::string run_id = run_id_for(spec);
    out.manifest.run_id = run_id;
    out.manifest.policy = to_string(spec.policy);
    out.manifest.seed = spec.seed;
    out.manifest.L = spec.L;
    out.manifest.scenario = spec.fv_priority ? "s1" : "s2";
    out.manifest.config_hash = config_hash_hex(config);
    out.manifest.version = kVersion;

    const std::string run_dir = out_dir + "/" + run_id;
    std::filesystem::create_directories(run_dir);

    env::HandoverEnv e = build_env(config, spec.seed, spec.L, spec.fv_priority);
    const std::uint64_t train_seed = Rng(spec.seed).child("train").save_state()[0];

    switch (spec.policy) {
        case PolicyKind::Mrst:
        case PolicyKind::Mac:
        case PolicyKind::Mis: {
            run_episode(e, make_heuristic_decider(spec.policy));
            break;
        }
        case PolicyKind::QLearning: {
            agents::QLearningTrainer trainer(config.train, e, train_seed);
            const int episodes =
                episodes_override >= 0 ? episodes_override : config.train.q_episodes;
            trainer.run(e, episodes);
            agents::write_training_curve_csv(run_dir + "/training_curve.csv", trainer.curve());
            trainer.save(run_dir + "/checkpoint");
            run_episode(e, [&](const env::HandoverEnv& env_ref) {
                return trainer.decide_eval(env_ref);
            });
            break;
        }
        case PolicyKind::NashDqn: {
            agents::NashDqnTrainer trainer(config.train, e, train_seed);
            const int episodes = episodes_override >= 0 ? episodes_override : config.train.episodes;
            trainer.run(e, episodes);
            agents::write_training_curve_csv(run_dir + "/training_curve.csv", trainer.curve());
            trainer.save(run_dir + "/checkpoint");
            run_episode(e, [&](const env::HandoverEnv& env_ref) {
                return trainer.decide_eval(env_ref);
            });
            break;
        }
        case PolicyKind::NashSac: {
            agents::NashSacTrainer trainer(config.train, e, train_seed);
            const int episodes = episodes_override >= 0 ? episodes_override : config.train.episodes;
            trainer.run(e, episodes);
            agents::write_training_curve_csv(run_dir + "/training_curve.csv", trainer.curve());
            trainer.save(run_dir + "/checkpoint");
            run_episode(e, [&](const env::HandoverEnv& env_ref) {
                return trainer.decide_eval(env_ref);
            });
            break;
        }
    }

    const auto em = metrics_for_env(e);
    out.row = row_from_metrics(spec, run_id, em);
    metrics::write_trace_csv(run_dir + "/trace.csv", e.trace());
    metrics::write_metrics_csv(run_dir + "/metrics.csv", {out.row});
    metrics::write_cdf_csv(run_dir + "/cdf.csv",
                           cdf_rows_for(em, spec.fv_priority ? "s1" : "s2"));
    if (write_link_trace) metrics::write_link_csv(run_dir + "/link_trace.csv", e);
    {
        std::ofstream mf(run_dir + "/manifest.json");
        mf << out.manifest.to_json() << "\n";
    }
    out.ok = true;
    return out;
}

std::vector<RunOutput> run_matrix(const ScenarioConfig& config,
                                  const std::vector<PolicyKind>& policies,
                                  const std::vector<int>& L_values,
                                  const std::vector<bool>& scenarios,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::string& out_dir, int jobs, bool write_link_trace,
                                  int episodes_override) {
    std::vector<RunSpec> specs;
    for (PolicyKind p : policies)
        for (int L : L_values)
            for (bool s1 : scenarios)
                for (std::uint64_t seed : seeds) specs.push_back({p, seed, L, s1});

    std::vector<RunOutput> outputs(specs.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) break;
            try {
                outputs[i] = execute_run(config, specs[i], out_dir, write_link_trace,
                                         episodes_override);
            } catch (const std::exception& e) {
                outputs[i].ok = false;
                outputs[i].manifest.run_id = run_id_for(specs[i]);
                outputs[i].error = e.what();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::vector<metrics::RunMetricsRow> rows;
    for (const auto& o : outputs)
        if (o.ok) rows.push_back(o.row);
    std::filesystem::create_directories(out_dir);
    metrics::write_metrics_csv(out_dir + "/summary.csv", rows);
    return outputs;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double BenchmarkReport::mean_total_handovers(PolicyKind p, int L) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : rows)
        if (r.policy == to_string(p) && r.L == L && r.scenario == "s2") {
            sum += static_cast<double>(r.total_handovers);
            ++count;
        }
    return count > 0 ? sum / count : 0.0;
}

double BenchmarkReport::mean_blocking(PolicyKind p, int L) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : rows)
        if (r.policy == to_string(p) && r.L == L && r.scenario == "s2") {
            sum += static_cast<double>(r.blocking);
            ++count;
        }
    return count > 0 ? sum / count : 0.0;
}

double BenchmarkReport::mean_psi(PolicyKind p, int L) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : rows)
        if (r.policy == to_string(p) && r.L == L && r.scenario == "s2") {
            sum += r.psi_total;
            ++count;
        }
    return count > 0 ? sum / count : 0.0;
}

std::vector<double> BenchmarkReport::psi_by_seed(PolicyKind p, int L) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.policy == to_string(p) && r.L == L && r.scenario == "s2") out.push_back(r.psi_total);
    return out;
}

std::vector<double> BenchmarkReport::cinr_samples(PolicyKind p, const std::string& scenario,
                                                  mobility::UserType type) const {
    std::vector<double> samples;
    for (const auto& [run_id, em] : episodes) {
        if (run_id.rfind(std::string(to_string(p)) + "_" + scenario + "_L" +
                             std::to_string(train_L) + "_",
                         0) != 0)
            continue;
        for (const auto& u : em.users)
            if (u.type == type)
                samples.insert(samples.end(), u.cinr_samples_db.begin(), u.cinr_samples_db.end());
    }
    return samples;
}

BenchmarkReport run_benchmark(const ScenarioConfig& config, const BenchmarkOptions& options) {
    BenchmarkReport report;
    report.train_L = config.reward.channels_per_sat;
    std::vector<int> L_sweep = options.L_sweep;
    if (L_sweep.empty()) L_sweep = {report.train_L};
    if (std::find(L_sweep.begin(), L_sweep.end(), report.train_L) == L_sweep.end())
        L_sweep.push_back(report.train_L);
    std::sort(L_sweep.begin(), L_sweep.end());

    struct Job {
        PolicyKind policy;
        std::uint64_t seed;
    };
    std::vector<Job> jobs_list;
    for (PolicyKind p : options.policies)
        for (std::uint64_t seed : options.seeds) jobs_list.push_back({p, seed});

    struct JobResult {
        std::vector<metrics::RunMetricsRow> rows;
        std::vector<std::pair<std::string, metrics::EpisodeMetrics>> episodes;
        std::string error;
        bool ok = false;
    };
    std::vector<JobResult> results(jobs_list.size());

    auto eval_into = [&](env::HandoverEnv& e, const JointDecider& decider, const RunSpec& spec,
                         JobResult& res) {
        run_episode(e, decider);
        const auto em = metrics_for_env(e);
        const std::string run_id = run_id_for(spec);
        res.rows.push_back(row_from_metrics(spec, run_id, em));
        res.episodes.push_back({run_id, em});
        const std::string run_dir = options.out_dir + "/" + run_id;
        std::filesystem::create_directories(run_dir);
        metrics::write_trace_csv(run_dir + "/trace.csv", e.trace());
        metrics::write_metrics_csv(run_dir + "/metrics.csv", {res.rows.back()});
        metrics::write_cdf_csv(run_dir + "/cdf.csv", cdf_rows_for(em, spec.fv_priority ? "s1" : "s2"));
        RunManifest manifest;
        manifest.run_id = run_id;
        manifest.policy = to_string(spec.policy);
        manifest.seed = spec.seed;
        manifest.L = spec.L;
        manifest.scenario = spec.fv_priority ? "s1" : "s2";
        manifest.config_hash = config_hash_hex(config);
        manifest.version = kVersion;
        std::ofstream mf(run_dir + "/manifest.json");
        mf << manifest.to_json() << "\n";
    };

    auto run_job = [&](const Job& job, JobResult& res) {
        const int train_L = report.train_L;
        env::HandoverEnv train_env = build_env(config, job.seed, train_L, false);
        const std::uint64_t train_seed = Rng(job.seed).child("train").save_state()[0];

        JointDecider decider;
        std::unique_ptr<agents::QLearningTrainer> qtrainer;
        std::unique_ptr<agents::NashDqnTrainer> dqn_trainer;
        std::unique_ptr<agents::NashSacTrainer> sac_trainer;
        switch (job.policy) {
            case PolicyKind::Mrst:
            case PolicyKind::Mac:
            case PolicyKind::Mis: decider = make_heuristic_decider(job.policy); break;
            case PolicyKind::QLearning: {
                qtrainer = std::make_unique<agents::QLearningTrainer>(config.train, train_env,
                                                                      train_seed);
                const int episodes = options.episodes_override >= 0 ? options.episodes_override
                                                                    : config.train.q_episodes;
                qtrainer->run(train_env, episodes);
                decider = [&t = *qtrainer](const env::HandoverEnv& e) { return t.decide_eval(e); };
                break;
            }
            case PolicyKind::NashDqn: {
                dqn_trainer = std::make_unique<agents::NashDqnTrainer>(config.train, train_env,
                                                                       train_seed);
                const int episodes = options.episodes_override >= 0 ? options.episodes_override
                                                                    : config.train.episodes;
                dqn_trainer->run(train_env, episodes);
                decider = [&t = *dqn_trainer](const env::HandoverEnv& e) {
                    return t.decide_eval(e);
                };
                break;
            }
            case PolicyKind::NashSac: {
                sac_trainer = std::make_unique<agents::NashSacTrainer>(config.train, train_env,
                                                                       train_seed);
                const int episodes = options.episodes_override >= 0 ? options.episodes_override
                                                                    : config.train.episodes;
                sac_trainer->run(train_env, episodes);
                decider = [&t = *sac_trainer](const env::HandoverEnv& e) {
                    return t.decide_eval(e);
                };
                break;
            }
        }
        if (is_trained(job.policy)) {
            const std::string train_dir = options.out_dir + "/train_" +
                                          std::string(to_string(job.policy)) + "_seed" +
                                          std::to_string(job.seed);
            std::filesystem::create_directories(train_dir);
            if (qtrainer) {
                agents::write_training_curve_csv(train_dir + "/training_curve.csv",
                                                 qtrainer->curve());
                qtrainer->save(train_dir + "/checkpoint");
            }
            if (dqn_trainer) {
                agents::write_training_curve_csv(train_dir + "/training_curve.csv",
                                                 dqn_trainer->curve());
                dqn_trainer->save(train_dir + "/checkpoint");
            }
            if (sac_trainer) {
                agents::write_training_curve_csv(train_dir + "/training_curve.csv",
                                                 sac_trainer->curve());
                sac_trainer->save(train_dir + "/checkpoint");
            }
        }

        for (int L : L_sweep) {
            env::HandoverEnv eval_env = build_env(config, job.seed, L, false);
            eval_into(eval_env, decider, {job.policy, job.seed, L, false}, res);
        }
        if (options.include_fig5 && job.policy == PolicyKind::NashSac) {
            env::HandoverEnv eval_env = build_env(config, job.seed, report.train_L, true);
            eval_into(eval_env, decider, {job.policy, job.seed, report.train_L, true}, res);
        }
        res.ok = true;
    };

    std::atomic<std::size_t> next{0};
    const int workers =
        std::max(1, std::min<int>(options.jobs, static_cast<int>(jobs_list.size())));
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs_list.size()) break;
            try {
                run_job(jobs_list[i], results[i]);
            } catch (const std::exception& e) {
                results[i].ok = false;
                results[i].error = e.what();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::string errors;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].ok) {
            errors += std::string(to_string(jobs_list[i].policy)) + " seed " +
                      std::to_string(jobs_list[i].seed) + ": " + results[i].error + "\n";
            continue;
        }
        for (auto& r : results[i].rows) report.rows.push_back(r);
        for (auto& [id, em] : results[i].episodes) report.episodes.emplace(id, std::move(em));
    }
    if (!errors.empty()) throw std::runtime_error("benchmark runs failed:\n" + errors);

    std::filesystem::create_directories(options.out_dir);
    metrics::write_metrics_csv(options.out_dir + "/summary.csv", report.rows);
    return report;
}

HeadlineDeltas headline_deltas(const BenchmarkReport& report) {
    HeadlineDeltas d;
    const int L = report.train_L;
    const double ho_ql = report.mean_total_handovers(PolicyKind::QLearning, L);
    const double ho_ns = report.mean_total_handovers(PolicyKind::NashSac, L);
    if (ho_ql > 0.0) d.handover_reduction_vs_qlearning_pct = 100.0 * (ho_ql - ho_ns) / ho_ql;
    const double bl_ql = report.mean_blocking(PolicyKind::QLearning, L);
    const double bl_ns = report.mean_blocking(PolicyKind::NashSac, L);
    if (bl_ql > 0.0) d.blocking_improvement_vs_qlearning_pct = 100.0 * (bl_ql - bl_ns) / bl_ql;

    std::vector<std::pair<double, PolicyKind>> order;
    for (PolicyKind p : all_policies()) order.push_back({report.mean_psi(p, L), p});
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [psi, p] : order) d.utility_order.push_back(to_string(p));

    const double worst_heuristic =
        std::min({report.mean_psi(PolicyKind::Mrst, L), report.mean_psi(PolicyKind::Mac, L),
                  report.mean_psi(PolicyKind::Mis, L)});
    const double ns = report.mean_psi(PolicyKind::NashSac, L);
    if (std::fabs(worst_heuristic) > 1e-12)
        d.utility_gain_vs_worst_heuristic_pct =
            100.0 * (ns - worst_heuristic) / std::fabs(worst_heuristic);
    return d;
}

}  // namespace leo::scenario
