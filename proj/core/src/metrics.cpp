#include "leosim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace leo::metrics {

namespace {

mobility::UserType type_from_string(const std::string& s) {
    for (int i = 0; i < mobility::kNumUserTypes; ++i) {
        const auto t = static_cast<mobility::UserType>(i);
        if (s == mobility::to_string(t)) return t;
    }
    throw std::runtime_error("unknown user type: " + s);
}

double cinr_term(double cinr_db, const UtilityParams& p) {
    if (!p.normalize) return cinr_db;
    return std::clamp(cinr_db / p.cinr_scale_db, 0.0, 1.0);
}

}  // namespace

EpisodeMetrics compute_metrics(const std::vector<env::TraceRow>& trace, int num_users,
                               int num_sections, double w1, double w2, double w3,
                               const UtilityParams& params) {
    if (trace.empty()) throw std::invalid_argument("compute_metrics: empty trace");
    EpisodeMetrics m;
    m.num_users = num_users;
    m.num_sections = num_sections;
    m.blocking = 0;

    std::map<int, UserEpisode> per_user;
    for (const auto& row : trace) {
        auto& u = per_user[row.user_id];
        u.user_id = row.user_id;
        u.type = row.user_type;
        if (row.handover) u.handovers += 1;
        if (row.blocked) u.blocked_sections += 1;
        if (row.has_cinr) {
            u.mean_cinr += cinr_term(row.cinr_db, params);
            u.cinr_samples_db.push_back(row.cinr_db);
        }
    }

    std::array<double, mobility::kNumUserTypes> psi_sum{};
    for (auto& [id, u] : per_user) {
        u.mean_cinr /= num_sections;  // dark sections contribute zero
        u.psi = -w1 * u.handovers + w2 * u.mean_cinr - w3 * u.blocked_sections;
        m.total_handovers += u.handovers;
        m.blocking += u.blocked_sections;
        m.psi_total += u.psi;
        const int ti = static_cast<int>(u.type);
        psi_sum[ti] += u.psi;
        m.users_by_type[ti] += 1;
        m.users.push_back(u);
    }
    for (int ti = 0; ti < mobility::kNumUserTypes; ++ti)
        m.psi_by_type[ti] = m.users_by_type[ti] > 0 ? psi_sum[ti] / m.users_by_type[ti] : 0.0;

    m.cumulative_avg_handovers = cumulative_avg_handovers(trace, num_users, num_sections);
    return m;
}

double network_utility(const std::vector<env::TraceRow>& trace, double w1, double w2, double w3,
                       const UtilityParams& params) {
    if (trace.empty()) throw std::invalid_argument("network_utility: empty trace");
    struct Acc {
        int handovers = 0;
        int blocked = 0;
        double cinr = 0.0;
    };
    std::map<int, Acc> per_user;
    for (const auto& row : trace) {
        auto& a = per_user[row.user_id];
        if (row.handover) a.handovers += 1;
        if (row.blocked) a.blocked += 1;
        if (row.has_cinr) a.cinr += cinr_term(row.cinr_db, params);
    }
    double psi = 0.0;
    for (const auto& [id, a] : per_user)
        psi += -w1 * a.handovers + w2 * (a.cinr / params.num_sections) - w3 * a.blocked;
    return psi;
}

std::vector<double> cumulative_avg_handovers(const std::vector<env::TraceRow>& trace,
                                             int num_users, int num_sections) {
    std::vector<double> series(num_sections, 0.0);
    for (const auto& row : trace)
        if (row.handover && row.t >= 0 && row.t < num_sections) series[row.t] += 1.0;
    double acc = 0.0;
    for (int t = 0; t < num_sections; ++t) {
        acc += series[t];
        series[t] = acc / num_users;
    }
    return series;
}

std::vector<CdfPoint> cinr_cdf(std::vector<double> samples_db) {
    std::sort(samples_db.begin(), samples_db.end());
    std::vector<CdfPoint> points;
    points.reserve(samples_db.size());
    const double n = static_cast<double>(samples_db.size());
    for (std::size_t i = 0; i < samples_db.size(); ++i)
        points.push_back({samples_db[i], static_cast<double>(i + 1) / n});
    return points;
}

void write_trace_csv(const std::string& path, const std::vector<env::TraceRow>& trace) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f, "t,user_id,user_type,sat_id,reward,case_id,handover,blocked,cinr_db\n");
    for (const auto& r : trace) {
        std::fprintf(f, "%d,%d,%s,%d,%.17g,%d,%d,%d,", r.t, r.user_id,
                     mobility::to_string(r.user_type), r.sat_id, r.reward, r.case_id,
                     r.handover ? 1 : 0, r.blocked ? 1 : 0);
        if (r.has_cinr)
            std::fprintf(f, "%.17g\n", r.cinr_db);
        else
            std::fprintf(f, "\n");
    }
    std::fclose(f);
}

std::vector<env::TraceRow> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty trace file: " + path);
    std::vector<env::TraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        env::TraceRow r;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) throw std::runtime_error("short row in " + path);
            return field;
        };
        r.t = std::stoi(next());
        r.user_id = std::stoi(next());
        r.user_type = type_from_string(next());
        r.sat_id = std::stoi(next());
        r.reward = std::stod(next());
        r.case_id = std::stoi(next());
        r.handover = std::stoi(next()) != 0;
        r.blocked = std::stoi(next()) != 0;
        if (std::getline(ls, field, ',') && !field.empty()) {
            r.cinr_db = std::stod(field);
            r.has_cinr = true;
        }
        rows.push_back(r);
    }
    return rows;
}

void write_link_csv(const std::string& path, const env::HandoverEnv& e) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f, "t,user_id,sat_id,fspl_db,cnr_db,inr_db,cinr_db\n");
    for (int t = 0; t < e.num_sections(); ++t) {
        for (const auto& s : e.link_samples(t)) {
            std::fprintf(f, "%d,%d,%d,%.10g,%.10g,", t, s.user_id, s.sat_id, s.fspl_db, s.cnr_db);
            if (s.inr_db) std::fprintf(f, "%.10g", *s.inr_db);
            std::fprintf(f, ",%.10g\n", s.cinr_db);
        }
    }
    std::fclose(f);
}

void write_metrics_csv(const std::string& path, const std::vector<RunMetricsRow>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f,
                 "run_id,policy,seed,L,scenario,total_handovers,avg_handovers_per_user,blocking,"
                 "psi_total,psi_aircraft,psi_evtol,psi_uav,psi_ground\n");
    for (const auto& r : rows) {
        std::fprintf(f, "%s,%s,%llu,%d,%s,%lld,%.10g,%lld,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                     r.run_id.c_str(), r.policy.c_str(),
                     static_cast<unsigned long long>(r.seed), r.L, r.scenario.c_str(),
                     r.total_handovers, r.avg_handovers_per_user, r.blocking, r.psi_total,
                     r.psi_by_type[0], r.psi_by_type[1], r.psi_by_type[2], r.psi_by_type[3]);
    }
    std::fclose(f);
}

std::vector<RunMetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty metrics file: " + path);
    std::vector<RunMetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        RunMetricsRow r;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) throw std::runtime_error("short row in " + path);
            return field;
        };
        r.run_id = next();
        r.policy = next();
        r.seed = std::stoull(next());
        r.L = std::stoi(next());
        r.scenario = next();
        r.total_handovers = std::stoll(next());
        r.avg_handovers_per_user = std::stod(next());
        r.blocking = std::stoll(next());
        r.psi_total = std::stod(next());
        for (int i = 0; i < mobility::kNumUserTypes; ++i) r.psi_by_type[i] = std::stod(next());
        rows.push_back(r);
    }
    return rows;
}

void write_cdf_csv(const std::string& path, const std::vector<CdfRow>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f, "scenario,user_type,cinr_db,cdf\n");
    for (const auto& r : rows)
        std::fprintf(f, "%s,%s,%.10g,%.10g\n", r.scenario.c_str(), r.user_type.c_str(), r.cinr_db,
                     r.cdf);
    std::fclose(f);
}

}  // namespace leo::metrics
