// leosim - LEO satellite handover simulator and policy laboratory.
//
// Subcommands: run, train, evaluate, compare, plot, validate-config.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leosim/metrics.hpp"
#include "leosim/scenario.hpp"
#include "leosim/svg.hpp"
#include "leosim/version.hpp"

namespace {

namespace fs = std::filesystem;
using namespace leo;

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* v = std::getenv("LEOSIM_LOG");
    if (!v) return LogLevel::Info;
    const std::string s(v);
    if (s == "quiet") return LogLevel::Quiet;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[leosim] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::cerr << "[leosim] " << msg << "\n";
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stoi(item));
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stoull(item));
    return out;
}

scenario::LoadReport load_or_default(const std::string& config_path) {
    if (config_path.empty()) return scenario::parse_config("{}", "<defaults>");
    return scenario::load_config(config_path);
}

std::vector<scenario::PolicyKind> resolve_policies(const std::string& flag,
                                                   const std::string& config_policy) {
    const std::string name = flag.empty() ? config_policy : flag;
    if (name == "all") return scenario::all_policies();
    const auto p = scenario::parse_policy(name);
    if (!p) throw std::runtime_error("unknown policy '" + name + "'");
    return {*p};
}

// Mean over seeds of one column, per (policy, scenario, L).
struct TableKey {
    std::string policy;
    std::string scenario;
    int L = 0;
    bool operator<(const TableKey& o) const {
        return std::tie(policy, scenario, L) < std::tie(o.policy, o.scenario, o.L);
    }
};

void print_summary_table(const std::vector<metrics::RunMetricsRow>& rows) {
    struct Acc {
        double handovers = 0, blocking = 0, psi = 0;
        int n = 0;
    };
    std::map<TableKey, Acc> table;
    for (const auto& r : rows) {
        auto& a = table[{r.policy, r.scenario, r.L}];
        a.handovers += static_cast<double>(r.total_handovers);
        a.blocking += static_cast<double>(r.blocking);
        a.psi += r.psi_total;
        a.n += 1;
    }
    std::printf("%-10s %-4s %-4s %6s %12s %10s %12s\n", "policy", "scn", "L", "seeds",
                "handovers", "blocking", "psi");
    for (const auto& [key, a] : table) {
        std::printf("%-10s %-4s %-4d %6d %12.2f %10.2f %12.4f\n", key.policy.c_str(),
                    key.scenario.c_str(), key.L, a.n, a.handovers / a.n, a.blocking / a.n,
                    a.psi / a.n);
    }
}

int cmd_validate_config(const std::string& config_path, bool print_resolved) {
    const auto report = load_or_default(config_path);
    for (const auto& line : report.applied_defaults) log_debug("default: " + line);
    std::printf("config ok: %zu defaults applied, hash %s\n", report.applied_defaults.size(),
                scenario::config_hash_hex(report.config).c_str());
    if (print_resolved) std::printf("%s\n", scenario::serialize_config(report.config).c_str());
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& policy_flag,
            const std::string& L_flag, const std::string& scenario_flag,
            const std::string& seed_flag, std::string out_dir, int episodes, int jobs,
            bool link_trace) {
    const auto report = load_or_default(config_path);
    const auto& cfg = report.config;
    for (const auto& line : report.applied_defaults) log_debug("default: " + line);

    const auto policies = resolve_policies(policy_flag, cfg.policy);
    std::vector<int> L_values =
        L_flag.empty() ? std::vector<int>{cfg.reward.channels_per_sat} : parse_int_list(L_flag);
    std::vector<bool> scenarios;
    if (scenario_flag.empty())
        scenarios = {cfg.fv_priority};
    else if (scenario_flag == "s1")
        scenarios = {true};
    else if (scenario_flag == "s2")
        scenarios = {false};
    else if (scenario_flag == "both")
        scenarios = {false, true};
    else
        throw std::runtime_error("scenario must be s1, s2 or both");
    const auto seeds = seed_flag.empty() ? cfg.seeds : parse_seed_list(seed_flag);
    if (out_dir.empty()) out_dir = "out";

    log_info("executing " + std::to_string(policies.size() * L_values.size() * scenarios.size() *
                                           seeds.size()) +
             " runs into " + out_dir);
    const auto outputs = scenario::run_matrix(cfg, policies, L_values, scenarios, seeds, out_dir,
                                              jobs, link_trace, episodes);
    std::vector<metrics::RunMetricsRow> rows;
    int failures = 0;
    for (const auto& o : outputs) {
        if (o.ok) {
            rows.push_back(o.row);
        } else {
            ++failures;
            std::cerr << "FAILED " << o.manifest.run_id << ": " << o.error << "\n";
        }
    }
    print_summary_table(rows);
    if (failures > 0) {
        std::cerr << failures << " of " << outputs.size() << " runs failed\n";
        return 1;
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& policy_flag,
              const std::string& seed_flag, std::string out_dir, int episodes, bool resume) {
    const auto report = load_or_default(config_path);
    const auto& cfg = report.config;
    const auto policies = resolve_policies(policy_flag, cfg.policy);
    if (policies.size() != 1 || !scenario::is_trained(policies[0]))
        throw std::runtime_error("train needs one of: qlearning, nash-dqn, nash-sac");
    const auto policy = policies[0];
    const std::uint64_t seed = seed_flag.empty() ? cfg.seeds.front() : std::stoull(seed_flag);
    if (out_dir.empty())
        out_dir = "out/train_" + std::string(scenario::to_string(policy)) + "_seed" +
                  std::to_string(seed);
    fs::create_directories(out_dir);

    env::HandoverEnv e =
        scenario::build_env(cfg, seed, cfg.reward.channels_per_sat, cfg.fv_priority);
    const std::uint64_t train_seed = Rng(seed).child("train").save_state()[0];
    const std::string ckpt = out_dir + "/checkpoint";

    auto finish = [&](const auto& trainer) {
        agents::write_training_curve_csv(out_dir + "/training_curve.csv", trainer.curve());
        trainer.save(ckpt);
        log_info("checkpoint written to " + ckpt);
    };

    switch (policy) {
        case scenario::PolicyKind::QLearning: {
            agents::QLearningTrainer trainer(cfg.train, e, train_seed);
            if (resume) trainer.load(ckpt);
            trainer.run(e, episodes >= 0 ? episodes : cfg.train.q_episodes);
            finish(trainer);
            break;
        }
        case scenario::PolicyKind::NashDqn: {
            agents::NashDqnTrainer trainer(cfg.train, e, train_seed);
            if (resume) trainer.load(ckpt);
            trainer.run(e, episodes >= 0 ? episodes : cfg.train.episodes);
            finish(trainer);
            break;
        }
        case scenario::PolicyKind::NashSac: {
            agents::NashSacTrainer trainer(cfg.train, e, train_seed);
            if (resume) trainer.load(ckpt);
            trainer.run(e, episodes >= 0 ? episodes : cfg.train.episodes);
            finish(trainer);
            break;
        }
        default: break;
    }
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                 const std::string& L_flag, const std::string& scenario_flag,
                 const std::string& seed_flag, std::string out_dir) {
    const auto report = load_or_default(config_path);
    const auto& cfg = report.config;
    const std::uint64_t seed = seed_flag.empty() ? cfg.seeds.front() : std::stoull(seed_flag);
    const int L = L_flag.empty() ? cfg.reward.channels_per_sat : std::stoi(L_flag);
    const bool fv_priority = scenario_flag.empty() ? cfg.fv_priority : scenario_flag == "s1";
    if (out_dir.empty()) out_dir = "out/evaluate";
    fs::create_directories(out_dir);

    const std::string algo = agents::checkpoint_algorithm(checkpoint);
    env::HandoverEnv train_shape =
        scenario::build_env(cfg, seed, cfg.reward.channels_per_sat, false);
    env::HandoverEnv e = scenario::build_env(cfg, seed, L, fv_priority);
    const std::uint64_t train_seed = Rng(seed).child("train").save_state()[0];

    scenario::JointDecider decider;
    std::unique_ptr<agents::QLearningTrainer> q;
    std::unique_ptr<agents::NashDqnTrainer> d;
    std::unique_ptr<agents::NashSacTrainer> s;
    if (algo == "qlearning") {
        q = std::make_unique<agents::QLearningTrainer>(cfg.train, train_shape, train_seed);
        q->load(checkpoint);
        decider = [&t = *q](const env::HandoverEnv& env_ref) { return t.decide_eval(env_ref); };
    } else if (algo == "nash-dqn") {
        d = std::make_unique<agents::NashDqnTrainer>(cfg.train, train_shape, train_seed);
        d->load(checkpoint);
        decider = [&t = *d](const env::HandoverEnv& env_ref) { return t.decide_eval(env_ref); };
    } else if (algo == "nash-sac") {
        s = std::make_unique<agents::NashSacTrainer>(cfg.train, train_shape, train_seed);
        s->load(checkpoint);
        decider = [&t = *s](const env::HandoverEnv& env_ref) { return t.decide_eval(env_ref); };
    } else {
        throw std::runtime_error("unknown checkpoint algorithm: " + algo);
    }

    scenario::run_episode(e, decider);
    metrics::UtilityParams up{e.num_sections(), e.reward_params().normalize,
                              e.reward_params().cinr_scale_db};
    const auto em =
        metrics::compute_metrics(e.trace(), e.num_users(), e.num_sections(),
                                 e.reward_params().w1, e.reward_params().w2,
                                 e.reward_params().w3, up);
    metrics::write_trace_csv(out_dir + "/trace.csv", e.trace());
    metrics::RunMetricsRow row;
    row.run_id = "evaluate";
    row.policy = algo;
    row.seed = seed;
    row.L = L;
    row.scenario = fv_priority ? "s1" : "s2";
    row.total_handovers = em.total_handovers;
    row.avg_handovers_per_user = static_cast<double>(em.total_handovers) / em.num_users;
    row.blocking = em.blocking;
    row.psi_total = em.psi_total;
    row.psi_by_type = em.psi_by_type;
    metrics::write_metrics_csv(out_dir + "/metrics.csv", {row});
    print_summary_table({row});
    return 0;
}

int cmd_compare(const std::string& config_path, const std::string& L_flag,
                const std::string& seed_flag, std::string out_dir, int episodes, int jobs) {
    const auto report = load_or_default(config_path);
    const auto& cfg = report.config;
    scenario::BenchmarkOptions options;
    options.seeds = seed_flag.empty() ? cfg.seeds : parse_seed_list(seed_flag);
    options.L_sweep = L_flag.empty() ? std::vector<int>{4, 6, 8, 10, 12} : parse_int_list(L_flag);
    options.out_dir = out_dir.empty() ? "out/compare" : out_dir;
    options.episodes_override = episodes;
    options.jobs = jobs;

    log_info("benchmarking all policies over " + std::to_string(options.seeds.size()) +
             " seeds into " + options.out_dir);
    const auto bench = scenario::run_benchmark(cfg, options);
    print_summary_table(bench.rows);

    const auto deltas = scenario::headline_deltas(bench);
    std::printf("\nheadline comparisons at L=%d (means over %zu seeds):\n", bench.train_L,
                options.seeds.size());
    std::printf("  handover reduction, nash-sac vs qlearning: %.1f%%\n",
                deltas.handover_reduction_vs_qlearning_pct);
    std::printf("  blocking improvement, nash-sac vs qlearning: %.1f%%\n",
                deltas.blocking_improvement_vs_qlearning_pct);
    std::printf("  utility gain, nash-sac vs worst heuristic: %.1f%%\n",
                deltas.utility_gain_vs_worst_heuristic_pct);
    std::printf("  utility ordering:");
    for (const auto& p : deltas.utility_order) std::printf(" %s", p.c_str());
    std::printf("\n");
    return 0;
}

// fig2: cumulative average handovers vs time, one line per policy.
// fig3: blocking vs L. fig4: psi bars per type per policy.
// fig5: CINR CDFs per user type, s1 solid vs s2 dashed (nash-sac).
int cmd_plot(const std::string& metrics_dir, std::string out_dir, int L_select) {
    if (!fs::exists(metrics_dir + "/summary.csv"))
        throw std::runtime_error("no summary.csv under " + metrics_dir);
    const auto rows = metrics::read_metrics_csv(metrics_dir + "/summary.csv");
    if (rows.empty()) throw std::runtime_error("summary.csv is empty in " + metrics_dir);
    if (out_dir.empty()) out_dir = metrics_dir;
    fs::create_directories(out_dir);

    int L = L_select;
    if (L < 0) {
        std::map<int, int> counts;
        for (const auto& r : rows) counts[r.L] += 1;
        L = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                return a.second < b.second;
            })->first;
    }

    std::set<std::string> policies;
    for (const auto& r : rows) policies.insert(r.policy);

    // fig2 from the per-run traces at the selected L, scenario s2.
    {
        std::vector<svg::Series> series;
        for (const auto& policy : policies) {
            svg::Series s;
            s.label = policy;
            std::vector<double> mean_series;
            int n_runs = 0;
            double section_s = 10.0;
            for (const auto& r : rows) {
                if (r.policy != policy || r.L != L || r.scenario != "s2") continue;
                const std::string trace_path = metrics_dir + "/" + r.run_id + "/trace.csv";
                if (!fs::exists(trace_path)) continue;
                const auto trace = metrics::read_trace_csv(trace_path);
                int num_users = 0, num_sections = 0;
                for (const auto& row : trace) {
                    num_users = std::max(num_users, row.user_id + 1);
                    num_sections = std::max(num_sections, row.t + 1);
                }
                const auto cum =
                    metrics::cumulative_avg_handovers(trace, num_users, num_sections);
                if (mean_series.empty()) mean_series.assign(cum.size(), 0.0);
                for (std::size_t i = 0; i < cum.size(); ++i) mean_series[i] += cum[i];
                ++n_runs;
            }
            if (n_runs == 0) continue;
            for (std::size_t i = 0; i < mean_series.size(); ++i)
                s.points.push_back({static_cast<double>(i + 1) * section_s,
                                    mean_series[i] / n_runs});
            series.push_back(std::move(s));
        }
        if (!series.empty())
            svg::write_file(out_dir + "/fig2_handovers.svg",
                            svg::line_chart("Cumulative average handovers", "time [s]",
                                            "handovers per user", series));
    }

    // fig3: blocking vs L per policy (s2 means over seeds).
    {
        std::vector<svg::Series> series;
        for (const auto& policy : policies) {
            std::map<int, std::pair<double, int>> by_L;
            for (const auto& r : rows)
                if (r.policy == policy && r.scenario == "s2") {
                    by_L[r.L].first += static_cast<double>(r.blocking);
                    by_L[r.L].second += 1;
                }
            if (by_L.size() < 2) continue;
            svg::Series s;
            s.label = policy;
            for (const auto& [Lv, acc] : by_L)
                s.points.push_back({static_cast<double>(Lv), acc.first / acc.second});
            series.push_back(std::move(s));
        }
        if (!series.empty())
            svg::write_file(out_dir + "/fig3_blocking.svg",
                            svg::line_chart("Blocking versus available channels",
                                            "channels per satellite L", "blocking", series));
    }

    // fig4: psi per user type per policy at the selected L (s2 means).
    {
        std::vector<std::string> labels(policies.begin(), policies.end());
        const char* type_names[] = {"aircraft", "evtol", "uav", "ground"};
        std::vector<svg::BarGroup> groups;
        for (int ti = 0; ti < 4; ++ti) {
            svg::BarGroup g;
            g.label = type_names[ti];
            for (const auto& policy : labels) {
                double sum = 0.0;
                int n = 0;
                for (const auto& r : rows)
                    if (r.policy == policy && r.L == L && r.scenario == "s2") {
                        sum += r.psi_by_type[ti];
                        ++n;
                    }
                g.values.push_back(n > 0 ? sum / n : 0.0);
            }
            groups.push_back(std::move(g));
        }
        svg::write_file(out_dir + "/fig4_utility.svg",
                        svg::grouped_bar_chart("Network utility by user type", "psi per user",
                                               labels, groups));
    }

    // fig5: nash-sac CINR CDFs, s1 solid vs s2 dashed.
    {
        std::vector<svg::Series> series;
        for (const std::string scenario_tag : {"s1", "s2"}) {
            for (const auto& r : rows) {
                if (r.policy != "nash-sac" || r.L != L || r.scenario != scenario_tag) continue;
                const std::string cdf_path = metrics_dir + "/" + r.run_id + "/cdf.csv";
                if (!fs::exists(cdf_path)) continue;
                std::ifstream in(cdf_path);
                std::string line;
                std::getline(in, line);  // header
                std::map<std::string, svg::Series> per_type;
                while (std::getline(in, line)) {
                    std::istringstream ls(line);
                    std::string scn, type, cinr, cdf;
                    std::getline(ls, scn, ',');
                    std::getline(ls, type, ',');
                    std::getline(ls, cinr, ',');
                    std::getline(ls, cdf, ',');
                    auto& s = per_type[type];
                    s.label = type + " (" + scenario_tag + ")";
                    s.dashed = scenario_tag == "s2";
                    s.points.push_back({std::stod(cinr), std::stod(cdf)});
                }
                for (auto& [type, s] : per_type) series.push_back(std::move(s));
                break;  // one seed per scenario keeps the chart readable
            }
        }
        if (!series.empty())
            svg::write_file(out_dir + "/fig5_cinr_cdf.svg",
                            svg::line_chart("CINR CDF under FV priority (s1) vs none (s2)",
                                            "CINR [dB]", "CDF", series));
    }

    log_info("plots written to " + out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LEO satellite handover simulator and multi-agent policy laboratory"};
    app.set_version_flag("--version", std::string("leosim ") + leo::kVersion);
    app.require_subcommand(1);

    std::string config_path, policy_flag, L_flag, scenario_flag, seed_flag, out_dir;
    std::string checkpoint, metrics_dir;
    int episodes = -1;
    int jobs = 1;
    int plot_L = -1;
    bool link_trace = false;
    bool resume = false;
    bool print_resolved = false;

    auto* c_validate = app.add_subcommand("validate-config", "Parse and validate a config file");
    c_validate->add_option("--config", config_path, "Scenario config JSON");
    c_validate->add_flag("--print", print_resolved, "Print the fully resolved config");

    auto* c_run = app.add_subcommand("run", "Run the scenario matrix and report metrics");
    c_run->add_option("--config", config_path, "Scenario config JSON");
    c_run->add_option("--policy", policy_flag,
                      "mrst|mac|mis|qlearning|nash-dqn|nash-sac|all (default: config)");
    c_run->add_option("--L", L_flag, "Comma-separated channel capacities");
    c_run->add_option("--scenario", scenario_flag, "s1|s2|both");
    c_run->add_option("--seed", seed_flag, "Comma-separated seeds");
    c_run->add_option("--out", out_dir, "Output directory (default: out)");
    c_run->add_option("--episodes", episodes, "Training episodes override");
    c_run->add_option("--jobs", jobs, "Parallel runs");
    c_run->add_flag("--link-trace", link_trace, "Also dump the per-section link budget CSV");

    auto* c_train = app.add_subcommand("train", "Train a learned policy and write checkpoints");
    c_train->add_option("--config", config_path, "Scenario config JSON");
    c_train->add_option("--policy", policy_flag, "qlearning|nash-dqn|nash-sac");
    c_train->add_option("--seed", seed_flag, "Seed (default: first config seed)");
    c_train->add_option("--out", out_dir, "Output directory");
    c_train->add_option("--episodes", episodes, "Episode count override");
    c_train->add_flag("--resume", resume, "Continue from the checkpoint in --out");

    auto* c_eval = app.add_subcommand("evaluate", "Evaluate a trained checkpoint");
    c_eval->add_option("--config", config_path, "Scenario config JSON");
    c_eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    c_eval->add_option("--L", L_flag, "Channel capacity override");
    c_eval->add_option("--scenario", scenario_flag, "s1|s2");
    c_eval->add_option("--seed", seed_flag, "Seed");
    c_eval->add_option("--out", out_dir, "Output directory");

    auto* c_compare = app.add_subcommand(
        "compare", "Benchmark every policy and print the headline comparisons");
    c_compare->add_option("--config", config_path, "Scenario config JSON");
    c_compare->add_option("--L", L_flag, "L sweep (default: 4,6,8,10,12)");
    c_compare->add_option("--seed", seed_flag, "Comma-separated seeds");
    c_compare->add_option("--out", out_dir, "Output directory (default: out/compare)");
    c_compare->add_option("--episodes", episodes, "Training episodes override");
    c_compare->add_option("--jobs", jobs, "Parallel training jobs");

    auto* c_plot = app.add_subcommand("plot", "Render SVG charts from a metrics directory");
    c_plot->add_option("--metrics", metrics_dir, "Directory containing summary.csv")->required();
    c_plot->add_option("--out", out_dir, "Output directory (default: metrics dir)");
    c_plot->add_option("--L", plot_L, "Channel capacity to plot (default: most common)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_validate->parsed()) return cmd_validate_config(config_path, print_resolved);
        if (c_run->parsed())
            return cmd_run(config_path, policy_flag, L_flag, scenario_flag, seed_flag, out_dir,
                           episodes, jobs, link_trace);
        if (c_train->parsed())
            return cmd_train(config_path, policy_flag, seed_flag, out_dir, episodes, resume);
        if (c_eval->parsed())
            return cmd_evaluate(config_path, checkpoint, L_flag, scenario_flag, seed_flag,
                                out_dir);
        if (c_compare->parsed())
            return cmd_compare(config_path, L_flag, seed_flag, out_dir, episodes, jobs);
        if (c_plot->parsed()) return cmd_plot(metrics_dir, out_dir, plot_L);
    } catch (const std::runtime_error& e) {
        // Config problems are usage errors (exit 2); anything else is a
        // runtime failure (exit 1).
        const std::string what = e.what();
        std::cerr << "error: " << what << "\n";
        const bool config_problem = what.find("config") != std::string::npos ||
                                    what.find("unknown key") != std::string::npos ||
                                    what.find("unknown policy") != std::string::npos ||
                                    what.find("must be") != std::string::npos ||
                                    what.find("scenario must") != std::string::npos;
        return config_problem ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
