#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leosim/env.hpp"
#include "leosim/metrics.hpp"
#include "leosim/sac.hpp"

namespace leo::scenario {

enum class PolicyKind { Mrst, Mac, Mis, QLearning, NashDqn, NashSac };

const char* to_string(PolicyKind p);
std::optional<PolicyKind> parse_policy(const std::string& name);
bool is_trained(PolicyKind p);
std::vector<PolicyKind> all_policies();

// Fully resolved experiment description. Defaults are the paper-scenario
// values; omitted config keys fall back to them (each application is
// reported by the loader).
struct ScenarioConfig {
    orbits::ConstellationSpec constellation;
    std::optional<std::string> elements_file;  // overrides the generator
    mobility::SpawnCounts counts;
    mobility::SpawnParams spawn;
    link::LinkBudgetParams link;
    env::RewardParams reward;
    env::SimParams sim;
    bool fv_priority = false;  // s1 = priority to FVs, s2 = none
    agents::TrainConfig train;
    std::string policy = "nash-sac";
    std::vector<std::uint64_t> seeds{1};

    void validate() const;  // throws std::runtime_error naming the field
};

struct LoadReport {
    ScenarioConfig config;
    std::vector<std::string> applied_defaults;
};

// Strict schema: unknown keys are hard errors; malformed files report the
// line. An empty object yields the full default scenario.
LoadReport load_config(const std::string& path);
LoadReport parse_config(const std::string& json_text, const std::string& origin);

// Canonical serialization (keys sorted); load(serialize(c)) is a fixed
// point.
std::string serialize_config(const ScenarioConfig& config);
// FNV-1a over the canonical serialization; stable under key reordering of
// the input file.
std::uint64_t config_hash(const ScenarioConfig& config);
std::string config_hash_hex(const ScenarioConfig& config);

struct RunManifest {
    std::string run_id;
    std::string policy;
    std::uint64_t seed = 0;
    int L = 8;
    std::string scenario;  // "s1" / "s2"
    std::string config_hash;
    std::string version;

    std::string to_json() const;
};

env::HandoverEnv build_env(const ScenarioConfig& config, std::uint64_t seed, int L,
                           bool fv_priority);

// One joint decision per section.
using JointDecider = std::function<std::vector<env::Action>(const env::HandoverEnv&)>;

JointDecider make_heuristic_decider(PolicyKind policy);
void run_episode(env::HandoverEnv& e, const JointDecider& decider);

struct RunSpec {
    PolicyKind policy = PolicyKind::Mrst;
    std::uint64_t seed = 1;
    int L = 8;
    bool fv_priority = false;
};

std::string run_id_for(const RunSpec& spec);

struct RunOutput {
    RunManifest manifest;
    metrics::RunMetricsRow row;
    bool ok = false;
    std::string error;
};

// Executes one self-contained run (training included for learned policies)
// and writes trace.csv / metrics.csv / cdf.csv / manifest.json (and, for
// learned policies, training_curve.csv plus a checkpoint directory) under
// out_dir/<run_id>/.
RunOutput execute_run(const ScenarioConfig& config, const RunSpec& spec,
                      const std::string& out_dir, bool write_link_trace = false,
                      int episodes_override = -1);

// Cartesian product of policies x L values x scenarios x seeds, executed
// across `jobs` worker threads (runs are isolated; failures do not stop the
// matrix). Returns outputs in deterministic (enumeration) order and writes
// summary.csv under out_dir.
std::vector<RunOutput> run_matrix(const ScenarioConfig& config,
                                  const std::vector<PolicyKind>& policies,
                                  const std::vector<int>& L_values,
                                  const std::vector<bool>& scenarios,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::string& out_dir, int jobs,
                                  bool write_link_trace = false, int episodes_override = -1);

// --- benchmark orchestration (Figs 2-5 shape) ------------------------------

struct BenchmarkOptions {
    std::vector<std::uint64_t> seeds;
    std::vector<int> L_sweep;  // evaluations of the agents trained at the config L
    std::string out_dir;
    int episodes_override = -1;
    int jobs = 1;
    bool include_fig5 = true;  // nash-sac evaluated under s1 as well
    std::vector<PolicyKind> policies = all_policies();
};

struct BenchmarkReport {
    std::vector<metrics::RunMetricsRow> rows;
    // run_id -> full episode metrics (per-user CINR samples included)
    std::map<std::string, metrics::EpisodeMetrics> episodes;
    int train_L = 8;

    // Aggregations over seeds (s2 rows at the given L).
    double mean_total_handovers(PolicyKind p, int L) const;
    double mean_blocking(PolicyKind p, int L) const;
    double mean_psi(PolicyKind p, int L) const;
    std::vector<double> psi_by_seed(PolicyKind p, int L) const;
    // Pooled CINR samples per user type for one scenario tag at train_L.
    std::vector<double> cinr_samples(PolicyKind p, const std::string& scenario,
                                     mobility::UserType type) const;
};

// Trains each learned policy once per seed at the config L (scenario s2),
// then evaluates every policy across the L sweep; nash-sac is additionally
// evaluated under s1 for the CINR CDF comparison.
BenchmarkReport run_benchmark(const ScenarioConfig& config, const BenchmarkOptions& options);

struct HeadlineDeltas {
    double handover_reduction_vs_qlearning_pct = 0.0;
    double blocking_improvement_vs_qlearning_pct = 0.0;
    double utility_gain_vs_worst_heuristic_pct = 0.0;
    std::vector<std::string> utility_order;  // descending mean psi at train L
};

HeadlineDeltas headline_deltas(const BenchmarkReport& report);

double median(std::vector<double> values);

}  // namespace leo::scenario
