#pragma once

#include <array>
#include <string>
#include <vector>

#include "leosim/env.hpp"

namespace leo::metrics {

// Normalization applied to the CINR term of the utility; mirrors the
// environment's reward normalization so psi stays comparable to rewards.
struct UtilityParams {
    int num_sections = 90;
    bool normalize = true;
    double cinr_scale_db = 30.0;
};

struct UserEpisode {
    int user_id = 0;
    mobility::UserType type = mobility::UserType::GroundTerminal;
    int handovers = 0;        // HO_k
    int blocked_sections = 0; // the user's own capacity-blocked sections
    double mean_cinr = 0.0;   // episode mean (no-link sections contribute 0)
    double psi = 0.0;         // -w1 HO_k + w2 mean_cinr - w3 blocked
    std::vector<double> cinr_samples_db;
};

struct EpisodeMetrics {
    int num_users = 0;
    int num_sections = 0;
    std::vector<UserEpisode> users;
    long long total_handovers = 0;
    long long blocking = 0;  // Eq-7d total
    double psi_total = 0.0;
    std::array<double, mobility::kNumUserTypes> psi_by_type{};  // per-user mean within type
    std::array<int, mobility::kNumUserTypes> users_by_type{};
    std::vector<double> cumulative_avg_handovers;  // per section
};

// Network utility psi = sum_k (-w1 HO_k + w2 mean-CINR_k - w3 blocked_k)
// recomputed from a dumped trace. Throws std::invalid_argument on an empty
// trace.
double network_utility(const std::vector<env::TraceRow>& trace, double w1, double w2, double w3,
                       const UtilityParams& params);

// Cumulative average handovers per section: (handovers up to t) / K.
std::vector<double> cumulative_avg_handovers(const std::vector<env::TraceRow>& trace,
                                             int num_users, int num_sections);

struct CdfPoint {
    double value = 0.0;
    double cdf = 0.0;
};

// Empirical CDF with the i/n convention, sample-sorted.
std::vector<CdfPoint> cinr_cdf(std::vector<double> samples_db);

// Full per-episode aggregation of one trace.
EpisodeMetrics compute_metrics(const std::vector<env::TraceRow>& trace, int num_users,
                               int num_sections, double w1, double w2, double w3,
                               const UtilityParams& params);

// --- file formats ---------------------------------------------------------

// Episode trace CSV: t,user_id,user_type,sat_id,reward,case_id,handover,
// blocked,cinr_db (cinr empty when there was no link), ordered by t then
// user id.
void write_trace_csv(const std::string& path, const std::vector<env::TraceRow>& trace);
std::vector<env::TraceRow> read_trace_csv(const std::string& path);

// Per-section link budget trace: t,user_id,sat_id,fspl_db,cnr_db,inr_db,
// cinr_db with an empty inr field when there is no interferer. Covered
// pairs only.
void write_link_csv(const std::string& path, const env::HandoverEnv& e);

struct RunMetricsRow {
    std::string run_id;
    std::string policy;
    std::uint64_t seed = 0;
    int L = 8;
    std::string scenario;  // "s1" or "s2"
    long long total_handovers = 0;
    double avg_handovers_per_user = 0.0;
    long long blocking = 0;
    double psi_total = 0.0;
    std::array<double, mobility::kNumUserTypes> psi_by_type{};
};

void write_metrics_csv(const std::string& path, const std::vector<RunMetricsRow>& rows);
std::vector<RunMetricsRow> read_metrics_csv(const std::string& path);

// CDF CSV: scenario,user_type,cinr_db,cdf.
struct CdfRow {
    std::string scenario;
    std::string user_type;
    double cinr_db = 0.0;
    double cdf = 0.0;
};
void write_cdf_csv(const std::string& path, const std::vector<CdfRow>& rows);

}  // namespace leo::metrics
