#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scanline/loop.hpp"

namespace scanline {

// Full experiment grid: every (policy, budget, seed) triple is one episode.
// Phantom seeds are derived from base_seed and the seed index only, so all
// policies and budgets see bit-identical ground-truth sequences per seed.
struct BenchmarkSpec {
    std::vector<int> budgets = {1, 3, 5};
    std::vector<std::string> policies = {"tbig", "gig", "uniform_rotating",
                                         "random"};
    int n_seeds = 50;
    std::uint64_t base_seed = 1;
    LoopConfig loop;  // policy/budget_k/rng_seed are overridden per episode
    int jobs = 1;     // worker threads; excluded from the content hash
    std::vector<int> inject_failure_seeds;  // test hook; excluded from the hash

    void validate() const;          // throws ConfigError
    std::string serialize() const;  // flat `key: value` lines, fixed order
    std::uint64_t content_hash() const;
};

struct RunOutcome {
    std::string policy;
    int budget = 0;
    int seed_index = 0;
    bool ok = false;
    double mae = 0.0;
    std::uint64_t truth_hash = 0;
    std::string error;
};

struct PolicySummary {
    std::string policy;
    int budget = 0;
    int n_runs = 0;  // completed runs only
    double median_mae = 0.0;
    double iqr_mae = 0.0;
    double winrate_vs_gig = 0.0;  // NaN when gig is not benchmarked
};

struct BenchmarkResult {
    std::vector<RunOutcome> runs;  // spec order: policy, budget, seed
    std::vector<PolicySummary> summaries;
    int n_total = 0;
    int n_failed = 0;
    std::string run_dir;  // empty when out_root was empty

    // Partial-failure policy: the benchmark is unusable above 5% failures.
    bool failure_rate_exceeded() const {
        return n_failed * 20 > n_total;  // n_failed / n_total > 0.05
    }
};

// Mean absolute difference. Throws LengthMismatch on length disagreement or
// empty signals. Warm-start frames are excluded by the caller before this.
double mae(const std::vector<double>& target, const std::vector<double>& estimate);

// MAE of one episode's measurement signal, skipping the first
// init_full_frames warm-start records.
double episode_mae(const std::vector<FrameRecord>& records, int init_full_frames);

// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

// Runs the full grid. When out_root is non-empty, persists
//   <out_root>/<hash>/<policy>/<budget>/<seed>/frames.csv (+ actions.csv)
//   <out_root>/<hash>/summary.csv, mae.csv, spec.txt
// Episodes that throw are recorded as failed; aggregation runs over the
// completed ones. Deterministic for fixed spec regardless of jobs.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec,
                              const std::string& out_root);

// `policy,budget,n_runs,median_mae,iqr_mae,winrate_vs_gig` rows.
void write_summary_csv(std::ostream& os, const std::vector<PolicySummary>& rows);

// `policy,budget,seed,status,mae` rows, one per episode.
void write_mae_csv(std::ostream& os, const std::vector<RunOutcome>& rows);

}  // namespace scanline
