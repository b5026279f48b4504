#include "scanline/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "scanline/errors.hpp"
#include "scanline/rng.hpp"

namespace scanline {

void BenchmarkSpec::validate() const {
    if (budgets.empty()) throw ConfigError("budgets must be non-empty");
    if (policies.empty()) throw ConfigError("policies must be non-empty");
    for (int b : budgets) {
        if (b < 1 || b > loop.width) {
            throw ConfigError("budget " + std::to_string(b) + " outside [1, width]");
        }
    }
    for (const std::string& p : policies) policy_from_name(p);
    if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    LoopConfig probe = loop;
    probe.budget_k = budgets.front();
    probe.policy = policies.front();
    probe.validate();
}

std::string BenchmarkSpec::serialize() const {
    std::ostringstream os;
    char buf[64];
    auto put_double = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << key << ": " << buf << "\n";
    };
    os << "base_seed: " << base_seed << "\n";
    os << "budgets: ";
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        os << (i ? "," : "") << budgets[i];
    }
    os << "\n";
    put_double("ess_threshold", loop.ess_threshold);
    os << "estimate_samples: " << loop.estimate_samples << "\n";
    put_double("filter_noise_inflation", loop.filter_noise_inflation);
    os << "gram_averaging: " << gram_averaging_name(loop.gram_mode) << "\n";
    os << "height: " << loop.height << "\n";
    os << "init_full_frames: " << loop.init_full_frames << "\n";
    os << "n_frames: " << loop.n_frames << "\n";
    os << "n_particles: " << loop.n_particles << "\n";
    os << "n_seeds: " << n_seeds << "\n";
    put_double("obs_noise_sigma", loop.obs_noise_sigma);
    os << "policies: ";
    for (std::size_t i = 0; i < policies.size(); ++i) {
        os << (i ? "," : "") << policies[i];
    }
    os << "\n";
    put_double("process_noise_scale", loop.process_noise_scale);
    os << "record_timings: " << (loop.record_timings ? 1 : 0) << "\n";
    os << "width: " << loop.width << "\n";
    return os.str();
}

std::uint64_t BenchmarkSpec::content_hash() const {
    const std::string text = serialize();
    return fnv1a64(text.data(), text.size());
}

double mae(const std::vector<double>& target, const std::vector<double>& estimate) {
    if (target.size() != estimate.size() || target.empty()) {
        throw LengthMismatch("signals must have equal nonzero length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        total += std::abs(target[i] - estimate[i]);
    }
    return total / static_cast<double>(target.size());
}

double episode_mae(const std::vector<FrameRecord>& records, int init_full_frames) {
    std::vector<double> target;
    std::vector<double> estimate;
    for (const FrameRecord& r : records) {
        if (r.frame_index < init_full_frames) continue;
        target.push_back(r.target_measurement);
        estimate.push_back(r.estimated_measurement);
    }
    return mae(target, estimate);
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

struct EpisodeSlot {
    RunOutcome outcome;
    EpisodeResult episode;
};

std::string hash_dir_name(std::uint64_t hash) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkSpec& spec,
                              const std::string& out_root) {
    spec.validate();

    struct WorkItem {
        std::string policy;
        int budget;
        int seed_index;
    };
    std::vector<WorkItem> items;
    for (const std::string& p : spec.policies) {
        for (int b : spec.budgets) {
            for (int s = 0; s < spec.n_seeds; ++s) items.push_back({p, b, s});
        }
    }

    std::vector<EpisodeSlot> slots(items.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            const WorkItem& item = items[i];
            EpisodeSlot& slot = slots[i];
            slot.outcome.policy = item.policy;
            slot.outcome.budget = item.budget;
            slot.outcome.seed_index = item.seed_index;
            try {
                if (std::find(spec.inject_failure_seeds.begin(),
                              spec.inject_failure_seeds.end(),
                              item.seed_index) != spec.inject_failure_seeds.end()) {
                    throw std::runtime_error("injected failure (test hook)");
                }
                LoopConfig cfg = spec.loop;
                cfg.policy = item.policy;
                cfg.budget_k = item.budget;
                cfg.rng_seed =
                    mix_seed(spec.base_seed, seed_tag::kFilterSeq, item.seed_index);
                slot.episode = run_episode(
                    cfg, mix_seed(spec.base_seed, seed_tag::kPhantomSeq,
                                  item.seed_index));
                slot.outcome.mae =
                    episode_mae(slot.episode.records, cfg.init_full_frames);
                slot.outcome.truth_hash = slot.episode.truth_hash;
                slot.outcome.ok = true;
            } catch (const std::exception& e) {
                slot.outcome.ok = false;
                slot.outcome.error = e.what();
            }
        }
    };
    if (spec.jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int n_threads = std::min<int>(spec.jobs, static_cast<int>(items.size()));
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    BenchmarkResult result;
    result.n_total = static_cast<int>(items.size());
    for (EpisodeSlot& slot : slots) {
        if (!slot.outcome.ok) ++result.n_failed;
        result.runs.push_back(slot.outcome);
    }

    // Paired design: one seed, one phantom sequence, every policy and budget.
    for (int s = 0; s < spec.n_seeds; ++s) {
        std::uint64_t expected = 0;
        bool have = false;
        for (const RunOutcome& run : result.runs) {
            if (run.seed_index != s || !run.ok) continue;
            if (!have) {
                expected = run.truth_hash;
                have = true;
            } else if (run.truth_hash != expected) {
                throw std::logic_error("paired phantom sequences diverged");
            }
        }
    }

    auto mae_of = [&](const std::string& policy, int budget,
                      int seed) -> const RunOutcome* {
        for (const RunOutcome& run : result.runs) {
            if (run.policy == policy && run.budget == budget &&
                run.seed_index == seed && run.ok) {
                return &run;
            }
        }
        return nullptr;
    };
    const bool have_gig = std::find(spec.policies.begin(), spec.policies.end(),
                                    "gig") != spec.policies.end();
    for (const std::string& p : spec.policies) {
        for (int b : spec.budgets) {
            PolicySummary row;
            row.policy = p;
            row.budget = b;
            std::vector<double> maes;
            for (int s = 0; s < spec.n_seeds; ++s) {
                if (const RunOutcome* run = mae_of(p, b, s)) maes.push_back(run->mae);
            }
            row.n_runs = static_cast<int>(maes.size());
            if (!maes.empty()) {
                row.median_mae = quantile(maes, 0.5);
                row.iqr_mae = quantile(maes, 0.75) - quantile(maes, 0.25);
            }
            if (have_gig) {
                double wins = 0.0;
                int paired = 0;
                for (int s = 0; s < spec.n_seeds; ++s) {
                    const RunOutcome* mine = mae_of(p, b, s);
                    const RunOutcome* gig = mae_of("gig", b, s);
                    if (!mine || !gig) continue;
                    ++paired;
                    if (mine->mae < gig->mae) wins += 1.0;
                    else if (mine->mae == gig->mae) wins += 0.5;
                }
                row.winrate_vs_gig =
                    paired > 0 ? wins / paired
                               : std::numeric_limits<double>::quiet_NaN();
            } else {
                row.winrate_vs_gig = std::numeric_limits<double>::quiet_NaN();
            }
            result.summaries.push_back(std::move(row));
        }
    }

    if (!out_root.empty()) {
        namespace fs = std::filesystem;
        const fs::path root = fs::path(out_root) / hash_dir_name(spec.content_hash());
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (!slots[i].outcome.ok) continue;
            const WorkItem& item = items[i];
            const fs::path dir = root / item.policy / std::to_string(item.budget) /
                                 std::to_string(item.seed_index);
            fs::create_directories(dir);
            {
                std::ofstream os(dir / "frames.csv", std::ios::binary);
                write_frames_csv(os, slots[i].episode.records);
            }
            {
                std::ofstream os(dir / "actions.csv", std::ios::binary);
                write_action_log(os, slots[i].episode.selections);
            }
        }
        {
            std::ofstream os(root / "summary.csv", std::ios::binary);
            write_summary_csv(os, result.summaries);
        }
        {
            std::ofstream os(root / "mae.csv", std::ios::binary);
            write_mae_csv(os, result.runs);
        }
        {
            std::ofstream os(root / "spec.txt", std::ios::binary);
            os << spec.serialize();
        }
        result.run_dir = root.string();
    }
    return result;
}

void write_summary_csv(std::ostream& os, const std::vector<PolicySummary>& rows) {
    os << "policy,budget,n_runs,median_mae,iqr_mae,winrate_vs_gig\n";
    char buf[128];
    for (const PolicySummary& r : rows) {
        os << r.policy << ',' << r.budget << ',' << r.n_runs;
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g\n", r.median_mae,
                      r.iqr_mae, r.winrate_vs_gig);
        os << buf;
    }
}

void write_mae_csv(std::ostream& os, const std::vector<RunOutcome>& rows) {
    os << "policy,budget,seed,status,mae\n";
    char buf[64];
    for (const RunOutcome& r : rows) {
        os << r.policy << ',' << r.budget << ',' << r.seed_index << ','
           << (r.ok ? "ok" : "failed");
        if (r.ok) {
            std::snprintf(buf, sizeof(buf), ",%.17g\n", r.mae);
            os << buf;
        } else {
            os << ",\n";
        }
    }
}

}  // namespace scanline
