#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "scanline/errors.hpp"
#include "scanline/harness.hpp"
#include "scanline/io.hpp"
#include "scanline/loop.hpp"
#include "scanline/phantom.hpp"
#include "scanline/plot.hpp"
#include "scanline/policy.hpp"
#include "scanline/rng.hpp"
#include "scanline/selftest.hpp"

namespace fs = std::filesystem;
using namespace scanline;

namespace {

std::string runs_root() {
    const char* env = std::getenv("SCANLINE_RUNS_DIR");
    return (env != nullptr && *env != '\0') ? std::string(env)
                                            : std::string("runs");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    return os;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// One CLI flag mirrored into a config key; applied only when the flag was
// actually passed, so precedence is defaults < file < --set < flags.
struct Bind {
    CLI::Option* opt = nullptr;
    std::string key;
    std::function<std::string()> render;
};

struct Binder {
    CLI::App* sub;
    std::vector<Bind> binds;

    void opt_int(int& storage, const std::string& flag, const std::string& key,
                 const std::string& desc) {
        CLI::Option* o = sub->add_option(flag, storage, desc);
        binds.push_back({o, key, [&storage] { return std::to_string(storage); }});
    }
    void opt_u64(std::uint64_t& storage, const std::string& flag,
                 const std::string& key, const std::string& desc) {
        CLI::Option* o = sub->add_option(flag, storage, desc);
        binds.push_back({o, key, [&storage] { return std::to_string(storage); }});
    }
    void opt_dbl(double& storage, const std::string& flag, const std::string& key,
                 const std::string& desc) {
        CLI::Option* o = sub->add_option(flag, storage, desc);
        binds.push_back({o, key, [&storage] { return format_double(storage); }});
    }
    void opt_str(std::string& storage, const std::string& flag,
                 const std::string& key, const std::string& desc) {
        CLI::Option* o = sub->add_option(flag, storage, desc);
        binds.push_back({o, key, [&storage] { return storage; }});
    }
    void opt_flag(const std::string& flag, const std::string& key,
                  const std::string& desc) {
        CLI::Option* o = sub->add_flag(flag, desc);
        binds.push_back({o, key, [] { return std::string("true"); }});
    }
    void apply(Config& cfg) const {
        for (const Bind& b : binds) {
            if (b.opt->count() > 0) cfg.set(b.key, b.render());
        }
    }
};

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path,
                    "flat `key: value` config file");
    sub->add_option("--set", args.sets, "override a config key (key=value)")
        ->take_all();
}

// defaults already in cfg; file entries, then --set, then direct flags.
Config resolve_config(Config cfg, const CommonArgs& args, const Binder& binder,
                      std::span<const std::string_view> allowed) {
    if (!args.config_path.empty()) {
        const Config file = load_config_file(args.config_path);
        for (const auto& [key, value] : file.entries()) cfg.set(key, value);
    }
    for (const std::string& kv : args.sets) apply_override(cfg, kv);
    binder.apply(cfg);
    cfg.reject_unknown_keys(allowed);
    return cfg;
}

void set_loop_defaults(Config& cfg) {
    const LoopConfig d;
    cfg.set("height", std::to_string(d.height));
    cfg.set("width", std::to_string(d.width));
    cfg.set("frames", std::to_string(d.n_frames));
    cfg.set("particles", std::to_string(d.n_particles));
    cfg.set("sigma", format_double(d.obs_noise_sigma));
    cfg.set("process_noise", format_double(d.process_noise_scale));
    cfg.set("filter_noise_inflation", format_double(d.filter_noise_inflation));
    cfg.set("init_full", std::to_string(d.init_full_frames));
    cfg.set("estimate_samples", std::to_string(d.estimate_samples));
    cfg.set("ess_threshold", format_double(d.ess_threshold));
    cfg.set("gram_averaging", gram_averaging_name(d.gram_mode));
    cfg.set("record_timings", "false");
}

void add_loop_flags(Binder& b, LoopConfig& lc, std::string& gram_storage) {
    b.opt_int(lc.height, "--height", "height", "grid height in pixels");
    b.opt_int(lc.width, "--width", "width", "grid width (scan lines)");
    b.opt_int(lc.n_frames, "--frames", "frames", "number of frames");
    b.opt_int(lc.n_particles, "--particles", "particles", "particle count");
    b.opt_dbl(lc.obs_noise_sigma, "--sigma", "sigma",
              "observation noise std for the likelihood");
    b.opt_dbl(lc.process_noise_scale, "--process-noise", "process_noise",
              "phantom process noise scale");
    b.opt_dbl(lc.filter_noise_inflation, "--filter-noise-inflation",
              "filter_noise_inflation", "filter prediction noise inflation");
    b.opt_int(lc.init_full_frames, "--init-full", "init_full",
              "fully sampled warm-start frames");
    b.opt_int(lc.estimate_samples, "--estimate-samples", "estimate_samples",
              "posterior samples per estimate (-1 = all particles)");
    b.opt_dbl(lc.ess_threshold, "--ess-threshold", "ess_threshold",
              "resample when ESS falls below this fraction of N");
    b.opt_str(gram_storage, "--gram-averaging", "gram_averaging",
              "per_sample_gram or averaged_jacobian");
    b.opt_flag("--record-timings", "record_timings",
               "measure per-frame wall time (breaks byte determinism)");
}

LoopConfig loop_from_config(const Config& cfg) {
    LoopConfig lc;
    lc.height = cfg.get_int("height", lc.height);
    lc.width = cfg.get_int("width", lc.width);
    lc.n_frames = cfg.get_int("frames", lc.n_frames);
    lc.n_particles = cfg.get_int("particles", lc.n_particles);
    lc.obs_noise_sigma = cfg.get_double("sigma", lc.obs_noise_sigma);
    lc.process_noise_scale =
        cfg.get_double("process_noise", lc.process_noise_scale);
    lc.filter_noise_inflation =
        cfg.get_double("filter_noise_inflation", lc.filter_noise_inflation);
    lc.init_full_frames = cfg.get_int("init_full", lc.init_full_frames);
    lc.estimate_samples = cfg.get_int("estimate_samples", lc.estimate_samples);
    lc.ess_threshold = cfg.get_double("ess_threshold", lc.ess_threshold);
    lc.gram_mode = gram_averaging_from_name(
        cfg.get_or("gram_averaging", gram_averaging_name(lc.gram_mode)));
    lc.record_timings = cfg.get_bool("record_timings", false);
    return lc;
}

constexpr std::string_view kLoopKeys[] = {
    "height",        "width",
    "frames",        "particles",
    "sigma",         "process_noise",
    "filter_noise_inflation", "init_full",
    "estimate_samples", "ess_threshold",
    "gram_averaging", "record_timings"};

std::vector<std::string_view> with_loop_keys(
    std::initializer_list<std::string_view> extra) {
    std::vector<std::string_view> keys(std::begin(kLoopKeys),
                                       std::end(kLoopKeys));
    keys.insert(keys.end(), extra.begin(), extra.end());
    return keys;
}

int cmd_episode(const Config& cfg) {
    LoopConfig lc = loop_from_config(cfg);
    lc.budget_k = cfg.get_int("k", lc.budget_k);
    lc.policy = cfg.get_or("policy", lc.policy);
    const std::uint64_t seed = cfg.get_uint64("seed", 1);
    lc.rng_seed = mix_seed(seed, seed_tag::kFilterSeq, 0);
    const bool dump_saliency = cfg.get_bool("dump_saliency", false);
    lc.keep_score_maps = dump_saliency;
    lc.validate();

    const EpisodeResult result =
        run_episode(lc, mix_seed(seed, seed_tag::kPhantomSeq, 0));

    std::string out = cfg.get_or("out", "");
    if (out.empty()) {
        out = runs_root() + "/episode_" + lc.policy + "_k" +
              std::to_string(lc.budget_k) + "_seed" + std::to_string(seed);
    }
    fs::create_directories(out);
    {
        std::ofstream os = open_out(out + "/frames.csv");
        write_frames_csv(os, result.records);
    }
    {
        std::ofstream os = open_out(out + "/actions.csv");
        write_action_log(os, result.selections);
    }
    {
        std::ofstream os = open_out(out + "/config.txt");
        os << config_echo(cfg);
    }
    if (dump_saliency) {
        for (const ActionSelection& sel : result.selections) {
            if (sel.score.values.size() == 0) continue;
            char name[40];
            std::snprintf(name, sizeof name, "/saliency_%03d.txt",
                          sel.action.frame_index);
            std::ofstream os = open_out(out + name);
            write_grid_ascii(os, sel.score.values);
        }
    }
    std::cout << "episode: " << result.records.size() << " frames -> " << out
              << "\n";
    return 0;
}

int cmd_bench(const Config& cfg) {
    BenchmarkSpec spec;
    spec.loop = loop_from_config(cfg);
    spec.budgets = parse_int_list(cfg.get_or("budgets", "1,3,5"));
    spec.policies = parse_string_list(
        cfg.get_or("policies", "tbig,gig,uniform_rotating,random"));
    spec.n_seeds = cfg.get_int("seeds", spec.n_seeds);
    spec.base_seed = cfg.get_uint64("base_seed", spec.base_seed);
    int jobs = cfg.get_int("jobs", 0);  // 0 = auto-detect
    if (jobs <= 0) {
        jobs = std::max(1u, std::thread::hardware_concurrency());
    }
    spec.jobs = jobs;
    spec.validate();

    const BenchmarkResult result = run_benchmark(spec, cfg.get_or("out", runs_root()));
    if (!result.run_dir.empty()) {
        std::ofstream os = open_out(result.run_dir + "/config.txt");
        os << config_echo(cfg);
    }
    write_summary_csv(std::cout, result.summaries);
    if (!result.run_dir.empty()) {
        std::cout << "artifacts: " << result.run_dir << "\n";
    }
    if (result.n_failed > 0) {
        std::cerr << result.n_failed << " of " << result.n_total
                  << " episodes failed\n";
    }
    return result.failure_rate_exceeded() ? 1 : 0;
}

int cmd_phantom(const Config& cfg) {
    const int height = cfg.get_int("height", kDefaultHeight);
    const int width = cfg.get_int("width", kDefaultWidth);
    const int n_frames = cfg.get_int("frames", 100);
    const std::uint64_t seed = cfg.get_uint64("seed", 1);
    const double scale = cfg.get_double("process_noise", 1.0);
    if (height < 8 || width < 8) throw ConfigError("grid must be at least 8x8");
    if (n_frames < 1) throw ConfigError("frames must be >= 1");

    // Same derivation as run_episode, so `phantom --seed S` writes the exact
    // ground truth that `episode --seed S` tracks.
    const std::uint64_t phantom_seed = mix_seed(seed, seed_tag::kPhantomSeq, 0);
    const StateRanges ranges = StateRanges::defaults_for_grid(height, width);
    LatentState state =
        sample_state(ranges, mix_seed(phantom_seed, seed_tag::kTruthInit));
    std::vector<ImageGrid> frames;
    std::vector<GroundTruthMeasurement> signal;
    frames.reserve(n_frames);
    for (int t = 0; t < n_frames; ++t) {
        if (t > 0) {
            state = step_latent(state, scale,
                                mix_seed(phantom_seed, seed_tag::kTruthStep, t),
                                height, width);
        }
        frames.push_back(render(state, height, width));
        signal.push_back(ground_truth_measurement(state));
    }

    std::string out = cfg.get_or("out", "");
    if (out.empty()) out = runs_root() + "/phantom_seed" + std::to_string(seed);
    fs::create_directories(out);
    {
        std::ofstream os = open_out(out + "/sequence.txt");
        write_sequence(os, frames);
    }
    {
        std::ofstream os = open_out(out + "/truth.csv");
        write_ground_truth_csv(os, signal);
    }
    {
        std::ofstream os = open_out(out + "/config.txt");
        os << config_echo(cfg);
    }
    std::cout << "phantom: " << n_frames << " frames -> " << out << "\n";
    return 0;
}

int cmd_plot(const Config& cfg) {
    const std::string kind = cfg.get("kind");
    const std::string input = cfg.get("input");
    std::string out = cfg.get_or("out", "");
    if (out.empty()) out = kind + ".svg";

    std::ifstream is(input);
    if (!is) throw std::runtime_error("cannot open input: " + input);

    std::string svg;
    if (kind == "timeseries") {
        svg = plot_timeseries(read_frames_csv(is));
    } else if (kind == "mae_box") {
        svg = plot_mae_box(read_mae_csv(is));
    } else if (kind == "saliency") {
        const Grid map = read_grid_ascii(is);
        std::vector<int> columns;
        const std::string spec = cfg.get_or("columns", "");
        if (!spec.empty()) columns = parse_int_list(spec);
        svg = plot_saliency(map, columns);
    } else {
        throw ConfigError("unknown plot kind: " + kind +
                          " (expected timeseries, mae_box, or saliency)");
    }
    std::ofstream os = open_out(out);
    os << svg;
    os.flush();
    if (!os) throw std::runtime_error("cannot write " + out);
    std::cout << "wrote " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"task-adaptive scan-line selection simulator"};
    app.require_subcommand(1);

    CLI::App* ep = app.add_subcommand("episode", "run one perception-action episode");
    CommonArgs ep_common;
    add_common(ep, ep_common);
    Binder ep_binder{ep, {}};
    LoopConfig ep_lc;
    std::string ep_gram;
    add_loop_flags(ep_binder, ep_lc, ep_gram);
    ep_binder.opt_int(ep_lc.budget_k, "--k", "k", "scan lines per frame");
    std::string ep_policy;
    ep_binder.opt_str(ep_policy, "--policy", "policy",
                      "tbig, gig, uniform_rotating, or random");
    std::uint64_t ep_seed = 1;
    ep_binder.opt_u64(ep_seed, "--seed", "seed", "episode seed");
    std::string ep_out;
    ep_binder.opt_str(ep_out, "--out", "out", "output directory");
    ep_binder.opt_flag("--dump-saliency", "dump_saliency",
                       "write per-frame score maps");

    CLI::App* be = app.add_subcommand("bench", "run the policy/budget benchmark grid");
    CommonArgs be_common;
    add_common(be, be_common);
    Binder be_binder{be, {}};
    LoopConfig be_lc;
    std::string be_gram;
    add_loop_flags(be_binder, be_lc, be_gram);
    std::string be_budgets, be_policies, be_out;
    int be_seeds = 0, be_jobs = 0;
    std::uint64_t be_base_seed = 1;
    be_binder.opt_str(be_budgets, "--budgets", "budgets", "comma list, e.g. 1,3,5");
    be_binder.opt_str(be_policies, "--policies", "policies",
                      "comma list of policy names");
    be_binder.opt_int(be_seeds, "--seeds", "seeds", "paired seeds per cell");
    be_binder.opt_u64(be_base_seed, "--base-seed", "base_seed", "benchmark base seed");
    be_binder.opt_int(be_jobs, "--jobs", "jobs", "worker threads (0 = auto)");
    be_binder.opt_str(be_out, "--out", "out", "output root directory");

    CLI::App* ph = app.add_subcommand("phantom", "render a ground-truth sequence");
    CommonArgs ph_common;
    add_common(ph, ph_common);
    Binder ph_binder{ph, {}};
    int ph_h = kDefaultHeight, ph_w = kDefaultWidth, ph_frames = 100;
    std::uint64_t ph_seed = 1;
    double ph_noise = 1.0;
    std::string ph_out;
    ph_binder.opt_int(ph_h, "--height", "height", "grid height in pixels");
    ph_binder.opt_int(ph_w, "--width", "width", "grid width (scan lines)");
    ph_binder.opt_int(ph_frames, "--frames", "frames", "number of frames");
    ph_binder.opt_u64(ph_seed, "--seed", "seed", "phantom seed");
    ph_binder.opt_dbl(ph_noise, "--process-noise", "process_noise",
                      "process noise scale");
    ph_binder.opt_str(ph_out, "--out", "out", "output directory");

    CLI::App* pl = app.add_subcommand("plot", "render SVG plots from run artifacts");
    CommonArgs pl_common;
    add_common(pl, pl_common);
    Binder pl_binder{pl, {}};
    std::string pl_kind, pl_input, pl_out, pl_columns;
    pl_binder.opt_str(pl_kind, "--kind", "kind",
                      "timeseries, mae_box, or saliency");
    pl_binder.opt_str(pl_input, "--input", "input",
                      "frames.csv, mae.csv, or a saliency grid");
    pl_binder.opt_str(pl_out, "--out", "out", "output SVG path");
    pl_binder.opt_str(pl_columns, "--columns", "columns",
                      "saliency only: comma list of selected columns to mark");

    CLI::App* st = app.add_subcommand("selftest", "run the built-in oracle suites");
    bool st_perturb = false;
    st->add_flag("--perturb-jacobian", st_perturb,
                 "corrupt one analytic Jacobian entry (test hook; must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(ep)) {
            Config cfg;
            set_loop_defaults(cfg);
            cfg.set("k", "5");
            cfg.set("policy", "tbig");
            cfg.set("seed", "1");
            return cmd_episode(resolve_config(
                std::move(cfg), ep_common, ep_binder,
                with_loop_keys({"k", "policy", "seed", "out", "dump_saliency"})));
        }
        if (app.got_subcommand(be)) {
            Config cfg;
            set_loop_defaults(cfg);
            return cmd_bench(resolve_config(
                std::move(cfg), be_common, be_binder,
                with_loop_keys({"budgets", "policies", "seeds", "base_seed",
                                "jobs", "out"})));
        }
        if (app.got_subcommand(ph)) {
            Config cfg;
            const std::vector<std::string_view> allowed = {
                "height", "width", "frames", "seed", "process_noise", "out"};
            return cmd_phantom(
                resolve_config(std::move(cfg), ph_common, ph_binder, allowed));
        }
        if (app.got_subcommand(pl)) {
            Config cfg;
            const std::vector<std::string_view> allowed = {"kind", "input",
                                                           "out", "columns"};
            return cmd_plot(
                resolve_config(std::move(cfg), pl_common, pl_binder, allowed));
        }
        if (app.got_subcommand(st)) {
            SelfTestOptions options;
            options.perturb_jacobian = st_perturb;
            options.out = &std::cout;
            return run_selftest(options) == 0 ? 0 : 1;
        }
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
