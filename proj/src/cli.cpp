#include "matchsyn/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "matchsyn/baselines.hpp"
#include "matchsyn/optimizer.hpp"
#include "matchsyn/rng.hpp"

namespace matchsyn {

namespace {

// The reported geometry is quantized to 0.01 um (the printed
// resolution), so verifying the report and verifying the synthesis
// result are the same thing.
double quantize_um(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::strtod(buf, nullptr);
}

}  // namespace

SynthesisResult synthesize_target(const LoadedModel& model, const Performance& target,
                                  const EnvConfig& env) {
    SynthesisResult res;
    res.target = target;
    res.z_scores = normalize_input(target, model.stats());
    for (double z : res.z_scores)
        if (std::fabs(z) > 4.0) res.out_of_distribution = true;

    const Geometry raw = model.predict(target);
    res.geometry = Geometry{quantize_um(raw.w_oa), quantize_um(raw.w_ob),
                            quantize_um(raw.r0),   quantize_um(raw.r1),
                            quantize_um(raw.x_gnd), quantize_um(raw.l_f)};
    const Geometry& g = res.geometry;
    res.geometry_valid = g.w_oa > 0.0 && g.w_ob > 0.0 && g.r0 > 0.0 && g.r1 > 0.0 &&
                         g.x_gnd > 0.0 && g.l_f > 0.0;
    if (res.geometry_valid) {
        // An extrapolated geometry can fall outside the surrogate's
        // domain; report it instead of failing the synthesis.
        try {
            const Performance p =
                performance_from_geometry(g, target.c1, target.c2, env);
            res.achieved = {p.re_z, p.im_z};
            res.verified = true;
        } catch (const std::exception&) {
            res.verified = false;
        }
    }
    return res;
}

namespace cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

nlohmann::json load_config(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") {
            std::ifstream in(args[i + 1]);
            if (!in) throw CLI::ValidationError("--config", "cannot open " + args[i + 1]);
            try {
                return nlohmann::json::parse(in);
            } catch (const std::exception& e) {
                throw CLI::ValidationError("--config", e.what());
            }
        }
    }
    return nlohmann::json::object();
}

template <typename T>
void config_get(const nlohmann::json& cfg, const char* key, T& slot) {
    if (cfg.contains(key)) slot = cfg.at(key).get<T>();
}

void config_get_interval(const nlohmann::json& cfg, const char* key, Interval& iv) {
    if (cfg.contains(key)) {
        iv.lo = cfg.at(key).at(0).get<double>();
        iv.hi = cfg.at(key).at(1).get<double>();
    }
}

void apply_ranges_config(const nlohmann::json& cfg, SamplingRanges& r) {
    if (!cfg.contains("ranges")) return;
    const auto& j = cfg.at("ranges");
    config_get_interval(j, "w_oa", r.w_oa);
    config_get_interval(j, "w_ob", r.w_ob);
    config_get_interval(j, "r0", r.r0);
    config_get_interval(j, "r1", r.r1);
    config_get_interval(j, "x_gnd", r.x_gnd);
    config_get_interval(j, "l_f", r.l_f);
    config_get_interval(j, "c1", r.c1);
    config_get_interval(j, "c2", r.c2);
}

void apply_env_config(const nlohmann::json& cfg, EnvConfig& env) {
    if (!cfg.contains("env")) return;
    config_get(cfg.at("env"), "freq", env.freq);
    config_get(cfg.at("env"), "r_load", env.r_load);
}

void apply_thread_env() {
    if (const char* s = std::getenv("MATCHSYN_THREADS")) {
        const int n = std::atoi(s);
        if (n > 0) set_max_threads(n);
    }
}

// ---- generate ----------------------------------------------------------

struct GenerateOpts {
    std::size_t n = 100000;
    std::uint64_t seed = 7;
    std::string out;
    double split_fraction = 0.8;
    std::uint64_t split_seed = 0;
    bool split_seed_given = false;
    int threads = 0;
    SamplingRanges ranges;
    EnvConfig env;
};

int cmd_generate(const GenerateOpts& o) {
    if (o.threads > 0) set_max_threads(o.threads);
    const std::uint64_t split_seed =
        o.split_seed_given ? o.split_seed : derive_stream(o.seed, 0x517Ful);
    Dataset d = generate(o.n, o.seed, o.ranges, o.env);
    split(d, o.split_fraction, split_seed);
    save_csv(d, o.out);
    const std::uint64_t checksum = fnv1a_file(o.out);
    std::printf("rows: %zu\n", d.rows.size());
    std::printf("train: %zu  test: %zu\n", d.train_count(),
                d.rows.size() - d.train_count());
    std::printf("csv: %s\n", o.out.c_str());
    std::printf("meta: %s\n", sidecar_path(o.out).c_str());
    std::printf("fnv1a: %016llx\n", static_cast<unsigned long long>(checksum));
    return kExitOk;
}

// ---- train ---------------------------------------------------------------

struct TrainOpts {
    std::string data;
    std::string model = "senn";
    std::string preset = "desk";
    std::string loss = "smse";
    double lambda = 0.5;
    int epochs = 0;
    std::size_t batch_size = 0;
    double lr0 = 0.001;
    int decay_every = 50;
    double tau = 0.0;
    std::uint64_t init_seed = 1;
    std::uint64_t shuffle_seed = 2;
    std::string out = "model.ckpt";
    std::string log;
    bool verbose = false;
    // whether epochs/batch/lambda were set explicitly (flag or config)
    bool epochs_given = false;
    bool batch_given = false;
    bool lambda_given = false;
};

LossKind parse_loss(const std::string& s) {
    if (s == "smse") return LossKind::smse;
    if (s == "sdmse") return LossKind::sdmse;
    throw CLI::ValidationError("--loss", "expected smse or sdmse");
}

int cmd_train(const TrainOpts& o) {
    const Dataset d = load_csv(o.data);
    if (!d.split_info)
        throw std::runtime_error("train: dataset has no split metadata; regenerate it");

    ModelConfig mc = o.preset == "paper" ? ModelConfig::paper() : ModelConfig::desk();
    TrainConfig tc = o.preset == "paper" ? TrainConfig{} : TrainConfig::desk();
    tc.lr0 = o.lr0;
    tc.decay_every = o.decay_every;
    tc.adam.tau = o.tau;
    tc.init_seed = o.init_seed;
    tc.shuffle_seed = o.shuffle_seed;
    tc.loss_kind = parse_loss(o.loss);
    tc.lambda = o.lambda;
    tc.verbose = o.verbose;
    if (o.epochs_given) tc.epochs = o.epochs;
    if (o.batch_given) tc.batch_size = o.batch_size;

    const std::string log_path = o.log.empty() ? o.out + ".log.csv" : o.log;

    if (o.model == "linear") {
        if (o.epochs_given)
            std::fprintf(stderr, "warning: --epochs is ignored for the linear model\n");
        const LinearModel lm = fit_linear(d);
        save_checkpoint(o.out, lm);
        const EvalMetrics ev = evaluate_linear(lm, d);
        std::vector<EpochLog> log(1);
        log[0].epoch = 0;
        log[0].eta = 0.0;
        log[0].train_loss = 0.0;
        log[0].test_smse = ev.smse;
        log[0].test_sdmse = ev.sdmse;
        log[0].test_r2 = ev.r2;
        write_log_csv(log_path, log);
        std::printf("model: linear\n");
        std::printf("test smse: %.9g\ntest sdmse: %.9g\ntest r2: %.9g\n", ev.smse,
                    ev.sdmse, ev.r2);
        std::printf("checkpoint: %s\nlog: %s\n", o.out.c_str(), log_path.c_str());
        return kExitOk;
    }

    if (o.model == "naive") {
        if (o.lambda_given && o.lambda != 0.0)
            std::fprintf(stderr, "warning: --model naive forces lambda = 0\n");
        tc.lambda = 0.0;
    } else if (o.model != "senn") {
        throw CLI::ValidationError("--model", "expected senn, naive or linear");
    }

    const TrainResult tr =
        o.model == "naive" ? train_naive(d, mc, tc) : train(d, mc, tc);
    save_checkpoint(o.out, tr.model, o.model);
    write_log_csv(log_path, tr.log);
    const EpochLog& last = tr.log.back();
    std::printf("model: %s\n", o.model.c_str());
    std::printf("epochs: %d  final eta: %.9g  final train loss: %.9g\n",
                static_cast<int>(tr.log.size()), last.eta, last.train_loss);
    std::printf("test smse: %.9g\ntest sdmse: %.9g\ntest r2: %.9g\n", last.test_smse,
                last.test_sdmse, last.test_r2);
    std::printf("checkpoint: %s\nlog: %s\n", o.out.c_str(), log_path.c_str());
    return kExitOk;
}

// ---- evaluate --------------------------------------------------------

struct EvaluateOpts {
    std::string data;
    std::vector<std::string> ckpts;
    std::string json_out = "report.json";
};

int cmd_evaluate(const EvaluateOpts& o) {
    const Dataset d = load_csv(o.data);
    if (!d.split_info) throw std::runtime_error("evaluate: dataset has no split metadata");

    nlohmann::json report;
    report["data"] = o.data;
    report["split"] = "test";
    report["models"] = nlohmann::json::array();

    std::printf("%-10s %-14s %-14s %-14s\n", "model", "smse", "sdmse", "r2");
    for (const std::string& path : o.ckpts) {
        const LoadedModel lm = load_checkpoint(path);
        const EvalMetrics ev =
            lm.is_linear() ? evaluate_linear(lm.linear, d) : evaluate_model(lm.senn, d);
        std::printf("%-10s %-14.6g %-14.6g %-14.6g\n", lm.kind.c_str(), ev.smse,
                    ev.sdmse, ev.r2);
        report["models"].push_back({{"checkpoint", path},
                                    {"kind", lm.kind},
                                    {"smse", ev.smse},
                                    {"sdmse", ev.sdmse},
                                    {"r2", ev.r2}});
    }
    std::ofstream out(o.json_out, std::ios::binary);
    if (!out) throw std::runtime_error("evaluate: cannot open " + o.json_out);
    out << report.dump(2) << '\n';
    std::printf("report: %s\n", o.json_out.c_str());
    return kExitOk;
}

// ---- synthesize / verify ------------------------------------------------

struct SynthesizeOpts {
    std::string ckpt;
    double re = 0.0, im = 0.0, c1 = 0.0, c2 = 0.0;
    EnvConfig env;
};

void print_verification(const Performance& target, double re, double im) {
    std::printf("%-14s %12s %12s\n", "", "Re(Z) Ω", "Im(Z) Ω");
    std::printf("%-14s %12.3f %12.3f\n", "targeted", target.re_z, target.im_z);
    std::printf("%-14s %12.3f %12.3f\n", "synthesized", re, im);
}

int cmd_synthesize(const SynthesizeOpts& o) {
    const LoadedModel lm = load_checkpoint(o.ckpt);
    const Performance target{o.re, o.im, o.c1, o.c2};
    const SynthesisResult res = synthesize_target(lm, target, o.env);

    if (res.out_of_distribution) {
        std::fprintf(stderr,
                     "warning: target is far from the training distribution "
                     "(|z| = %.2f/%.2f/%.2f/%.2f, threshold 4); prediction is "
                     "an extrapolation\n",
                     std::fabs(res.z_scores[0]), std::fabs(res.z_scores[1]),
                     std::fabs(res.z_scores[2]), std::fabs(res.z_scores[3]));
    }
    if (!res.geometry_valid)
        throw std::runtime_error("synthesize: model produced a non-positive geometry field");

    const Geometry& g = res.geometry;
    std::printf("synthesized geometry (µm):\n");
    std::printf("  w_oa  = %8.2f   r0  = %8.2f\n", g.w_oa, g.r0);
    std::printf("  w_ob  = %8.2f   r1  = %8.2f\n", g.w_ob, g.r1);
    std::printf("  x_gnd = %8.2f   l_f = %8.2f\n", g.x_gnd, g.l_f);
    if (!res.verified)
        throw std::runtime_error(
            "synthesize: synthesized geometry lies outside the surrogate's domain");
    std::printf("verification with c1 = %.3f fF, c2 = %.3f fF:\n", o.c1, o.c2);
    print_verification(target, res.achieved.real(), res.achieved.imag());
    return kExitOk;
}

struct VerifyOpts {
    Geometry g;
    double c1 = 0.0, c2 = 0.0;
    EnvConfig env;
};

int cmd_verify(const VerifyOpts& o) {
    const Performance p = performance_from_geometry(o.g, o.c1, o.c2, o.env);
    std::printf("Re(Z) = %.3f Ω\n", p.re_z);
    std::printf("Im(Z) = %.3f Ω\n", p.im_z);
    return kExitOk;
}

void add_env_flags(CLI::App* sub, EnvConfig& env) {
    sub->add_option("--freq", env.freq, "Operating frequency, Hz")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--r-load", env.r_load, "Load resistance, Ω")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args) {
    apply_thread_env();

    CLI::App app{"Direct synthesis toolkit for transformer-based matching networks"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file with defaults")
        ->configurable(false);

    nlohmann::json cfg;
    try {
        cfg = load_config(args);
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
    }

    // generate
    GenerateOpts gen;
    apply_ranges_config(cfg, gen.ranges);
    apply_env_config(cfg, gen.env);
    config_get(cfg, "n", gen.n);
    config_get(cfg, "seed", gen.seed);
    config_get(cfg, "out", gen.out);
    config_get(cfg, "split_fraction", gen.split_fraction);
    config_get(cfg, "threads", gen.threads);
    if (cfg.contains("split_seed")) {
        gen.split_seed = cfg.at("split_seed").get<std::uint64_t>();
        gen.split_seed_given = true;
    }
    CLI::App* sub_gen = app.add_subcommand(
        "generate", "Sample geometries and label them with the analytic surrogate");
    sub_gen->add_option("--config", config_path, "JSON config file with defaults");
    sub_gen->add_option("--n", gen.n, "Number of triples")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub_gen->add_option("--seed", gen.seed, "Master generation seed")->capture_default_str();
    sub_gen->add_option("--out", gen.out, "Output CSV path")->required();
    sub_gen->add_option("--split-fraction", gen.split_fraction, "Training fraction")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9))
        ->capture_default_str();
    CLI::Option* opt_split_seed =
        sub_gen->add_option("--split-seed", gen.split_seed, "Split permutation seed");
    sub_gen->add_option("--threads", gen.threads,
                        "Worker threads (0 = library default; output is identical "
                        "for any value)");

    // train
    TrainOpts tr;
    config_get(cfg, "data", tr.data);
    config_get(cfg, "model", tr.model);
    config_get(cfg, "preset", tr.preset);
    config_get(cfg, "loss", tr.loss);
    config_get(cfg, "lr0", tr.lr0);
    config_get(cfg, "decay_every", tr.decay_every);
    config_get(cfg, "tau", tr.tau);
    config_get(cfg, "init_seed", tr.init_seed);
    config_get(cfg, "shuffle_seed", tr.shuffle_seed);
    config_get(cfg, "ckpt_out", tr.out);
    config_get(cfg, "log", tr.log);
    if (cfg.contains("lambda")) {
        tr.lambda = cfg.at("lambda").get<double>();
        tr.lambda_given = true;
    }
    if (cfg.contains("epochs")) {
        tr.epochs = cfg.at("epochs").get<int>();
        tr.epochs_given = true;
    }
    if (cfg.contains("batch_size")) {
        tr.batch_size = cfg.at("batch_size").get<std::size_t>();
        tr.batch_given = true;
    }

    CLI::App* sub_train =
        app.add_subcommand("train", "Train a synthesis model on a generated dataset");
    sub_train->add_option("--config", config_path, "JSON config file with defaults");
    sub_train->add_option("--data", tr.data, "Dataset CSV")->required();
    sub_train->add_option("--model", tr.model, "senn | naive | linear")
        ->capture_default_str();
    sub_train->add_option("--preset", tr.preset, "desk | paper")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->capture_default_str();
    sub_train->add_option("--loss", tr.loss, "smse | sdmse")
        ->check(CLI::IsMember({"smse", "sdmse"}))
        ->capture_default_str();
    sub_train->add_option("--lambda", tr.lambda, "Circuit-head loss weight")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub_train->add_option("--epochs", tr.epochs, "Training epochs (preset default)")
        ->check(CLI::PositiveNumber);
    sub_train->add_option("--batch-size", tr.batch_size, "Mini-batch size (preset default)")
        ->check(CLI::PositiveNumber);
    sub_train->add_option("--lr0", tr.lr0, "Initial learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub_train->add_option("--decay-every", tr.decay_every, "Halve the rate every N epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub_train->add_option("--tau", tr.tau, "Decoupled weight decay")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub_train->add_option("--init-seed", tr.init_seed, "Weight initialization seed")
        ->capture_default_str();
    sub_train->add_option("--shuffle-seed", tr.shuffle_seed, "Mini-batch shuffle seed")
        ->capture_default_str();
    sub_train->add_option("--out", tr.out, "Checkpoint path")->capture_default_str();
    sub_train->add_option("--log", tr.log, "Epoch log CSV (default <out>.log.csv)");
    sub_train->add_flag("--verbose", tr.verbose, "Print per-epoch metrics");

    // evaluate
    EvaluateOpts ev;
    config_get(cfg, "data", ev.data);
    config_get(cfg, "report", ev.json_out);
    CLI::App* sub_eval = app.add_subcommand(
        "evaluate", "Score checkpoints on the test split and write a JSON report");
    sub_eval->add_option("--config", config_path, "JSON config file with defaults");
    sub_eval->add_option("--data", ev.data, "Dataset CSV")->required();
    sub_eval->add_option("--ckpt", ev.ckpts, "Checkpoint path (repeatable)")
        ->required()
        ->expected(-1);
    sub_eval->add_option("--json", ev.json_out, "Report JSON path")->capture_default_str();

    // synthesize
    SynthesizeOpts sy;
    apply_env_config(cfg, sy.env);
    config_get(cfg, "ckpt", sy.ckpt);
    CLI::App* sub_syn = app.add_subcommand(
        "synthesize", "Predict a transformer geometry for a target impedance");
    sub_syn->add_option("--config", config_path, "JSON config file with defaults");
    sub_syn->add_option("--ckpt", sy.ckpt, "Trained checkpoint")->required();
    sub_syn->add_option("--re", sy.re, "Target Re(Z), Ω")
        ->check(CLI::PositiveNumber)
        ->required();
    sub_syn->add_option("--im", sy.im, "Target Im(Z), Ω")->required();
    sub_syn->add_option("--c1", sy.c1, "Input loading capacitor, fF")
        ->check(CLI::PositiveNumber)
        ->required();
    sub_syn->add_option("--c2", sy.c2, "Output loading capacitor, fF")
        ->check(CLI::PositiveNumber)
        ->required();
    add_env_flags(sub_syn, sy.env);

    // verify
    VerifyOpts vf;
    apply_env_config(cfg, vf.env);
    CLI::App* sub_ver = app.add_subcommand(
        "verify", "Evaluate a geometry through the analytic surrogate");
    sub_ver->add_option("--config", config_path, "JSON config file with defaults");
    sub_ver->add_option("--w-oa", vf.g.w_oa, "Coil A trace width, µm")->required();
    sub_ver->add_option("--w-ob", vf.g.w_ob, "Coil B trace width, µm")->required();
    sub_ver->add_option("--r0", vf.g.r0, "Inner coil radius, µm")->required();
    sub_ver->add_option("--r1", vf.g.r1, "Outer coil radius, µm")->required();
    sub_ver->add_option("--x-gnd", vf.g.x_gnd, "Ground spacing, µm")->required();
    sub_ver->add_option("--l-f", vf.g.l_f, "Feed length, µm")->required();
    sub_ver->add_option("--c1", vf.c1, "Input loading capacitor, fF")
        ->check(CLI::PositiveNumber)
        ->required();
    sub_ver->add_option("--c2", vf.c2, "Output loading capacitor, fF")
        ->check(CLI::PositiveNumber)
        ->required();
    add_env_flags(sub_ver, vf.env);

    std::vector<const char*> argv;
    argv.push_back("matchsyn");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sub_gen->parsed()) {
            gen.split_seed_given = gen.split_seed_given || opt_split_seed->count() > 0;
            return cmd_generate(gen);
        }
        if (sub_train->parsed()) {
            tr.epochs_given = tr.epochs_given || sub_train->count("--epochs") > 0;
            tr.batch_given = tr.batch_given || sub_train->count("--batch-size") > 0;
            tr.lambda_given = tr.lambda_given || sub_train->count("--lambda") > 0;
            return cmd_train(tr);
        }
        if (sub_eval->parsed()) return cmd_evaluate(ev);
        if (sub_syn->parsed()) return cmd_synthesize(sy);
        if (sub_ver->parsed()) return cmd_verify(vf);
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace cli

}  // namespace matchsyn
