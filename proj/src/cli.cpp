#include "keepaug/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "keepaug/eval.hpp"
#include "keepaug/io.hpp"

namespace keepaug {

using nlohmann::json;

namespace {

// Flag/source combinations the user got wrong; mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int env_threads() {
    const char* v = std::getenv("KEEPAUG_THREADS");
    if (!v) return 0;
    int n = std::atoi(v);
    return n > 0 ? n : 0;
}

int resolve_parallelism(int flag_value, int config_value) {
    if (flag_value > 0) return flag_value;
    if (config_value > 0) return config_value;
    if (int e = env_threads(); e > 0) return e;
    return 1;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) throw UsageError(std::string(what) + ": empty element in list");
        size_t used = 0;
        int v;
        try {
            v = std::stoi(tok, &used);
        } catch (...) {
            throw UsageError(std::string(what) + ": not an integer: " + tok);
        }
        if (used != tok.size()) throw UsageError(std::string(what) + ": not an integer: " + tok);
        out.push_back(v);
    }
    if (out.empty()) throw UsageError(std::string(what) + ": empty list");
    return out;
}

Image load_image_any(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".ppm") return read_ppm(path);
    return read_raw_image(path);
}

Image heat_image(const SaliencyMap& map) {
    double lo = map.data[0], hi = map.data[0];
    for (double v : map.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Image img(map.height, map.width, 1);
    double span = hi - lo;
    for (size_t i = 0; i < map.data.size(); ++i)
        img.data[i] = span > 0.0 ? (map.data[i] - lo) / span : 0.0;
    return img;
}

json rect_to_json(const Rect& r) {
    return json{{"top", r.top}, {"left", r.left}, {"height", r.height}, {"width", r.width}};
}

json ops_to_json(const std::vector<ResolvedOp>& ops) {
    json arr = json::array();
    for (const ResolvedOp& r : ops) {
        json o;
        o["op"] = policy_op_name(r.op);
        switch (r.op) {
            case PolicyOp::rotate: o["angle_deg"] = r.angle_deg; break;
            case PolicyOp::translate: o["dx"] = r.dx; o["dy"] = r.dy; break;
            case PolicyOp::solarize: o["threshold"] = r.threshold; break;
            case PolicyOp::posterize: o["bits"] = r.bits; break;
            case PolicyOp::brightness:
            case PolicyOp::contrast: o["factor"] = r.factor; break;
            default: break;
        }
        arr.push_back(o);
    }
    return arr;
}

json label_to_json(const MixedLabel& label) {
    json arr = json::array();
    for (auto& [cls, w] : label.entries) arr.push_back(json::array({cls, w}));
    return arr;
}

// ---- train-toy ----

struct TrainArgs {
    std::string data, out;
    int epochs = 10;
    double lr = 0.05;
    bool early_head = false;
    bool half = false;
    double aux_coef = 0.3;
    uint64_t seed = 0;
};

int cmd_train_toy(const TrainArgs& a) {
    Dataset data = read_cifar10(a.data);
    if (a.half) {
        // Half-resolution twin for the low-res saliency strategy: the same
        // records, bicubic-downscaled before training.
        for (DatasetRecord& r : data.records)
            r.image = resize_bicubic(r.image, (r.image.height + 1) / 2, (r.image.width + 1) / 2);
    }
    RngStream rng(a.seed, 0);
    TrainResult result = train_toy(data, a.epochs, a.lr, a.early_head, a.aux_coef, rng);
    save_model(a.out, result.net);
    std::printf("train accuracy: %.4f\n", result.train_accuracy);
    return 0;
}

// ---- augment ----

struct AugmentArgs {
    std::string data, model, saliency_dir, config, out;
    int parallelism = 0;
    uint64_t seed = 0;
    bool seed_given = false;
};

int cmd_augment(const AugmentArgs& a) {
    AugmentConfig cfg = a.config.empty() ? AugmentConfig{} : read_config(a.config);
    if (a.seed_given) cfg.seed = a.seed;

    if (!a.model.empty() && !a.saliency_dir.empty())
        throw UsageError("augment: give either --model or --saliency-dir, not both");
    bool needs = mode_needs_saliency(cfg.mode);
    if (needs && a.model.empty() && a.saliency_dir.empty())
        throw UsageError("augment: mode " + augment_mode_name(cfg.mode) +
                         " needs a saliency source (--model or --saliency-dir)");
    if (!a.model.empty() && cfg.saliency.variant == SaliencyVariant::external)
        throw UsageError("augment: config selects external saliency but --model was given");

    Dataset data = read_cifar10(a.data);

    ToyNet net;
    std::vector<SaliencyMap> external;
    SaliencySource source;
    if (needs) {
        if (!a.saliency_dir.empty()) {
            cfg.saliency.variant = SaliencyVariant::external;
            cfg.saliency.file = a.saliency_dir;
            external = read_external_maps(a.saliency_dir, data.records);
            source.external = &external;
        } else {
            net = load_model(a.model);
            source.net = &net;
        }
    }

    int parallelism = resolve_parallelism(a.parallelism, cfg.parallelism);
    std::vector<AugmentedExample> augmented = augment_batch(data.records, cfg, source, parallelism);

    Dataset out_data;
    out_data.num_classes = data.num_classes;
    out_data.records.reserve(augmented.size());
    for (size_t i = 0; i < augmented.size(); ++i) {
        DatasetRecord rec;
        rec.image = augmented[i].image;
        rec.label = augmented[i].rec.label.primary();
        rec.index = data.records[i].index;
        out_data.records.push_back(std::move(rec));
    }
    write_cifar10(a.out, out_data);

    // Sidecar manifest: config echo + per-image draws, enough to replay
    // every output without the rng. Runtime-only knobs (parallelism) do not
    // enter, so runs differing only in worker count emit identical bytes.
    json records = json::array();
    for (size_t i = 0; i < augmented.size(); ++i) {
        const AugmentRecord& r = augmented[i].rec;
        json jr;
        jr["index"] = data.records[i].index;
        jr["label"] = label_to_json(r.label);
        jr["rect"] = r.has_region ? rect_to_json(r.region) : json(nullptr);
        jr["ops"] = ops_to_json(r.policy_ops);
        jr["lambda"] = r.lambda;
        jr["donor"] = r.donor_index;
        records.push_back(jr);
    }
    json manifest;
    manifest["tool"] = "keepaug";
    manifest["version"] = kToolVersion;
    manifest["config"] = json::parse(config_to_json_text(cfg));
    manifest["seed"] = cfg.seed;
    manifest["input"] = a.data;
    manifest["output"] = a.out;
    manifest["records"] = records;
    std::ofstream mf(a.out + ".manifest.json", std::ios::binary);
    mf << manifest.dump(2) << "\n";
    if (!mf) throw std::runtime_error("augment: manifest write failed");

    std::printf("augmented %zu records -> %s\n", augmented.size(), a.out.c_str());
    return 0;
}

// ---- saliency ----

struct SaliencyArgs {
    std::string model, image, strategy = "full", out, viz;
    int label = -1; // -1: use the predicted class
};

int cmd_saliency(const SaliencyArgs& a) {
    SaliencyVariant variant;
    try {
        variant = saliency_variant_from_name(a.strategy);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    if (variant == SaliencyVariant::external)
        throw UsageError("saliency: strategy external reads files, nothing to compute");

    ToyNet net = load_model(a.model);
    Image image = load_image_any(a.image);
    int label = a.label;

    SaliencyMap map;
    switch (variant) {
        case SaliencyVariant::max_logit:
            map = maxlogit_saliency(net, image);
            break;
        case SaliencyVariant::low_res: {
            int lh = (image.height + 1) / 2, lw = (image.width + 1) / 2;
            std::printf("internal resolution: %dx%d\n", lh, lw);
            if (label < 0) {
                Image low = resize_bicubic(image, lh, lw);
                label = argmax(forward(net, low));
            }
            map = lowres_saliency(net, image, label);
            break;
        }
        case SaliencyVariant::early_head:
            if (label < 0) label = argmax(forward(net, image));
            map = earlyhead_saliency(net, image, label);
            break;
        default:
            if (label < 0) label = argmax(forward(net, image));
            map = vanilla_saliency(net, image, label);
            break;
    }

    write_raw_map(a.out, map);
    if (!a.viz.empty()) write_ppm(a.viz, heat_image(map));
    std::printf("saliency map %dx%d -> %s\n", map.height, map.width, a.out.c_str());
    return 0;
}

// ---- preview ----

struct PreviewArgs {
    std::string data, config, model, out;
    int n = 4;
};

int cmd_preview(const PreviewArgs& a) {
    if (a.n < 1) throw UsageError("preview: --n must be >= 1");
    AugmentConfig cfg = a.config.empty() ? AugmentConfig{} : read_config(a.config);
    Dataset data = read_cifar10(a.data);
    int n = a.n;
    if (static_cast<size_t>(n) > data.size()) {
        std::fprintf(stderr, "preview: clamping --n from %d to %zu (dataset size)\n", n, data.size());
        n = static_cast<int>(data.size());
    }
    data.records.resize(n);

    ToyNet net;
    SaliencySource source;
    bool have_net = !a.model.empty();
    if (have_net) {
        if (cfg.saliency.variant == SaliencyVariant::external)
            throw std::runtime_error("preview: external saliency is not supported here");
        net = load_model(a.model);
        source.net = &net;
    }

    std::vector<AugmentedExample> augmented = augment_batch(data.records, cfg, source, 1);

    int h = data.records[0].image.height, w = data.records[0].image.width;
    Image grid(n * h, 3 * w, 3);
    auto blit = [&](const Image& tile, int row, int col) {
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                for (int c = 0; c < 3; ++c)
                    grid.at(row * h + i, col * w + j, c) =
                        tile.channels == 1 ? tile.at(i, j, 0) : tile.at(i, j, c);
    };
    for (int r = 0; r < n; ++r) {
        const DatasetRecord& rec = data.records[r];
        blit(rec.image, r, 0);
        if (have_net && mode_needs_saliency(cfg.mode)) {
            blit(heat_image(saliency_for(rec.image, rec.label, r, cfg, source)), r, 1);
        } else if (have_net) {
            blit(heat_image(vanilla_saliency(net, rec.image, rec.label)), r, 1);
        } // else leave the middle tile black
        blit(augmented[r].image, r, 2);
    }
    write_ppm(a.out, grid);
    std::printf("preview grid %dx%d -> %s\n", grid.height, grid.width, a.out.c_str());
    return 0;
}

// ---- fidelity ----

struct FidelityArgs {
    std::string oracle, data, mode = "plain-cutout", magnitudes;
    int trials = 3;
    uint64_t seed = 0;
};

int cmd_fidelity(const FidelityArgs& a) {
    AugmentMode mode;
    try {
        mode = augment_mode_from_name(a.mode);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    std::vector<int> mags = parse_int_list(a.magnitudes, "fidelity: --magnitudes");
    for (size_t i = 1; i < mags.size(); ++i)
        if (mags[i] <= mags[i - 1]) throw UsageError("fidelity: --magnitudes must be ascending");
    if (a.trials < 1) throw UsageError("fidelity: --trials must be >= 1");

    ToyNet oracle = load_model(a.oracle);
    Dataset data = read_cifar10(a.data);
    FidelityReport report = fidelity_sweep(oracle, data, mode, mags, a.trials, a.seed);
    std::fputs(report.to_table().c_str(), stdout);
    std::printf("%s\n", report.to_json_text().c_str());
    return 0;
}

// ---- bench ----

struct BenchArgs {
    std::string model, data, strategies = "full,low-res,early-head";
    int reps = 5;
};

int cmd_bench(const BenchArgs& a) {
    std::vector<SaliencyStrategy> strategies;
    std::stringstream ss(a.strategies);
    std::string tok;
    bool want_lowres = false;
    while (std::getline(ss, tok, ',')) {
        SaliencyStrategy s;
        try {
            s.variant = saliency_variant_from_name(tok);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        if (s.variant == SaliencyVariant::external)
            throw UsageError("bench: strategy external has no compute cost to time");
        want_lowres |= s.variant == SaliencyVariant::low_res;
        strategies.push_back(s);
    }
    if (strategies.empty()) throw UsageError("bench: --strategies is empty");
    if (a.reps < 3) throw UsageError("bench: --reps must be >= 3");

    ToyNet net = load_model(a.model);
    Dataset data = read_cifar10(a.data);

    // Half-resolution twin for low-res timing; weights are irrelevant to
    // wall time, so a fresh deterministic init is used.
    ToyNet net_lr;
    if (want_lowres) {
        std::vector<int> chans;
        for (const ConvBlock& b : net.blocks) chans.push_back(b.out_c);
        RngStream rng(0, 0);
        net_lr = ToyNet::init((net.in_h + 1) / 2, (net.in_w + 1) / 2, net.in_c,
                              net.classes, chans, false, rng);
    }

    BenchReport report = bench_saliency(strategies, net, want_lowres ? &net_lr : nullptr,
                                        data, a.reps);
    std::fputs(report.to_table().c_str(), stdout);
    std::printf("%s\n", report.to_json_text().c_str());
    return 0;
}

// ---- synth ----

struct SynthArgs {
    std::string out;
    int n = 100;
    int size = 32;
    uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
    if (a.size != 32)
        throw UsageError("synth: only size 32 can be stored in the CIFAR-10 binary format");
    if (a.n < 1) throw UsageError("synth: --n must be >= 1");
    RngStream rng(a.seed, 0);
    Dataset data = make_synthetic(a.n, a.size, rng);
    write_cifar10(a.out, data);
    std::printf("wrote %d synthetic records -> %s\n", a.n, a.out.c_str());
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("keepaug");
    for (const std::string& s : args) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"saliency-guided information-preserving data augmentation"};
    app.set_version_flag("--version", std::string("keepaug ") + kToolVersion);
    app.require_subcommand(1);
    bool json_errors = false;
    app.add_flag("--json", json_errors, "emit errors as single-line JSON on stderr");

    TrainArgs train;
    CLI::App* sub_train = app.add_subcommand("train-toy", "train the built-in toy classifier");
    sub_train->add_option("--data", train.data, "CIFAR-10 binary dataset")->required();
    sub_train->add_option("--epochs", train.epochs, "training epochs (0 = init only)");
    sub_train->add_option("--lr", train.lr, "SGD learning rate");
    sub_train->add_flag("--early-head", train.early_head, "attach the auxiliary early head");
    sub_train->add_flag("--half", train.half, "train on bicubic half-resolution copies (for low-res saliency)");
    sub_train->add_option("--aux-coef", train.aux_coef, "auxiliary loss coefficient");
    sub_train->add_option("--seed", train.seed, "rng seed");
    sub_train->add_option("--out", train.out, "output model directory")->required();

    AugmentArgs aug;
    CLI::App* sub_aug = app.add_subcommand("augment", "augment a dataset");
    sub_aug->add_option("--data", aug.data, "CIFAR-10 binary dataset")->required();
    sub_aug->add_option("--model", aug.model, "model directory (saliency source)");
    sub_aug->add_option("--saliency-dir", aug.saliency_dir, "directory of per-image saliency maps");
    sub_aug->add_option("--config", aug.config, "JSON augmentation config");
    sub_aug->add_option("--out", aug.out, "output dataset path")->required();
    sub_aug->add_option("--parallelism", aug.parallelism, "worker count (default: config, then KEEPAUG_THREADS, then 1)");
    CLI::Option* aug_seed = sub_aug->add_option("--seed", aug.seed, "overrides the config seed");

    SaliencyArgs sal;
    CLI::App* sub_sal = app.add_subcommand("saliency", "write a saliency map for one image");
    sub_sal->add_option("--model", sal.model, "model directory")->required();
    sub_sal->add_option("--image", sal.image, "input image (.ppm or .kat)")->required();
    sub_sal->add_option("--strategy", sal.strategy, "full | low-res | early-head | max-logit");
    sub_sal->add_option("--label", sal.label, "class whose logit is attributed (default: predicted)");
    sub_sal->add_option("--out", sal.out, "output map (.kat, C=1)")->required();
    sub_sal->add_option("--viz", sal.viz, "also write a min-max normalized gray PPM here");

    PreviewArgs prev;
    CLI::App* sub_prev = app.add_subcommand("preview", "original | saliency | augmented grid");
    sub_prev->add_option("--data", prev.data, "CIFAR-10 binary dataset")->required();
    sub_prev->add_option("--config", prev.config, "JSON augmentation config");
    sub_prev->add_option("--model", prev.model, "model directory");
    sub_prev->add_option("--n", prev.n, "number of example rows");
    sub_prev->add_option("--out", prev.out, "output PPM")->required();

    FidelityArgs fid;
    CLI::App* sub_fid = app.add_subcommand("fidelity", "oracle-agreement sweep over magnitudes");
    sub_fid->add_option("--oracle", fid.oracle, "oracle model directory")->required();
    sub_fid->add_option("--data", fid.data, "CIFAR-10 binary dataset")->required();
    sub_fid->add_option("--mode", fid.mode, "augmentation mode");
    sub_fid->add_option("--magnitudes", fid.magnitudes, "comma list, ascending")->required();
    sub_fid->add_option("--trials", fid.trials, "trials per example");
    sub_fid->add_option("--seed", fid.seed, "rng seed");

    BenchArgs bench;
    CLI::App* sub_bench = app.add_subcommand("bench", "time saliency strategies");
    sub_bench->add_option("--model", bench.model, "model directory")->required();
    sub_bench->add_option("--data", bench.data, "CIFAR-10 binary dataset")->required();
    sub_bench->add_option("--strategies", bench.strategies, "comma list of strategies");
    sub_bench->add_option("--reps", bench.reps, "repetitions (median reported)");

    SynthArgs synth;
    CLI::App* sub_synth = app.add_subcommand("synth", "generate the two-class synthetic dataset");
    sub_synth->add_option("--n", synth.n, "record count");
    sub_synth->add_option("--size", synth.size, "square image side");
    sub_synth->add_option("--seed", synth.seed, "rng seed");
    sub_synth->add_option("--out", synth.out, "output dataset path")->required();

    auto emit_error = [&](const std::string& msg, int code) {
        if (json_errors) {
            json j{{"error", msg}, {"exit", code}};
            std::fprintf(stderr, "%s\n", j.dump().c_str());
        } else {
            std::fprintf(stderr, "keepaug: %s\n", msg.c_str());
        }
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return emit_error(e.what(), 2);
    }

    try {
        if (sub_train->parsed()) return cmd_train_toy(train);
        if (sub_aug->parsed()) {
            aug.seed_given = aug_seed->count() > 0;
            return cmd_augment(aug);
        }
        if (sub_sal->parsed()) return cmd_saliency(sal);
        if (sub_prev->parsed()) return cmd_preview(prev);
        if (sub_fid->parsed()) return cmd_fidelity(fid);
        if (sub_bench->parsed()) return cmd_bench(bench);
        if (sub_synth->parsed()) return cmd_synth(synth);
    } catch (const UsageError& e) {
        return emit_error(e.what(), 2);
    } catch (const std::exception& e) {
        return emit_error(e.what(), 1);
    }
    return emit_error("no subcommand", 2);
}

} // namespace keepaug
