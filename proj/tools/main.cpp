#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "convnet/config.hpp"
#include "convnet/dataset.hpp"
#include "convnet/dictionary.hpp"
#include "convnet/errors.hpp"
#include "convnet/model.hpp"
#include "convnet/preprocess.hpp"
#include "convnet/synth.hpp"
#include "convnet/tensor_io.hpp"
#include "convnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace convnet;

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(s[i]);
    }
    return out;
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return fnv1a64_hex(buf.str());
}

void print_spec(const ModelSpec& spec, Variant variant) {
    std::cout << "model " << spec.name << " (" << variant_name(variant) << ")\n";
    const auto chain = infer_shapes(spec);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        std::cout << "  " << i << ": " << spec.layers[i].str();
        std::cout << std::string(
            spec.layers[i].str().size() < 34 ? 34 - spec.layers[i].str().size() : 1, ' ');
        std::cout << "-> " << shape_str(chain[i]) << "\n";
    }
}

void print_schedule(const TrainSchedule& s) {
    std::cout << "schedule: batch " << s.batch_size << ", "
              << (s.momentum_kind == TrainSchedule::Momentum::nesterov ? "nesterov"
                                                                       : "classical")
              << " momentum, conv lr scale " << s.conv_grad_scale << "\n";
    std::cout << "  epoch      lr  momentum\n";
    for (std::size_t e : {std::size_t{0}, std::size_t{100}, std::size_t{250}, std::size_t{400},
                          std::size_t{500}, std::size_t{1000}}) {
        std::printf("  %5zu  %6.4f  %8.4f\n", e, lr_at(s, e), momentum_at(s, e));
    }
}

void check_input_shape(const ModelSpec& spec, const Tensor& images) {
    const LayerDesc& in = spec.layers.front();
    if (images.rank() != 4) throw data_error("expected [N,C,H,W] image data");
    const std::string got = std::to_string(images.dim(1)) + "x" + std::to_string(images.dim(2)) +
                            "x" + std::to_string(images.dim(3));
    if (in.kh == 1 && in.kw == 1) {
        const std::size_t flat = images.dim(1) * images.dim(2) * images.dim(3);
        if (flat != in.maps) {
            throw config_error("data flattens to " + std::to_string(flat) +
                               " values but the model expects " + std::to_string(in.maps));
        }
        return;
    }
    if (images.dim(1) != in.maps || images.dim(2) != in.kh || images.dim(3) != in.kw) {
        throw config_error("data is " + got + " but the model expects " +
                           std::to_string(in.maps) + "x" + std::to_string(in.kh) + "x" +
                           std::to_string(in.kw) +
                           " (check grayscale= against the input layer)");
    }
}

void save_dataset(const std::string& path, const LabeledDataset& ds) {
    TensorFile f;
    f.put_meta("what", "dataset");
    Tensor labels({ds.labels.size()});
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        labels.data()[i] = static_cast<double>(ds.labels[i]);
    }
    f.put_tensor("images", ds.images);
    f.put_tensor("labels", labels);
    f.save(path);
}

// Training files from config, split or explicit validation set.
std::pair<LabeledDataset, LabeledDataset> load_train_val(const RunConfig& cfg) {
    if (cfg.data.empty()) throw config_error("config lists no data= files");
    LabeledDataset full = load_cifar10(cfg.data);
    if (!cfg.val_data.empty()) return {std::move(full), load_cifar10(cfg.val_data)};
    if (cfg.val_fraction <= 0.0 || cfg.val_fraction >= 1.0) {
        throw config_error("val_fraction must lie in (0,1) when no val_data is given");
    }
    return split(full, 1.0 - cfg.val_fraction, cfg.seed);
}

int cmd_prepare(const RunConfig& cfg, const std::string& out) {
    fs::create_directories(out);
    auto [train_set, val_set] = load_train_val(cfg);
    PreprocStats stats = fit_preprocess(cfg.pipeline, train_set.images);
    if (cfg.pipeline.kind != "raw") {
        stats.save((fs::path(out) / "stats.tnsc").string());
        std::cout << "stats: " << (fs::path(out) / "stats.tnsc").string() << " (fitted on "
                  << stats.fitted_on << " samples)\n";
    } else {
        std::cout << "pipeline raw: identity transform, no stats file\n";
    }
    LabeledDataset t{apply_preprocess(stats, train_set.images), train_set.labels};
    LabeledDataset v{apply_preprocess(stats, val_set.images), val_set.labels};
    save_dataset((fs::path(out) / "train.tnsc").string(), t);
    save_dataset((fs::path(out) / "val.tnsc").string(), v);
    std::cout << "transformed: train " << t.size() << ", val " << v.size() << " -> " << out
              << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& out, bool dry_run, bool no_timing,
              const std::string& resume_path, bool quiet) {
    const ModelSpec spec = cfg.resolve_model();
    const TrainSchedule schedule = cfg.resolve_schedule();

    if (!quiet || dry_run) {
        print_spec(spec, cfg.variant);
        print_schedule(schedule);
    }
    if (dry_run) {
        Network net = build_network(spec, InitPolicy{}, cfg.seed);
        std::size_t total = 0;
        for (std::size_t i = 0; i < net.layer_count(); ++i) {
            std::size_t p = 0;
            for (ParamGroup* g : net.layer(i).param_groups()) p += g->value.size();
            total += p;
            std::cout << "  layer " << i << ": " << net.layer(i).describe() << " (" << p
                      << " params)\n";
        }
        std::cout << "total params: " << total << "\n";
        std::cout << "config hash: " << cfg.hash() << "\n";
        return 0;
    }

    fs::create_directories(out);
    auto [train_set, val_set] = load_train_val(cfg);

    PreprocStats stats;
    std::string stats_hash;
    if (!cfg.stats_path.empty()) {
        stats = PreprocStats::load(cfg.stats_path);
        if (stats.pipeline.kind != cfg.pipeline.kind) {
            throw config_error("stats file was fitted for pipeline " + stats.pipeline.kind +
                               ", config says " + cfg.pipeline.kind);
        }
        stats_hash = file_hash(cfg.stats_path);
    } else {
        stats = fit_preprocess(cfg.pipeline, train_set.images);
        if (cfg.pipeline.kind != "raw") {
            const std::string path = (fs::path(out) / "stats.tnsc").string();
            stats.save(path);
            stats_hash = file_hash(path);
        }
    }
    train_set.images = apply_preprocess(stats, train_set.images);
    val_set.images = apply_preprocess(stats, val_set.images);
    check_input_shape(spec, train_set.images);
    check_input_shape(spec, val_set.images);

    Network net = build_network(spec, InitPolicy{}, cfg.seed);

    TrainOptions opts;
    opts.seed = cfg.seed;
    opts.max_epochs = cfg.max_epochs;
    opts.early_stop_window = cfg.early_stop_window;
    opts.curve_path = (fs::path(out) / "curve.csv").string();
    opts.checkpoint_path = (fs::path(out) / "checkpoint.tnsc").string();
    opts.config_hash = cfg.hash();
    opts.extra_meta = {{"config", cfg.canonical()}, {"stats_hash", stats_hash}};
    opts.measure_time = !no_timing;
    opts.verbose = !quiet;

    Checkpoint resume;
    const Checkpoint* resume_ptr = nullptr;
    if (!resume_path.empty()) {
        resume = Checkpoint::load(resume_path);
        resume_ptr = &resume;
        if (!quiet) std::cout << "resuming after epoch " << resume.epoch << "\n";
    }

    {
        std::ofstream meta((fs::path(out) / "run_meta.txt").string());
        meta << "# resolved run configuration\n"
             << cfg.canonical() << "config_hash=" << cfg.hash() << "\n"
             << "stats_hash=" << stats_hash << "\n"
             << "max_epochs=" << cfg.max_epochs << "\n"
             << "early_stop_window=" << cfg.early_stop_window << "\n";
    }

    const TrainResult result = train(net, schedule, opts, train_set, val_set, resume_ptr);
    std::cout << "trained " << result.epochs_run << " epochs"
              << (result.stopped_early ? " (early stop)" : "") << ", best val error "
              << result.best_val_error << " at epoch " << result.best_epoch << "\n";
    std::cout << "checkpoint: " << opts.checkpoint_path << "\ncurve: " << opts.curve_path
              << "\n";
    return 0;
}

// Rebuilds the network recorded in a checkpoint and transforms eval data the
// same way training did.
struct LoadedRun {
    RunConfig cfg;
    Checkpoint ck;
    Network net;
};

LoadedRun load_run(const std::string& checkpoint_path, bool use_final) {
    Checkpoint ck = Checkpoint::load(checkpoint_path);
    std::string config_text;
    for (const auto& [k, v] : ck.extra_meta) {
        if (k == "config") config_text = v;
    }
    if (config_text.empty()) {
        throw data_error(checkpoint_path + " carries no embedded config");
    }
    RunConfig cfg = RunConfig::parse_text(config_text, checkpoint_path + ":config");
    const ModelSpec spec = cfg.resolve_model();
    Network net = build_network(spec, InitPolicy{}, ck.seed);
    const std::vector<Tensor>& params =
        (!use_final && ck.has_best) ? ck.best_params : ck.params;
    restore_params(net, params);
    return {std::move(cfg), std::move(ck), std::move(net)};
}

PreprocStats stats_for(const LoadedRun& run, const std::string& stats_path) {
    if (!stats_path.empty()) {
        PreprocStats stats = PreprocStats::load(stats_path);
        for (const auto& [k, v] : run.ck.extra_meta) {
            if (k == "stats_hash" && !v.empty() && v != file_hash(stats_path)) {
                throw config_error("stats file " + stats_path +
                                   " differs from the one used in training");
            }
        }
        return stats;
    }
    const std::string kind = run.cfg.pipeline.kind;
    if (kind == "raw" || kind == "gcn") {
        PreprocStats stats;
        stats.pipeline = run.cfg.pipeline;
        return stats;
    }
    throw config_error("pipeline " + kind + " needs --stats from the training run");
}

int cmd_eval(const std::string& checkpoint_path, const std::string& stats_path,
             std::vector<std::string> files, bool use_final) {
    LoadedRun run = load_run(checkpoint_path, use_final);
    if (files.empty()) files = run.cfg.test_data;
    if (files.empty()) throw config_error("no data files: pass --data or set test_data=");
    LabeledDataset ds = load_cifar10(files);
    ds.images = apply_preprocess(stats_for(run, stats_path), ds.images);
    const LossReport r =
        evaluate(run.net, ds, run.cfg.resolve_schedule().batch_size);
    std::cout << "loss " << r.loss << ", error " << r.error_rate << " (" << r.misclassified
              << "/" << r.count << " wrong)\n";
    return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& stats_path,
                std::vector<std::string> files, const std::string& out, bool use_final) {
    LoadedRun run = load_run(checkpoint_path, use_final);
    if (files.empty()) files = run.cfg.test_data;
    if (files.empty()) throw config_error("no data files: pass --data or set test_data=");
    LabeledDataset ds = load_cifar10(files);
    ds.images = apply_preprocess(stats_for(run, stats_path), ds.images);
    const std::vector<int> labels =
        predict(run.net, ds.images, run.cfg.resolve_schedule().batch_size);
    fs::create_directories(out);
    const std::string path = (fs::path(out) / "predictions.csv").string();
    std::vector<std::size_t> ids(labels.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i + 1;
    write_predictions(ids, labels, path);
    std::cout << "wrote " << labels.size() << " predictions to " << path << "\n";
    return 0;
}

int cmd_gradcheck(std::vector<std::string> names, const std::string& variant_str,
                  std::uint64_t seed) {
    if (names.empty() || (names.size() == 1 && names[0] == "all")) names = builtin_names();
    const Variant variant = parse_variant(variant_str);
    bool all_pass = true;
    for (const std::string& name : names) {
        const ModelSpec spec = tiny(name, variant);
        Network net = build_network(spec, InitPolicy{}, seed);
        const LayerDesc& in = spec.layers.front();
        const std::size_t classes = spec.layers.back().units;
        Rng rng(seed + 17);
        Tensor x({3, in.maps, in.kh, in.kw});
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
        std::vector<int> labels(3);
        for (int& l : labels) l = static_cast<int>(rng.uniform_index(classes));
        const GradCheckReport rep = gradcheck(net, x, labels);
        all_pass = all_pass && rep.pass;
        std::printf("%-14s [%s proxy]  %s  worst %.3e (%s)\n", name.c_str(), spec.name.c_str(),
                    rep.pass ? "pass" : "FAIL", rep.worst, rep.worst_tensor.c_str());
    }
    return all_pass ? 0 : 3;
}

int cmd_pca2(const std::vector<std::string>& files, const std::string& out, std::size_t cap,
             std::uint64_t seed) {
    if (files.empty()) throw config_error("pca2 needs --data files");
    LabeledDataset ds = load_cifar10(files);
    const auto [scores, labels] = pca2(ds, cap, seed);
    fs::create_directories(out);
    const std::string path = (fs::path(out) / "pca2.csv").string();
    std::ofstream os(path);
    if (!os) throw data_error("cannot open " + path + " for writing");
    os << "x,y,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        os << format_double(scores(i, 0)) << ',' << format_double(scores(i, 1)) << ','
           << labels[i] << '\n';
    }
    std::cout << "wrote " << labels.size() << " points to " << path << "\n";
    return 0;
}

int cmd_dict_learn(const RunConfig& cfg, const std::string& out) {
    if (cfg.data.empty()) throw config_error("config lists no data= files");
    LabeledDataset ds = load_cifar10(cfg.data);
    const PreprocStats stats = fit_preprocess(cfg.pipeline, ds.images);
    const Tensor x = apply_preprocess(stats, ds.images);
    Rng rng(cfg.seed);
    const Tensor patches = extract_patches(x, cfg.dict_patch, cfg.dict_patches, rng);
    Dictionary dict =
        learn_dictionary(patches, cfg.dict_centroids, cfg.dict_iters, cfg.dict_alpha, rng);
    dict.patch = cfg.dict_patch;
    dict.channels = x.dim(1);
    fs::create_directories(out);
    const std::string path = (fs::path(out) / "dictionary.tnsc").string();
    dict.save(path);
    double worst = 0.0;
    for (std::size_t c = 0; c < dict.d.dim(1); ++c) {
        double sq = 0.0;
        for (std::size_t p = 0; p < dict.d.dim(0); ++p) sq += dict.d(p, c) * dict.d(p, c);
        worst = std::max(worst, std::abs(std::sqrt(sq) - 1.0));
    }
    std::cout << "dictionary: " << dict.d.dim(1) << " centroids of " << dict.d.dim(0)
              << " values, max unit-norm deviation " << worst << " -> " << path << "\n";
    return 0;
}

int cmd_synth(const std::string& out, std::size_t train_n, std::size_t test_n,
              std::uint64_t seed, int classes, double noise, int shift, bool plain) {
    fs::create_directories(out);
    SynthOptions o;
    o.classes = classes;
    o.noise = noise;
    o.max_shift = shift;
    o.vary_gain = !plain;
    o.count = train_n;
    o.seed = seed;
    write_cifar10(make_synth(o), (fs::path(out) / "train.bin").string());
    if (test_n > 0) {
        o.count = test_n;
        o.seed = seed + 1;
        write_cifar10(make_synth(o), (fs::path(out) / "test.bin").string());
    }
    std::cout << "wrote " << train_n << " train + " << test_n << " test images to " << out
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CNN training toolkit"};
    app.require_subcommand(1);

    std::string config_path, out = ".", resume_path, checkpoint_path, stats_path, variant_str =
                                                                                       "plain";
    std::vector<std::string> data_files, names;
    bool dry_run = false, no_timing = false, quiet = false, use_final = false, plain = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t cap = 2000, train_n = 5000, test_n = 1000;
    int classes = 10, shift = 4;
    double noise = 0.04;

    const auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    CLI::App* prepare = app.add_subcommand("prepare", "Fit preprocessing on the train split");
    prepare->add_option("--config", config_path, "Run config file")->required();
    prepare->add_option("--out", out, "Output directory");
    add_seed(prepare);

    CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
    train_cmd->add_option("--config", config_path, "Run config file")->required();
    train_cmd->add_option("--out", out, "Output directory");
    train_cmd->add_flag("--dry-run", dry_run, "Print the resolved run and exit");
    train_cmd->add_flag("--no-timing", no_timing, "Write 0 in the curve seconds column");
    train_cmd->add_flag("--quiet", quiet, "No per-epoch progress lines");
    train_cmd->add_option("--resume", resume_path, "Continue from a checkpoint");
    add_seed(train_cmd);

    CLI::App* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on labeled data");
    eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    eval_cmd->add_option("--stats", stats_path, "Preprocessing stats from the training run");
    eval_cmd->add_option("--data", data_files, "Data files");
    eval_cmd->add_flag("--final", use_final, "Use final params instead of the best epoch");

    CLI::App* predict_cmd = app.add_subcommand("predict", "Write a label CSV for data");
    predict_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    predict_cmd->add_option("--stats", stats_path, "Preprocessing stats");
    predict_cmd->add_option("--data", data_files, "Data files");
    predict_cmd->add_option("--out", out, "Output directory");
    predict_cmd->add_flag("--final", use_final, "Use final params instead of the best epoch");

    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Finite-difference check of small model variants");
    gradcheck_cmd->add_option("names", names, "Model names (default: all)");
    gradcheck_cmd->add_option("--variant", variant_str, "plain | dropout | maxout");
    add_seed(gradcheck_cmd);

    CLI::App* pca2_cmd = app.add_subcommand("pca2", "Two-component PCA scatter CSV");
    pca2_cmd->add_option("--data", data_files, "Data files")->required();
    pca2_cmd->add_option("--out", out, "Output directory");
    pca2_cmd->add_option("--count", cap, "Sample cap");
    add_seed(pca2_cmd);

    CLI::App* dict_cmd = app.add_subcommand("dict-learn", "Learn a patch dictionary");
    dict_cmd->add_option("--config", config_path, "Run config file")->required();
    dict_cmd->add_option("--out", out, "Output directory");
    add_seed(dict_cmd);

    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic image corpus");
    synth_cmd->add_option("--out", out, "Output directory")->required();
    synth_cmd->add_option("--train", train_n, "Training images");
    synth_cmd->add_option("--test", test_n, "Test images");
    synth_cmd->add_option("--classes", classes, "Number of classes (2..10)");
    synth_cmd->add_option("--noise", noise, "Pixel noise amplitude");
    synth_cmd->add_option("--shift", shift, "Max translation in pixels");
    synth_cmd->add_flag("--plain", plain, "Disable per-image gain/bias variation");
    add_seed(synth_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const auto config = [&]() {
            RunConfig cfg = RunConfig::parse_file(config_path);
            if (seed_set) cfg.seed = seed;
            return cfg;
        };
        if (*prepare) return cmd_prepare(config(), out);
        if (*train_cmd) return cmd_train(config(), out, dry_run, no_timing, resume_path, quiet);
        if (*eval_cmd) return cmd_eval(checkpoint_path, stats_path, data_files, use_final);
        if (*predict_cmd)
            return cmd_predict(checkpoint_path, stats_path, data_files, out, use_final);
        if (*gradcheck_cmd) return cmd_gradcheck(names, variant_str, seed_set ? seed : 1);
        if (*pca2_cmd) return cmd_pca2(data_files, out, cap, seed_set ? seed : 1);
        if (*dict_cmd) return cmd_dict_learn(config(), out);
        if (*synth_cmd)
            return cmd_synth(out, train_n, test_n, seed_set ? seed : 1, classes, noise, shift,
                             plain);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
