#include "chestnet/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "chestnet/image_io.hpp"
#include "chestnet/reports.hpp"
#include "chestnet/training.hpp"

namespace chestnet::cli {

using nlohmann::json;

LogLevel log_level() {
    const char* v = std::getenv("CHESTNET_LOG");
    if (!v) return LogLevel::info;
    const std::string s(v);
    if (s == "quiet" || s == "0") return LogLevel::quiet;
    if (s == "debug" || s == "2") return LogLevel::debug;
    return LogLevel::info;
}

void log(LogLevel level, const std::string& message) {
    if (level == LogLevel::quiet || static_cast<int>(level) > static_cast<int>(log_level())) return;
    std::cerr << "[chestnet] " << message << '\n';
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw Error("run directory " + dir.string() + " is locked by another process (remove " + path_.string() +
                    " if that process is gone)");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

RunLock::~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

namespace {

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

std::string stamp() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", std::localtime(&t));
    return buf;
}

// Timestamped progress lines; kept apart from the deterministic outputs.
void append_run_log(const fs::path& dir, const std::string& line) {
    std::ofstream out(dir / "train.log", std::ios::app);
    out << stamp() << ' ' << line << '\n';
}

void normalize(Dataset& ds, const DataConfig& data) {
    if (!data.mean && !data.stddev) return;
    const float mean = static_cast<float>(data.mean.value_or(0.0));
    const float inv = static_cast<float>(1.0 / data.stddev.value_or(1.0));
    for (auto& s : ds.samples) {
        for (float& v : s.image.storage()) v = (v - mean) * inv;
    }
}

fs::path manifest_root(const DataConfig& data) {
    if (!data.image_root.empty()) return data.image_root;
    return fs::path(data.manifest).parent_path();
}

Dataset load_manifest_dataset(const fs::path& manifest, const fs::path& root, const fs::path& boxes,
                              std::size_t size, const std::vector<std::string>& vocabulary, bool strict) {
    ManifestOptions opts;
    opts.target_size = size;
    opts.vocabulary = vocabulary;
    opts.strict = strict;
    ManifestLoad loaded = load_manifest(manifest, root, opts);
    if (!loaded.skipped.empty()) {
        log(LogLevel::info, "skipped " + std::to_string(loaded.skipped.size()) + " manifest rows");
        for (const auto& e : loaded.skipped) {
            log(LogLevel::debug, "row " + std::to_string(e.row) + ": " + e.message);
        }
    }
    if (!boxes.empty()) attach_boxes(loaded.dataset, boxes);
    return std::move(loaded.dataset);
}

RunConfig run_config_of(const Checkpoint& ckpt) {
    if (ckpt.meta.contains("run")) return run_config_from_json(ckpt.meta.at("run"));
    RunConfig c;
    c.model = ckpt.config;
    c.synth.num_classes = c.model.backbone.num_classes;
    c.synth.image_size = c.model.backbone.input_size;
    return c;
}

std::vector<std::string> class_names_of(const Checkpoint& ckpt) {
    if (ckpt.meta.contains("class_names")) return ckpt.meta.at("class_names").get<std::vector<std::string>>();
    return {};
}

Dataset select_split(const RunConfig& run, const std::string& split) {
    Dataset all = load_run_dataset(run);
    if (split == "all") return all;
    Split s = split_run_dataset(run, all);
    if (split == "train") return std::move(s.train);
    if (split == "val") return std::move(s.val);
    if (split == "test") return std::move(s.test);
    throw ConfigError("unknown split '" + split + "' (expected train, val, test or all)");
}

Dataset eval_dataset(const Checkpoint& ckpt, const fs::path& manifest, const std::string& split) {
    const RunConfig run = run_config_of(ckpt);
    Dataset ds;
    if (!manifest.empty()) {
        // A synthesized directory declares its vocabulary in summary.json.
        const fs::path summary = manifest.parent_path() / "summary.json";
        if (fs::exists(summary)) {
            std::ifstream in(summary);
            const json declared = json::parse(in, nullptr, false);
            if (!declared.is_discarded() && declared.contains("classes") && declared.at("classes").is_array() &&
                declared.at("classes").size() != ckpt.config.backbone.num_classes) {
                throw ConfigError("manifest declares " + std::to_string(declared.at("classes").size()) +
                                  " classes but the checkpoint expects " +
                                  std::to_string(ckpt.config.backbone.num_classes));
            }
        }
        const fs::path boxes = manifest.parent_path() / "boxes.csv";
        ds = load_manifest_dataset(manifest, manifest.parent_path(), fs::exists(boxes) ? boxes : fs::path(),
                                   ckpt.config.backbone.input_size, class_names_of(ckpt), run.data.strict);
        normalize(ds, run.data);
    } else {
        ds = select_split(run, split);
    }
    if (ds.num_classes() != ckpt.config.backbone.num_classes) {
        throw ConfigError("dataset has " + std::to_string(ds.num_classes()) + " classes but the checkpoint expects " +
                          std::to_string(ckpt.config.backbone.num_classes));
    }
    if (ds.empty()) throw DataError("evaluation dataset is empty");
    return ds;
}

std::string sample_stem(const Sample& s, std::size_t index) {
    if (!s.path.empty()) return fs::path(s.path).stem().string();
    return "sample" + std::to_string(index);
}

std::vector<std::uint8_t> label_matrix(const Dataset& ds) {
    std::vector<std::uint8_t> labels;
    labels.reserve(ds.size() * ds.num_classes());
    for (const auto& s : ds.samples) labels.insert(labels.end(), s.labels.begin(), s.labels.end());
    return labels;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

json read_summary(const fs::path& path) {
    if (!fs::exists(path)) return json::object();
    std::ifstream in(path);
    try {
        return json::parse(in);
    } catch (const json::exception&) {
        return json::object();
    }
}

}  // namespace

Dataset load_run_dataset(const RunConfig& config) {
    Dataset ds;
    if (config.data.manifest.empty()) {
        ds = generate_synthetic(config.synth);
    } else {
        ds = load_manifest_dataset(config.data.manifest, manifest_root(config.data), config.data.boxes,
                                   config.model.backbone.input_size, config.data.vocabulary, config.data.strict);
        if (ds.num_classes() != config.model.backbone.num_classes) {
            throw ConfigError("manifest has " + std::to_string(ds.num_classes()) +
                              " classes but backbone.num_classes is " +
                              std::to_string(config.model.backbone.num_classes));
        }
    }
    normalize(ds, config.data);
    return ds;
}

Split split_run_dataset(const RunConfig& config, const Dataset& dataset) {
    return patient_split(dataset, config.data.train_fraction, config.data.val_fraction, config.seed);
}

SynthResult cmd_synth(const RunConfig& config, const fs::path& out) {
    config.validate();
    const Dataset ds = generate_synthetic(config.synth);
    export_dataset(ds, out);

    std::vector<std::size_t> counts(ds.num_classes(), 0);
    for (const auto& s : ds.samples) {
        for (std::size_t c = 0; c < counts.size(); ++c) counts[c] += s.labels[c];
    }
    json freq = json::object();
    json pos = json::object();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        pos[ds.class_names[c]] = counts[c];
        freq[ds.class_names[c]] = static_cast<double>(counts[c]) / static_cast<double>(ds.size());
    }
    SynthResult r;
    r.rows = ds.size();
    r.summary = {{"images", ds.size()},
                 {"patients", config.synth.num_patients},
                 {"classes", ds.class_names},
                 {"positives", pos},
                 {"label_frequency", freq},
                 {"synth", to_json(config.synth)}};
    write_text(out / "summary.json", r.summary.dump(2) + "\n");
    log(LogLevel::info, "wrote " + std::to_string(r.rows) + " images to " + out.string());
    return r;
}

fs::path phase_checkpoint_path(const fs::path& run_dir, int phase) {
    return run_dir / ("phase" + std::to_string(phase) + ".ckpt");
}

TrainResult cmd_train(const RunConfig& config, int phase) {
    if (phase < 0 || phase > 3) throw ConfigError("phase must be 1, 2, 3 or all");
    config.validate();
    const fs::path dir = config.output_dir;
    fs::create_directories(dir);
    RunLock lock(dir);

    std::vector<int> phases = phase == 0 ? std::vector<int>{1, 2, 3} : std::vector<int>{phase};
    const fs::path prior = phase_checkpoint_path(dir, phases.front() - 1);
    if (phases.front() > 1 && !fs::exists(prior)) {
        throw ConfigError("phase " + std::to_string(phases.front()) + " needs the phase " +
                          std::to_string(phases.front() - 1) + " checkpoint " + prior.string());
    }

    const Dataset all = load_run_dataset(config);
    const Split split = split_run_dataset(config, all);
    log(LogLevel::info, "split: " + std::to_string(split.train.size()) + " train, " +
                            std::to_string(split.val.size()) + " val, " + std::to_string(split.test.size()) +
                            " test images");
    write_text(dir / "config.json", to_json(config).dump(2) + "\n");

    std::unique_ptr<ChestNet<float>> model;
    if (phases.front() == 1) {
        model = std::make_unique<ChestNet<float>>(config.model, config.seed);
    } else {
        Checkpoint ckpt = load_checkpoint(prior);
        if (to_json(ckpt.config) != to_json(config.model)) {
            throw ConfigError("model configuration differs from the one stored in " + prior.string());
        }
        model = std::make_unique<ChestNet<float>>(ckpt.config, std::move(ckpt.params));
    }

    json summary = read_summary(dir / "summary.json");
    if (!summary.contains("phases")) summary["phases"] = json::object();
    for (int p = phases.front(); p <= 3; ++p) summary["phases"].erase(std::to_string(p));

    TrainResult result;
    std::vector<LossRecord> all_records;
    const std::size_t report_every = std::max<std::size_t>(1, config.train.max_iterations / 20);
    for (int p : phases) {
        const auto t0 = std::chrono::steady_clock::now();
        append_run_log(dir, "phase " + std::to_string(p) + " start");
        auto on_step = [&](const LossRecord& r) {
            if (r.iteration % report_every == 0 || r.iteration == config.train.max_iterations) {
                log(LogLevel::info, "phase " + std::to_string(p) + " iter " + std::to_string(r.iteration) + " lr " +
                                        fmt(r.lr) + " loss " + fmt(r.loss));
            } else {
                log(LogLevel::debug, "phase " + std::to_string(p) + " iter " + std::to_string(r.iteration) +
                                         " loss " + fmt(r.loss));
            }
        };
        PhaseResult pr = train_phase(*model, split.train, split.val.empty() ? nullptr : &split.val, config.train, p,
                                     on_step);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        append_run_log(dir, "phase " + std::to_string(p) + " done in " + fmt(secs) + " s");

        Checkpoint ckpt{config.model, model->params(), json::object()};
        ckpt.meta = {{"phase", p},
                     {"best_iteration", pr.best_iteration},
                     {"class_names", all.class_names},
                     {"run", to_json(config)}};
        ckpt.meta["best_val_auc"] = pr.best_val_auc ? json(*pr.best_val_auc) : json(nullptr);
        const fs::path path = phase_checkpoint_path(dir, p);
        save_checkpoint(path, ckpt);
        write_text(dir / ("loss_phase" + std::to_string(p) + ".csv"), loss_to_csv(pr.curve));
        all_records.insert(all_records.end(), pr.curve.begin(), pr.curve.end());
        result.checkpoints.push_back(path);

        json entry = {{"checkpoint", path.filename().string()},
                      {"branch", std::string(eval_branch_name(phase_branch(p)))},
                      {"best_iteration", pr.best_iteration},
                      {"iterations", config.train.max_iterations}};
        entry["best_val_auc"] = pr.best_val_auc ? json(*pr.best_val_auc) : json(nullptr);
        summary["phases"][std::to_string(p)] = entry;
        log(LogLevel::info, "phase " + std::to_string(p) + " saved " + path.string() +
                                (pr.best_val_auc ? " (val auc " + fmt(*pr.best_val_auc) + ")" : ""));
    }
    if (phase == 0) write_text(dir / "loss.csv", loss_to_csv(all_records));

    // Best checkpoint: highest validation AUC of the phase's own output
    // branch; later phases win ties. Without validation data the latest phase.
    int best = 0;
    double best_auc = -1.0;
    for (int p = 1; p <= 3; ++p) {
        const std::string key = std::to_string(p);
        if (!summary["phases"].contains(key) || !fs::exists(phase_checkpoint_path(dir, p))) continue;
        const auto& v = summary["phases"][key]["best_val_auc"];
        const double a = v.is_number() ? v.get<double>() : -0.5;
        if (a >= best_auc) {
            best_auc = a;
            best = p;
        }
    }
    if (best > 0) {
        std::ifstream in(phase_checkpoint_path(dir, best), std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        write_file_atomic(dir / "best.ckpt", bytes.str());
        summary["best_phase"] = best;
        result.best = dir / "best.ckpt";
        result.best_phase = best;
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    return result;
}

EvalReport cmd_eval(const EvalOptions& options) {
    Checkpoint ckpt = load_checkpoint(options.checkpoint);
    const Dataset ds = eval_dataset(ckpt, options.manifest, options.split);
    const ChestNet<float> model(ckpt.config, std::move(ckpt.params));

    const std::vector<double> scores = predict(model, ds, options.branch);
    const std::vector<std::uint8_t> labels = label_matrix(ds);
    const std::string branch(eval_branch_name(options.branch));
    EvalReport report = build_report(scores, labels, ds.num_classes(), ds.class_names, branch);

    if (!options.out.empty()) {
        fs::create_directories(options.out);
        const auto curves = roc_curves(scores, labels, ds.num_classes());
        write_text(options.out / ("eval_" + branch + ".json"), report_to_json(report).dump(2) + "\n");
        write_text(options.out / ("eval_" + branch + ".txt"), report_to_text(report));
        write_text(options.out / ("roc_" + branch + ".csv"), roc_to_csv(curves, ds.class_names));
        write_text(options.out / ("roc_" + branch + ".svg"), roc_to_svg(curves, ds.class_names));
    }
    return report;
}

BoxMass box_mass(const float* map, std::size_t map_size, std::size_t image_size, const std::vector<MotifBox>& boxes,
                 std::size_t class_id) {
    const double scale = static_cast<double>(image_size) / static_cast<double>(map_size);
    BoxMass r;
    std::size_t inside = 0;
    for (std::size_t y = 0; y < map_size; ++y) {
        const double cy = (static_cast<double>(y) + 0.5) * scale;
        for (std::size_t x = 0; x < map_size; ++x) {
            const double cx = (static_cast<double>(x) + 0.5) * scale;
            const bool hit = std::any_of(boxes.begin(), boxes.end(), [&](const MotifBox& b) {
                return b.class_id == class_id && cx >= static_cast<double>(b.x) &&
                       cx < static_cast<double>(b.x + b.w) && cy >= static_cast<double>(b.y) &&
                       cy < static_cast<double>(b.y + b.h);
            });
            if (hit) {
                r.mass += map[y * map_size + x];
                ++inside;
            }
        }
    }
    r.area_fraction = static_cast<double>(inside) / static_cast<double>(map_size * map_size);
    return r;
}

AttendResult cmd_attend(const AttendOptions& options) {
    Checkpoint ckpt = load_checkpoint(options.checkpoint);
    const RunConfig run = run_config_of(ckpt);
    const std::size_t C = ckpt.config.backbone.num_classes;
    const std::size_t S = ckpt.config.backbone.input_size;
    if (options.class_id && *options.class_id >= C) {
        throw ConfigError("class " + std::to_string(*options.class_id) + " out of range; the model has " +
                          std::to_string(C) + " classes");
    }

    Dataset ds;
    if (!options.image.empty()) {
        ds.class_names = class_names_of(ckpt);
        Sample s;
        s.image = resize_bilinear(to_tensor(read_png_gray8(options.image)), S);
        s.labels.assign(C, 0);
        s.path = options.image.filename().string();
        ds.samples.push_back(std::move(s));
        normalize(ds, run.data);
    } else {
        ds = eval_dataset(ckpt, options.manifest, options.split);
    }
    if (ds.class_names.size() != C) {
        ds.class_names.clear();
        for (std::size_t c = 0; c < C; ++c) ds.class_names.push_back("class" + std::to_string(c));
    }
    const ChestNet<float> model(ckpt.config, std::move(ckpt.params));

    fs::create_directories(options.out);
    std::ostringstream csv;
    csv << "sample,class,row,col,raw,normalized\n";
    AttendResult result;
    double mass_sum = 0.0;
    double area_sum = 0.0;
    std::size_t box_count = 0;
    const std::size_t n = options.limit ? std::min(options.limit, ds.size()) : ds.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& sample = ds.samples[i];
        const std::vector<std::size_t> idx{i};
        Graph<float> g(&model.params(), std::vector<bool>(model.params().size(), false));
        const auto out = model.forward(g, stack_images<float>(ds, idx), ForwardMode::full);
        const Tensor<float>& raw = out.attention->maps.raw.value();
        const Tensor<float>& norm = out.attention->maps.normalized.value();
        const std::size_t h = norm.shape()[2];
        const std::size_t w = norm.shape()[3];
        const std::string stem = sample_stem(sample, i);

        for (std::size_t c = 0; c < C; ++c) {
            if (options.class_id && c != *options.class_id) continue;
            const float* nm = norm.data() + c * h * w;
            const float* rm = raw.data() + c * h * w;
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    csv << stem << ',' << c << ',' << y << ',' << x << ',' << fmt(rm[y * w + x]) << ','
                        << fmt(nm[y * w + x]) << '\n';
                }
            }
            // Per-map min-max scaling for display.
            const auto [lo, hi] = std::minmax_element(nm, nm + h * w);
            GrayImage img{w, h, std::vector<std::uint8_t>(h * w)};
            const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
            for (std::size_t p = 0; p < h * w; ++p) {
                const double v = range > 0.0 ? (nm[p] - *lo) / range : 0.0;
                img.pixels[p] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
            write_png_gray8(options.out / (stem + "_c" + std::to_string(c) + "_" + ds.class_names[c] + ".png"), img);
            ++result.images_written;

            if (c < sample.labels.size() && sample.labels[c] &&
                std::any_of(sample.boxes.begin(), sample.boxes.end(),
                            [&](const MotifBox& b) { return b.class_id == c; })) {
                if (h != w) throw ShapeError("box statistics need square maps");
                const BoxMass bm = box_mass(nm, h, S, sample.boxes, c);
                mass_sum += bm.mass;
                area_sum += bm.area_fraction;
                ++box_count;
            }
        }
        ++result.samples;
    }
    write_text(options.out / "saliency.csv", csv.str());

    json summary = {{"samples", result.samples}, {"maps", result.images_written}};
    if (box_count > 0) {
        result.in_box_mass = mass_sum / static_cast<double>(box_count);
        result.box_area_fraction = area_sum / static_cast<double>(box_count);
        summary["positive_boxes"] = box_count;
        summary["mean_in_box_mass"] = *result.in_box_mass;
        summary["mean_box_area_fraction"] = *result.box_area_fraction;
        summary["ratio"] = *result.in_box_mass / *result.box_area_fraction;
    }
    write_text(options.out / "attend_summary.json", summary.dump(2) + "\n");
    return result;
}

namespace {

int parse_phase(const std::string& s) {
    if (s == "all") return 0;
    if (s == "1" || s == "2" || s == "3") return s[0] - '0';
    throw ConfigError("--phase must be 1, 2, 3 or all");
}

RunConfig resolve_config(const std::string& path, const std::optional<std::uint64_t>& seed,
                         const std::optional<std::string>& output, const std::optional<std::size_t>& iterations,
                         const std::optional<std::string>& manifest) {
    RunConfig c = path.empty() ? RunConfig{} : load_run_config(path);
    if (seed) c.seed = c.train.seed = c.synth.seed = *seed;
    if (output) c.output_dir = *output;
    if (iterations) c.train.max_iterations = *iterations;
    if (manifest) c.data.manifest = *manifest;
    return c;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Dual-branch chest radiograph classifier with Grad-CAM attention"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    std::optional<std::size_t> iterations;
    std::optional<std::string> manifest_override;

    auto* synth = app.add_subcommand("synth", "Generate the synthetic motif dataset");
    std::string synth_out;
    synth->add_option("-c,--config", config_path, "Run configuration (JSON)");
    synth->add_option("-o,--out", synth_out, "Dataset directory (default <output_dir>/dataset)");
    synth->add_option("--seed", seed, "Override the run seed");

    auto* train = app.add_subcommand("train", "Train one phase or the full three-phase protocol");
    std::string phase_arg = "all";
    train->add_option("-c,--config", config_path, "Run configuration (JSON)");
    train->add_option("--phase", phase_arg, "1, 2, 3 or all")->check(CLI::IsMember({"1", "2", "3", "all"}));
    train->add_option("-o,--out", output, "Run directory (overrides output_dir)");
    train->add_option("--seed", seed, "Override the run seed");
    train->add_option("--iterations", iterations, "Override train.max_iterations");
    train->add_option("--manifest", manifest_override, "Train on this manifest instead of synthetic data");

    auto* eval = app.add_subcommand("eval", "Per-class ROC/AUC report for a checkpoint");
    EvalOptions eopt;
    std::string branch_arg = "fused";
    std::string eval_out;
    std::string eval_manifest;
    eval->add_option("checkpoint", eopt.checkpoint, "Checkpoint file")->required();
    eval->add_option("--branch", branch_arg, "cls, att or fused")->check(CLI::IsMember({"cls", "att", "fused"}));
    eval->add_option("--split", eopt.split, "train, val, test or all")
        ->check(CLI::IsMember({"train", "val", "test", "all"}));
    eval->add_option("--manifest", eval_manifest, "Evaluate every row of this manifest");
    eval->add_option("-o,--out", eval_out, "Report directory");

    auto* attend = app.add_subcommand("attend", "Export Grad-CAM saliency maps");
    AttendOptions aopt;
    std::string attend_image, attend_manifest, attend_out = "saliency";
    std::optional<std::size_t> class_id;
    attend->add_option("checkpoint", aopt.checkpoint, "Checkpoint file")->required();
    attend->add_option("--image", attend_image, "Single PNG image");
    attend->add_option("--manifest", attend_manifest, "Manifest of images");
    attend->add_option("--split", aopt.split, "Split of the run dataset when no image or manifest is given")
        ->check(CLI::IsMember({"train", "val", "test", "all"}));
    attend->add_option("--class", class_id, "Only this class index");
    attend->add_option("--limit", aopt.limit, "At most this many samples");
    attend->add_option("-o,--out", attend_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            RunConfig c = resolve_config(config_path, seed, std::nullopt, std::nullopt, std::nullopt);
            const fs::path out = synth_out.empty() ? fs::path(c.output_dir) / "dataset" : fs::path(synth_out);
            const SynthResult r = cmd_synth(c, out);
            std::cout << r.summary.dump(2) << '\n';
        } else if (*train) {
            const int phase = parse_phase(phase_arg);
            RunConfig c = resolve_config(config_path, seed, output, iterations, manifest_override);
            const TrainResult r = cmd_train(c, phase);
            for (const auto& p : r.checkpoints) std::cout << p.string() << '\n';
            if (r.best_phase) std::cout << "best: " << r.best.string() << " (phase " << r.best_phase << ")\n";
        } else if (*eval) {
            eopt.branch = parse_eval_branch(branch_arg);
            eopt.manifest = eval_manifest;
            eopt.out = eval_out;
            std::cout << report_to_text(cmd_eval(eopt));
        } else if (*attend) {
            aopt.image = attend_image;
            aopt.manifest = attend_manifest;
            aopt.out = attend_out;
            aopt.class_id = class_id;
            const AttendResult r = cmd_attend(aopt);
            std::cout << "wrote " << r.images_written << " maps for " << r.samples << " samples to " << aopt.out
                      << '\n';
            if (r.in_box_mass) {
                std::cout << "mean in-box saliency " << fmt(*r.in_box_mass) << " vs box area "
                          << fmt(*r.box_area_fraction) << '\n';
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace chestnet::cli
