#include "chestnet/config.hpp"

#include <fstream>
#include <set>

namespace chestnet {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& section) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
}

template <typename V>
void read(const json& j, const char* key, V& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<V>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + section + "." + key + "': " + e.what());
    }
}

}  // namespace

json to_json(const BackboneConfig& c) {
    return {{"input_size", c.input_size},       {"input_channels", c.input_channels},
            {"stem_channels", c.stem_channels}, {"stem_kernel", c.stem_kernel},
            {"stem_stride", c.stem_stride},     {"pool_window", c.pool_window},
            {"pool_stride", c.pool_stride},     {"pool_padding", c.pool_padding},
            {"stage_blocks", c.stage_blocks},   {"stage_channels", c.stage_channels},
            {"bottleneck_divisor", c.bottleneck_divisor}, {"num_classes", c.num_classes}};
}

json to_json(const AttentionConfig& c) {
    return {{"pre_channels", c.pre_channels},
            {"post_mid_channels", c.post_mid_channels},
            {"map_size", c.map_size},
            {"gradcam_source", std::string(gradcam_source_name(c.gradcam_source))},
            {"aux_loss_weight", c.aux_loss_weight}};
}

json to_json(const ModelConfig& c) { return {{"backbone", to_json(c.backbone)}, {"attention", to_json(c.attention)}}; }

json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},
            {"weight_decay", c.weight_decay},   {"batch_size", c.batch_size},
            {"gamma", c.gamma},                 {"max_iterations", c.max_iterations},
            {"lr_step_fractions", c.lr_step_fractions}, {"eval_interval", c.eval_interval},
            {"grad_clip_norm", c.grad_clip_norm},
            {"seed", c.seed}};
}

json to_json(const SynthConfig& c) {
    return {{"num_patients", c.num_patients},
            {"images_per_patient", c.images_per_patient},
            {"image_size", c.image_size},
            {"num_classes", c.num_classes},
            {"label_probability", c.label_probability},
            {"default_label_probability", c.default_label_probability},
            {"noise_level", c.noise_level},
            {"motif_intensity", c.motif_intensity},
            {"placement_retries", c.placement_retries},
            {"regional_placement", c.regional_placement},
            {"region_jitter", c.region_jitter},
            {"seed", c.seed}};
}

json to_json(const DataConfig& c) {
    json j{{"manifest", c.manifest},         {"image_root", c.image_root},
           {"boxes", c.boxes},               {"vocabulary", c.vocabulary},
           {"strict", c.strict},             {"train_fraction", c.train_fraction},
           {"val_fraction", c.val_fraction}};
    if (c.mean) j["mean"] = *c.mean;
    if (c.stddev) j["stddev"] = *c.stddev;
    return j;
}

json to_json(const RunConfig& c) {
    json j = to_json(c.model);
    j["train"] = to_json(c.train);
    j["synth"] = to_json(c.synth);
    j["data"] = to_json(c.data);
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    return j;
}

BackboneConfig backbone_from_json(const json& j) {
    const std::string s = "backbone";
    reject_unknown(j, {"input_size", "input_channels", "stem_channels", "stem_kernel", "stem_stride", "pool_window",
                       "pool_stride", "pool_padding", "stage_blocks", "stage_channels", "bottleneck_divisor",
                       "num_classes"},
                   s);
    BackboneConfig c;
    read(j, "input_size", c.input_size, s);
    read(j, "input_channels", c.input_channels, s);
    read(j, "stem_channels", c.stem_channels, s);
    read(j, "stem_kernel", c.stem_kernel, s);
    read(j, "stem_stride", c.stem_stride, s);
    read(j, "pool_window", c.pool_window, s);
    read(j, "pool_stride", c.pool_stride, s);
    read(j, "pool_padding", c.pool_padding, s);
    read(j, "stage_blocks", c.stage_blocks, s);
    read(j, "stage_channels", c.stage_channels, s);
    read(j, "bottleneck_divisor", c.bottleneck_divisor, s);
    read(j, "num_classes", c.num_classes, s);
    return c;
}

AttentionConfig attention_from_json(const json& j) {
    const std::string s = "attention";
    reject_unknown(j, {"pre_channels", "post_mid_channels", "map_size", "gradcam_source", "aux_loss_weight"}, s);
    AttentionConfig c;
    read(j, "pre_channels", c.pre_channels, s);
    read(j, "post_mid_channels", c.post_mid_channels, s);
    read(j, "map_size", c.map_size, s);
    if (j.contains("gradcam_source")) {
        std::string src;
        read(j, "gradcam_source", src, s);
        c.gradcam_source = parse_gradcam_source(src);
    }
    read(j, "aux_loss_weight", c.aux_loss_weight, s);
    return c;
}

ModelConfig model_from_json(const json& j) {
    ModelConfig c;
    if (j.contains("backbone")) c.backbone = backbone_from_json(j.at("backbone"));
    if (j.contains("attention")) {
        c.attention = attention_from_json(j.at("attention"));
    }
    if (!j.contains("attention") || !j.at("attention").contains("map_size")) {
        c.attention.map_size = c.backbone.shared_size();
    }
    return c;
}

RunConfig run_config_from_json(const json& j) {
    reject_unknown(j, {"backbone", "attention", "train", "synth", "data", "output_dir", "seed"}, "");
    RunConfig c;
    read(j, "seed", c.seed, "");
    read(j, "output_dir", c.output_dir, "");
    c.model = model_from_json(j);
    c.train.seed = c.seed;
    c.synth.seed = c.seed;
    c.synth.num_classes = c.model.backbone.num_classes;
    c.synth.image_size = c.model.backbone.input_size;
    if (j.contains("train")) {
        const auto& t = j.at("train");
        const std::string s = "train";
        reject_unknown(t, {"learning_rate", "momentum", "weight_decay", "batch_size", "gamma", "max_iterations",
                           "lr_step_fractions", "eval_interval", "grad_clip_norm", "seed"},
                       s);
        read(t, "learning_rate", c.train.learning_rate, s);
        read(t, "momentum", c.train.momentum, s);
        read(t, "weight_decay", c.train.weight_decay, s);
        read(t, "batch_size", c.train.batch_size, s);
        read(t, "gamma", c.train.gamma, s);
        read(t, "max_iterations", c.train.max_iterations, s);
        read(t, "lr_step_fractions", c.train.lr_step_fractions, s);
        read(t, "eval_interval", c.train.eval_interval, s);
        read(t, "grad_clip_norm", c.train.grad_clip_norm, s);
        read(t, "seed", c.train.seed, s);
    }
    if (j.contains("synth")) {
        const auto& t = j.at("synth");
        const std::string s = "synth";
        reject_unknown(t, {"num_patients", "images_per_patient", "image_size", "num_classes", "label_probability",
                           "default_label_probability", "noise_level", "motif_intensity", "placement_retries", "regional_placement",
                           "region_jitter", "seed"},
                       s);
        read(t, "num_patients", c.synth.num_patients, s);
        read(t, "images_per_patient", c.synth.images_per_patient, s);
        read(t, "image_size", c.synth.image_size, s);
        read(t, "num_classes", c.synth.num_classes, s);
        read(t, "label_probability", c.synth.label_probability, s);
        read(t, "default_label_probability", c.synth.default_label_probability, s);
        read(t, "noise_level", c.synth.noise_level, s);
        read(t, "motif_intensity", c.synth.motif_intensity, s);
        read(t, "placement_retries", c.synth.placement_retries, s);
        read(t, "regional_placement", c.synth.regional_placement, s);
        read(t, "region_jitter", c.synth.region_jitter, s);
        read(t, "seed", c.synth.seed, s);
    }
    if (j.contains("data")) {
        const auto& t = j.at("data");
        const std::string s = "data";
        reject_unknown(t, {"manifest", "image_root", "boxes", "vocabulary", "strict", "train_fraction", "val_fraction",
                           "mean", "stddev"},
                       s);
        read(t, "manifest", c.data.manifest, s);
        read(t, "image_root", c.data.image_root, s);
        read(t, "boxes", c.data.boxes, s);
        read(t, "vocabulary", c.data.vocabulary, s);
        read(t, "strict", c.data.strict, s);
        read(t, "train_fraction", c.data.train_fraction, s);
        read(t, "val_fraction", c.data.val_fraction, s);
        if (t.contains("mean")) c.data.mean = t.at("mean").get<double>();
        if (t.contains("stddev")) c.data.stddev = t.at("stddev").get<double>();
    }
    return c;
}

void RunConfig::validate() const {
    model.validate();
    train.validate();
    if (data.manifest.empty()) {
        synth.validate();
        if (synth.num_classes != model.backbone.num_classes) {
            throw ConfigError("synth.num_classes (" + std::to_string(synth.num_classes) +
                              ") must equal backbone.num_classes (" + std::to_string(model.backbone.num_classes) + ")");
        }
        if (synth.image_size != model.backbone.input_size) {
            throw ConfigError("synth.image_size (" + std::to_string(synth.image_size) +
                              ") must equal backbone.input_size (" + std::to_string(model.backbone.input_size) + ")");
        }
    } else if (!data.vocabulary.empty() && data.vocabulary.size() != model.backbone.num_classes) {
        throw ConfigError("data.vocabulary has " + std::to_string(data.vocabulary.size()) +
                          " names but backbone.num_classes is " + std::to_string(model.backbone.num_classes));
    }
    if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0) ||
        !(data.val_fraction > 0.0 && data.val_fraction < 1.0)) {
        throw ConfigError("data.train_fraction and data.val_fraction must lie in (0,1)");
    }
    if (data.stddev && !(*data.stddev > 0.0)) throw ConfigError("data.stddev must be > 0");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace chestnet
