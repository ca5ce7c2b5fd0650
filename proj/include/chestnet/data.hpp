#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "chestnet/tensor.hpp"

namespace chestnet {

/// Axis-aligned motif location in image pixels.
struct MotifBox {
    std::size_t class_id = 0;
    std::size_t x = 0, y = 0, w = 0, h = 0;
};

struct Sample {
    Tensor<float> image;                // [c,S,S], values in [0,1]
    std::vector<std::uint8_t> labels;   // multi-hot
    std::string patient_id;
    std::string path;                   // relative path when loaded/exported
    std::vector<MotifBox> boxes;        // synthetic ground truth only
};

struct Dataset {
    std::vector<std::string> class_names;
    std::vector<Sample> samples;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] bool empty() const { return samples.empty(); }
    [[nodiscard]] std::size_t num_classes() const { return class_names.size(); }
    [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;
};

/// The fourteen thorax finding names, in the usual benchmark order.
const std::vector<std::string>& default_thorax_vocabulary();

enum class MotifKind { disc, bar, ring, checker };

struct MotifSpec {
    MotifKind kind;
    std::size_t width;
    std::size_t height;
    std::size_t detail;  // ring thickness / checker cell / bar thickness
    std::string name;
};

/// One motif per synthetic class, ordered by class id.
const std::vector<MotifSpec>& motif_catalog();

struct SynthConfig {
    std::size_t num_patients = 40;
    std::size_t images_per_patient = 10;
    std::size_t image_size = 64;
    std::size_t num_classes = 8;
    // Per-class label probability; empty means default_label_probability for all.
    std::vector<double> label_probability;
    double default_label_probability = 0.3;
    double noise_level = 0.08;
    double motif_intensity = 0.9;
    std::size_t placement_retries = 200;
    // Regional placement centres each class's motif near its own anchor on
    // a 3x3 grid (centre cell unused), jittered by up to region_jitter *
    // image_size pixels per axis, the way findings favour anatomical regions
    // in aligned radiographs. Uniform placement uses the whole image, as
    // does a regional motif whose region stays blocked for half the retries.
    bool regional_placement = true;
    double region_jitter = 0.15;
    std::uint64_t seed = 1;

    void validate() const;
    [[nodiscard]] double probability(std::size_t c) const;
};

/// Seed-deterministic motif dataset. Pixel values are quantized to k/255 so
/// an exported and re-loaded copy is identical.
Dataset generate_synthetic(const SynthConfig& config);

struct ManifestOptions {
    std::size_t target_size = 224;
    std::vector<std::string> vocabulary;  // empty: inferred (sorted unique names)
    bool strict = true;
};

struct ManifestRowError {
    std::size_t row = 0;  // 1-based data row
    std::string message;
};

struct ManifestLoad {
    Dataset dataset;
    std::vector<ManifestRowError> skipped;
};

/// Reads `path,patient_id,labels` rows (labels pipe-separated). Strict mode
/// throws DataError on the first bad row; lenient mode skips and records it.
ManifestLoad load_manifest(const std::filesystem::path& manifest, const std::filesystem::path& image_root,
                           const ManifestOptions& options);

/// Attaches boxes from a `path,class,x,y,w,h` file to samples by path.
void attach_boxes(Dataset& dataset, const std::filesystem::path& boxes_csv);

/// Writes images/<id>.png, manifest.csv and boxes.csv under `dir`.
void export_dataset(const Dataset& dataset, const std::filesystem::path& dir);

struct Split {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Patient-level split. test = floor((1-train_frac) * patients); validation =
/// floor(val_frac_of_train * training patients), at least one; the rest train.
Split patient_split(const Dataset& dataset, double train_frac, double val_frac_of_train, std::uint64_t seed);

/// Batch tensors from dataset rows.
template <typename T>
Tensor<T> stack_images(const Dataset& dataset, std::span<const std::size_t> indices);
template <typename T>
Tensor<T> stack_labels(const Dataset& dataset, std::span<const std::size_t> indices);

/// Minimal CSV field splitter (double-quoted fields, "" escapes).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace chestnet
