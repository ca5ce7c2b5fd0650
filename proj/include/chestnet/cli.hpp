#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chestnet/checkpoint.hpp"
#include "chestnet/config.hpp"
#include "chestnet/data.hpp"
#include "chestnet/metrics.hpp"

namespace chestnet::cli {

namespace fs = std::filesystem;

/// Levels selected by the CHESTNET_LOG environment variable
/// (quiet, info, debug; default info). Messages go to stderr.
enum class LogLevel { quiet = 0, info = 1, debug = 2 };
LogLevel log_level();
void log(LogLevel level, const std::string& message);

/// Exclusive ownership of a run directory through `<dir>/.lock`.
class RunLock {
public:
    explicit RunLock(const fs::path& dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    fs::path path_;
};

/// The run's full dataset: the manifest when configured, otherwise the
/// synthetic generator. Optional mean/stddev normalization is applied.
Dataset load_run_dataset(const RunConfig& config);
Split split_run_dataset(const RunConfig& config, const Dataset& dataset);

struct SynthResult {
    std::size_t rows = 0;
    nlohmann::json summary;
};

/// Writes images, manifest.csv, boxes.csv and summary.json under `out`.
SynthResult cmd_synth(const RunConfig& config, const fs::path& out);

struct TrainResult {
    std::vector<fs::path> checkpoints;  // one per phase run, in order
    fs::path best;
    int best_phase = 0;
};

/// Phases are 1, 2, 3 or 0 for all three in sequence. Outputs land in
/// config.output_dir: phaseN.ckpt, loss_phaseN.csv, summary.json, best.ckpt.
TrainResult cmd_train(const RunConfig& config, int phase);

/// Expected location of a phase checkpoint inside a run directory.
fs::path phase_checkpoint_path(const fs::path& run_dir, int phase);

struct EvalOptions {
    fs::path checkpoint;
    EvalBranch branch = EvalBranch::fused;
    std::string split = "test";  // train, val, test or all
    fs::path manifest;           // evaluate this manifest instead of the run split
    fs::path out;                // report directory; empty writes nothing
};

EvalReport cmd_eval(const EvalOptions& options);

struct AttendOptions {
    fs::path checkpoint;
    fs::path image;      // a single PNG
    fs::path manifest;   // or every row of a manifest
    std::string split = "test";  // otherwise this split of the run dataset
    std::optional<std::size_t> class_id;
    std::size_t limit = 0;  // 0: all samples
    fs::path out;
};

struct AttendResult {
    std::size_t samples = 0;
    std::size_t images_written = 0;
    // Mean saliency mass inside boxes of positive classes and the mean box
    // area fraction, when boxes are known.
    std::optional<double> in_box_mass;
    std::optional<double> box_area_fraction;
};

AttendResult cmd_attend(const AttendOptions& options);

/// Saliency mass of a [h,w] normalized map inside the boxes of one class,
/// with boxes given in image pixels of an image with extent `image_size`.
/// A map cell counts as inside when its centre falls in a box.
struct BoxMass {
    double mass = 0.0;
    double area_fraction = 0.0;
};
BoxMass box_mass(const float* map, std::size_t map_size, std::size_t image_size, const std::vector<MotifBox>& boxes,
                 std::size_t class_id);

/// Entry point: returns 0 on success, 1 on usage or configuration errors,
/// 2 on runtime failures.
int run(int argc, char** argv);

}  // namespace chestnet::cli
