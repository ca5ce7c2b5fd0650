#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "chestnet/data.hpp"
#include "chestnet/labels.hpp"
#include "chestnet/metrics.hpp"
#include "chestnet/model.hpp"

namespace chestnet {

struct TrainConfig {
    double learning_rate = 0.001;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    std::size_t batch_size = 16;
    double gamma = 0.1;
    std::size_t max_iterations = 2000;  // per phase
    // Learning rate is multiplied by gamma once each boundary is passed.
    std::vector<double> lr_step_fractions{0.5, 0.75};
    std::size_t eval_interval = 100;  // validation cadence for checkpoint selection
    // Rescales the step's gradients to at most this global L2 norm; 0 disables.
    double grad_clip_norm = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Step-decayed learning rate at an iteration.
double lr_at(std::size_t iteration, const TrainConfig& config);

/// Batches of one epoch: a seed- and epoch-determined permutation cut into
/// consecutive chunks (the last may be short).
std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, std::uint64_t seed, std::size_t epoch,
                                                      std::size_t batch_size);
std::vector<std::size_t> batch_for_iteration(std::size_t n, std::uint64_t seed, std::size_t iteration,
                                             std::size_t batch_size);

/// -sum_c [y log p + (1-y) log(1-p)] with p clamped to [1e-7, 1-1e-7].
double bce_loss(const LabelVector& truth, const LabelVector& prediction);

/// Elementwise mean of y_cls and y_att, tagged fused.
LabelVector fuse(const LabelVector& y_cls, const LabelVector& y_att);

/// Classical momentum with L2 decay folded into the gradient. Entries with
/// `trainable[i] == false` are left untouched (parameter and velocity).
template <typename T>
void sgd_step(ParamStore<T>& params, const std::vector<Tensor<T>>& grads, std::vector<Tensor<T>>& velocity,
              const std::vector<bool>& trainable, double lr, double momentum, double weight_decay);

/// Scales the gradients of trainable parameters in place so their joint L2
/// norm is at most `max_norm`. Returns the norm before scaling.
template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& grads, const std::vector<bool>& trainable, double max_norm);

struct LossRecord {
    std::size_t iteration = 0;
    int phase = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct PhaseResult {
    int phase = 0;
    std::vector<LossRecord> curve;
    std::optional<double> best_val_auc;
    std::size_t best_iteration = 0;  // iterations completed at the selected snapshot
};

/// Branch whose output is the training target in a phase (cls, att, fused).
EvalBranch phase_branch(int phase);

/// One training phase on `train`. With a non-empty validation set the model
/// ends at the snapshot with the best validation average AUC.
PhaseResult train_phase(ChestNet<float>& model, const Dataset& train, const Dataset* val, const TrainConfig& config,
                        int phase, const std::function<void(const LossRecord&)>& on_step = {});

/// Scores of one branch for every sample, row-major [samples x classes].
std::vector<double> predict(const ChestNet<float>& model, const Dataset& dataset, EvalBranch branch,
                            std::size_t batch_size = 32);

/// Per-class and average AUC of one branch over a dataset.
EvalReport evaluate(const ChestNet<float>& model, const Dataset& dataset, EvalBranch branch,
                    std::size_t batch_size = 32);

}  // namespace chestnet
