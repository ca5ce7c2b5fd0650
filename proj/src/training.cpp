#include "chestnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "chestnet/kernels.hpp"
#include "chestnet/ops.hpp"
#include "chestnet/rng.hpp"

namespace chestnet {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !(momentum > 0.0) || !(gamma > 0.0)) {
        throw ConfigError("train learning_rate, momentum and gamma must be > 0");
    }
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
    if (max_iterations == 0) throw ConfigError("train.max_iterations must be >= 1");
    if (eval_interval == 0) throw ConfigError("train.eval_interval must be >= 1");
    if (!(grad_clip_norm >= 0.0)) throw ConfigError("train.grad_clip_norm must be >= 0");
    for (double f : lr_step_fractions) {
        if (!(f > 0.0 && f < 1.0)) throw ConfigError("train.lr_step_fractions must lie in (0,1)");
    }
}

double lr_at(std::size_t iteration, const TrainConfig& config) {
    double lr = config.learning_rate;
    for (double f : config.lr_step_fractions) {
        const auto boundary = static_cast<std::size_t>(f * static_cast<double>(config.max_iterations));
        if (iteration >= boundary) lr *= config.gamma;
    }
    return lr;
}

std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, std::uint64_t seed, std::size_t epoch,
                                                      std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0xba7c4, epoch));
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < n; i += batch_size) {
        batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(i),
                             perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
    }
    return batches;
}

std::vector<std::size_t> batch_for_iteration(std::size_t n, std::uint64_t seed, std::size_t iteration,
                                             std::size_t batch_size) {
    if (n == 0) throw ConfigError("cannot draw batches from an empty dataset");
    const std::size_t per_epoch = (n + batch_size - 1) / batch_size;
    return shuffle_batches(n, seed, iteration / per_epoch, batch_size)[iteration % per_epoch];
}

double bce_loss(const LabelVector& truth, const LabelVector& prediction) {
    if (truth.size() != prediction.size()) {
        throw ShapeError("bce_loss: " + std::to_string(truth.size()) + " targets vs " +
                         std::to_string(prediction.size()) + " predictions");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < truth.size(); ++c) {
        const double p = std::clamp(prediction.values[c], ops::kBceEpsilon, 1.0 - ops::kBceEpsilon);
        const double y = truth.values[c];
        total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    return total;
}

LabelVector fuse(const LabelVector& y_cls, const LabelVector& y_att) {
    if (y_cls.size() != y_att.size()) {
        throw ShapeError("fuse: " + std::to_string(y_cls.size()) + " vs " + std::to_string(y_att.size()) + " classes");
    }
    LabelVector out{std::vector<double>(y_cls.size()), LabelRole::fused};
    for (std::size_t c = 0; c < y_cls.size(); ++c) out.values[c] = 0.5 * (y_cls.values[c] + y_att.values[c]);
    return out;
}

template <typename T>
void sgd_step(ParamStore<T>& params, const std::vector<Tensor<T>>& grads, std::vector<Tensor<T>>& velocity,
              const std::vector<bool>& trainable, double lr, double momentum, double weight_decay) {
    if (grads.size() != params.size() || trainable.size() != params.size()) {
        throw ShapeError("sgd_step: parameter/gradient/mask counts differ");
    }
    if (velocity.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) velocity.emplace_back(params.value(i).shape());
    }
    const auto& k = kernels::active<T>();
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!trainable[i]) continue;
        Tensor<T>& p = params.value(i);
        if (grads[i].shape() != p.shape() || velocity[i].shape() != p.shape()) {
            throw ShapeError("sgd_step: shape mismatch for " + params.name(i));
        }
        k.sgd_momentum(p.numel(), static_cast<T>(lr), static_cast<T>(momentum), static_cast<T>(weight_decay),
                       p.data(), grads[i].data(), velocity[i].data());
    }
}

EvalBranch phase_branch(int phase) {
    switch (phase) {
        case 1: return EvalBranch::cls;
        case 2: return EvalBranch::att;
        case 3: return EvalBranch::fused;
        default: throw ConfigError("phase must be 1, 2 or 3");
    }
}

std::vector<double> predict(const ChestNet<float>& model, const Dataset& dataset, EvalBranch branch,
                            std::size_t batch_size) {
    const std::size_t c = model.config().backbone.num_classes;
    if (dataset.num_classes() != c) {
        throw ConfigError("dataset has " + std::to_string(dataset.num_classes()) + " classes, model expects " +
                          std::to_string(c));
    }
    const ForwardMode mode = branch == EvalBranch::cls ? ForwardMode::classification_only : ForwardMode::full;
    std::vector<double> scores;
    scores.reserve(dataset.size() * c);
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
        idx.resize(std::min(batch_size, dataset.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        Graph<float> g(&model.params(), std::vector<bool>(model.params().size(), false));
        const auto out = model.forward(g, stack_images<float>(dataset, idx), mode);
        const auto& v = out.branch(branch).value();
        scores.insert(scores.end(), v.storage().begin(), v.storage().end());
    }
    return scores;
}

EvalReport evaluate(const ChestNet<float>& model, const Dataset& dataset, EvalBranch branch, std::size_t batch_size) {
    if (dataset.empty()) throw ConfigError("cannot evaluate on an empty dataset");
    const auto scores = predict(model, dataset, branch, batch_size);
    std::vector<std::uint8_t> labels;
    labels.reserve(scores.size());
    for (const auto& s : dataset.samples) labels.insert(labels.end(), s.labels.begin(), s.labels.end());
    return build_report(scores, labels, dataset.num_classes(), dataset.class_names,
                        std::string(eval_branch_name(branch)));
}

PhaseResult train_phase(ChestNet<float>& model, const Dataset& train, const Dataset* val, const TrainConfig& config,
                        int phase, const std::function<void(const LossRecord&)>& on_step) {
    config.validate();
    if (train.empty()) throw ConfigError("training dataset is empty");
    if (train.num_classes() != model.config().backbone.num_classes) {
        throw ConfigError("training dataset has " + std::to_string(train.num_classes()) + " classes, model expects " +
                          std::to_string(model.config().backbone.num_classes));
    }
    const EvalBranch target = phase_branch(phase);
    const ForwardMode mode = phase == 1 ? ForwardMode::classification_only : ForwardMode::full;
    const std::vector<bool> mask = model.trainable_mask(phase);
    const double aux_weight = model.config().attention.aux_loss_weight;
    const bool use_val = val != nullptr && !val->empty();

    PhaseResult result;
    result.phase = phase;
    result.curve.reserve(config.max_iterations);
    std::vector<Tensor<float>> velocity;
    std::optional<ParamStore<float>> best;

    auto validate_now = [&](std::size_t done) {
        if (!use_val) return;
        const EvalReport r = evaluate(model, *val, target);
        if (!r.average_auc) return;
        if (!result.best_val_auc || *r.average_auc > *result.best_val_auc) {
            result.best_val_auc = r.average_auc;
            result.best_iteration = done;
            best = model.params();
        }
    };

    // The starting point competes too, so a phase never ends worse on
    // validation than it began.
    validate_now(0);
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        const auto batch = batch_for_iteration(train.size(), mix_seed(config.seed, static_cast<std::uint64_t>(phase)), it,
                                               config.batch_size);
        const Tensor<float> images = stack_images<float>(train, batch);
        const Tensor<float> targets = stack_labels<float>(train, batch);

        Graph<float> g(&model.params(), mask);
        const auto out = model.forward(g, images, mode);
        Var<float> loss = ops::bce_loss(out.branch(target), targets);
        if (phase > 1 && aux_weight > 0.0) {
            auto aux = ops::bce_loss(ops::sigmoid(out.attention->aux_logits), targets);
            loss = ops::add(loss, ops::scale(aux, static_cast<float>(aux_weight)));
        }
        const double loss_value = loss.value().item();
        const double lr = lr_at(it, config);
        if (!std::isfinite(loss_value)) {
            std::ostringstream os;
            os << "non-finite loss " << loss_value << " in phase " << phase << " at iteration " << it << " (lr " << lr
               << ", batch";
            for (auto i : batch) os << ' ' << train.samples[i].path;
            os << ')';
            throw TrainingError(os.str());
        }
        auto grads = g.param_grads(g.backward(loss));
        if (config.grad_clip_norm > 0.0) clip_grad_norm(grads, mask, config.grad_clip_norm);
        sgd_step(model.params(), grads, velocity, mask, lr, config.momentum, config.weight_decay);

        LossRecord rec{it, phase, lr, loss_value};
        result.curve.push_back(rec);
        if (on_step) on_step(rec);
        if ((it + 1) % config.eval_interval == 0 || it + 1 == config.max_iterations) validate_now(it + 1);
    }
    if (best) {
        model.params() = std::move(*best);
    } else {
        result.best_iteration = config.max_iterations;
    }
    return result;
}

template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& grads, const std::vector<bool>& trainable, double max_norm) {
    if (trainable.size() != grads.size()) throw ShapeError("clip_grad_norm: gradient/mask counts differ");
    double sq = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!trainable[i]) continue;
        for (const T v : grads[i].storage()) sq += static_cast<double>(v) * static_cast<double>(v);
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const auto factor = static_cast<T>(max_norm / norm);
        for (std::size_t i = 0; i < grads.size(); ++i) {
            if (!trainable[i]) continue;
            for (T& v : grads[i].storage()) v *= factor;
        }
    }
    return norm;
}

template double clip_grad_norm<float>(std::vector<Tensor<float>>&, const std::vector<bool>&, double);
template double clip_grad_norm<double>(std::vector<Tensor<double>>&, const std::vector<bool>&, double);
template void sgd_step<float>(ParamStore<float>&, const std::vector<Tensor<float>>&, std::vector<Tensor<float>>&,
                              const std::vector<bool>&, double, double, double);
template void sgd_step<double>(ParamStore<double>&, const std::vector<Tensor<double>>&, std::vector<Tensor<double>>&,
                               const std::vector<bool>&, double, double, double);

}  // namespace chestnet
