#include "chestnet/graph.hpp"

#include <cassert>
#include <cstring>

namespace chestnet {

template <typename T>
const Tensor<T>& Var<T>::value() const {
    return graph_->node(id_).value;
}

template <typename T>
bool Var<T>::requires_grad() const {
    return graph_->node(id_).requires_grad;
}

template <typename T>
Tensor<T> GradStore<T>::get(const Var<T>& v) const {
    if (has(v.id())) return *grads_[v.id()];
    return Tensor<T>(v.shape());
}

template <typename T>
Graph<T>::Graph(const ParamStore<T>* params, std::vector<bool> trainable)
    : params_(params), trainable_(std::move(trainable)) {
    if (params_ != nullptr) {
        if (trainable_.empty()) trainable_.assign(params_->size(), true);
        if (trainable_.size() != params_->size()) {
            throw ContractError("trainable mask has " + std::to_string(trainable_.size()) +
                                " entries for " + std::to_string(params_->size()) + " parameters");
        }
        param_nodes_.assign(params_->size(), std::nullopt);
    }
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
    return leaf(std::move(value), false);
}

template <typename T>
Var<T> Graph<T>::leaf(Tensor<T> value, bool requires_grad) {
    Node<T> n;
    n.op = "leaf";
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Graph<T>::param(std::size_t index) {
    if (params_ == nullptr || index >= params_->size()) {
        throw ContractError("parameter index " + std::to_string(index) + " out of range");
    }
    if (param_nodes_[index]) return Var<T>(this, *param_nodes_[index]);
    Var<T> v = leaf(params_->value(index), trainable_[index]);
    nodes_.back().op = "param";
    nodes_.back().param = index;
    param_nodes_[index] = v.id();
    return v;
}

template <typename T>
Var<T> Graph<T>::apply(std::string op, const std::vector<Var<T>>& parents, ForwardFn<T> forward,
                       BackwardFn<T> backward) {
    Node<T> n;
    n.op = std::move(op);
    std::vector<const Tensor<T>*> inputs;
    inputs.reserve(parents.size());
    for (const auto& p : parents) {
        if (&p.graph() != this) throw ContractError(n.op + ": operand belongs to another graph");
        n.parents.push_back(p.id());
        n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
        inputs.push_back(&nodes_[p.id()].value);
    }
    n.value = forward(inputs);
    assert(n.value.all_finite() && "non-finite value produced from finite inputs");
    n.forward = std::move(forward);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Graph<T>::detach(const Var<T>& x) {
    Var<T> v = leaf(x.value(), false);
    nodes_.back().op = "detach";
    return v;
}

template <typename T>
std::vector<std::optional<Tensor<T>>> Graph<T>::sweep(NodeId root, const Tensor<T>& seed,
                                                      const std::vector<bool>& needs) {
    std::vector<std::optional<Tensor<T>>> grads(nodes_.size());
    if (seed.shape() != nodes_.at(root).value.shape()) {
        throw ShapeError("backward seed " + seed.shape().str() + " does not match root " +
                         nodes_[root].value.shape().str());
    }
    grads[root] = seed;
    std::vector<const Tensor<T>*> inputs;
    std::vector<Tensor<T>*> grad_inputs;
    for (NodeId id = root + 1; id-- > 0;) {
        if (!grads[id] || !needs[id]) continue;
        const Node<T>& n = nodes_[id];
        if (n.parents.empty() || !n.backward) continue;
        inputs.clear();
        grad_inputs.clear();
        bool any = false;
        for (NodeId p : n.parents) {
            inputs.push_back(&nodes_[p].value);
            if (needs[p]) {
                if (!grads[p]) grads[p] = Tensor<T>(nodes_[p].value.shape());
                grad_inputs.push_back(&*grads[p]);
                any = true;
            } else {
                grad_inputs.push_back(nullptr);
            }
        }
        if (!any) continue;
        n.backward(BackwardArgs<T>{inputs, n.value, *grads[id], grad_inputs});
    }
    return grads;
}

template <typename T>
GradStore<T> Graph<T>::backward(const Var<T>& loss) {
    if (loss.value().numel() != 1) {
        throw ContractError("backward() needs a scalar loss, got shape " + loss.shape().str());
    }
    return backward(loss, Tensor<T>(loss.shape(), T(1)));
}

template <typename T>
GradStore<T> Graph<T>::backward(const Var<T>& root, const Tensor<T>& seed) {
    std::vector<bool> needs(nodes_.size());
    for (NodeId i = 0; i < nodes_.size(); ++i) needs[i] = nodes_[i].requires_grad;
    return GradStore<T>(sweep(root.id(), seed, needs));
}

template <typename T>
GradResult<T> Graph<T>::grad_wrt(const Var<T>& score, const Var<T>& target) {
    if (score.value().numel() != 1) {
        throw ContractError("grad_wrt() needs a scalar score, got shape " + score.shape().str());
    }
    return vjp_wrt(score, Tensor<T>(score.shape(), T(1)), target);
}

template <typename T>
GradResult<T> Graph<T>::vjp_wrt(const Var<T>& output, const Tensor<T>& seed, const Var<T>& target) {
    const NodeId t = target.id();
    const NodeId root = output.id();
    GradResult<T> result{Tensor<T>(target.shape()), false};
    if (t > root) return result;
    // Only nodes on a path from the target need gradients.
    std::vector<bool> needs(nodes_.size(), false);
    needs[t] = true;
    for (NodeId i = t + 1; i <= root; ++i) {
        for (NodeId p : nodes_[i].parents) {
            if (needs[p]) {
                needs[i] = true;
                break;
            }
        }
    }
    if (!needs[root]) return result;
    auto grads = sweep(root, seed, needs);
    if (grads[t]) {
        result.grad = std::move(*grads[t]);
        result.reachable = true;
    }
    return result;
}

template <typename T>
std::vector<Tensor<T>> Graph<T>::param_grads(const GradStore<T>& grads) const {
    std::vector<Tensor<T>> out;
    if (params_ == nullptr) return out;
    out.reserve(params_->size());
    for (std::size_t i = 0; i < params_->size(); ++i) {
        if (param_nodes_[i] && grads.has(*param_nodes_[i])) {
            out.push_back(*grads.raw(*param_nodes_[i]));
        } else {
            out.emplace_back(params_->value(i).shape());
        }
    }
    return out;
}

template <typename T>
std::optional<NodeId> Graph<T>::replay_mismatch() const {
    std::vector<const Tensor<T>*> inputs;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        const Node<T>& n = nodes_[id];
        if (!n.forward) continue;
        inputs.clear();
        for (NodeId p : n.parents) inputs.push_back(&nodes_[p].value);
        const Tensor<T> again = n.forward(inputs);
        if (again.shape() != n.value.shape() ||
            std::memcmp(again.data(), n.value.data(), n.value.numel() * sizeof(T)) != 0) {
            return id;
        }
    }
    return std::nullopt;
}

template class Var<float>;
template class Var<double>;
template class GradStore<float>;
template class GradStore<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace chestnet
