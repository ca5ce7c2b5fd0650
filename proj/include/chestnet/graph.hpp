#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chestnet/params.hpp"
#include "chestnet/tensor.hpp"

namespace chestnet {

using NodeId = std::size_t;

template <typename T>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
class Var {
public:
    Var() = default;
    Var(Graph<T>* graph, NodeId id) : graph_(graph), id_(id) {}

    [[nodiscard]] bool valid() const { return graph_ != nullptr; }
    [[nodiscard]] NodeId id() const { return id_; }
    [[nodiscard]] Graph<T>& graph() const { return *graph_; }
    [[nodiscard]] const Tensor<T>& value() const;
    [[nodiscard]] const Shape& shape() const { return value().shape(); }
    [[nodiscard]] bool requires_grad() const;

private:
    Graph<T>* graph_ = nullptr;
    NodeId id_ = 0;
};

/// Inputs to a node's vector-Jacobian product. grad_inputs[i] is nullptr when
/// parent i does not need a gradient; otherwise the op accumulates into it.
template <typename T>
struct BackwardArgs {
    std::span<const Tensor<T>* const> inputs;
    const Tensor<T>& output;
    const Tensor<T>& grad_output;
    std::span<Tensor<T>* const> grad_inputs;
};

template <typename T>
using ForwardFn = std::function<Tensor<T>(std::span<const Tensor<T>* const>)>;
template <typename T>
using BackwardFn = std::function<void(const BackwardArgs<T>&)>;

template <typename T>
struct Node {
    std::string op;
    std::vector<NodeId> parents;
    Tensor<T> value;
    bool requires_grad = false;
    std::optional<std::size_t> param;
    ForwardFn<T> forward;
    BackwardFn<T> backward;
};

/// Gradients produced by one reverse sweep, keyed by node id.
template <typename T>
class GradStore {
public:
    explicit GradStore(std::vector<std::optional<Tensor<T>>> grads) : grads_(std::move(grads)) {}

    [[nodiscard]] bool has(NodeId id) const { return id < grads_.size() && grads_[id].has_value(); }
    [[nodiscard]] bool has(const Var<T>& v) const { return has(v.id()); }
    /// Gradient of the node, or zeros of its shape when it received none.
    [[nodiscard]] Tensor<T> get(const Var<T>& v) const;
    [[nodiscard]] const std::optional<Tensor<T>>& raw(NodeId id) const { return grads_.at(id); }

private:
    std::vector<std::optional<Tensor<T>>> grads_;
};

template <typename T>
struct GradResult {
    Tensor<T> grad;
    // False when the target is not an ancestor of the score; grad is then zero.
    bool reachable = false;
};

/// Append-only tape of one forward computation. Nodes are topologically
/// ordered by construction (parents always precede children).
template <typename T>
class Graph {
public:
    Graph() = default;
    /// `trainable[i] == false` turns parameter i into a constant leaf.
    explicit Graph(const ParamStore<T>* params, std::vector<bool> trainable = {});

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var<T> constant(Tensor<T> value);
    Var<T> leaf(Tensor<T> value, bool requires_grad);
    /// Leaf bound to parameter `index` of the attached store. Repeated calls
    /// return the same node.
    Var<T> param(std::size_t index);

    /// Records a computed node. The forward function is evaluated immediately
    /// and kept for replay.
    Var<T> apply(std::string op, const std::vector<Var<T>>& parents, ForwardFn<T> forward,
                 BackwardFn<T> backward);

    /// Same value, no parents: gradients stop here.
    Var<T> detach(const Var<T>& x);

    /// Reverse sweep from a scalar loss over every node that requires a gradient.
    GradStore<T> backward(const Var<T>& loss);
    /// Reverse sweep seeded with an arbitrary cotangent of `root`'s shape.
    GradStore<T> backward(const Var<T>& root, const Tensor<T>& seed);

    /// d(score)/d(target) for a scalar score. Works even when nothing in the
    /// graph requires a gradient; parameter gradients are not touched.
    GradResult<T> grad_wrt(const Var<T>& score, const Var<T>& target);
    /// Vector-Jacobian product of `output` with `seed`, taken at `target`.
    GradResult<T> vjp_wrt(const Var<T>& output, const Tensor<T>& seed, const Var<T>& target);

    /// Per-parameter gradients from a sweep; zeros for parameters that got none.
    [[nodiscard]] std::vector<Tensor<T>> param_grads(const GradStore<T>& grads) const;

    /// Re-executes every recorded op from its parents' stored values and checks
    /// the results are bit-identical. Returns the first mismatching node id.
    [[nodiscard]] std::optional<NodeId> replay_mismatch() const;

    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] const Node<T>& node(NodeId id) const { return nodes_.at(id); }
    [[nodiscard]] const ParamStore<T>* params() const { return params_; }

private:
    std::vector<std::optional<Tensor<T>>> sweep(NodeId root, const Tensor<T>& seed,
                                                const std::vector<bool>& needs);

    const ParamStore<T>* params_ = nullptr;
    std::vector<bool> trainable_;
    std::vector<std::optional<NodeId>> param_nodes_;
    std::vector<Node<T>> nodes_;
};

extern template class Var<float>;
extern template class Var<double>;
extern template class GradStore<float>;
extern template class GradStore<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace chestnet
