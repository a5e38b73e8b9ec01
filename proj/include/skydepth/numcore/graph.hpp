#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "skydepth/numcore/tensor.hpp"

namespace skydepth::numcore {

enum class Primitive : std::uint8_t {
  add,
  sub,
  mul,
  div,
  scalar_mul,
  relu,
  conv2d,
  max_pool2,
  upsample2,
  concat,
  mean,
  amax,
  abs,
  square,
  sqrt,
  exp,
  clamp,
  where,
};

inline constexpr int kPrimitiveCount = 18;

std::string_view primitive_name(Primitive kind);

/// One executed primitive. `backward` receives d(loss)/d(output) and
/// accumulates into the gradient buffers of the inputs that require grad.
template <typename T>
struct Node {
  Primitive kind;
  std::vector<BasicTensor<T>> inputs;
  BasicTensor<T> output;
  std::function<void(std::span<const T>)> backward;
};

/// Execution tape. Nodes are appended in execution order, so every node's
/// inputs were produced by an earlier node or are leaves.
template <typename T>
class BasicGraph {
 public:
  void record(Node<T> node) {
    node.output.mark_recorded();
    nodes_.push_back(std::move(node));
  }

  std::span<const Node<T>> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node<T>> nodes_;
};

using Graph = BasicGraph<float>;
using GraphD = BasicGraph<double>;

/// Graph that primitives on this thread record into. Each thread starts
/// with its own default graph.
template <typename T>
BasicGraph<T>& active_graph();

/// Routes recording to `graph` for the lifetime of the scope.
template <typename T>
class BasicGraphScope {
 public:
  explicit BasicGraphScope(BasicGraph<T>& graph);
  ~BasicGraphScope();
  BasicGraphScope(const BasicGraphScope&) = delete;
  BasicGraphScope& operator=(const BasicGraphScope&) = delete;

 private:
  BasicGraph<T>* previous_;
};

using GraphScope = BasicGraphScope<float>;
using GraphScopeD = BasicGraphScope<double>;

/// Disables recording on this thread (inference, finite differences).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Reverse sweep from a scalar `loss` recorded on `graph`.
///
/// Every leaf with requires_grad gets d(loss)/d(leaf) added to its gradient
/// buffer (buffers accumulate across calls; zero them between steps).
/// Intermediate gradients are released and the graph is cleared.
/// Throws ValueError when `loss` is not a scalar or was not produced by a
/// node of `graph`.
template <typename T>
void backward(BasicGraph<T>& graph, const BasicTensor<T>& loss);

/// backward() on the calling thread's active graph.
template <typename T>
void backward(const BasicTensor<T>& loss) {
  backward(active_graph<T>(), loss);
}

}  // namespace skydepth::numcore
