#include "skydepth/numcore/graph.hpp"

#include <array>

namespace skydepth::numcore {

namespace {

template <typename T>
BasicGraph<T>*& current_graph() {
  thread_local BasicGraph<T> fallback;
  thread_local BasicGraph<T>* current = &fallback;
  return current;
}

thread_local bool g_grad_enabled = true;

constexpr std::array<std::string_view, kPrimitiveCount> kNames = {
    "add",  "sub",   "mul",    "div", "scalar_mul", "relu",   "conv2d", "max_pool2", "upsample2",
    "concat", "mean", "amax", "abs", "square",     "sqrt",   "exp",    "clamp",     "where",
};

}  // namespace

std::string_view primitive_name(Primitive kind) {
  const auto i = static_cast<std::size_t>(kind);
  return i < kNames.size() ? kNames[i] : std::string_view("unknown");
}

template <typename T>
BasicGraph<T>& active_graph() {
  return *current_graph<T>();
}

template <typename T>
BasicGraphScope<T>::BasicGraphScope(BasicGraph<T>& graph) : previous_(current_graph<T>()) {
  current_graph<T>() = &graph;
}

template <typename T>
BasicGraphScope<T>::~BasicGraphScope() {
  current_graph<T>() = previous_;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

template <typename T>
void backward(BasicGraph<T>& graph, const BasicTensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ValueError("backward: loss must be a scalar, got shape " +
                     (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  const auto nodes = graph.nodes();
  std::ptrdiff_t root = -1;
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(nodes.size()) - 1; i >= 0; --i) {
    if (nodes[static_cast<std::size_t>(i)].output.same_as(loss)) {
      root = i;
      break;
    }
  }
  if (root < 0) throw ValueError("backward: loss is not attached to the graph");

  BasicTensor<T> seed = loss;
  seed.zero_grad();
  seed.grad_buffer()[0] = T(1);

  for (std::ptrdiff_t i = root; i >= 0; --i) {
    const Node<T>& node = nodes[static_cast<std::size_t>(i)];
    if (node.output.has_grad()) node.backward(node.output.grad());
  }

  for (const Node<T>& node : nodes) {
    BasicTensor<T> out = node.output;
    out.zero_grad();
  }
  graph.clear();
}

template BasicGraph<float>& active_graph<float>();
template BasicGraph<double>& active_graph<double>();
template class BasicGraphScope<float>;
template class BasicGraphScope<double>;
template void backward<float>(BasicGraph<float>&, const BasicTensor<float>&);
template void backward<double>(BasicGraph<double>&, const BasicTensor<double>&);

}  // namespace skydepth::numcore
