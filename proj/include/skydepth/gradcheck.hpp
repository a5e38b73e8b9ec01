#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "skydepth/numcore/graph.hpp"
#include "skydepth/numcore/tensor.hpp"

namespace skydepth::verify {

template <typename T>
using Builder =
    std::function<numcore::BasicTensor<T>(const std::vector<numcore::BasicTensor<T>>&)>;

/// Largest |analytic - numeric| / max(1e-8, |analytic| + |numeric|) over
/// every element of every input, with numeric gradients from central
/// differences of step `eps`. Inputs are copied; the caller's tensors are
/// left untouched. Throws NumericError if the builder produces a
/// non-finite value.
template <typename T>
double grad_check(const Builder<T>& builder, const std::vector<numcore::BasicTensor<T>>& inputs,
                  double eps) {
  using numcore::BasicTensor;
  if (!(eps > 0.0)) throw ValueError("grad_check: eps must be positive");

  std::vector<BasicTensor<T>> work;
  work.reserve(inputs.size());
  for (const auto& t : inputs) work.push_back(t.template cast<T>(true));

  std::vector<std::vector<T>> analytic;
  {
    numcore::BasicGraph<T> graph;
    numcore::BasicGraphScope<T> scope(graph);
    const BasicTensor<T> loss = builder(work);
    if (!std::isfinite(static_cast<double>(loss.item()))) {
      throw NumericError("grad_check: builder returned a non-finite value");
    }
    if (!loss.is_leaf()) numcore::backward(graph, loss);
    graph.clear();
  }
  for (const auto& t : work) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(static_cast<std::size_t>(t.numel()), T(0));
    }
    t.zero_grad();
    t.set_requires_grad(false);
  }

  numcore::NoGradGuard no_grad;
  const auto evaluate = [&]() {
    const double v = static_cast<double>(builder(work).item());
    if (!std::isfinite(v)) throw NumericError("grad_check: builder returned a non-finite value");
    return v;
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < work.size(); ++k) {
    auto data = work[k].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const T saved = data[i];
      data[i] = static_cast<T>(saved + eps);
      const double up = evaluate();
      data[i] = static_cast<T>(saved - eps);
      const double down = evaluate();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = static_cast<double>(analytic[k][i]);
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

struct CheckResult {
  std::string name;
  double max_error = 0.0;  // worst over all trials
  double tolerance = 0.0;
  bool passed() const { return max_error < tolerance; }
};

struct SuiteConfig {
  std::uint64_t seed = 1;
  int trials = 10;
  double eps = 1e-3;
  double tolerance = 1e-3;
  double end_to_end_tolerance = 1e-2;
  double end_to_end_eps = 1e-6;  // finite-difference step for the network check
};

/// Every differentiable primitive (conv2d in each stride and padding mode),
/// the four losses, their weighted combination, and a tiny U-Net end to
/// end. Evaluated in double precision on seeded random inputs placed away
/// from non-differentiable points.
std::vector<CheckResult> run_gradcheck_suite(const SuiteConfig& cfg = {});

}  // namespace skydepth::verify
