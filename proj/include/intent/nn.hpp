#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intent/grid.hpp"

namespace intent::nn {

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
};

// Flat, ordered collection of named parameter tensors. Gradients and
// optimizer state are ParameterSets with the same layout.
class ParameterSet {
 public:
  int add(std::string name, std::vector<int> shape);
  NamedTensor& operator[](int i) { return tensors_.at(i); }
  const NamedTensor& operator[](int i) const { return tensors_.at(i); }
  int size() const { return static_cast<int>(tensors_.size()); }
  int find(std::string_view name) const;  // -1 when absent

  ParameterSet zeros_like() const;
  void fill(double v);
  // this += scale * other (same layout)
  void axpy(double scale, const ParameterSet& other);
  bool all_finite() const;
  std::size_t num_values() const;

  std::vector<NamedTensor>& tensors() { return tensors_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }

 private:
  std::vector<NamedTensor> tensors_;
};

using Rng = std::mt19937_64;

// 2-D convolution, stride 1, zero padding.
struct Conv2d {
  int in = 0;
  int out = 0;
  int kernel = 3;
  int pad = 1;
  int weight = -1;  // [out, in, k, k]
  int bias = -1;    // [out]

  static Conv2d create(ParameterSet& params, const std::string& name, int in, int out, int kernel = 3);
  void init(ParameterSet& params, Rng& rng) const;  // He normal, zero bias
  Tensor3 forward(const ParameterSet& params, const Tensor3& x) const;
  // Accumulates parameter gradients into `grads`, returns dL/dx.
  Tensor3 backward(const ParameterSet& params, const Tensor3& x, const Tensor3& grad_out,
                   ParameterSet& grads) const;
};

// Fully connected layer y = W x + b with W stored [out, in].
struct Linear {
  int in = 0;
  int out = 0;
  int weight = -1;
  int bias = -1;

  static Linear create(ParameterSet& params, const std::string& name, int in, int out);
  void init_he(ParameterSet& params, Rng& rng) const;
  void init_normal(ParameterSet& params, Rng& rng, double stddev, double bias_value) const;
  std::vector<double> forward(const ParameterSet& params, std::span<const double> x) const;
  std::vector<double> backward(const ParameterSet& params, std::span<const double> x, std::span<const double> grad_out,
                               ParameterSet& grads) const;
};

void relu_inplace(std::span<double> x);
// Zeroes grad where the forward output was not positive.
void relu_backward_inplace(std::span<const double> output, std::span<double> grad);

Tensor3 max_pool2(const Tensor3& x);
Tensor3 max_pool2_backward(const Tensor3& x, const Tensor3& grad_out);

std::vector<double> global_average_pool(const Tensor3& x);
Tensor3 global_average_pool_backward(std::span<const double> grad, int channels, int height, int width);

// Inverted dropout mask: entries are 0 or 1/(1-rate).
std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng);

}  // namespace intent::nn
