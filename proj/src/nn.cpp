#include "intent/nn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "intent/error.hpp"

namespace intent::nn {

int ParameterSet::add(std::string name, std::vector<int> shape) {
  if (find(name) >= 0) throw ConfigError("duplicate parameter " + name);
  const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                 [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
  tensors_.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  return size() - 1;
}

int ParameterSet::find(std::string_view name) const {
  for (int i = 0; i < size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return -1;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out = *this;
  out.fill(0.0);
  return out;
}

void ParameterSet::fill(double v) {
  for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), v);
}

void ParameterSet::axpy(double scale, const ParameterSet& other) {
  for (int i = 0; i < size(); ++i) {
    auto& d = tensors_[i].data;
    const auto& s = other.tensors_.at(i).data;
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += scale * s[j];
  }
}

bool ParameterSet::all_finite() const {
  for (const auto& t : tensors_) {
    for (double v : t.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::size_t ParameterSet::num_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.data.size();
  return n;
}

Conv2d Conv2d::create(ParameterSet& params, const std::string& name, int in, int out, int kernel) {
  Conv2d c;
  c.in = in;
  c.out = out;
  c.kernel = kernel;
  c.pad = kernel / 2;
  c.weight = params.add(name + ".weight", {out, in, kernel, kernel});
  c.bias = params.add(name + ".bias", {out});
  return c;
}

void Conv2d::init(ParameterSet& params, Rng& rng) const {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (in * kernel * kernel)));
  for (double& w : params[weight].data) w = dist(rng);
  std::fill(params[bias].data.begin(), params[bias].data.end(), 0.0);
}

Tensor3 Conv2d::forward(const ParameterSet& params, const Tensor3& x) const {
  if (x.channels() != in) throw InputError("conv input has " + std::to_string(x.channels()) + " channels");
  const int h = x.height();
  const int w = x.width();
  Tensor3 y(out, h, w);
  const auto& wt = params[weight].data;
  const auto& b = params[bias].data;
  for (int o = 0; o < out; ++o) {
    auto yo = y.channel(o);
    std::fill(yo.begin(), yo.end(), b[o]);
    for (int i = 0; i < in; ++i) {
      const auto xi = x.channel(i);
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const double wv = wt[((static_cast<std::size_t>(o) * in + i) * kernel + ky) * kernel + kx];
          const int dy = ky - pad;
          const int dx = kx - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int yy = y0; yy < y1; ++yy) {
            double* yrow = yo.data() + static_cast<std::size_t>(yy) * w;
            const double* xrow = xi.data() + static_cast<std::size_t>(yy + dy) * w + dx;
            for (int xx = x0; xx < x1; ++xx) yrow[xx] += wv * xrow[xx];
          }
        }
      }
    }
  }
  return y;
}

Tensor3 Conv2d::backward(const ParameterSet& params, const Tensor3& x, const Tensor3& grad_out,
                         ParameterSet& grads) const {
  const int h = x.height();
  const int w = x.width();
  Tensor3 gx(in, h, w);
  const auto& wt = params[weight].data;
  auto& gw = grads[weight].data;
  auto& gb = grads[bias].data;
  for (int o = 0; o < out; ++o) {
    const auto go = grad_out.channel(o);
    gb[o] += std::accumulate(go.begin(), go.end(), 0.0);
    for (int i = 0; i < in; ++i) {
      const auto xi = x.channel(i);
      auto gxi = gx.channel(i);
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(o) * in + i) * kernel + ky) * kernel + kx;
          const double wv = wt[widx];
          const int dy = ky - pad;
          const int dx = kx - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          double acc = 0.0;
          for (int yy = y0; yy < y1; ++yy) {
            const double* grow = go.data() + static_cast<std::size_t>(yy) * w;
            const std::size_t off = static_cast<std::size_t>(yy + dy) * w + dx;
            const double* xrow = xi.data() + off;
            double* gxrow = gxi.data() + off;
            for (int xx = x0; xx < x1; ++xx) {
              acc += grow[xx] * xrow[xx];
              gxrow[xx] += wv * grow[xx];
            }
          }
          gw[widx] += acc;
        }
      }
    }
  }
  return gx;
}

Linear Linear::create(ParameterSet& params, const std::string& name, int in, int out) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = params.add(name + ".weight", {out, in});
  l.bias = params.add(name + ".bias", {out});
  return l;
}

void Linear::init_he(ParameterSet& params, Rng& rng) const {
  init_normal(params, rng, std::sqrt(2.0 / in), 0.0);
}

void Linear::init_normal(ParameterSet& params, Rng& rng, double stddev, double bias_value) const {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& w : params[weight].data) w = dist(rng);
  std::fill(params[bias].data.begin(), params[bias].data.end(), bias_value);
}

std::vector<double> Linear::forward(const ParameterSet& params, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != in) {
    throw InputError("linear input has " + std::to_string(x.size()) + " values, expected " + std::to_string(in));
  }
  const auto& wt = params[weight].data;
  std::vector<double> y(params[bias].data);
  for (int o = 0; o < out; ++o) {
    const double* row = wt.data() + static_cast<std::size_t>(o) * in;
    y[o] += std::inner_product(row, row + in, x.begin(), 0.0);
  }
  return y;
}

std::vector<double> Linear::backward(const ParameterSet& params, std::span<const double> x,
                                     std::span<const double> grad_out, ParameterSet& grads) const {
  const auto& wt = params[weight].data;
  auto& gw = grads[weight].data;
  auto& gb = grads[bias].data;
  std::vector<double> gx(in, 0.0);
  for (int o = 0; o < out; ++o) {
    const double g = grad_out[o];
    if (g == 0.0) continue;
    gb[o] += g;
    const double* row = wt.data() + static_cast<std::size_t>(o) * in;
    double* grow = gw.data() + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      grow[i] += g * x[i];
      gx[i] += g * row[i];
    }
  }
  return gx;
}

void relu_inplace(std::span<double> x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(std::span<const double> output, std::span<double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(output[i] > 0.0)) grad[i] = 0.0;
  }
}

Tensor3 max_pool2(const Tensor3& x) {
  const int h = x.height() / 2;
  const int w = x.width() / 2;
  Tensor3 y(x.channels(), h, w);
  for (int c = 0; c < x.channels(); ++c) {
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        y.at(c, yy, xx) = std::max({x.at(c, 2 * yy, 2 * xx), x.at(c, 2 * yy, 2 * xx + 1),
                                    x.at(c, 2 * yy + 1, 2 * xx), x.at(c, 2 * yy + 1, 2 * xx + 1)});
      }
    }
  }
  return y;
}

Tensor3 max_pool2_backward(const Tensor3& x, const Tensor3& grad_out) {
  Tensor3 gx(x.channels(), x.height(), x.width());
  for (int c = 0; c < x.channels(); ++c) {
    for (int yy = 0; yy < grad_out.height(); ++yy) {
      for (int xx = 0; xx < grad_out.width(); ++xx) {
        // first maximum in scan order receives the gradient
        int by = 2 * yy;
        int bx = 2 * xx;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            if (x.at(c, 2 * yy + dy, 2 * xx + dx) > x.at(c, by, bx)) {
              by = 2 * yy + dy;
              bx = 2 * xx + dx;
            }
          }
        }
        gx.at(c, by, bx) += grad_out.at(c, yy, xx);
      }
    }
  }
  return gx;
}

std::vector<double> global_average_pool(const Tensor3& x) {
  std::vector<double> out(x.channels());
  const double n = static_cast<double>(x.plane());
  for (int c = 0; c < x.channels(); ++c) {
    const auto ch = x.channel(c);
    out[c] = std::accumulate(ch.begin(), ch.end(), 0.0) / n;
  }
  return out;
}

Tensor3 global_average_pool_backward(std::span<const double> grad, int channels, int height, int width) {
  Tensor3 g(channels, height, width);
  const double n = static_cast<double>(g.plane());
  for (int c = 0; c < channels; ++c) {
    auto ch = g.channel(c);
    std::fill(ch.begin(), ch.end(), grad[c] / n);
  }
  return g;
}

std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng) {
  std::vector<double> mask(n, 1.0);
  if (rate <= 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (double& m : mask) m = keep(rng) ? scale : 0.0;
  return mask;
}

}  // namespace intent::nn
