#include "daept/network.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <limits>

#include "daept/error.hpp"

namespace daept {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Kept strictly inside (0, 1) where the double result would round to 0 or 1.
double sigmoid(double z) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - 0x1.0p-53;
  if (z >= 0.0) return std::min(1.0 / (1.0 + std::exp(-z)), hi);
  const double e = std::exp(z);
  return std::max(e / (1.0 + e), lo);
}

Matrix dense_forward(const Dense& d, const Matrix& x) {
  Matrix z = add_row(matmul(x, d.weights), d.bias);
  switch (d.activation) {
    case Activation::Linear:
      break;
    case Activation::ReLU:
      for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Sigmoid:
      for (double& v : z.values()) v = sigmoid(v);
      break;
  }
  return z;
}

Matrix batchnorm_normalize(const Matrix& x, const Matrix& mu, const Matrix& inv_std) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out(i, j) = (x(i, j) - mu(0, j)) * inv_std(0, j);
    }
  }
  return out;
}

Matrix batchnorm_affine(const BatchNorm& bn, const Matrix& xhat) {
  Matrix out(xhat.rows(), xhat.cols());
  for (std::size_t i = 0; i < xhat.rows(); ++i) {
    for (std::size_t j = 0; j < xhat.cols(); ++j) {
      out(i, j) = bn.gamma(0, j) * xhat(i, j) + bn.beta(0, j);
    }
  }
  return out;
}

Matrix inverse_std(const Matrix& var, double eps) {
  Matrix out(1, var.cols());
  for (std::size_t j = 0; j < var.cols(); ++j) out(0, j) = 1.0 / std::sqrt(var(0, j) + eps);
  return out;
}

const char* layer_name(const Layer& l) {
  return std::visit(overloaded{[](const Dense&) { return "dense"; },
                               [](const Dropout&) { return "dropout"; },
                               [](const BatchNorm&) { return "batchnorm"; }},
                    l.kind);
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Linear:
      return "linear";
    case Activation::ReLU:
      return "relu";
    case Activation::Sigmoid:
      return "sigmoid";
  }
  return "linear";
}

Activation parse_activation(const std::string& s) {
  if (s == "linear") return Activation::Linear;
  if (s == "relu") return Activation::ReLU;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

std::size_t Layer::in_dim() const {
  return std::visit(overloaded{[](const Dense& d) { return d.weights.rows(); },
                               [](const Dropout&) { return std::size_t{0}; },
                               [](const BatchNorm& b) { return b.gamma.cols(); }},
                    kind);
}

std::size_t Layer::out_dim() const {
  return std::visit(overloaded{[](const Dense& d) { return d.weights.cols(); },
                               [](const Dropout&) { return std::size_t{0}; },
                               [](const BatchNorm& b) { return b.gamma.cols(); }},
                    kind);
}

std::vector<Matrix*> Layer::parameters() {
  return std::visit(
      overloaded{[](Dense& d) { return std::vector<Matrix*>{&d.weights, &d.bias}; },
                 [](Dropout&) { return std::vector<Matrix*>{}; },
                 [](BatchNorm& b) { return std::vector<Matrix*>{&b.gamma, &b.beta}; }},
      kind);
}

std::vector<const Matrix*> Layer::parameters() const {
  return std::visit(
      overloaded{
          [](const Dense& d) { return std::vector<const Matrix*>{&d.weights, &d.bias}; },
          [](const Dropout&) { return std::vector<const Matrix*>{}; },
          [](const BatchNorm& b) { return std::vector<const Matrix*>{&b.gamma, &b.beta}; }},
      kind);
}

Matrix glorot_init(RngStream& rng, std::size_t in_dim, std::size_t out_dim) {
  if (in_dim == 0 || out_dim == 0) throw ConfigError("glorot_init: zero dimension");
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  return rand_uniform(rng, in_dim, out_dim, -limit, limit);
}

Layer make_dense(std::size_t in_dim, std::size_t out_dim, Activation act, RngStream& rng) {
  return make_dense(glorot_init(rng, in_dim, out_dim), Matrix(1, out_dim), act);
}

Layer make_dense(Matrix weights, Matrix bias, Activation act) {
  if (bias.rows() != 1 || bias.cols() != weights.cols()) {
    throw ConfigError("dense: bias must be 1 x out");
  }
  return Layer{Dense{std::move(weights), std::move(bias), act}, true};
}

Layer make_dropout(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
  return Layer{Dropout{rate}, true};
}

Layer make_batchnorm(std::size_t features, double epsilon, double momentum) {
  if (features == 0) throw ConfigError("batchnorm: zero features");
  if (!(epsilon > 0.0)) throw ConfigError("batchnorm: epsilon must be positive");
  return Layer{BatchNorm{Matrix(1, features, 1.0), Matrix(1, features, 0.0),
                         Matrix(1, features, 0.0), Matrix(1, features, 1.0), epsilon,
                         momentum},
               true};
}

std::uint64_t Network::next_tag() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

Network::Network(std::size_t input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ == 0) throw ConfigError("network: zero input dimension");
  std::size_t width = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (std::holds_alternative<Dropout>(l.kind)) continue;
    if (l.in_dim() != width) {
      throw ConfigError("network: layer " + std::to_string(i) + " (" + layer_name(l) +
                        ") expects width " + std::to_string(l.in_dim()) + ", receives " +
                        std::to_string(width));
    }
    if (const auto* bn = std::get_if<BatchNorm>(&l.kind)) {
      if (!(bn->epsilon > 0.0)) throw ConfigError("network: batchnorm epsilon must be > 0");
    }
    width = l.out_dim();
  }
}

std::size_t Network::output_dim() const {
  std::size_t width = input_dim_;
  for (const Layer& l : layers_) {
    if (!std::holds_alternative<Dropout>(l.kind)) width = l.out_dim();
  }
  return width;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) {
    for (const Matrix* p : l.parameters()) n += p->size();
  }
  return n;
}

Layer& Network::mutable_layer(std::size_t i) {
  touch();
  return layers_.at(i);
}

bool operator==(const Network& a, const Network& b) {
  return a.input_dim_ == b.input_dim_ && a.layers_ == b.layers_;
}

ForwardResult forward(Network& net, const Matrix& batch, Mode mode, RngStream& rng) {
  if (batch.rows() == 0) throw ConfigError("forward: empty batch");
  if (batch.cols() != net.input_dim()) {
    throw ConfigError("forward: batch has " + std::to_string(batch.cols()) +
                      " columns, network expects " + std::to_string(net.input_dim()));
  }
  if (mode == Mode::Eval) {
    Tape tape{&net, net.state_tag(), Mode::Eval, {}};
    return {infer(net, batch), std::move(tape)};
  }

  net.touch();
  ForwardResult result;
  result.tape.owner = &net;
  result.tape.mode = Mode::Train;
  result.tape.caches.reserve(net.layers().size());

  Matrix x = batch;
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    Layer& layer = net.layers_[li];
    LayerCache cache;
    cache.input = x;
    Matrix y = std::visit(
        overloaded{
            [&](Dense& d) {
              Matrix out = dense_forward(d, x);
              require_finite(out, "dense layer " + std::to_string(li) + " forward");
              return out;
            },
            [&](Dropout& d) {
              if (d.rate == 0.0) {
                cache.mask = Matrix(x.rows(), x.cols(), 1.0);
                return x;
              }
              const double keep = 1.0 - d.rate;
              cache.mask = scale(bernoulli_mask(rng, x.rows(), x.cols(), keep), 1.0 / keep);
              return hadamard(x, cache.mask);
            },
            [&](BatchNorm& bn) {
              const Matrix mu = column_means(x);
              const Matrix var = column_variances(x);
              cache.inv_std = inverse_std(var, bn.epsilon);
              cache.normalized = batchnorm_normalize(x, mu, cache.inv_std);
              for (std::size_t j = 0; j < x.cols(); ++j) {
                bn.running_mean(0, j) =
                    bn.momentum * bn.running_mean(0, j) + (1.0 - bn.momentum) * mu(0, j);
                bn.running_var(0, j) =
                    bn.momentum * bn.running_var(0, j) + (1.0 - bn.momentum) * var(0, j);
              }
              Matrix out = batchnorm_affine(bn, cache.normalized);
              require_finite(out, "batchnorm layer " + std::to_string(li) + " forward");
              return out;
            }},
        layer.kind);
    cache.output = y;
    result.tape.caches.push_back(std::move(cache));
    x = std::move(y);
  }
  result.tape.tag = net.state_tag();
  result.output = std::move(x);
  return result;
}

Matrix infer(const Network& net, const Matrix& batch) {
  if (batch.rows() == 0) throw ConfigError("infer: empty batch");
  if (batch.cols() != net.input_dim()) {
    throw ConfigError("infer: batch has " + std::to_string(batch.cols()) +
                      " columns, network expects " + std::to_string(net.input_dim()));
  }
  Matrix x = batch;
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const Layer& layer = net.layers()[li];
    x = std::visit(overloaded{[&](const Dense& d) { return dense_forward(d, x); },
                              [&](const Dropout&) { return x; },
                              [&](const BatchNorm& bn) {
                                const Matrix inv = inverse_std(bn.running_var, bn.epsilon);
                                return batchnorm_affine(
                                    bn, batchnorm_normalize(x, bn.running_mean, inv));
                              }},
                   layer.kind);
    require_finite(x, std::string(layer_name(layer)) + " layer " + std::to_string(li) +
                          " inference");
  }
  return x;
}

Gradients backward(const Network& net, const Tape& tape, const Matrix& grad_output) {
  if (tape.owner != &net || tape.tag != net.state_tag()) {
    throw ConfigError("backward: tape does not belong to the latest forward on this network");
  }
  if (tape.mode != Mode::Train) throw ConfigError("backward: tape was recorded in Eval mode");
  if (tape.caches.size() != net.layers().size()) throw ConfigError("backward: tape length");

  const Matrix& out = tape.caches.back().output;
  if (grad_output.rows() != out.rows() || grad_output.cols() != out.cols()) {
    throw ConfigError("backward: gradient shape does not match network output");
  }

  Gradients grads;
  grads.layers.resize(net.layers().size());
  Matrix delta = grad_output;

  for (std::size_t li = net.layers().size(); li-- > 0;) {
    const Layer& layer = net.layers()[li];
    const LayerCache& cache = tape.caches[li];
    const bool need_input_grad = li > 0;

    std::visit(
        overloaded{
            [&](const Dense& d) {
              Matrix dz = delta;
              if (d.activation == Activation::ReLU) {
                auto dv = dz.values();
                auto yv = cache.output.values();
                for (std::size_t i = 0; i < dv.size(); ++i) {
                  if (!(yv[i] > 0.0)) dv[i] = 0.0;
                }
              } else if (d.activation == Activation::Sigmoid) {
                auto dv = dz.values();
                auto yv = cache.output.values();
                for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= yv[i] * (1.0 - yv[i]);
              }
              if (layer.trainable) {
                grads.layers[li].push_back(matmul_tn(cache.input, dz));
                grads.layers[li].push_back(column_sums(dz));
              }
              if (need_input_grad) delta = matmul_nt(dz, d.weights);
            },
            [&](const Dropout&) { delta = hadamard(delta, cache.mask); },
            [&](const BatchNorm& bn) {
              const std::size_t n = delta.rows();
              const std::size_t f = delta.cols();
              Matrix dgamma(1, f), dbeta(1, f), sum_dxhat(1, f), sum_dxhat_xhat(1, f);
              Matrix dxhat(n, f);
              for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < f; ++j) {
                  const double g = delta(i, j);
                  const double xh = cache.normalized(i, j);
                  dgamma(0, j) += g * xh;
                  dbeta(0, j) += g;
                  const double dxh = g * bn.gamma(0, j);
                  dxhat(i, j) = dxh;
                  sum_dxhat(0, j) += dxh;
                  sum_dxhat_xhat(0, j) += dxh * xh;
                }
              }
              if (layer.trainable) {
                grads.layers[li].push_back(std::move(dgamma));
                grads.layers[li].push_back(std::move(dbeta));
              }
              if (need_input_grad) {
                const double nn = static_cast<double>(n);
                Matrix dx(n, f);
                for (std::size_t i = 0; i < n; ++i) {
                  for (std::size_t j = 0; j < f; ++j) {
                    dx(i, j) = cache.inv_std(0, j) / nn *
                               (nn * dxhat(i, j) - sum_dxhat(0, j) -
                                cache.normalized(i, j) * sum_dxhat_xhat(0, j));
                  }
                }
                delta = std::move(dx);
              }
            }},
        layer.kind);
  }
  return grads;
}

}  // namespace daept
