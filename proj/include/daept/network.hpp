#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "daept/matrix.hpp"
#include "daept/rng.hpp"

namespace daept {

enum class Activation { Linear, ReLU, Sigmoid };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

/// Fully connected layer: y = act(x W + b), W is (in x out), b is (1 x out).
struct Dense {
  Matrix weights;
  Matrix bias;
  Activation activation = Activation::Linear;

  friend bool operator==(const Dense&, const Dense&) = default;
};

/// Inverted dropout: kept units are scaled by 1 / (1 - rate) at train time,
/// so evaluation is the identity.
struct Dropout {
  double rate = 0.0;

  friend bool operator==(const Dropout&, const Dropout&) = default;
};

struct BatchNorm {
  Matrix gamma;
  Matrix beta;
  Matrix running_mean;
  Matrix running_var;
  double epsilon = 1e-5;
  double momentum = 0.99;

  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

struct Layer {
  std::variant<Dense, Dropout, BatchNorm> kind;
  bool trainable = true;

  // Width of the signal entering / leaving the layer. Dropout reports 0 for
  // both since it passes its input width through.
  std::size_t in_dim() const;
  std::size_t out_dim() const;

  // Parameters in a fixed order: Dense {W, b}, BatchNorm {gamma, beta}.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Uniform on +-sqrt(6 / (in + out)).
Matrix glorot_init(RngStream& rng, std::size_t in_dim, std::size_t out_dim);

Layer make_dense(std::size_t in_dim, std::size_t out_dim, Activation act, RngStream& rng);
Layer make_dense(Matrix weights, Matrix bias, Activation act);
Layer make_dropout(double rate);
Layer make_batchnorm(std::size_t features, double epsilon = 1e-5, double momentum = 0.99);

enum class Mode { Train, Eval };
struct ForwardResult;
class Network;
ForwardResult forward(Network& net, const Matrix& batch, Mode mode, RngStream& rng);

class Network {
 public:
  Network() = default;
  // Throws ConfigError unless consecutive layer widths chain.
  Network(std::size_t input_dim, std::vector<Layer> layers);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  // Mutable access invalidates outstanding tapes.
  Layer& mutable_layer(std::size_t i);

  // Changes whenever parameters or running statistics may have changed.
  std::uint64_t state_tag() const { return state_tag_; }
  void touch() { state_tag_ = next_tag(); }

  friend bool operator==(const Network& a, const Network& b);
  friend ForwardResult forward(Network&, const Matrix&, Mode, RngStream&);

 private:
  static std::uint64_t next_tag();

  std::size_t input_dim_ = 0;
  std::vector<Layer> layers_;
  std::uint64_t state_tag_ = next_tag();
};

struct LayerCache {
  Matrix input;
  Matrix output;
  Matrix mask;        // dropout: scaled keep mask
  Matrix normalized;  // batchnorm: x_hat
  Matrix inv_std;     // batchnorm: 1 / sqrt(var + eps), 1 x features
};

struct Tape {
  const Network* owner = nullptr;
  std::uint64_t tag = 0;
  Mode mode = Mode::Eval;
  std::vector<LayerCache> caches;
};

struct ForwardResult {
  Matrix output;
  Tape tape;
};

/// Runs the batch (samples as rows) through the network. Train mode samples
/// dropout masks from `rng`, normalises with batch statistics and updates the
/// batchnorm running statistics; Eval mode touches neither.
ForwardResult forward(Network& net, const Matrix& batch, Mode mode, RngStream& rng);

/// Eval-mode forward pass on a const network.
Matrix infer(const Network& net, const Matrix& batch);

/// Parameter gradients per layer, in Layer::parameters() order. Layers that
/// are frozen or have no parameters get an empty entry.
struct Gradients {
  std::vector<std::vector<Matrix>> layers;
};

/// Backpropagates `grad_output` (d loss / d network output) through the tape
/// of the immediately preceding Train-mode forward on `net`.
Gradients backward(const Network& net, const Tape& tape, const Matrix& grad_output);

}  // namespace daept
