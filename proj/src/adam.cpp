#include "daept/adam.hpp"

#include <cmath>
#include <string>

#include "daept/error.hpp"

namespace daept {

void AdamState::step(Network& net, const Gradients& grads) {
  if (grads.layers.size() != net.layers().size()) {
    throw ConfigError("adam: gradient set does not match network layer count");
  }
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const Layer& layer = net.layer(li);
    const std::size_t expected = layer.trainable ? layer.parameters().size() : 0;
    if (grads.layers[li].size() != expected) {
      throw ConfigError("adam: layer " + std::to_string(li) +
                        " gradient count does not match its trainable parameters");
    }
  }

  if (t_ == 0) {
    m_.assign(grads.layers.size(), {});
    v_.assign(grads.layers.size(), {});
    for (std::size_t li = 0; li < grads.layers.size(); ++li) {
      for (const Matrix& g : grads.layers[li]) {
        m_[li].emplace_back(g.rows(), g.cols());
        v_[li].emplace_back(g.rows(), g.cols());
      }
    }
  } else {
    bool same = m_.size() == grads.layers.size();
    for (std::size_t li = 0; same && li < grads.layers.size(); ++li) {
      same = m_[li].size() == grads.layers[li].size();
      for (std::size_t k = 0; same && k < m_[li].size(); ++k) {
        same = m_[li][k].rows() == grads.layers[li][k].rows() &&
               m_[li][k].cols() == grads.layers[li][k].cols();
      }
    }
    if (!same) throw ConfigError("adam: parameter shapes changed between steps");
  }

  ++t_;
  const AdamConfig& c = config_;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));

  for (std::size_t li = 0; li < grads.layers.size(); ++li) {
    if (grads.layers[li].empty()) continue;
    auto params = net.mutable_layer(li).parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k]->values();
      auto g = grads.layers[li][k].values();
      if (p.size() != g.size()) throw ConfigError("adam: gradient/parameter size mismatch");
      auto m = m_[li][k].values();
      auto v = v_[li][k].values();
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
      }
    }
  }
}

}  // namespace daept
