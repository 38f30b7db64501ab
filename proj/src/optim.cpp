#include "ltrajdiff/optim.hpp"

#include <cmath>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

Adam::Adam(const nn::ParameterSet& params, AdamConfig config) : config_(config), m_(params), v_(params) {}

void Adam::step(nn::ParameterSet& params, const nn::GradientBuffer& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = m_[i];
    auto& v = v_[i];
    const auto& g = grads[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    params.value(i).array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.eps);
  }
}

void Sgd::step(nn::ParameterSet& params, const nn::GradientBuffer& grads, double lr) {
  for (std::size_t i = 0; i < params.size(); ++i) params.value(i) -= lr * grads[i];
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, const nn::ParameterSet& params) {
  if (name == "adam") return std::make_unique<Adam>(params);
  if (name == "sgd") return std::make_unique<Sgd>();
  throw ConfigError("train.optimizer: unknown optimizer '" + name + "' (expected adam or sgd)");
}

}  // namespace ltrajdiff
