#pragma once

#include <memory>
#include <string>

#include "ltrajdiff/nn/tape.hpp"

namespace ltrajdiff {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(nn::ParameterSet& params, const nn::GradientBuffer& grads, double lr) = 0;
  virtual std::string name() const = 0;
};

class Adam : public Optimizer {
 public:
  explicit Adam(const nn::ParameterSet& params, AdamConfig config = {});
  void step(nn::ParameterSet& params, const nn::GradientBuffer& grads, double lr) override;
  std::string name() const override { return "adam"; }
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  nn::GradientBuffer m_;
  nn::GradientBuffer v_;
  long t_ = 0;
};

class Sgd : public Optimizer {
 public:
  void step(nn::ParameterSet& params, const nn::GradientBuffer& grads, double lr) override;
  std::string name() const override { return "sgd"; }
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, const nn::ParameterSet& params);

}  // namespace ltrajdiff
