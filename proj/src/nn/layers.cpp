#include "ltrajdiff/nn/layers.hpp"

#include <cmath>
#include <numeric>

namespace ltrajdiff::nn {

Linear::Linear(ParameterSet& params, const std::string& name, int in_dim, int out_dim)
    : weight(params.add(name + ".weight", in_dim, out_dim)),
      bias(params.add(name + ".bias", 1, out_dim)),
      in(in_dim),
      out(out_dim) {}

void Linear::init(ParameterSet& params, Rng& rng) const {
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  Matrix& w = params.value(weight);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
  params.value(bias).setZero();
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& name, int dim)
    : gain(params.add(name + ".gain", 1, dim)), bias(params.add(name + ".bias", 1, dim)) {}

void LayerNorm::init(ParameterSet& params) const {
  params.value(gain).setOnes();
  params.value(bias).setZero();
}

MultiHeadAttention::MultiHeadAttention(ParameterSet& params, const std::string& name, int dim, int num_heads)
    : query(params, name + ".query", dim, dim),
      key(params, name + ".key", dim, dim),
      value(params, name + ".value", dim, dim),
      output(params, name + ".output", dim, dim),
      heads(num_heads) {}

void MultiHeadAttention::init(ParameterSet& params, Rng& rng) const {
  query.init(params, rng);
  key.init(params, rng);
  value.init(params, rng);
  output.init(params, rng);
}

Var MultiHeadAttention::operator()(Graph& g, Var x_query, Var x_memory) const {
  return attend(g, x_query, key(g, x_memory), value(g, x_memory));
}

Var MultiHeadAttention::attend(Graph& g, Var x_query, Var keys, Var values) const {
  return output(g, g.tape.attention(query(g, x_query), keys, values, heads));
}

FeedForward::FeedForward(ParameterSet& params, const std::string& name, int dim, int hidden_dim)
    : hidden(params, name + ".hidden", dim, hidden_dim), output(params, name + ".output", hidden_dim, dim) {}

void FeedForward::init(ParameterSet& params, Rng& rng) const {
  hidden.init(params, rng);
  output.init(params, rng);
}

Matrix sinusoidal_encoding(std::span<const int> positions, int dim) {
  Matrix pe(static_cast<Eigen::Index>(positions.size()), dim);
  for (std::size_t r = 0; r < positions.size(); ++r) {
    const double pos = positions[r];
    for (int i = 0; i < dim; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
      pe(static_cast<Eigen::Index>(r), i) = std::sin(pos * freq);
      if (i + 1 < dim) pe(static_cast<Eigen::Index>(r), i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

Matrix sinusoidal_encoding(int length, int dim) {
  std::vector<int> pos(static_cast<std::size_t>(length));
  std::iota(pos.begin(), pos.end(), 0);
  return sinusoidal_encoding(pos, dim);
}

}  // namespace ltrajdiff::nn
