#pragma once

#include <span>
#include <string>
#include <vector>

#include "ltrajdiff/nn/tape.hpp"
#include "ltrajdiff/rng.hpp"

namespace ltrajdiff::nn {

// Weights ~ N(0, 1/fan_in), biases zero.
struct Linear {
  ParamRef weight;  // in x out
  ParamRef bias;    // 1 x out
  int in = 0;
  int out = 0;

  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, int in_dim, int out_dim);
  void init(ParameterSet& params, Rng& rng) const;
  Var operator()(Graph& g, Var x) const { return g.tape.linear(x, g.p(weight), g.p(bias)); }
};

struct LayerNorm {
  ParamRef gain;
  ParamRef bias;

  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& name, int dim);
  void init(ParameterSet& params) const;
  Var operator()(Graph& g, Var x) const { return g.tape.layer_norm(x, g.p(gain), g.p(bias)); }
};

struct MultiHeadAttention {
  Linear query, key, value, output;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet& params, const std::string& name, int dim, int num_heads);
  void init(ParameterSet& params, Rng& rng) const;
  Var operator()(Graph& g, Var x_query, Var x_memory) const;
  // Attention against precomputed key/value projections of the memory.
  Var attend(Graph& g, Var x_query, Var keys, Var values) const;
};

struct FeedForward {
  Linear hidden, output;

  FeedForward() = default;
  FeedForward(ParameterSet& params, const std::string& name, int dim, int hidden_dim);
  void init(ParameterSet& params, Rng& rng) const;
  Var operator()(Graph& g, Var x) const { return output(g, g.tape.gelu(hidden(g, x))); }
};

// Fixed sinusoidal encoding for each listed position: rows = positions.size().
Matrix sinusoidal_encoding(std::span<const int> positions, int dim);
Matrix sinusoidal_encoding(int length, int dim);

}  // namespace ltrajdiff::nn
