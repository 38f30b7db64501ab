#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace ltrajdiff::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ParamRef {
  int index = -1;
  bool valid() const { return index >= 0; }
};

// Named, ordered collection of parameter tensors. Insertion order is the
// serialization order.
class ParameterSet {
 public:
  ParamRef add(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  std::size_t size() const { return values_.size(); }
  Matrix& value(ParamRef r) { return values_[static_cast<std::size_t>(r.index)]; }
  const Matrix& value(ParamRef r) const { return values_[static_cast<std::size_t>(r.index)]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::optional<ParamRef> find(std::string_view name) const;

  std::size_t scalar_count() const;
  std::size_t scalar_count(std::string_view prefix) const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

class GradientBuffer {
 public:
  GradientBuffer() = default;
  explicit GradientBuffer(const ParameterSet& params);

  std::size_t size() const { return grads_.size(); }
  Matrix& operator[](std::size_t i) { return grads_[i]; }
  const Matrix& operator[](std::size_t i) const { return grads_[i]; }

  void set_zero();
  void scale(double s);
  GradientBuffer& operator+=(const GradientBuffer& other);
  double squared_norm() const;
  // Sum of squared entries over parameters whose name starts with prefix.
  double squared_norm(const ParameterSet& params, std::string_view prefix) const;

 private:
  std::vector<Matrix> grads_;
};

struct Var {
  int id = -1;
};

// Reverse-mode autodiff over dense row-major matrices. One tape per sample;
// ops append nodes, backward() walks them in reverse. A tape built with
// record=false keeps values only (inference).
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool record) : record_(record) {}

  Var constant(Matrix value);
  // Input that receives a gradient (readable through grad() after backward).
  Var leaf(Matrix value);
  // Memoized: the same parameter maps to one node per tape.
  Var parameter(const ParameterSet& params, ParamRef ref);

  const Matrix& value(Var v) const;
  // Valid after backward(); empty matrix when no gradient reached the node.
  const Matrix& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
  std::size_t node_count() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var linear(Var x, Var weight, Var bias);  // x * W + b (bias broadcast over rows)
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                    // elementwise
  Var add_row(Var a, Var row);              // a + 1 * row
  Var scale(Var a, double s);
  Var gelu(Var a);
  Var softplus(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  // Multi-head scaled dot-product attention; q is Tq x D, k and v are Tk x D.
  Var attention(Var q, Var k, Var v, int heads);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, int begin, int count);
  Var gather_rows(Var a, std::vector<int> rows);
  Var stack_rows(const std::vector<Var>& rows);
  Var mean_rows(Var a);                     // 1 x cols
  Var broadcast_rows(Var row, int rows);
  Var mse(Var a, Var target);               // 1 x 1 mean of squared differences
  Var sum(Var a);                           // 1 x 1

  // Seeds d(loss)/d(loss) = 1 and accumulates parameter gradients into
  // param_grads (when given).
  void backward(Var loss, GradientBuffer* param_grads = nullptr);

 private:
  using BackwardFn = std::function<void(Tape&, int)>;
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    int param_index = -1;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var push(Matrix value, bool needs_grad, BackwardFn fn);
  bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  const Matrix& val(int id) const;
  Matrix& grad_mut(int id);
  const Matrix& grad_of(int id) const { return grads_[static_cast<std::size_t>(id)]; }
  bool active(bool needs_grad) const { return record_ && needs_grad; }

  bool record_ = true;
  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  std::unordered_map<int, int> param_nodes_;
};

// Tape plus the parameter set it reads from.
struct Graph {
  Tape& tape;
  const ParameterSet& params;

  Var p(ParamRef ref) { return tape.parameter(params, ref); }
};

}  // namespace ltrajdiff::nn
