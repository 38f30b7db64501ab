#include "ltrajdiff/nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace ltrajdiff::nn {

ParamRef ParameterSet::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (find(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  names_.push_back(name);
  values_.push_back(Matrix::Zero(rows, cols));
  return ParamRef{static_cast<int>(values_.size() - 1)};
}

std::optional<ParamRef> ParameterSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return ParamRef{static_cast<int>(i)};
  }
  return std::nullopt;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

std::size_t ParameterSet::scalar_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::string_view(names_[i]).starts_with(prefix)) n += static_cast<std::size_t>(values_[i].size());
  }
  return n;
}

GradientBuffer::GradientBuffer(const ParameterSet& params) {
  grads_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads_.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
  }
}

void GradientBuffer::set_zero() {
  for (auto& g : grads_) g.setZero();
}

void GradientBuffer::scale(double s) {
  for (auto& g : grads_) g *= s;
}

GradientBuffer& GradientBuffer::operator+=(const GradientBuffer& other) {
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
  return *this;
}

double GradientBuffer::squared_norm() const {
  double s = 0.0;
  for (const auto& g : grads_) s += g.squaredNorm();
  return s;
}

double GradientBuffer::squared_norm(const ParameterSet& params, std::string_view prefix) const {
  double s = 0.0;
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (std::string_view(params.name(i)).starts_with(prefix)) s += grads_[i].squaredNorm();
  }
  return s;
}

Var Tape::push(Matrix value, bool needs_grad, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = record_ && needs_grad;
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

const Matrix& Tape::val(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.external ? *n.external : n.value;
}

const Matrix& Tape::value(Var v) const { return val(v.id); }

const Matrix& Tape::grad(Var v) const {
  static const Matrix kEmpty;
  if (static_cast<std::size_t>(v.id) >= grads_.size()) return kEmpty;
  return grads_[static_cast<std::size_t>(v.id)];
}

Matrix& Tape::grad_mut(int id) {
  Matrix& g = grads_[static_cast<std::size_t>(id)];
  if (g.size() == 0) {
    const Matrix& v = val(id);
    g = Matrix::Zero(v.rows(), v.cols());
  }
  return g;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Matrix value) { return push(std::move(value), true, nullptr); }

Var Tape::parameter(const ParameterSet& params, ParamRef ref) {
  if (auto it = param_nodes_.find(ref.index); it != param_nodes_.end()) return Var{it->second};
  Node n;
  n.external = &params.value(ref);
  n.param_index = ref.index;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(ref.index, id);
  return Var{id};
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double softplus_scalar(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = val(a.id);
  const Matrix& B = val(b.id);
  if (A.cols() != B.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Matrix out(A.rows(), B.cols());
  out.noalias() = A * B;
  const int ia = a.id, ib = b.id;
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ia)) t.grad_mut(ia).noalias() += g * t.val(ib).transpose();
    if (t.needs(ib)) t.grad_mut(ib).noalias() += t.val(ia).transpose() * g;
  });
}

Var Tape::linear(Var x, Var weight, Var bias) {
  const Matrix& X = val(x.id);
  const Matrix& W = val(weight.id);
  const Matrix& b = val(bias.id);
  if (X.cols() != W.rows() || b.rows() != 1 || b.cols() != W.cols()) {
    throw std::invalid_argument("linear: shape mismatch (input " + std::to_string(X.cols()) + " vs weight " +
                                std::to_string(W.rows()) + "x" + std::to_string(W.cols()) + ")");
  }
  Matrix out(X.rows(), W.cols());
  out.noalias() = X * W;
  out.rowwise() += b.row(0);
  const int ix = x.id, iw = weight.id, ibias = bias.id;
  return push(std::move(out), needs(ix) || needs(iw) || needs(ibias), [ix, iw, ibias](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ix)) t.grad_mut(ix).noalias() += g * t.val(iw).transpose();
    if (t.needs(iw)) t.grad_mut(iw).noalias() += t.val(ix).transpose() * g;
    if (t.needs(ibias)) t.grad_mut(ibias).row(0) += g.colwise().sum();
  });
}

Var Tape::add(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "add");
  Matrix out = val(a.id) + val(b.id);
  const int ia = a.id, ib = b.id;
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib](Tape& t, int self) {
    if (t.needs(ia)) t.grad_mut(ia) += t.grad_of(self);
    if (t.needs(ib)) t.grad_mut(ib) += t.grad_of(self);
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "sub");
  Matrix out = val(a.id) - val(b.id);
  const int ia = a.id, ib = b.id;
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib](Tape& t, int self) {
    if (t.needs(ia)) t.grad_mut(ia) += t.grad_of(self);
    if (t.needs(ib)) t.grad_mut(ib) -= t.grad_of(self);
  });
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "mul");
  Matrix out = val(a.id).cwiseProduct(val(b.id));
  const int ia = a.id, ib = b.id;
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ia)) t.grad_mut(ia) += g.cwiseProduct(t.val(ib));
    if (t.needs(ib)) t.grad_mut(ib) += g.cwiseProduct(t.val(ia));
  });
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& A = val(a.id);
  const Matrix& R = val(row.id);
  if (R.rows() != 1 || R.cols() != A.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Matrix out = A;
  out.rowwise() += R.row(0);
  const int ia = a.id, ir = row.id;
  return push(std::move(out), needs(ia) || needs(ir), [ia, ir](Tape& t, int self) {
    if (t.needs(ia)) t.grad_mut(ia) += t.grad_of(self);
    if (t.needs(ir)) t.grad_mut(ir).row(0) += t.grad_of(self).colwise().sum();
  });
}

Var Tape::scale(Var a, double s) {
  Matrix out = val(a.id) * s;
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia, s](Tape& t, int self) { t.grad_mut(ia) += t.grad_of(self) * s; });
}

Var Tape::gelu(Var a) {
  const Matrix& X = val(a.id);
  Matrix out = X.unaryExpr([](double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  });
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
    const Matrix& X = t.val(ia);
    const Matrix d = X.unaryExpr([](double x) {
      const double u = kGeluC * (x + kGeluA * x * x * x);
      const double th = std::tanh(u);
      const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
      return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
    });
    t.grad_mut(ia) += t.grad_of(self).cwiseProduct(d);
  });
}

Var Tape::softplus(Var a) {
  Matrix out = val(a.id).unaryExpr([](double x) { return softplus_scalar(x); });
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
    t.grad_mut(ia) += t.grad_of(self).cwiseProduct(t.val(ia).unaryExpr([](double x) { return sigmoid_scalar(x); }));
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = val(a.id).unaryExpr([](double x) { return sigmoid_scalar(x); });
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
    const Matrix& y = t.val(self);
    t.grad_mut(ia) += t.grad_of(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
  });
}

Var Tape::tanh(Var a) {
  Matrix out = val(a.id).array().tanh().matrix();
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
    const Matrix& y = t.val(self);
    t.grad_mut(ia) += t.grad_of(self).cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Matrix& X = val(x.id);
  const Matrix& G = val(gain.id);
  const Matrix& B = val(bias.id);
  if (G.rows() != 1 || G.cols() != X.cols() || B.rows() != 1 || B.cols() != X.cols()) {
    throw std::invalid_argument("layer_norm: parameter shape mismatch");
  }
  const Eigen::Index n = X.rows(), d = X.cols();
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = X.row(r).mean();
    const double var = (X.row(r).array() - mean).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (X.row(r).array() - mean) * inv_std[r];
  }
  Matrix out = (xhat.array().rowwise() * G.row(0).array()).matrix();
  out.rowwise() += B.row(0);
  const int ix = x.id, ig = gain.id, ib = bias.id;
  return push(std::move(out), needs(ix) || needs(ig) || needs(ib),
              [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, int self) {
                const Matrix& g = t.grad_of(self);
                if (t.needs(ig)) t.grad_mut(ig).row(0) += g.cwiseProduct(xhat).colwise().sum();
                if (t.needs(ib)) t.grad_mut(ib).row(0) += g.colwise().sum();
                if (t.needs(ix)) {
                  const Matrix dxhat = (g.array().rowwise() * t.val(ig).row(0).array()).matrix();
                  const double inv_d = 1.0 / static_cast<double>(g.cols());
                  Matrix& gx = t.grad_mut(ix);
                  for (Eigen::Index r = 0; r < g.rows(); ++r) {
                    const double s1 = dxhat.row(r).sum();
                    const double s2 = dxhat.row(r).dot(xhat.row(r));
                    gx.row(r).array() +=
                        inv_std[r] * (dxhat.row(r).array() - inv_d * s1 - xhat.row(r).array() * (inv_d * s2));
                  }
                }
              });
}

Var Tape::attention(Var q, Var k, Var v, int heads) {
  const Matrix& Q = val(q.id);
  const Matrix& K = val(k.id);
  const Matrix& V = val(v.id);
  if (Q.cols() != K.cols() || K.cols() != V.cols() || K.rows() != V.rows() || heads < 1 ||
      Q.cols() % heads != 0) {
    throw std::invalid_argument("attention: shape mismatch");
  }
  const Eigen::Index tq = Q.rows(), tk = K.rows();
  const Eigen::Index dh = Q.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  Matrix out(tq, Q.cols());
  for (int h = 0; h < heads; ++h) {
    Matrix s(tq, tk);
    s.noalias() = Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose();
    s *= scale;
    for (Eigen::Index r = 0; r < tq; ++r) {
      const double m = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - m).exp();
      s.row(r) /= s.row(r).sum();
    }
    out.middleCols(h * dh, dh).noalias() = s * V.middleCols(h * dh, dh);
    probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  const int iq = q.id, ik = k.id, iv = v.id;
  return push(std::move(out), needs(iq) || needs(ik) || needs(iv),
              [iq, ik, iv, heads, dh, scale, probs = std::move(probs)](Tape& t, int self) {
                const Matrix& g = t.grad_of(self);
                const Matrix& Q = t.val(iq);
                const Matrix& K = t.val(ik);
                const Matrix& V = t.val(iv);
                for (int h = 0; h < heads; ++h) {
                  const Matrix& P = probs[static_cast<std::size_t>(h)];
                  const auto gh = g.middleCols(h * dh, dh);
                  if (t.needs(iv)) t.grad_mut(iv).middleCols(h * dh, dh).noalias() += P.transpose() * gh;
                  if (!t.needs(iq) && !t.needs(ik)) continue;
                  Matrix dp(P.rows(), P.cols());
                  dp.noalias() = gh * V.middleCols(h * dh, dh).transpose();
                  for (Eigen::Index r = 0; r < P.rows(); ++r) {
                    const double dot = dp.row(r).dot(P.row(r));
                    dp.row(r) = P.row(r).cwiseProduct((dp.row(r).array() - dot).matrix());
                  }
                  dp *= scale;
                  if (t.needs(iq)) t.grad_mut(iq).middleCols(h * dh, dh).noalias() += dp * K.middleCols(h * dh, dh);
                  if (t.needs(ik)) {
                    t.grad_mut(ik).middleCols(h * dh, dh).noalias() += dp.transpose() * Q.middleCols(h * dh, dh);
                  }
                }
              });
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& A = val(a.id);
  const Matrix& B = val(b.id);
  if (A.rows() != B.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  Matrix out(A.rows(), A.cols() + B.cols());
  out.leftCols(A.cols()) = A;
  out.rightCols(B.cols()) = B;
  const int ia = a.id, ib = b.id;
  const Eigen::Index ca = A.cols(), cb = B.cols();
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib, ca, cb](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(ia)) t.grad_mut(ia) += g.leftCols(ca);
    if (t.needs(ib)) t.grad_mut(ib) += g.rightCols(cb);
  });
}

Var Tape::slice_cols(Var a, int begin, int count) {
  const Matrix& A = val(a.id);
  if (begin < 0 || count < 0 || begin + count > A.cols()) throw std::invalid_argument("slice_cols: out of range");
  Matrix out = A.middleCols(begin, count);
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia, begin, count](Tape& t, int self) {
    t.grad_mut(ia).middleCols(begin, count) += t.grad_of(self);
  });
}

Var Tape::gather_rows(Var a, std::vector<int> rows) {
  const Matrix& A = val(a.id);
  Matrix out(static_cast<Eigen::Index>(rows.size()), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= A.rows()) throw std::invalid_argument("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = A.row(rows[i]);
  }
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia, rows = std::move(rows)](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    Matrix& ga = t.grad_mut(ia);
    for (std::size_t i = 0; i < rows.size(); ++i) ga.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty");
  const Eigen::Index cols = val(rows.front().id).cols();
  Eigen::Index total = 0;
  bool any = false;
  for (const auto& r : rows) {
    if (val(r.id).cols() != cols) throw std::invalid_argument("stack_rows: column mismatch");
    total += val(r.id).rows();
    any = any || needs(r.id);
  }
  Matrix out(total, cols);
  std::vector<int> ids;
  ids.reserve(rows.size());
  Eigen::Index at = 0;
  for (const auto& r : rows) {
    const Matrix& m = val(r.id);
    out.middleRows(at, m.rows()) = m;
    at += m.rows();
    ids.push_back(r.id);
  }
  return push(std::move(out), any, [ids = std::move(ids)](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    Eigen::Index at = 0;
    for (int id : ids) {
      const Eigen::Index n = t.val(id).rows();
      if (t.needs(id)) t.grad_mut(id) += g.middleRows(at, n);
      at += n;
    }
  });
}

Var Tape::mean_rows(Var a) {
  const Matrix& A = val(a.id);
  if (A.rows() == 0) throw std::invalid_argument("mean_rows: empty input");
  Matrix out = A.colwise().mean();
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
    Matrix& ga = t.grad_mut(ia);
    const double inv = 1.0 / static_cast<double>(ga.rows());
    ga.rowwise() += t.grad_of(self).row(0) * inv;
  });
}

Var Tape::broadcast_rows(Var row, int rows) {
  const Matrix& R = val(row.id);
  if (R.rows() != 1) throw std::invalid_argument("broadcast_rows: expected a single row");
  Matrix out = R.replicate(rows, 1);
  const int ir = row.id;
  return push(std::move(out), needs(ir), [ir](Tape& t, int self) {
    t.grad_mut(ir).row(0) += t.grad_of(self).colwise().sum();
  });
}

Var Tape::mse(Var a, Var target) {
  check_same_shape(val(a.id), val(target.id), "mse");
  const Matrix diff = val(a.id) - val(target.id);
  const double n = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  const int ia = a.id, it = target.id;
  return push(std::move(out), needs(ia) || needs(it), [ia, it, n](Tape& t, int self) {
    const double g = t.grad_of(self)(0, 0);
    const Matrix d = (t.val(ia) - t.val(it)) * (2.0 * g / n);
    if (t.needs(ia)) t.grad_mut(ia) += d;
    if (t.needs(it)) t.grad_mut(it) -= d;
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = val(a.id).sum();
  const int ia = a.id;
  return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
    t.grad_mut(ia).array() += t.grad_of(self)(0, 0);
  });
}

void Tape::backward(Var loss, GradientBuffer* param_grads) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  const Matrix& l = val(loss.id);
  if (l.rows() != 1 || l.cols() != 1) throw std::invalid_argument("backward: loss must be 1x1");
  grads_.assign(nodes_.size(), Matrix());
  if (!needs(loss.id)) return;
  grad_mut(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || grads_[static_cast<std::size_t>(id)].size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param_index >= 0 && param_grads) {
      (*param_grads)[static_cast<std::size_t>(n.param_index)] += grads_[static_cast<std::size_t>(id)];
    }
  }
}

}  // namespace ltrajdiff::nn
