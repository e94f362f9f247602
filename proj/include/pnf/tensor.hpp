#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records every primitive applied during one forward pass; Var is a
// handle to a recorded value. backward() walks the tape once in reverse and
// accumulates exact vector-Jacobian products. Parameters live outside the
// tape and receive their gradient in Parameter::grad.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pnf/core/error.hpp"
#include "pnf/core/matrix.hpp"
#include "pnf/core/rng.hpp"

namespace pnf::ad {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;      // false for biases and norm gains
  bool trainable = true;  // false for buffers the optimizer must not touch

  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

enum class Reduce { sum, mean, max };

/// Compressed neighbour lists: targets t read sources
/// index[offset[t] .. offset[t+1]).
struct Csr {
  std::vector<std::size_t> offset{0};
  std::vector<std::size_t> index;

  std::size_t targets() const { return offset.size() - 1; }
  std::span<const std::size_t> of(std::size_t t) const {
    return {index.data() + offset[t], offset[t + 1] - offset[t]};
  }
  void push(std::span<const std::size_t> sources) {
    index.insert(index.end(), sources.begin(), sources.end());
    offset.push_back(index.size());
  }
};

/// Predecessor structure for longest-path finish times.
struct DagIndex {
  std::vector<std::size_t> topo;  // activity indices in topological order
  Csr preds;                      // preds.of(a) = predecessors of a
};

class Tape;

class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Var constant(Matrix v) { return push(std::move(v), false, {}); }
  Var variable(Matrix v) { return push(std::move(v), true, {}); }
  Var param(Parameter& p) {
    Var v = push(p.value, true, {});
    nodes_[v.id_].sink = &p;
    return v;
  }

  /// Record a derived value; it requires a gradient if any parent does.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward fn) {
    bool needs = false;
    for (const auto& p : parents) {
      check_owner(p);
      needs = needs || nodes_[p.id_].needs_grad;
    }
    return push(std::move(value), needs, needs ? std::move(fn) : Backward{});
  }
  Var record(Matrix value, std::span<const Var> parents, Backward fn) {
    bool needs = false;
    for (const auto& p : parents) {
      check_owner(p);
      needs = needs || nodes_[p.id_].needs_grad;
    }
    return push(std::move(value), needs, needs ? std::move(fn) : Backward{});
  }

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() > 0 || nodes_[id].value.size() == 0; }

  /// Gradient of node `id` after backward(); zeros if it received none.
  Matrix grad(std::size_t id) const {
    const auto& n = nodes_[id];
    if (n.grad.size() == n.value.size() && n.grad.size() > 0) return n.grad;
    return Matrix::Zero(n.value.rows(), n.value.cols());
  }
  Matrix grad(const Var& v) const { return grad(v.id_); }

  /// Accumulator for node `id`, allocated as zeros on first use.
  Matrix& acc(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols())
      n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }
  const Matrix& upstream(std::size_t self) const { return nodes_[self].grad; }

  void backward(const Var& out) {
    check_owner(out);
    if (out.rows() != 1 || out.cols() != 1)
      throw NonScalarOutput("backward needs a 1x1 output, got " + std::to_string(out.rows()) + "x" +
                            std::to_string(out.cols()));
    if (!nodes_[out.id_].needs_grad) return;
    acc(out.id_)(0, 0) += 1.0;
    for (std::size_t i = out.id_ + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.needs_grad || n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this, i);
      if (n.sink) {
        if (n.sink->grad.rows() != n.value.rows() || n.sink->grad.cols() != n.value.cols()) n.sink->zero_grad();
        n.sink->grad += n.grad;
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Backward backward;
    Parameter* sink = nullptr;
  };

  Var push(Matrix v, bool needs, Backward fn) {
    nodes_.push_back({std::move(v), Matrix(), needs, std::move(fn), nullptr});
    return Var(this, nodes_.size() - 1);
  }
  void check_owner(const Var& v) const {
    if (v.tape_ != this) throw ShapeMismatch("variable belongs to a different tape");
  }

  std::vector<Node> nodes_;
  friend class Var;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

namespace detail {

inline std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

inline void require_same(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch(std::string(op) + ": got " + shape(b.value()) + ", expected " + shape(a.value()));
}

/// Element-wise unary op given f(x) and f'(x, y).
template <class F, class D>
Var unary(const Var& x, F f, D df) {
  Tape& t = *x.tape();
  Matrix y = x.value().unaryExpr(f);
  const std::size_t xi = x.id();
  return t.record(std::move(y), {x}, [xi, df](Tape& t, std::size_t self) {
    const Matrix& xv = t.value(xi);
    const Matrix& yv = t.value(self);
    Matrix d(xv.rows(), xv.cols());
    for (Eigen::Index i = 0; i < xv.size(); ++i) d.data()[i] = df(xv.data()[i], yv.data()[i]);
    if (t.needs_grad(xi)) t.acc(xi).array() += t.upstream(self).array() * d.array();
  });
}

}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw ShapeMismatch("matmul: got " + detail::shape(b.value()) + ", expected " + std::to_string(a.cols()) + " rows");
  Tape& t = *a.tape();
  Matrix y = a.value() * b.value();
  const auto ai = a.id(), bi = b.id();
  return t.record(std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.needs_grad(ai)) t.acc(ai).noalias() += g * t.value(bi).transpose();
    if (t.needs_grad(bi)) t.acc(bi).noalias() += t.value(ai).transpose() * g;
  });
}

inline Var add(const Var& a, const Var& b) {
  detail::require_same("add", a, b);
  Tape& t = *a.tape();
  const auto ai = a.id(), bi = b.id();
  return t.record(a.value() + b.value(), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    if (t.needs_grad(ai)) t.acc(ai) += t.upstream(self);
    if (t.needs_grad(bi)) t.acc(bi) += t.upstream(self);
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::require_same("sub", a, b);
  Tape& t = *a.tape();
  const auto ai = a.id(), bi = b.id();
  return t.record(a.value() - b.value(), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    if (t.needs_grad(ai)) t.acc(ai) += t.upstream(self);
    if (t.needs_grad(bi)) t.acc(bi) -= t.upstream(self);
  });
}

/// Element-wise product.
inline Var mul(const Var& a, const Var& b) {
  detail::require_same("mul", a, b);
  Tape& t = *a.tape();
  const auto ai = a.id(), bi = b.id();
  Matrix y = a.value().cwiseProduct(b.value());
  return t.record(std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.needs_grad(ai)) t.acc(ai) += g.cwiseProduct(t.value(bi));
    if (t.needs_grad(bi)) t.acc(bi) += g.cwiseProduct(t.value(ai));
  });
}

/// a + 1·b for a 1 x cols row vector b.
inline Var add_row(const Var& a, const Var& b) {
  if (b.rows() != 1 || b.cols() != a.cols())
    throw ShapeMismatch("add_row: got " + detail::shape(b.value()) + ", expected 1x" + std::to_string(a.cols()));
  Tape& t = *a.tape();
  const auto ai = a.id(), bi = b.id();
  Matrix y = a.value().rowwise() + b.value().row(0);
  return t.record(std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.needs_grad(ai)) t.acc(ai) += g;
    if (t.needs_grad(bi)) t.acc(bi) += g.colwise().sum();
  });
}

/// scale * a + shift, with constant scalars.
inline Var affine(const Var& a, double scale, double shift = 0.0) {
  Tape& t = *a.tape();
  const auto ai = a.id();
  Matrix y = (a.value().array() * scale + shift).matrix();
  return t.record(std::move(y), {a}, [ai, scale](Tape& t, std::size_t self) {
    t.acc(ai) += scale * t.upstream(self);
  });
}

inline Var relu(const Var& x) {
  return detail::unary(x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}
inline Var elu(const Var& x) {
  return detail::unary(x, [](double v) { return v > 0 ? v : std::expm1(v); },
                       [](double v, double y) { return v > 0 ? 1.0 : y + 1.0; });
}
inline Var tanh(const Var& x) {
  return detail::unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}
inline Var sigmoid(const Var& x) {
  return detail::unary(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                       [](double, double y) { return y * (1.0 - y); });
}
inline Var exp(const Var& x) {
  return detail::unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}
inline Var log(const Var& x) {
  return detail::unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}
inline Var square(const Var& x) {
  return detail::unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}
/// Tanh approximation of GELU.
inline Var gelu(const Var& x) {
  constexpr double c = 0.7978845608028654, k = 0.044715;
  return detail::unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::tanh(c * (v + k * v * v * v))); },
      [](double v, double) {
        const double th = std::tanh(c * (v + k * v * v * v));
        return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * c * (1.0 + 3.0 * k * v * v);
      });
}

inline Var sum(const Var& x) {
  Tape& t = *x.tape();
  const auto xi = x.id();
  Matrix y(1, 1);
  y(0, 0) = x.value().sum();
  return t.record(std::move(y), {x}, [xi](Tape& t, std::size_t self) {
    t.acc(xi).array() += t.upstream(self)(0, 0);
  });
}

inline Var mean(const Var& x) {
  const auto n = static_cast<double>(x.value().size());
  return affine(sum(x), n > 0 ? 1.0 / n : 0.0);
}

inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: no inputs");
  Tape& t = *parts[0].tape();
  const auto rows = parts[0].rows();
  Eigen::Index width = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw ShapeMismatch("concat_cols: got " + detail::shape(p.value()) + ", expected " + std::to_string(rows) + " rows");
    width += p.cols();
  }
  Matrix y(rows, width);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> starts;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    y.middleCols(c, p.cols()) = p.value();
    ids.push_back(p.id());
    starts.push_back(c);
    c += p.cols();
  }
  return t.record(std::move(y), parts, [ids, starts](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (t.needs_grad(ids[k])) t.acc(ids[k]) += g.middleCols(starts[k], t.value(ids[k]).cols());
  });
}
inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

/// Stack rows of `top` over rows of `bottom`.
inline Var concat_rows(const Var& top, const Var& bottom) {
  if (top.cols() != bottom.cols())
    throw ShapeMismatch("concat_rows: got " + detail::shape(bottom.value()) + ", expected " + std::to_string(top.cols()) + " cols");
  Tape& t = *top.tape();
  Matrix y(top.rows() + bottom.rows(), top.cols());
  y.topRows(top.rows()) = top.value();
  y.bottomRows(bottom.rows()) = bottom.value();
  const auto ti = top.id(), bi = bottom.id();
  const auto split = top.rows();
  return t.record(std::move(y), {top, bottom}, [ti, bi, split](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.needs_grad(ti)) t.acc(ti) += g.topRows(split);
    if (t.needs_grad(bi)) t.acc(bi) += g.bottomRows(g.rows() - split);
  });
}

inline Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.cols())
    throw ShapeMismatch("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                        ") of " + detail::shape(x.value()));
  Tape& t = *x.tape();
  const auto xi = x.id();
  return t.record(x.value().middleCols(start, count), {x}, [xi, start, count](Tape& t, std::size_t self) {
    t.acc(xi).middleCols(start, count) += t.upstream(self);
  });
}

/// y.row(i) = x.row(index[i]).
inline Var gather_rows(const Var& x, std::vector<std::size_t> index) {
  Tape& t = *x.tape();
  Matrix y(static_cast<Eigen::Index>(index.size()), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= static_cast<std::size_t>(x.rows()))
      throw ShapeMismatch("gather_rows: row " + std::to_string(index[i]) + " of " + detail::shape(x.value()));
    y.row(static_cast<Eigen::Index>(i)) = x.value().row(static_cast<Eigen::Index>(index[i]));
  }
  const auto xi = x.id();
  return t.record(std::move(y), {x}, [xi, index = std::move(index)](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    Matrix& a = t.acc(xi);
    for (std::size_t i = 0; i < index.size(); ++i)
      a.row(static_cast<Eigen::Index>(index[i])) += g.row(static_cast<Eigen::Index>(i));
  });
}

/// Reduce rows of x into `targets` rows: target t collects the x rows listed
/// in csr.of(t). Empty targets yield zero rows. Max routes the gradient of
/// each column to its argmax row, ties to the lowest position in the list.
inline Var aggregate(const Var& x, std::shared_ptr<const Csr> csr_ptr, Reduce reduce) {
  Tape& t = *x.tape();
  const Csr& csr = *csr_ptr;
  const auto n = static_cast<Eigen::Index>(csr.targets());
  const auto c = x.cols();
  const Matrix& xv = x.value();
  Matrix y = Matrix::Zero(n, c);
  std::vector<std::size_t> argmax;
  if (reduce == Reduce::max) argmax.assign(static_cast<std::size_t>(n * c), 0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = csr.of(static_cast<std::size_t>(r));
    if (src.empty()) continue;
    for (auto s : src)
      if (s >= static_cast<std::size_t>(xv.rows()))
        throw ShapeMismatch("aggregate: source row " + std::to_string(s) + " of " + detail::shape(xv));
    if (reduce == Reduce::max) {
      for (Eigen::Index j = 0; j < c; ++j) {
        std::size_t best = src[0];
        double bv = xv(static_cast<Eigen::Index>(best), j);
        for (std::size_t k = 1; k < src.size(); ++k) {
          const double v = xv(static_cast<Eigen::Index>(src[k]), j);
          if (v > bv) {
            bv = v;
            best = src[k];
          }
        }
        y(r, j) = bv;
        argmax[static_cast<std::size_t>(r * c + j)] = best;
      }
    } else {
      for (auto s : src) y.row(r) += xv.row(static_cast<Eigen::Index>(s));
      if (reduce == Reduce::mean) y.row(r) /= static_cast<double>(src.size());
    }
  }
  const auto xi = x.id();
  return t.record(std::move(y), {x}, [xi, csr_ptr, reduce, argmax = std::move(argmax), c](Tape& t, std::size_t self) {
    const Csr& csr = *csr_ptr;
    const Matrix& g = t.upstream(self);
    Matrix& a = t.acc(xi);
    for (std::size_t r = 0; r < csr.targets(); ++r) {
      const auto src = csr.of(r);
      if (src.empty()) continue;
      const auto ri = static_cast<Eigen::Index>(r);
      if (reduce == Reduce::max) {
        for (Eigen::Index j = 0; j < c; ++j)
          a(static_cast<Eigen::Index>(argmax[r * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)]), j) += g(ri, j);
      } else {
        const double w = reduce == Reduce::mean ? 1.0 / static_cast<double>(src.size()) : 1.0;
        for (auto s : src) a.row(static_cast<Eigen::Index>(s)) += w * g.row(ri);
      }
    }
  });
}

/// Row scatter: row i of x lands in output row index[i] of `rows` outputs.
inline Var scatter_rows(const Var& x, const std::vector<std::size_t>& index, std::size_t rows, Reduce reduce) {
  if (index.size() != static_cast<std::size_t>(x.rows()))
    throw ShapeMismatch("scatter_rows: got " + std::to_string(index.size()) + " indices, expected " +
                        std::to_string(x.rows()));
  std::vector<std::vector<std::size_t>> lists(rows);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) throw ShapeMismatch("scatter_rows: target " + std::to_string(index[i]) + " out of range");
    lists[index[i]].push_back(i);
  }
  auto csr = std::make_shared<Csr>();
  for (const auto& l : lists) csr->push(l);
  return aggregate(x, std::move(csr), reduce);
}

/// Temperature log-sum-exp over every entry: (1/tau) log sum exp(tau x).
inline Var logsumexp(const Var& x, double tau) {
  if (!(tau > 0)) throw InvalidConfig("logsumexp temperature must be positive");
  Tape& t = *x.tape();
  const double m = x.value().maxCoeff();
  const Matrix w = (tau * (x.value().array() - m)).exp().matrix();
  const double s = w.sum();
  Matrix y(1, 1);
  y(0, 0) = m + std::log(s) / tau;
  const auto xi = x.id();
  return t.record(std::move(y), {x}, [xi, w, s](Tape& t, std::size_t self) {
    t.acc(xi) += (t.upstream(self)(0, 0) / s) * w;
  });
}

/// Longest-path finish times F_a = mu_a + max over predecessors F_p (0 for
/// sources). mu is an n x 1 column. The gradient of each max flows to the
/// predecessor with the largest finish time, ties to the lowest index.
inline Var longest_finish(const Var& mu, const DagIndex& dag) {
  const auto n = static_cast<std::size_t>(mu.rows());
  if (mu.cols() != 1 || dag.topo.size() != n || dag.preds.targets() != n)
    throw ShapeMismatch("longest_finish: got " + detail::shape(mu.value()) + ", expected " + std::to_string(dag.topo.size()) + "x1");
  Tape& t = *mu.tape();
  Matrix f(static_cast<Eigen::Index>(n), 1);
  std::vector<std::size_t> parent(n, n);
  for (std::size_t a : dag.topo) {
    double start = 0.0;
    for (std::size_t p : dag.preds.of(a)) {
      const double v = f(static_cast<Eigen::Index>(p), 0);
      if (parent[a] == n || v > start || (v == start && p < parent[a])) {
        start = v;
        parent[a] = p;
      }
    }
    f(static_cast<Eigen::Index>(a), 0) = mu.value()(static_cast<Eigen::Index>(a), 0) + start;
  }
  const auto mi = mu.id();
  auto topo = dag.topo;
  return t.record(std::move(f), {mu}, [mi, topo = std::move(topo), parent = std::move(parent), n](Tape& t, std::size_t self) {
    Matrix gf = t.upstream(self);
    Matrix& a = t.acc(mi);
    for (std::size_t k = topo.size(); k-- > 0;) {
      const std::size_t v = topo[k];
      const double g = gf(static_cast<Eigen::Index>(v), 0);
      a(static_cast<Eigen::Index>(v), 0) += g;
      if (parent[v] != n) gf(static_cast<Eigen::Index>(parent[v]), 0) += g;
    }
  });
}

/// Per-row standardisation (x - mean) / sqrt(var + eps), no affine terms.
inline Var layer_norm_rows(const Var& x, double eps = 1e-5) {
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  const auto c = static_cast<double>(xv.cols());
  Matrix y(xv.rows(), xv.cols());
  Vector inv_sd(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double m = xv.row(r).mean();
    const double var = (xv.row(r).array() - m).square().sum() / c;
    inv_sd(r) = 1.0 / std::sqrt(var + eps);
    y.row(r) = (xv.row(r).array() - m) * inv_sd(r);
  }
  const auto xi = x.id();
  return t.record(std::move(y), {x}, [xi, inv_sd](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    const Matrix& yv = t.value(self);
    Matrix& a = t.acc(xi);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double gm = g.row(r).mean();
      const double gy = g.row(r).cwiseProduct(yv.row(r)).mean();
      a.row(r).array() += inv_sd(r) * (g.row(r).array() - gm - yv.row(r).array() * gy);
    }
  });
}

/// Inverted dropout with an explicit generator; identity when rate == 0.
inline Var dropout(const Var& x, double rate, RandomStream& rng) {
  if (rate <= 0.0) return x;
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 - rate;
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mul(x, x.tape()->constant(std::move(mask)));
}

/// Max over parameters of |analytic - central difference| /
/// (|analytic| + |central difference| + 1e-6). The floor keeps components
/// below finite-difference resolution (about 1e-11 at eps = 1e-5 on O(1)
/// losses) from reading as large relative errors.
inline double gradient_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                             double eps = 1e-5) {
  for (auto* p : params) p->zero_grad();
  {
    Tape t;
    Var out = f(t);
    if (out.rows() != 1 || out.cols() != 1) throw NonScalarOutput("gradient_check needs a scalar function");
    t.backward(out);
  }
  auto eval = [&] {
    Tape t;
    return f(t).scalar();
  };
  double worst = 0.0;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + eps;
      const double up = eval();
      p->value.data()[i] = orig - eps;
      const double down = eval();
      p->value.data()[i] = orig;
      const double cd = (up - down) / (2.0 * eps);
      const double an = p->grad.data()[i];
      worst = std::max(worst, std::abs(an - cd) / (std::abs(an) + std::abs(cd) + 1e-6));
    }
  }
  return worst;
}

}  // namespace pnf::ad
