#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vplan/errors.hpp"

namespace vplan::ad {

// Row-major matrix. Scalars are (1,1), row vectors (1,n).
template <typename S>
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<S> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, S(0)) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor scalar(S x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }

  S& at(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
  S at(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
  S* row(int i) { return v.data() + static_cast<size_t>(i) * cols; }
  const S* row(int i) const { return v.data() + static_cast<size_t>(i) * cols; }
  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(rows, cols);
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<T>(v[i]);
    return out;
  }
};

// Deterministic uniform in [0,1) from a raw mt19937 draw. std::uniform_real_distribution
// is implementation-defined, which would break byte-identical artifacts.
inline double uniform01(std::mt19937& rng) {
  return rng() * (1.0 / 4294967296.0);
}

template <typename S>
Tensor<S> uniform_init(int rows, int cols, int fan_in, std::mt19937& rng) {
  Tensor<S> t(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& x : t.v) x = static_cast<S>((2.0 * uniform01(rng) - 1.0) * bound);
  return t;
}

// Named parameters with per-parameter Adam state.
template <typename S>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<S> value;
    Tensor<S> m;  // first moment
    Tensor<S> v;  // second moment
    int64_t step = 0;
  };

  Tensor<S>& add(const std::string& name, Tensor<S> init) {
    if (index_.count(name)) throw ValidationError("duplicate parameter name: " + name);
    index_[name] = static_cast<int>(entries_.size());
    Entry e;
    e.name = name;
    e.m = Tensor<S>::zeros(init.rows, init.cols);
    e.v = Tensor<S>::zeros(init.rows, init.cols);
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    return entries_.back().value;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Tensor<S>& value(const std::string& name) { return entry(name).value; }
  const Tensor<S>& value(const std::string& name) const { return entry(name).value; }

  Entry& entry(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter: " + name);
    return entries_[it->second];
  }
  const Entry& entry(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter: " + name);
    return entries_[it->second];
  }

  std::span<Entry> entries() { return entries_; }
  std::span<const Entry> entries() const { return entries_; }
  size_t count() const { return entries_.size(); }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (const auto& e : entries_) {
      out.add(e.name, e.value.template cast<T>());
      auto& oe = out.entry(e.name);
      oe.m = e.m.template cast<T>();
      oe.v = e.v.template cast<T>();
      oe.step = e.step;
    }
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

// Gradient accumulator mirroring a ParamStore's layout.
template <typename S>
class Grads {
 public:
  Grads() = default;
  explicit Grads(const ParamStore<S>& ps) {
    for (const auto& e : ps.entries()) {
      index_[e.name] = static_cast<int>(tensors_.size());
      names_.push_back(e.name);
      tensors_.push_back(Tensor<S>::zeros(e.value.rows, e.value.cols));
    }
  }

  Tensor<S>& tensor(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown gradient slot: " + name);
    return tensors_[it->second];
  }
  const Tensor<S>& tensor(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown gradient slot: " + name);
    return tensors_[it->second];
  }

  void zero() {
    for (auto& t : tensors_)
      std::fill(t.v.begin(), t.v.end(), S(0));
  }

  void scale(S s) {
    for (auto& t : tensors_)
      for (auto& x : t.v) x *= s;
  }

  void add(const Grads& o) {
    for (size_t i = 0; i < tensors_.size(); ++i)
      for (size_t j = 0; j < tensors_[i].v.size(); ++j) tensors_[i].v[j] += o.tensors_[i].v[j];
  }

  double l2_norm() const {
    double s = 0.0;
    for (const auto& t : tensors_)
      for (const auto& x : t.v) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
  }

  std::span<const std::string> names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<S>> tensors_;
  std::unordered_map<std::string, int> index_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update over every parameter in the store.
template <typename S>
void adam_step(ParamStore<S>& ps, const Grads<S>& grads, const AdamConfig& cfg) {
  for (auto& e : ps.entries()) {
    const Tensor<S>& g = grads.tensor(e.name);
    if (!g.same_shape(e.value))
      throw ShapeError("adam_step: gradient shape " + g.shape_str() + " != parameter shape " +
                       e.value.shape_str() + " for " + e.name);
    e.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
    for (size_t i = 0; i < e.value.v.size(); ++i) {
      const S gi = g.v[i];
      e.m.v[i] = static_cast<S>(cfg.beta1 * e.m.v[i] + (1.0 - cfg.beta1) * gi);
      e.v.v[i] = static_cast<S>(cfg.beta2 * e.v.v[i] + (1.0 - cfg.beta2) * gi * gi);
      const double mhat = e.m.v[i] / bc1;
      const double vhat = e.v.v[i] / bc2;
      e.value.v[i] -= static_cast<S>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

namespace detail {

// C(m,n) += A(m,k) * B(k,n)
template <typename S>
void mm_acc(const S* A, const S* B, S* C, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const S* a = A + static_cast<size_t>(i) * k;
    S* c = C + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const S ap = a[p];
      const S* b = B + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) c[j] += ap * b[j];
    }
  }
}

// C(m,n) += A(m,k) * B(n,k)^T
template <typename S>
void mm_nt_acc(const S* A, const S* B, S* C, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const S* a = A + static_cast<size_t>(i) * k;
    S* c = C + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const S* b = B + static_cast<size_t>(j) * k;
      S acc = 0;
      for (int p = 0; p < k; ++p) acc += a[p] * b[p];
      c[j] += acc;
    }
  }
}

// C(k,n) += A(m,k)^T * B(m,n)
template <typename S>
void mm_tn_acc(const S* A, const S* B, S* C, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const S* a = A + static_cast<size_t>(i) * k;
    const S* b = B + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const S ap = a[p];
      S* c = C + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) c[j] += ap * b[j];
    }
  }
}

}  // namespace detail

// Recorded operation graph for one forward pass. Node creation order is a
// topological order, so backward() walks nodes once in reverse.
template <typename S>
class Tape {
 public:
  using Id = int;

  Id leaf(Tensor<S> t, bool needs_grad = false) {
    return push(std::move(t), needs_grad, {}, nullptr, "leaf");
  }

  Id param(const std::string& name, ParamStore<S>& ps) {
    Id id = push(Tensor<S>(ps.value(name)), true, {}, nullptr, "param");
    param_bindings_.push_back({name, id});
    return id;
  }

  Id add(Id a, Id b) {
    const Tensor<S>&A = val(a), &B = val(b);
    if (!A.same_shape(B))
      throw ShapeError("add: shapes " + A.shape_str() + " and " + B.shape_str() + " differ");
    Tensor<S> out(A.rows, A.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = A.v[i] + B.v[i];
    return push(std::move(out), needs(a) || needs(b), {a, b},
                [](Tape& tp, const Node& n) {
                  tp.accumulate(n.parents[0], n.grad.v.data(), n.grad.size());
                  tp.accumulate(n.parents[1], n.grad.v.data(), n.grad.size());
                },
                "add");
  }

  // (m,n) + (1,n) broadcast over rows.
  Id add_rowvec(Id a, Id b) {
    const Tensor<S>&A = val(a), &B = val(b);
    if (B.rows != 1 || B.cols != A.cols)
      throw ShapeError("add_rowvec: " + A.shape_str() + " + " + B.shape_str());
    Tensor<S> out(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) out.at(i, j) = A.at(i, j) + B.at(0, j);
    return push(std::move(out), needs(a) || needs(b), {a, b},
                [](Tape& tp, const Node& n) {
                  tp.accumulate(n.parents[0], n.grad.v.data(), n.grad.size());
                  if (tp.needs(n.parents[1])) {
                    Tensor<S>& gb = tp.grad_ref(n.parents[1]);
                    for (int i = 0; i < n.grad.rows; ++i)
                      for (int j = 0; j < n.grad.cols; ++j) gb.at(0, j) += n.grad.at(i, j);
                  }
                },
                "add_rowvec");
  }

  Id mul_const(Id a, S c) {
    const Tensor<S>& A = val(a);
    Tensor<S> out(A.rows, A.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = A.v[i] * c;
    return push(std::move(out), needs(a), {a},
                [c](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  Tensor<S>& g = tp.grad_ref(n.parents[0]);
                  for (size_t i = 0; i < g.v.size(); ++i) g.v[i] += n.grad.v[i] * c;
                },
                "mul_const");
  }

  Id matmul(Id a, Id b) {
    const Tensor<S>&A = val(a), &B = val(b);
    if (A.cols != B.rows)
      throw ShapeError("matmul: inner dims of " + A.shape_str() + " and " + B.shape_str() +
                       " disagree");
    Tensor<S> out(A.rows, B.cols);
    detail::mm_acc(A.v.data(), B.v.data(), out.v.data(), A.rows, A.cols, B.cols);
    return push(std::move(out), needs(a) || needs(b), {a, b},
                [](Tape& tp, const Node& n) {
                  const Tensor<S>& A = tp.val(n.parents[0]);
                  const Tensor<S>& B = tp.val(n.parents[1]);
                  if (tp.needs(n.parents[0]))
                    detail::mm_nt_acc(n.grad.v.data(), B.v.data(),
                                      tp.grad_ref(n.parents[0]).v.data(), A.rows, B.cols, A.cols);
                  if (tp.needs(n.parents[1]))
                    detail::mm_tn_acc(A.v.data(), n.grad.v.data(),
                                      tp.grad_ref(n.parents[1]).v.data(), A.rows, A.cols, B.cols);
                },
                "matmul");
  }

  // A * B^T, with B given row-major as (n,k).
  Id matmul_nt(Id a, Id b) {
    const Tensor<S>&A = val(a), &B = val(b);
    if (A.cols != B.cols)
      throw ShapeError("matmul_nt: inner dims of " + A.shape_str() + " and " + B.shape_str() +
                       " disagree");
    Tensor<S> out(A.rows, B.rows);
    detail::mm_nt_acc(A.v.data(), B.v.data(), out.v.data(), A.rows, A.cols, B.rows);
    return push(std::move(out), needs(a) || needs(b), {a, b},
                [](Tape& tp, const Node& n) {
                  const Tensor<S>& A = tp.val(n.parents[0]);
                  const Tensor<S>& B = tp.val(n.parents[1]);
                  if (tp.needs(n.parents[0]))
                    detail::mm_acc(n.grad.v.data(), B.v.data(),
                                   tp.grad_ref(n.parents[0]).v.data(), A.rows, B.rows, A.cols);
                  if (tp.needs(n.parents[1]))
                    detail::mm_tn_acc(n.grad.v.data(), A.v.data(),
                                      tp.grad_ref(n.parents[1]).v.data(), A.rows, B.rows, A.cols);
                },
                "matmul_nt");
  }

  Id relu(Id a) {
    const Tensor<S>& A = val(a);
    Tensor<S> out(A.rows, A.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = A.v[i] > S(0) ? A.v[i] : S(0);
    return push(std::move(out), needs(a), {a},
                [](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  const Tensor<S>& A = tp.val(n.parents[0]);
                  Tensor<S>& g = tp.grad_ref(n.parents[0]);
                  for (size_t i = 0; i < g.v.size(); ++i)
                    if (A.v[i] > S(0)) g.v[i] += n.grad.v[i];
                },
                "relu");
  }

  Id layer_norm(Id a, Id gain, Id bias, double eps = 1e-5) {
    const Tensor<S>&A = val(a), &G = val(gain), &B = val(bias);
    if (G.rows != 1 || G.cols != A.cols || B.rows != 1 || B.cols != A.cols)
      throw ShapeError("layer_norm: gain/bias must be (1," + std::to_string(A.cols) + ")");
    Tensor<S> out(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      double mu = 0.0;
      for (int j = 0; j < A.cols; ++j) mu += A.at(i, j);
      mu /= A.cols;
      double var = 0.0;
      for (int j = 0; j < A.cols; ++j) {
        const double d = A.at(i, j) - mu;
        var += d * d;
      }
      var /= A.cols;
      const double inv = 1.0 / std::sqrt(var + eps);
      for (int j = 0; j < A.cols; ++j)
        out.at(i, j) = static_cast<S>((A.at(i, j) - mu) * inv * G.at(0, j) + B.at(0, j));
    }
    return push(std::move(out), needs(a) || needs(gain) || needs(bias), {a, gain, bias},
                [eps](Tape& tp, const Node& n) {
                  const Tensor<S>& A = tp.val(n.parents[0]);
                  const Tensor<S>& G = tp.val(n.parents[1]);
                  const int cols = A.cols;
                  for (int i = 0; i < A.rows; ++i) {
                    double mu = 0.0;
                    for (int j = 0; j < cols; ++j) mu += A.at(i, j);
                    mu /= cols;
                    double var = 0.0;
                    for (int j = 0; j < cols; ++j) {
                      const double d = A.at(i, j) - mu;
                      var += d * d;
                    }
                    var /= cols;
                    const double inv = 1.0 / std::sqrt(var + eps);
                    // dgain/dbias
                    if (tp.needs(n.parents[1]) || tp.needs(n.parents[2])) {
                      for (int j = 0; j < cols; ++j) {
                        const double xhat = (A.at(i, j) - mu) * inv;
                        if (tp.needs(n.parents[1]))
                          tp.grad_ref(n.parents[1]).at(0, j) +=
                              static_cast<S>(n.grad.at(i, j) * xhat);
                        if (tp.needs(n.parents[2]))
                          tp.grad_ref(n.parents[2]).at(0, j) += n.grad.at(i, j);
                      }
                    }
                    if (tp.needs(n.parents[0])) {
                      double sum_gy = 0.0, sum_gyx = 0.0;
                      for (int j = 0; j < cols; ++j) {
                        const double gy = static_cast<double>(n.grad.at(i, j)) * G.at(0, j);
                        const double xhat = (A.at(i, j) - mu) * inv;
                        sum_gy += gy;
                        sum_gyx += gy * xhat;
                      }
                      Tensor<S>& gx = tp.grad_ref(n.parents[0]);
                      for (int j = 0; j < cols; ++j) {
                        const double gy = static_cast<double>(n.grad.at(i, j)) * G.at(0, j);
                        const double xhat = (A.at(i, j) - mu) * inv;
                        gx.at(i, j) += static_cast<S>(
                            (gy - sum_gy / cols - xhat * sum_gyx / cols) * inv);
                      }
                    }
                  }
                },
                "layer_norm");
  }

  // Row-wise softmax with max subtraction and a double accumulator, so each
  // row sums to 1 well within f32 tolerance even for 4097-wide rows.
  Id softmax_rows(Id a) {
    const Tensor<S>& A = val(a);
    Tensor<S> out(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      S mx = A.at(i, 0);
      for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
      double sum = 0.0;
      for (int j = 0; j < A.cols; ++j) {
        const double e = std::exp(static_cast<double>(A.at(i, j)) - static_cast<double>(mx));
        out.at(i, j) = static_cast<S>(e);
        sum += e;
      }
      const double inv = 1.0 / sum;
      for (int j = 0; j < A.cols; ++j)
        out.at(i, j) = static_cast<S>(static_cast<double>(out.at(i, j)) * inv);
    }
    return push(std::move(out), needs(a), {a},
                [](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  Tensor<S>& g = tp.grad_ref(n.parents[0]);
                  for (int i = 0; i < n.val.rows; ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < n.val.cols; ++j)
                      dot += static_cast<double>(n.grad.at(i, j)) * n.val.at(i, j);
                    for (int j = 0; j < n.val.cols; ++j)
                      g.at(i, j) += static_cast<S>(n.val.at(i, j) *
                                                   (static_cast<double>(n.grad.at(i, j)) - dot));
                  }
                },
                "softmax");
  }

  Id log_softmax_rows(Id a) {
    const Tensor<S>& A = val(a);
    Tensor<S> out(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      S mx = A.at(i, 0);
      for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
      double sum = 0.0;
      for (int j = 0; j < A.cols; ++j)
        sum += std::exp(static_cast<double>(A.at(i, j)) - static_cast<double>(mx));
      const double lse = static_cast<double>(mx) + std::log(sum);
      for (int j = 0; j < A.cols; ++j)
        out.at(i, j) = static_cast<S>(static_cast<double>(A.at(i, j)) - lse);
    }
    return push(std::move(out), needs(a), {a},
                [](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  Tensor<S>& g = tp.grad_ref(n.parents[0]);
                  for (int i = 0; i < n.val.rows; ++i) {
                    double gsum = 0.0;
                    for (int j = 0; j < n.val.cols; ++j) gsum += n.grad.at(i, j);
                    for (int j = 0; j < n.val.cols; ++j)
                      g.at(i, j) += static_cast<S>(
                          static_cast<double>(n.grad.at(i, j)) -
                          std::exp(static_cast<double>(n.val.at(i, j))) * gsum);
                  }
                },
                "log_softmax");
  }

  Id exp_elem(Id a) {
    const Tensor<S>& A = val(a);
    Tensor<S> out(A.rows, A.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = std::exp(A.v[i]);
    return push(std::move(out), needs(a), {a},
                [](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  Tensor<S>& g = tp.grad_ref(n.parents[0]);
                  for (size_t i = 0; i < g.v.size(); ++i) g.v[i] += n.grad.v[i] * n.val.v[i];
                },
                "exp");
  }

  Id slice_cols(Id a, int c0, int c1) {
    const Tensor<S>& A = val(a);
    if (c0 < 0 || c1 > A.cols || c0 >= c1)
      throw ShapeError("slice_cols: bad range on " + A.shape_str());
    Tensor<S> out(A.rows, c1 - c0);
    for (int i = 0; i < A.rows; ++i)
      for (int j = c0; j < c1; ++j) out.at(i, j - c0) = A.at(i, j);
    return push(std::move(out), needs(a), {a},
                [c0](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  Tensor<S>& g = tp.grad_ref(n.parents[0]);
                  for (int i = 0; i < n.grad.rows; ++i)
                    for (int j = 0; j < n.grad.cols; ++j) g.at(i, j + c0) += n.grad.at(i, j);
                },
                "slice_cols");
  }

  Id concat_cols(std::span<const Id> ids) {
    if (ids.empty()) throw ShapeError("concat_cols: no inputs");
    const int rows = val(ids[0]).rows;
    int cols = 0;
    bool ng = false;
    for (Id id : ids) {
      if (val(id).rows != rows) throw ShapeError("concat_cols: row mismatch");
      cols += val(id).cols;
      ng = ng || needs(id);
    }
    Tensor<S> out(rows, cols);
    int off = 0;
    for (Id id : ids) {
      const Tensor<S>& A = val(id);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < A.cols; ++j) out.at(i, off + j) = A.at(i, j);
      off += A.cols;
    }
    return push(std::move(out), ng, std::vector<Id>(ids.begin(), ids.end()),
                [](Tape& tp, const Node& n) {
                  int off = 0;
                  for (Id p : n.parents) {
                    const Tensor<S>& A = tp.val(p);
                    if (tp.needs(p)) {
                      Tensor<S>& g = tp.grad_ref(p);
                      for (int i = 0; i < A.rows; ++i)
                        for (int j = 0; j < A.cols; ++j) g.at(i, j) += n.grad.at(i, off + j);
                    }
                    off += A.cols;
                  }
                },
                "concat_cols");
  }

  Id concat_rows(std::span<const Id> ids) {
    if (ids.empty()) throw ShapeError("concat_rows: no inputs");
    const int cols = val(ids[0]).cols;
    int rows = 0;
    bool ng = false;
    for (Id id : ids) {
      if (val(id).cols != cols) throw ShapeError("concat_rows: col mismatch");
      rows += val(id).rows;
      ng = ng || needs(id);
    }
    Tensor<S> out(rows, cols);
    int off = 0;
    for (Id id : ids) {
      const Tensor<S>& A = val(id);
      std::copy(A.v.begin(), A.v.end(), out.v.begin() + static_cast<size_t>(off) * cols);
      off += A.rows;
    }
    return push(std::move(out), ng, std::vector<Id>(ids.begin(), ids.end()),
                [](Tape& tp, const Node& n) {
                  int off = 0;
                  for (Id p : n.parents) {
                    const Tensor<S>& A = tp.val(p);
                    if (tp.needs(p)) {
                      Tensor<S>& g = tp.grad_ref(p);
                      for (int i = 0; i < A.rows; ++i)
                        for (int j = 0; j < A.cols; ++j) g.at(i, j) += n.grad.at(off + i, j);
                    }
                    off += A.rows;
                  }
                },
                "concat_rows");
  }

  // Reinterprets shape; total size must match.
  Id reshape(Id a, int rows, int cols) {
    const Tensor<S>& A = val(a);
    if (static_cast<size_t>(rows) * cols != A.size())
      throw ShapeError("reshape: size mismatch on " + A.shape_str());
    Tensor<S> out(rows, cols);
    out.v = A.v;
    return push(std::move(out), needs(a), {a},
                [](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  tp.accumulate(n.parents[0], n.grad.v.data(), n.grad.size());
                },
                "reshape");
  }

  Id sum_all(Id a) {
    const Tensor<S>& A = val(a);
    double s = 0.0;
    for (const auto& x : A.v) s += x;
    return push(Tensor<S>::scalar(static_cast<S>(s)), needs(a), {a},
                [](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  Tensor<S>& g = tp.grad_ref(n.parents[0]);
                  for (auto& x : g.v) x += n.grad.v[0];
                },
                "sum_all");
  }

  // Scalar dot product with a constant weight vector (flattened).
  Id dot_const(Id a, std::vector<S> w) {
    const Tensor<S>& A = val(a);
    if (w.size() != A.size()) throw ShapeError("dot_const: weight size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < w.size(); ++i) s += static_cast<double>(A.v[i]) * w[i];
    auto wp = std::make_shared<std::vector<S>>(std::move(w));
    return push(Tensor<S>::scalar(static_cast<S>(s)), needs(a), {a},
                [wp](Tape& tp, const Node& n) {
                  if (!tp.needs(n.parents[0])) return;
                  Tensor<S>& g = tp.grad_ref(n.parents[0]);
                  for (size_t i = 0; i < g.v.size(); ++i) g.v[i] += n.grad.v[0] * (*wp)[i];
                },
                "dot_const");
  }

  const Tensor<S>& val(Id id) const { return nodes_[id].val; }
  const Tensor<S>& grad(Id id) const { return nodes_[id].grad; }
  bool needs(Id id) const { return nodes_[id].needs_grad; }

  // Reverse accumulation from a scalar root. Visits each node exactly once.
  void backward(Id root) {
    Node& r = nodes_[root];
    if (r.val.size() != 1) throw ShapeError("backward: root must be scalar");
    for (auto& n : nodes_) {
      n.grad = Tensor<S>::zeros(n.val.rows, n.val.cols);
    }
    r.grad.v[0] = S(1);
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.back && n.needs_grad) n.back(*this, n);
    }
  }

  // Adds this tape's parameter-leaf gradients into a Grads accumulator.
  void accumulate_param_grads(Grads<S>& out) const {
    for (const auto& [name, id] : param_bindings_) {
      Tensor<S>& dst = out.tensor(name);
      const Tensor<S>& src = nodes_[id].grad;
      for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
    }
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<S> val;
    Tensor<S> grad;
    bool needs_grad = false;
    std::vector<Id> parents;
    std::function<void(Tape&, const Node&)> back;
  };

  Tensor<S>& grad_ref(Id id) { return nodes_[id].grad; }

  void accumulate(Id id, const S* g, size_t n) {
    if (!needs(id)) return;
    Tensor<S>& dst = nodes_[id].grad;
    for (size_t i = 0; i < n; ++i) dst.v[i] += g[i];
  }

  Id push(Tensor<S> t, bool needs_grad, std::vector<Id> parents,
          std::function<void(Tape&, const Node&)> back, const char* op_name) {
    for (const auto& x : t.v) {
      if (!std::isfinite(static_cast<double>(x)))
        throw NumericError(std::string("non-finite value in forward pass at op ") + op_name);
    }
    Node n;
    n.val = std::move(t);
    n.needs_grad = needs_grad;
    n.parents = std::move(parents);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, Id>> param_bindings_;
};

// y = x W + b as a single helper over tape primitives.
template <typename S>
typename Tape<S>::Id linear(Tape<S>& tp, typename Tape<S>::Id x, typename Tape<S>::Id w,
                            typename Tape<S>::Id b) {
  return tp.add_rowvec(tp.matmul(x, w), b);
}

// Central finite differences against reverse-mode gradients. `fn` must evaluate
// the scalar objective for the store's current values and, when `grads` is
// non-null, also add reverse-mode gradients into it. Returns the max over all
// parameter elements of |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8).
template <typename S, typename Fn>
double grad_check(Fn&& fn, ParamStore<S>& params, double eps) {
  Grads<S> grads(params);
  fn(params, &grads);
  double worst = 0.0;
  for (auto& e : params.entries()) {
    for (size_t i = 0; i < e.value.v.size(); ++i) {
      const S saved = e.value.v[i];
      e.value.v[i] = static_cast<S>(saved + eps);
      const double fp = static_cast<double>(fn(params, nullptr));
      e.value.v[i] = static_cast<S>(saved - eps);
      const double fm = static_cast<double>(fn(params, nullptr));
      e.value.v[i] = saved;
      const double fd = (fp - fm) / (2.0 * eps);
      const double g = static_cast<double>(grads.tensor(e.name).v[i]);
      const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace vplan::ad
