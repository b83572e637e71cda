#pragma once
// Dense tensors with reverse-mode autodiff on an append-only tape.
//
// Templated on the scalar type: float for training, double for the
// finite-difference shadow used by gradient checks. Nodes are identified by
// creation index; backward walks them in reverse creation order, which is a
// valid topological order because inputs always precede outputs. Parameter
// leaves view external storage, so many short-lived tapes can accumulate
// gradients into one parameter store without copying weights.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace binpack {

inline std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape dims must be positive");
    n *= (std::size_t)d;
  }
  return n;
}

template <typename S>
class Tape {
 public:
  // Masked logits use the most-negative representable value as the exact
  // "impossible" sentinel; softmax maps it to probability zero, not tiny.
  static constexpr S kMaskValue = std::numeric_limits<S>::lowest();

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void clear() { nodes_.clear(); }
  int node_count() const { return (int)nodes_.size(); }

  // With recording off, backward closures are dropped at creation: forward
  // values stay available but backward() is a no-op past this point. Used for
  // greedy baselines and evaluation where gradients are never needed.
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  const std::vector<int>& shape(int id) const { return at(id).shape; }
  std::size_t numel(int id) const { return at(id).size; }
  const S* value(int id) const { return at(id).v; }
  const S* grad(int id) const { return at(id).g; }
  std::vector<S> value_copy(int id) const {
    const Node& n = at(id);
    return std::vector<S>(n.v, n.v + n.size);
  }

  // --- leaves -------------------------------------------------------------

  // Parameter view: values read from and gradients accumulated into caller
  // storage, which must outlive the tape.
  int leaf(std::vector<int> shape, const S* v, S* g) {
    Node n;
    n.shape = std::move(shape);
    n.size = shape_numel(n.shape);
    n.v = const_cast<S*>(v);
    n.g = g;
    nodes_.push_back(std::move(n));
    return (int)nodes_.size() - 1;
  }

  // Owned constant input; receives gradients but nothing reads them.
  int constant(std::vector<int> shape, const std::vector<S>& v) {
    if (shape_numel(shape) != v.size()) throw std::invalid_argument("constant: shape/data mismatch");
    int id = push(std::move(shape));
    std::copy(v.begin(), v.end(), at(id).v);
    return id;
  }

  int zeros(std::vector<int> shape) { return push(std::move(shape)); }

  // --- elementwise --------------------------------------------------------

  int add(int a, int b) {
    check_same_numel(a, b, "add");
    int out = push(at(a).shape);
    binary_loop(a, b, out, [](S x, S y) { return x + y; });
    set_back(out, [this, a, b, out] {
      accumulate(a, grad(out));
      accumulate(b, grad(out));
    });
    return out;
  }

  int sub(int a, int b) {
    check_same_numel(a, b, "sub");
    int out = push(at(a).shape);
    binary_loop(a, b, out, [](S x, S y) { return x - y; });
    set_back(out, [this, a, b, out] {
      const S* go = grad(out);
      Node& na = at(a);
      Node& nb = at(b);
      for (std::size_t i = 0; i < na.size; ++i) na.g[i] += go[i];
      for (std::size_t i = 0; i < nb.size; ++i) nb.g[i] -= go[i];
    });
    return out;
  }

  int mul(int a, int b) {
    check_same_numel(a, b, "mul");
    int out = push(at(a).shape);
    binary_loop(a, b, out, [](S x, S y) { return x * y; });
    set_back(out, [this, a, b, out] {
      const S* go = grad(out);
      Node& na = at(a);
      Node& nb = at(b);
      for (std::size_t i = 0; i < na.size; ++i) {
        na.g[i] += go[i] * nb.v[i];
        nb.g[i] += go[i] * na.v[i];
      }
    });
    return out;
  }

  int scale(int a, S c) {
    int out = push(at(a).shape);
    const Node& na = at(a);
    for (std::size_t i = 0; i < na.size; ++i) at(out).v[i] = na.v[i] * c;
    set_back(out, [this, a, out, c] {
      const S* go = grad(out);
      Node& n = at(a);
      for (std::size_t i = 0; i < n.size; ++i) n.g[i] += go[i] * c;
    });
    return out;
  }

  int tanh_(int a) {
    int out = push(at(a).shape);
    const Node& na = at(a);
    for (std::size_t i = 0; i < na.size; ++i) at(out).v[i] = std::tanh(na.v[i]);
    set_back(out, [this, a, out] {
      const S* go = grad(out);
      const S* y = value(out);
      Node& n = at(a);
      for (std::size_t i = 0; i < n.size; ++i) n.g[i] += go[i] * (S(1) - y[i] * y[i]);
    });
    return out;
  }

  int relu(int a) {
    int out = push(at(a).shape);
    const Node& na = at(a);
    for (std::size_t i = 0; i < na.size; ++i) at(out).v[i] = na.v[i] > S(0) ? na.v[i] : S(0);
    set_back(out, [this, a, out] {
      const S* go = grad(out);
      Node& n = at(a);
      for (std::size_t i = 0; i < n.size; ++i)
        if (n.v[i] > S(0)) n.g[i] += go[i];
    });
    return out;
  }

  // --- shape plumbing -----------------------------------------------------

  int reshape(int a, std::vector<int> shape) {
    if (shape_numel(shape) != at(a).size) throw std::invalid_argument("reshape: numel mismatch");
    int out = push(std::move(shape));
    std::copy(at(a).v, at(a).v + at(a).size, at(out).v);
    set_back(out, [this, a, out] { accumulate(a, grad(out)); });
    return out;
  }

  int slice_row(int a, int r) {
    auto [m, n] = rows_cols(a, "slice_row");
    if (r < 0 || r >= m) throw std::invalid_argument("slice_row: row out of range");
    int out = push({n});
    std::copy(at(a).v + (std::size_t)r * n, at(a).v + (std::size_t)(r + 1) * n, at(out).v);
    set_back(out, [this, a, out, r, n = n] {
      const S* go = grad(out);
      S* ga = at(a).g + (std::size_t)r * n;
      for (int j = 0; j < n; ++j) ga[j] += go[j];
    });
    return out;
  }

  int slice_cols(int a, int c0, int c1) {
    auto [m, n] = rows_cols(a, "slice_cols");
    if (c0 < 0 || c1 > n || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
    int w = c1 - c0;
    int out = push({m, w});
    for (int i = 0; i < m; ++i)
      std::copy(at(a).v + (std::size_t)i * n + c0, at(a).v + (std::size_t)i * n + c1,
                at(out).v + (std::size_t)i * w);
    set_back(out, [this, a, out, c0, w, m = m, n = n] {
      const S* go = grad(out);
      S* ga = at(a).g;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j) ga[(std::size_t)i * n + c0 + j] += go[(std::size_t)i * w + j];
    });
    return out;
  }

  int transpose(int a) {
    auto [m, n] = rows_cols(a, "transpose");
    int out = push({n, m});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        at(out).v[(std::size_t)j * m + i] = at(a).v[(std::size_t)i * n + j];
    set_back(out, [this, a, out, m = m, n = n] {
      const S* go = grad(out);
      S* ga = at(a).g;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ga[(std::size_t)i * n + j] += go[(std::size_t)j * m + i];
    });
    return out;
  }

  // Side-by-side concatenation of matrices with equal row counts.
  int concat_cols(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    int m = rows_cols(parts[0], "concat_cols").first;
    int total = 0;
    std::vector<int> widths;
    for (int p : parts) {
      auto [pm, pn] = rows_cols(p, "concat_cols");
      if (pm != m) throw std::invalid_argument("concat_cols: row counts differ");
      widths.push_back(pn);
      total += pn;
    }
    int out = push({m, total});
    int off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      for (int i = 0; i < m; ++i)
        std::copy(at(parts[k]).v + (std::size_t)i * widths[k],
                  at(parts[k]).v + (std::size_t)(i + 1) * widths[k],
                  at(out).v + (std::size_t)i * total + off);
      off += widths[k];
    }
    set_back(out, [this, parts, widths, out, m, total] {
      const S* go = grad(out);
      int off = 0;
      for (std::size_t k = 0; k < parts.size(); ++k) {
        S* ga = at(parts[k]).g;
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < widths[k]; ++j)
            ga[(std::size_t)i * widths[k] + j] += go[(std::size_t)i * total + off + j];
        off += widths[k];
      }
    });
    return out;
  }

  // Flat concatenation in argument order.
  int concat(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no parts");
    std::size_t total = 0;
    for (int p : parts) total += at(p).size;
    int out = push({(int)total});
    std::size_t off = 0;
    for (int p : parts) {
      std::copy(at(p).v, at(p).v + at(p).size, at(out).v + off);
      off += at(p).size;
    }
    set_back(out, [this, parts, out] {
      const S* go = grad(out);
      std::size_t off = 0;
      for (int p : parts) {
        Node& n = at(p);
        for (std::size_t i = 0; i < n.size; ++i) n.g[i] += go[off + i];
        off += n.size;
      }
    });
    return out;
  }

  // --- linear algebra -----------------------------------------------------

  int matmul(int a, int b) {
    auto [m, k] = rows_cols(a, "matmul lhs");
    auto [k2, n] = rows_cols(b, "matmul rhs");
    if (k != k2) throw std::invalid_argument("matmul: inner dims differ");
    int out = push({m, n});
    {
      const S* A = at(a).v;
      const S* B = at(b).v;
      S* O = at(out).v;
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          S av = A[(std::size_t)i * k + p];
          if (av == S(0)) continue;
          const S* Br = B + (std::size_t)p * n;
          S* Or = O + (std::size_t)i * n;
          for (int j = 0; j < n; ++j) Or[j] += av * Br[j];
        }
    }
    set_back(out, [this, a, b, out, m = m, k = k, n = n] {
      const S* go = grad(out);
      const S* A = at(a).v;
      const S* B = at(b).v;
      S* gA = at(a).g;
      S* gB = at(b).g;
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          const S* Br = B + (std::size_t)p * n;
          const S* gor = go + (std::size_t)i * n;
          S s = 0;
          for (int j = 0; j < n; ++j) s += gor[j] * Br[j];
          gA[(std::size_t)i * k + p] += s;
          S av = A[(std::size_t)i * k + p];
          if (av == S(0)) continue;
          S* gBr = gB + (std::size_t)p * n;
          for (int j = 0; j < n; ++j) gBr[j] += av * gor[j];
        }
    });
    return out;
  }

  // x: [rows, n] (or [n]); b: [n] broadcast across rows.
  int add_rows(int a, int b) { return rows_op(a, b, true); }
  int mul_rows(int a, int b) { return rows_op(a, b, false); }

  // --- normalization and activation over groups ---------------------------

  // Normalizes each consecutive group of `group` elements to zero mean and
  // unit variance (epsilon 1e-5); affine terms are separate ops.
  int layer_norm(int a, int group) {
    if (group <= 0 || at(a).size % (std::size_t)group != 0)
      throw std::invalid_argument("layer_norm: size not divisible by group");
    std::size_t rows = at(a).size / (std::size_t)group;
    int out = push(at(a).shape);  // push may reallocate nodes_: re-fetch a after it
    std::vector<S> inv(rows);
    const S eps = S(1e-5);
    for (std::size_t r = 0; r < rows; ++r) {
      const S* x = at(a).v + r * (std::size_t)group;
      S* y = at(out).v + r * (std::size_t)group;
      S mean = 0;
      for (int i = 0; i < group; ++i) mean += x[i];
      mean /= (S)group;
      S var = 0;
      for (int i = 0; i < group; ++i) var += (x[i] - mean) * (x[i] - mean);
      var /= (S)group;
      inv[r] = S(1) / std::sqrt(var + eps);
      for (int i = 0; i < group; ++i) y[i] = (x[i] - mean) * inv[r];
    }
    set_back(out, [this, a, out, group, inv = std::move(inv)] {
      const Node& no = at(out);
      Node& na = at(a);
      std::size_t rows = na.size / (std::size_t)group;
      for (std::size_t r = 0; r < rows; ++r) {
        const S* y = no.v + r * (std::size_t)group;
        const S* gy = no.g + r * (std::size_t)group;
        S* gx = na.g + r * (std::size_t)group;
        S mean_gy = 0, mean_gyy = 0;
        for (int i = 0; i < group; ++i) {
          mean_gy += gy[i];
          mean_gyy += gy[i] * y[i];
        }
        mean_gy /= (S)group;
        mean_gyy /= (S)group;
        for (int i = 0; i < group; ++i)
          gx[i] += inv[r] * (gy[i] - mean_gy - y[i] * mean_gyy);
      }
    });
    return out;
  }

  // Row-wise softmax treating kMaskValue entries as impossible: they get
  // probability exactly zero and no gradient. Throws if a row is all-masked.
  int softmax_rows(int a) {
    auto [m, n] = rows_cols(a, "softmax_rows");
    int out = push(at(a).shape);
    const S cut = kMaskValue / S(2);
    for (int r = 0; r < m; ++r) {
      const S* x = at(a).v + (std::size_t)r * n;
      S* y = at(out).v + (std::size_t)r * n;
      S mx = cut;
      for (int i = 0; i < n; ++i)
        if (x[i] > mx) mx = x[i];
      if (mx <= cut) throw std::domain_error("softmax_rows: fully masked row");
      S z = 0;
      for (int i = 0; i < n; ++i) {
        y[i] = x[i] <= cut ? S(0) : std::exp(x[i] - mx);
        z += y[i];
      }
      for (int i = 0; i < n; ++i) y[i] /= z;
    }
    set_back(out, [this, a, out, m = m, n = n] {
      const Node& no = at(out);
      Node& na = at(a);
      for (int r = 0; r < m; ++r) {
        const S* y = no.v + (std::size_t)r * n;
        const S* gy = no.g + (std::size_t)r * n;
        S* gx = na.g + (std::size_t)r * n;
        S dot = 0;
        for (int i = 0; i < n; ++i) dot += y[i] * gy[i];
        for (int i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - dot);
      }
    });
    return out;
  }

  // keep[i] == 0 entries become kMaskValue with no gradient flow.
  int masked_fill(int a, std::vector<std::uint8_t> keep) {
    if (keep.size() != at(a).size) throw std::invalid_argument("masked_fill: mask size mismatch");
    int out = push(at(a).shape);
    for (std::size_t i = 0; i < at(a).size; ++i)
      at(out).v[i] = keep[i] ? at(a).v[i] : kMaskValue;
    set_back(out, [this, a, out, keep = std::move(keep)] {
      const S* go = grad(out);
      Node& n = at(a);
      for (std::size_t i = 0; i < n.size; ++i)
        if (keep[i]) n.g[i] += go[i];
    });
    return out;
  }

  // Mean of the rows with include[r] != 0; all-excluded gives a zero vector.
  int masked_row_mean(int a, std::vector<std::uint8_t> include) {
    auto [m, n] = rows_cols(a, "masked_row_mean");
    if ((int)include.size() != m) throw std::invalid_argument("masked_row_mean: mask size mismatch");
    int count = 0;
    for (auto b : include) count += b ? 1 : 0;
    int out = push({n});
    if (count > 0) {
      S invc = S(1) / (S)count;
      for (int r = 0; r < m; ++r) {
        if (!include[(std::size_t)r]) continue;
        const S* x = at(a).v + (std::size_t)r * n;
        for (int j = 0; j < n; ++j) at(out).v[j] += x[j] * invc;
      }
    }
    set_back(out, [this, a, out, include = std::move(include), count, n = n] {
      if (count == 0) return;
      const S* go = grad(out);
      Node& na = at(a);
      S invc = S(1) / (S)count;
      for (std::size_t r = 0; r < include.size(); ++r) {
        if (!include[r]) continue;
        S* gx = na.g + r * (std::size_t)n;
        for (int j = 0; j < n; ++j) gx[j] += go[j] * invc;
      }
    });
    return out;
  }

  // --- convolution --------------------------------------------------------

  // x: [C, L]; w: [Co, C, K] -> [Co, Lo]
  int conv1d(int a, int w, int stride, int pad) {
    const auto& xs = at(a).shape;
    const auto& ws = at(w).shape;
    if (xs.size() != 2 || ws.size() != 3) throw std::invalid_argument("conv1d: shapes");
    int C = xs[0], L = xs[1], Co = ws[0], K = ws[2];
    if (ws[1] != C) throw std::invalid_argument("conv1d: channel mismatch");
    int Lo = (L + 2 * pad - K) / stride + 1;
    if (Lo <= 0) throw std::invalid_argument("conv1d: empty output");
    int out = push({Co, Lo});
    conv1d_loop(at(a).v, at(w).v, at(out).v, nullptr, nullptr, nullptr, C, L, Co, K, Lo, stride,
                pad);
    set_back(out, [this, a, w, out, C, L, Co, K, Lo, stride, pad] {
      conv1d_loop(at(a).v, at(w).v, nullptr, at(a).g, at(w).g, at(out).g, C, L, Co, K, Lo, stride,
                  pad);
    });
    return out;
  }

  // x: [C, H, W]; w: [Co, C, Kh, Kw] -> [Co, Ho, Wo]
  int conv2d(int a, int w, int stride, int pad) {
    const auto& xs = at(a).shape;
    const auto& ws = at(w).shape;
    if (xs.size() != 3 || ws.size() != 4) throw std::invalid_argument("conv2d: shapes");
    int C = xs[0], H = xs[1], W = xs[2], Co = ws[0], Kh = ws[2], Kw = ws[3];
    if (ws[1] != C) throw std::invalid_argument("conv2d: channel mismatch");
    int Ho = (H + 2 * pad - Kh) / stride + 1;
    int Wo = (W + 2 * pad - Kw) / stride + 1;
    if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("conv2d: empty output");
    int out = push({Co, Ho, Wo});
    conv2d_loop(at(a).v, at(w).v, at(out).v, nullptr, nullptr, nullptr, C, H, W, Co, Kh, Kw, Ho, Wo,
                stride, pad);
    set_back(out, [this, a, w, out, C, H, W, Co, Kh, Kw, Ho, Wo, stride, pad] {
      conv2d_loop(at(a).v, at(w).v, nullptr, at(a).g, at(w).g, at(out).g, C, H, W, Co, Kh, Kw, Ho,
                  Wo, stride, pad);
    });
    return out;
  }

  // --- reductions / scalars ----------------------------------------------

  int sum(int a) {
    int out = push({1});
    const Node& na = at(a);
    S s = 0;
    for (std::size_t i = 0; i < na.size; ++i) s += na.v[i];
    at(out).v[0] = s;
    set_back(out, [this, a, out] {
      S go = grad(out)[0];
      Node& n = at(a);
      for (std::size_t i = 0; i < n.size; ++i) n.g[i] += go;
    });
    return out;
  }

  int weighted_sum(int a, std::vector<S> w) {
    if (w.size() != at(a).size) throw std::invalid_argument("weighted_sum: size mismatch");
    int out = push({1});
    S s = 0;
    for (std::size_t i = 0; i < at(a).size; ++i) s += at(a).v[i] * w[i];
    at(out).v[0] = s;
    set_back(out, [this, a, out, w = std::move(w)] {
      S go = grad(out)[0];
      Node& n = at(a);
      for (std::size_t i = 0; i < n.size; ++i) n.g[i] += go * w[i];
    });
    return out;
  }

  // log(p[idx]); idx must hold positive probability.
  int log_prob(int probs, std::size_t idx) {
    const Node& np = at(probs);
    if (idx >= np.size) throw std::invalid_argument("log_prob: index out of range");
    S p = np.v[idx];
    if (!(p > S(0))) throw std::domain_error("log_prob: zero-probability action");
    int out = push({1});
    at(out).v[0] = std::log(p);
    set_back(out, [this, probs, out, idx, p] {
      at(probs).g[idx] += grad(out)[0] / p;
    });
    return out;
  }

  void backward(int loss) {
    if (at(loss).size != 1) throw std::invalid_argument("backward: loss must be scalar");
    at(loss).g[0] = S(1);
    for (int i = loss; i >= 0; --i)
      if (nodes_[(std::size_t)i].back) nodes_[(std::size_t)i].back();
  }

 private:
  struct Node {
    std::vector<int> shape;
    std::size_t size = 0;
    std::vector<S> vown, gown;
    S* v = nullptr;
    S* g = nullptr;
    std::function<void()> back;
  };

  std::vector<Node> nodes_;
  bool recording_ = true;

  Node& at(int id) { return nodes_.at((std::size_t)id); }
  const Node& at(int id) const { return nodes_.at((std::size_t)id); }

  void accumulate(int id, const S* src) {
    Node& n = at(id);
    for (std::size_t i = 0; i < n.size; ++i) n.g[i] += src[i];
  }

  int push(std::vector<int> shape) {
    Node n;
    n.shape = std::move(shape);
    n.size = shape_numel(n.shape);
    n.vown.assign(n.size, S(0));
    n.gown.assign(n.size, S(0));
    n.v = n.vown.data();
    n.g = n.gown.data();
    nodes_.push_back(std::move(n));
    return (int)nodes_.size() - 1;
  }

  template <typename F>
  void set_back(int id, F&& f) {
    if (recording_) at(id).back = std::forward<F>(f);
  }

  void check_same_numel(int a, int b, const char* op) {
    if (at(a).size != at(b).size)
      throw std::invalid_argument(std::string(op) + ": operand sizes differ");
  }

  template <typename F>
  void binary_loop(int a, int b, int out, F f) {
    const S* x = at(a).v;
    const S* y = at(b).v;
    S* o = at(out).v;
    std::size_t n = at(a).size;
    for (std::size_t i = 0; i < n; ++i) o[i] = f(x[i], y[i]);
  }

  // Interprets a node as a row-major matrix; vectors count as one row.
  std::pair<int, int> rows_cols(int id, const char* op) const {
    const auto& s = at(id).shape;
    if (s.size() == 1) return {1, s[0]};
    if (s.size() == 2) return {s[0], s[1]};
    throw std::invalid_argument(std::string(op) + ": expected rank 1 or 2");
  }

  int rows_op(int a, int b, bool is_add) {
    if (at(b).shape.size() != 1) throw std::invalid_argument("rows op: rhs must be rank 1");
    int n = at(b).shape[0];
    if (at(a).size % (std::size_t)n != 0) throw std::invalid_argument("rows op: size mismatch");
    std::size_t rows = at(a).size / (std::size_t)n;
    int out = push(at(a).shape);
    for (std::size_t r = 0; r < rows; ++r)
      for (int j = 0; j < n; ++j) {
        std::size_t i = r * (std::size_t)n + (std::size_t)j;
        at(out).v[i] =
            is_add ? at(a).v[i] + at(b).v[(std::size_t)j] : at(a).v[i] * at(b).v[(std::size_t)j];
      }
    set_back(out, [this, a, b, out, n, is_add] {
      const S* go = grad(out);
      Node& xa = at(a);
      Node& xb = at(b);
      std::size_t rows = xa.size / (std::size_t)n;
      for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j) {
          std::size_t i = r * (std::size_t)n + (std::size_t)j;
          if (is_add) {
            xa.g[i] += go[i];
            xb.g[(std::size_t)j] += go[i];
          } else {
            xa.g[i] += go[i] * xb.v[(std::size_t)j];
            xb.g[(std::size_t)j] += go[i] * xa.v[i];
          }
        }
    });
    return out;
  }

  // Shared forward/backward kernel: with `o` set computes outputs, otherwise
  // accumulates input and weight gradients from `go`.
  static void conv1d_loop(const S* x, const S* w, S* o, S* gx, S* gw, const S* go, int C, int L,
                          int Co, int K, int Lo, int stride, int pad) {
    for (int co = 0; co < Co; ++co)
      for (int lo = 0; lo < Lo; ++lo) {
        std::size_t oi = (std::size_t)co * Lo + lo;
        S acc = 0;
        for (int c = 0; c < C; ++c)
          for (int k = 0; k < K; ++k) {
            int li = lo * stride - pad + k;
            if (li < 0 || li >= L) continue;
            std::size_t xi = (std::size_t)c * L + li;
            std::size_t wi = ((std::size_t)co * C + c) * K + k;
            if (o) {
              acc += x[xi] * w[wi];
            } else {
              gx[xi] += go[oi] * w[wi];
              gw[wi] += go[oi] * x[xi];
            }
          }
        if (o) o[oi] = acc;
      }
  }

  static void conv2d_loop(const S* x, const S* w, S* o, S* gx, S* gw, const S* go, int C, int H,
                          int W, int Co, int Kh, int Kw, int Ho, int Wo, int stride, int pad) {
    for (int co = 0; co < Co; ++co)
      for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo) {
          std::size_t oi = ((std::size_t)co * Ho + ho) * Wo + wo;
          S acc = 0;
          for (int c = 0; c < C; ++c)
            for (int kh = 0; kh < Kh; ++kh) {
              int hi = ho * stride - pad + kh;
              if (hi < 0 || hi >= H) continue;
              for (int kw = 0; kw < Kw; ++kw) {
                int wi_ = wo * stride - pad + kw;
                if (wi_ < 0 || wi_ >= W) continue;
                std::size_t xi = ((std::size_t)c * H + hi) * W + wi_;
                std::size_t wei = (((std::size_t)co * C + c) * Kh + kh) * Kw + kw;
                if (o) {
                  acc += x[xi] * w[wei];
                } else {
                  gx[xi] += go[oi] * w[wei];
                  gw[wei] += go[oi] * x[xi];
                }
              }
            }
          if (o) o[oi] = acc;
        }
  }
};

}  // namespace binpack
