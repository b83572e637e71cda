#pragma once
// Parameter storage, init, thin layer wrappers, Adam, and a finite-difference
// gradient checker. Parameters live outside any tape so short-lived per-sample
// tapes can accumulate gradients into one store.

#include <binpack/rng.hpp>
#include <binpack/tensor.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace binpack {

template <typename S>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::vector<S> v, g;
  };

  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
  int add_uniform(const std::string& name, std::vector<int> shape, int fan_in, Rng& rng) {
    std::size_t n = shape_numel(shape);
    std::vector<S> v(n);
    double bound = 1.0 / std::sqrt((double)fan_in);
    for (auto& x : v) x = (S)rng.uniform_real(-bound, bound);
    return add(name, std::move(shape), std::move(v));
  }

  int add_filled(const std::string& name, std::vector<int> shape, S fill) {
    std::vector<S> v(shape_numel(shape), fill);
    return add(name, std::move(shape), std::move(v));
  }

  int add(const std::string& name, std::vector<int> shape, std::vector<S> v) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    Entry e;
    e.name = name;
    e.shape = std::move(shape);
    e.g.assign(v.size(), S(0));
    e.v = std::move(v);
    index_[name] = (int)entries_.size();
    entries_.push_back(std::move(e));
    return (int)entries_.size() - 1;
  }

  int id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Entry& entry(int i) { return entries_.at((std::size_t)i); }
  const Entry& entry(int i) const { return entries_.at((std::size_t)i); }
  int count() const { return (int)entries_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.v.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) std::fill(e.g.begin(), e.g.end(), S(0));
  }

  // Leaf node viewing this parameter; gradients accumulate into the store.
  int use(Tape<S>& tape, int i) {
    Entry& e = entry(i);
    return tape.leaf(e.shape, e.v.data(), e.g.data());
  }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (const auto& e : entries_) {
      std::vector<T> v(e.v.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = (T)e.v[i];
      out.add(e.name, e.shape, std::move(v));
    }
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, int> index_;
};

template <typename S>
class Adam {
 public:
  explicit Adam(S lr, S beta1 = S(0.9), S beta2 = S(0.999), S eps = S(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore<S>& ps) {
    if ((int)m_.size() != ps.count()) {
      m_.resize((std::size_t)ps.count());
      v_.resize((std::size_t)ps.count());
      for (int i = 0; i < ps.count(); ++i) {
        m_[(std::size_t)i].assign(ps.entry(i).v.size(), S(0));
        v_[(std::size_t)i].assign(ps.entry(i).v.size(), S(0));
      }
    }
    ++t_;
    S c1 = S(1) - (S)std::pow((double)beta1_, (double)t_);
    S c2 = S(1) - (S)std::pow((double)beta2_, (double)t_);
    for (int i = 0; i < ps.count(); ++i) {
      auto& e = ps.entry(i);
      auto& m = m_[(std::size_t)i];
      auto& v = v_[(std::size_t)i];
      for (std::size_t j = 0; j < e.v.size(); ++j) {
        m[j] = beta1_ * m[j] + (S(1) - beta1_) * e.g[j];
        v[j] = beta2_ * v[j] + (S(1) - beta2_) * e.g[j] * e.g[j];
        e.v[j] -= lr_ * (m[j] / c1) / ((S)std::sqrt((double)(v[j] / c2)) + eps_);
      }
    }
  }

  S lr() const { return lr_; }
  void set_lr(S lr) { lr_ = lr; }
  long long steps() const { return t_; }

  // Checkpoint access.
  std::vector<std::vector<S>>& moments1() { return m_; }
  std::vector<std::vector<S>>& moments2() { return v_; }
  void set_steps(long long t) { t_ = t; }

 private:
  S lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<S>> m_, v_;
};

// --- layer wrappers -------------------------------------------------------

template <typename S>
struct Linear {
  int w = -1, b = -1;

  static Linear create(ParamStore<S>& ps, const std::string& name, int in, int out, bool bias,
                       Rng& rng) {
    Linear l;
    l.w = ps.add_uniform(name + ".w", {in, out}, in, rng);
    if (bias) l.b = ps.add_uniform(name + ".b", {out}, in, rng);
    return l;
  }

  static Linear attach(const ParamStore<S>& ps, const std::string& name) {
    Linear l;
    l.w = ps.id(name + ".w");
    if (ps.has(name + ".b")) l.b = ps.id(name + ".b");
    return l;
  }

  int apply(ParamStore<S>& ps, Tape<S>& t, int x) const {
    int y = t.matmul(x, ps.use(t, w));
    if (b >= 0) y = t.add_rows(y, ps.use(t, b));
    return y;
  }
};

// Normalizes consecutive groups of `group` elements, then applies a learned
// per-element affine over the group.
template <typename S>
struct LayerNorm {
  int gamma = -1, beta = -1;
  int group = 0;

  static LayerNorm create(ParamStore<S>& ps, const std::string& name, int group) {
    LayerNorm l;
    l.group = group;
    l.gamma = ps.add_filled(name + ".g", {group}, S(1));
    l.beta = ps.add_filled(name + ".b", {group}, S(0));
    return l;
  }

  static LayerNorm attach(const ParamStore<S>& ps, const std::string& name) {
    LayerNorm l;
    l.gamma = ps.id(name + ".g");
    l.beta = ps.id(name + ".b");
    l.group = ps.entry(l.gamma).shape.at(0);
    return l;
  }

  int apply(ParamStore<S>& ps, Tape<S>& t, int x) const {
    int y = t.layer_norm(x, group);
    y = t.mul_rows(y, ps.use(t, gamma));
    return t.add_rows(y, ps.use(t, beta));
  }
};

// Convolutions carry no bias: LayerNorm's affine follows immediately.
template <typename S>
struct Conv {
  int w = -1;
  int stride = 1, pad = 0;
  bool two_d = false;

  static Conv create1d(ParamStore<S>& ps, const std::string& name, int ci, int co, int k,
                       int stride, int pad, Rng& rng) {
    Conv c;
    c.stride = stride;
    c.pad = pad;
    c.two_d = false;
    c.w = ps.add_uniform(name + ".w", {co, ci, k}, ci * k, rng);
    return c;
  }

  static Conv create2d(ParamStore<S>& ps, const std::string& name, int ci, int co, int k,
                       int stride, int pad, Rng& rng) {
    Conv c;
    c.stride = stride;
    c.pad = pad;
    c.two_d = true;
    c.w = ps.add_uniform(name + ".w", {co, ci, k, k}, ci * k * k, rng);
    return c;
  }

  int apply(ParamStore<S>& ps, Tape<S>& t, int x) const {
    int wn = ps.use(t, w);
    return two_d ? t.conv2d(x, wn, stride, pad) : t.conv1d(x, wn, stride, pad);
  }
};

// --- finite-difference gradient check ------------------------------------

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t coords = 0;
  std::string worst;
};

// Compares held gradients in `ps` (already populated by backward) against
// central finite differences of `fresh_loss`, which must rebuild the same
// forward pass deterministically from the current parameter values.
template <typename LossFn>
GradCheckReport grad_check(ParamStore<double>& ps, LossFn&& fresh_loss,
                           std::size_t max_coords_per_param = 16, double eps = 1e-3,
                           std::uint64_t pick_seed = 7) {
  GradCheckReport rep;
  Rng rng = Rng::stream(pick_seed, 0);
  for (int p = 0; p < ps.count(); ++p) {
    auto& e = ps.entry(p);
    std::vector<std::size_t> coords(e.v.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > max_coords_per_param) {
      rng.shuffle(coords);
      coords.resize(max_coords_per_param);
    }
    for (std::size_t i : coords) {
      double keep = e.v[i];
      e.v[i] = keep + eps;
      double up = fresh_loss();
      e.v[i] = keep - eps;
      double down = fresh_loss();
      e.v[i] = keep;
      double fd = (up - down) / (2.0 * eps);
      double rel = std::abs(e.g[i] - fd) / std::max(1.0, std::abs(fd));
      ++rep.coords;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = e.name + "[" + std::to_string(i) + "] ad=" + std::to_string(e.g[i]) +
                    " fd=" + std::to_string(fd);
      }
    }
  }
  return rep;
}

}  // namespace binpack
