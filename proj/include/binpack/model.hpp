#pragma once
// Policy network: box self-attention encoder, frontier CNN, glimpse pointer
// decoder for box selection, and an MLP placement decoder over (o, y).
//
// Structural variants (ModelConfig::variant):
//   full          sequence policy + factored placement policy
//   no-po         identical network to full (differs only in training)
//   no-po-joint   one softmax over (box, orientation, y); fixed box count
//   no-seq        placement policy only; box order supplied by the driver
//   no-seq-no-att no-seq with attention swapped for a feed-forward residual
//                 block of matched parameter count
//   strict-online no-seq-no-att minus the leftover term in the placement
//                 query (no knowledge of future boxes)

#include <binpack/geometry.hpp>
#include <binpack/nn.hpp>
#include <binpack/packer.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace binpack {

inline std::string canonical_variant(std::string v) {
  if (v == "random-order" || v == "sorted-order") return "no-seq";
  return v;
}

struct ModelConfig {
  int d = 32;
  int M = 4;
  int layers = 1;
  int mlp_hidden = 128;
  double C = 10.0;
  int dims = 3;
  int W = 10;
  int H = 10;
  std::string frontier_variant = "cnn-10x10-3d";  // cnn-w10-2d | cnn-100x100-3d
  bool latest_frontier_only = false;
  std::string variant = "full";
  int joint_n = 0;  // fixed box count for the joint head

  int orientations() const { return orientation_count(dims); }
  int head_dim() const { return d / M; }
  int action_width() const { return orientations() * W; }
  int frontier_channels() const { return latest_frontier_only ? 1 : 2; }

  bool attention_encoder() const { return variant != "no-seq-no-att" && variant != "strict-online"; }
  bool joint_head() const { return variant == "no-po-joint"; }
  bool sequence_policy() const { return variant == "full" || variant == "no-po"; }
  bool factored_placement() const { return !joint_head(); }
  bool placement_leftover() const { return variant != "strict-online"; }

  void validate() const {
    if (d < 1 || M < 1 || d % M != 0) throw std::invalid_argument("need d divisible by M");
    if (layers < 1 || mlp_hidden < 1) throw std::invalid_argument("bad encoder sizes");
    if (C <= 0) throw std::invalid_argument("logit clamp must be positive");
    if (dims != 2 && dims != 3) throw std::invalid_argument("dims must be 2 or 3");
    bool variant_ok = variant == "full" || variant == "no-po" || variant == "no-po-joint" ||
                      variant == "no-seq" || variant == "no-seq-no-att" ||
                      variant == "strict-online";
    if (!variant_ok) throw std::invalid_argument("unknown model variant: " + variant);
    if (joint_head() && joint_n < 1)
      throw std::invalid_argument("joint head needs a fixed box count");
    bool fv_ok =
        (frontier_variant == "cnn-w10-2d" && dims == 2 && W == 10 && H == 1) ||
        (frontier_variant == "cnn-10x10-3d" && dims == 3 && W == 10 && H == 10) ||
        (frontier_variant == "cnn-100x100-3d" && dims == 3 && W == 100 && H == 100);
    if (!fv_ok)
      throw std::invalid_argument("frontier variant does not match bin cross-section: " +
                                  frontier_variant);
  }
};

template <typename S>
class Policy {
 public:
  ModelConfig cfg;
  ParamStore<S> params;

  Policy(ModelConfig c, Rng& rng) : cfg(std::move(c)) {
    cfg.validate();
    wire(&rng);
  }

  Policy(ModelConfig c, ParamStore<S> ps) : cfg(std::move(c)), params(std::move(ps)) {
    cfg.validate();
    wire(nullptr);
  }

  template <typename T>
  Policy<T> cast() const {
    return Policy<T>(cfg, params.template cast<T>());
  }

  // Per-episode forward state: box embeddings and decoder projections,
  // computed once and shared by every step on the same tape.
  struct Episode {
    int n = 0;
    int emb = -1;                    // [N, d]
    int gk = -1, gv = -1, lk = -1;   // glimpse keys/values, pointer logit keys
  };

  Episode start_episode(Tape<S>& t, const ProblemInstance& inst) {
    Episode ep;
    ep.n = inst.n();
    auto feats = normalize_features(inst);
    std::vector<S> x;
    x.reserve((std::size_t)ep.n * 3);
    for (const auto& row : feats)
      for (double v : row) x.push_back((S)v);
    int B = embed_.apply(params, t, t.constant({ep.n, 3}, x));
    const int h = cfg.head_dim();
    const S inv_sqrt_h = S(1.0 / std::sqrt((double)h));
    for (auto& blk : blocks_) {
      int z = blk.ln1.apply(params, t, B);
      if (cfg.attention_encoder()) {
        int Q = t.matmul(z, params.use(t, blk.wq));
        int K = t.matmul(z, params.use(t, blk.wk));
        int V = t.matmul(z, params.use(t, blk.wv));
        std::vector<int> heads;
        for (int m = 0; m < cfg.M; ++m) {
          int qm = t.slice_cols(Q, m * h, (m + 1) * h);
          int km = t.slice_cols(K, m * h, (m + 1) * h);
          int vm = t.slice_cols(V, m * h, (m + 1) * h);
          int attn = t.softmax_rows(t.scale(t.matmul(qm, t.transpose(km)), inv_sqrt_h));
          heads.push_back(t.matmul(attn, vm));
        }
        B = t.add(B, t.matmul(t.concat_cols(heads), params.use(t, blk.wo)));
      } else {
        B = t.add(B, blk.ff2.apply(params, t, t.relu(blk.ff1.apply(params, t, z))));
      }
      int z2 = blk.ln2.apply(params, t, B);
      B = t.add(B, blk.mlp2.apply(params, t, t.relu(blk.mlp1.apply(params, t, z2))));
    }
    ep.emb = B;
    if (cfg.sequence_policy() || cfg.joint_head()) {
      ep.gk = t.matmul(B, params.use(t, w_gk_));
      ep.gv = t.matmul(B, params.use(t, w_gv_));
    }
    if (cfg.sequence_policy()) ep.lk = t.matmul(B, params.use(t, w_lk_));
    return ep;
  }

  // Both frontier matrices scaled into [0, 1] by the bin length, stacked as
  // channels {previous, current}, then the variant's CNN. Returns [1, d].
  int frontier_embedding(Tape<S>& t, const PackState& st) {
    const int C = cfg.frontier_channels(), W = cfg.W, H = cfg.H;
    const S invL = S(1) / (S)st.bin().L;
    std::vector<S> buf((std::size_t)C * W * H);
    const auto& cur = st.frontier_cur();
    const auto& prev = st.frontier_prev();
    for (int y = 0; y < W; ++y)
      for (int z = 0; z < H; ++z) {
        std::size_t cell = (std::size_t)y * H + z;
        if (C == 2) {
          buf[cell] = (S)prev[cell] * invL;
          buf[(std::size_t)W * H + cell] = (S)cur[cell] * invL;
        } else {
          buf[cell] = (S)cur[cell] * invL;
        }
      }
    int x = cfg.dims == 2 ? t.constant({C, W}, buf) : t.constant({C, W, H}, buf);
    for (std::size_t i = 0; i < fconvs_.size(); ++i) {
      x = fconvs_[i].apply(params, t, x);
      x = t.relu(flns_[i].apply(params, t, x));
    }
    x = ffc_.apply(params, t, t.reshape(x, {1, (int)t.numel(x)}));
    return t.relu(ffc_ln_.apply(params, t, x));
  }

  // Box-selection distribution [N]; packed boxes carry exactly zero mass.
  int sequence_probs(Tape<S>& t, const Episode& ep, const std::vector<std::uint8_t>& packed,
                     int fnode) {
    std::vector<std::uint8_t> leftover = invert(packed);
    int qs = glimpse_query(t, ep, leftover, fnode);
    int qq = t.matmul(qs, params.use(t, w_gq_));
    int logits = t.reshape(t.matmul(ep.lk, t.transpose(qq)), {ep.n});
    logits = t.scale(logits, S(1.0 / std::sqrt((double)cfg.d)));
    logits = t.scale(t.tanh_(logits), (S)cfg.C);
    return t.softmax_rows(t.masked_fill(logits, leftover));
  }

  // Placement distribution [O*W] for box s_t; infeasible cells exactly zero.
  // packed_after must already include s_t.
  int placement_probs(Tape<S>& t, const Episode& ep, int s_t,
                      const std::vector<std::uint8_t>& packed_after, int fnode,
                      const std::vector<std::uint8_t>& feasible) {
    int sel = t.matmul(t.reshape(t.slice_row(ep.emb, s_t), {1, cfg.d}),
                       params.use(t, w_selected_));
    int fp = t.matmul(fnode, params.use(t, w_frontier_));
    int q;
    if (cfg.placement_leftover()) {
      int lm = t.masked_row_mean(ep.emb, invert(packed_after));  // zero vector at final step
      int lp = t.matmul(t.reshape(lm, {1, cfg.d}), params.use(t, w_p_leftover_));
      q = t.scale(t.add(t.add(sel, lp), fp), S(1) / S(3));
    } else {
      q = t.scale(t.add(sel, fp), S(0.5));
    }
    int h1 = t.relu(pln1_.apply(params, t, p1_.apply(params, t, q)));
    int h2 = t.relu(pln2_.apply(params, t, p2_.apply(params, t, h1)));
    int raw = t.reshape(pout_.apply(params, t, h2), {cfg.action_width()});
    int clamped = t.scale(t.tanh_(raw), (S)cfg.C);
    return t.softmax_rows(t.masked_fill(clamped, feasible));
  }

  // Joint distribution [N*O*W] over (box, orientation, y).
  int joint_probs(Tape<S>& t, const Episode& ep, const std::vector<std::uint8_t>& packed,
                  int fnode, const std::vector<std::uint8_t>& feasible) {
    if (ep.n != cfg.joint_n) throw std::invalid_argument("joint head is fixed to one box count");
    int qs = glimpse_query(t, ep, invert(packed), fnode);
    int h1 = t.relu(jln1_.apply(params, t, j1_.apply(params, t, qs)));
    int h2 = t.relu(jln2_.apply(params, t, j2_.apply(params, t, h1)));
    int raw = t.reshape(jout_.apply(params, t, h2), {cfg.joint_n * cfg.action_width()});
    int clamped = t.scale(t.tanh_(raw), (S)cfg.C);
    return t.softmax_rows(t.masked_fill(clamped, feasible));
  }

 private:
  struct EncBlock {
    LayerNorm<S> ln1, ln2;
    int wq = -1, wk = -1, wv = -1, wo = -1;
    Linear<S> ff1, ff2;
    Linear<S> mlp1, mlp2;
  };

  Linear<S> embed_;
  std::vector<EncBlock> blocks_;
  std::vector<Conv<S>> fconvs_;
  std::vector<LayerNorm<S>> flns_;
  Linear<S> ffc_;
  LayerNorm<S> ffc_ln_;
  int w_s_leftover_ = -1, w_selected_ = -1, w_p_leftover_ = -1, w_frontier_ = -1;
  int w_gk_ = -1, w_gv_ = -1, w_lk_ = -1, w_gq_ = -1;
  Linear<S> p1_, p2_, pout_;
  LayerNorm<S> pln1_, pln2_;
  Linear<S> j1_, j2_, jout_;
  LayerNorm<S> jln1_, jln2_;

  static std::vector<std::uint8_t> invert(const std::vector<std::uint8_t>& m) {
    std::vector<std::uint8_t> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
    return out;
  }

  // Mean of the two projected query components, then multi-head attention
  // over the unpacked box embeddings; returns the concatenated heads [1, d].
  int glimpse_query(Tape<S>& t, const Episode& ep, const std::vector<std::uint8_t>& leftover,
                    int fnode) {
    int lm = t.masked_row_mean(ep.emb, leftover);
    int q1 = t.matmul(t.reshape(lm, {1, cfg.d}), params.use(t, w_s_leftover_));
    int q2 = t.matmul(fnode, params.use(t, w_frontier_));
    int qbar = t.scale(t.add(q1, q2), S(0.5));
    const int h = cfg.head_dim();
    const S inv_sqrt_h = S(1.0 / std::sqrt((double)h));
    std::vector<int> heads;
    for (int m = 0; m < cfg.M; ++m) {
      int qm = t.slice_cols(qbar, m * h, (m + 1) * h);
      int km = t.slice_cols(ep.gk, m * h, (m + 1) * h);
      int vm = t.slice_cols(ep.gv, m * h, (m + 1) * h);
      int sc = t.scale(t.reshape(t.matmul(km, t.transpose(qm)), {ep.n}), inv_sqrt_h);
      int attn = t.softmax_rows(t.masked_fill(sc, leftover));
      heads.push_back(t.matmul(t.reshape(attn, {1, ep.n}), vm));
    }
    return t.concat_cols(heads);
  }

  // Creates (rng != nullptr) or re-binds (rng == nullptr) every parameter in
  // one fixed order so fresh models and checkpoint loads agree exactly.
  void wire(Rng* rng) {
    auto lin = [&](const std::string& name, int in, int out) {
      return rng ? Linear<S>::create(params, name, in, out, true, *rng)
                 : Linear<S>::attach(params, name);
    };
    auto ln = [&](const std::string& name, int group) {
      return rng ? LayerNorm<S>::create(params, name, group) : LayerNorm<S>::attach(params, name);
    };
    auto mat = [&](const std::string& name) {
      return rng ? params.add_uniform(name, {cfg.d, cfg.d}, cfg.d, *rng) : params.id(name);
    };
    const int d = cfg.d;

    embed_ = lin("embed", 3, d);
    blocks_.clear();
    for (int i = 0; i < cfg.layers; ++i) {
      EncBlock b;
      std::string p = "enc" + std::to_string(i);
      b.ln1 = ln(p + ".ln1", d);
      if (cfg.attention_encoder()) {
        b.wq = mat(p + ".att.q");
        b.wk = mat(p + ".att.k");
        b.wv = mat(p + ".att.v");
        b.wo = mat(p + ".att.o");
      } else {
        b.ff1 = lin(p + ".ff1", d, 2 * d);
        b.ff2 = lin(p + ".ff2", 2 * d, d);
      }
      b.ln2 = ln(p + ".ln2", d);
      b.mlp1 = lin(p + ".mlp1", d, cfg.mlp_hidden);
      b.mlp2 = lin(p + ".mlp2", cfg.mlp_hidden, d);
      blocks_.push_back(b);
    }

    fconvs_.clear();
    flns_.clear();
    const int C = cfg.frontier_channels();
    auto conv1 = [&](const std::string& name, int ci, int co, int k, int s, int p) {
      return rng ? Conv<S>::create1d(params, name, ci, co, k, s, p, *rng) : attach_conv(name, 1, p, s);
    };
    auto conv2 = [&](const std::string& name, int ci, int co, int k, int s, int p) {
      return rng ? Conv<S>::create2d(params, name, ci, co, k, s, p, *rng) : attach_conv(name, 2, p, s);
    };
    int flat = 0;
    if (cfg.frontier_variant == "cnn-w10-2d") {
      fconvs_.push_back(conv1("front.c0", C, 8, 3, 1, 1));
      flns_.push_back(ln("front.ln0", 8 * 10));
      flat = 80;
    } else if (cfg.frontier_variant == "cnn-10x10-3d") {
      fconvs_.push_back(conv2("front.c0", C, 8, 3, 1, 1));
      flns_.push_back(ln("front.ln0", 8 * 10 * 10));
      fconvs_.push_back(conv2("front.c1", 8, 8, 5, 1, 1));
      flns_.push_back(ln("front.ln1", 8 * 8 * 8));
      flat = 512;
    } else {  // cnn-100x100-3d
      fconvs_.push_back(conv2("front.c0", C, 4, 3, 2, 1));
      flns_.push_back(ln("front.ln0", 4 * 50 * 50));
      fconvs_.push_back(conv2("front.c1", 4, 4, 3, 2, 1));
      flns_.push_back(ln("front.ln1", 4 * 25 * 25));
      fconvs_.push_back(conv2("front.c2", 4, 4, 3, 2, 1));
      flns_.push_back(ln("front.ln2", 4 * 13 * 13));
      flat = 676;
    }
    ffc_ = lin("front.fc", flat, d);
    ffc_ln_ = ln("front.fcln", d);

    w_frontier_ = mat("q.frontier");
    if (cfg.sequence_policy() || cfg.joint_head()) {
      w_s_leftover_ = mat("q.s_leftover");
      w_gk_ = mat("glimpse.k");
      w_gv_ = mat("glimpse.v");
      w_gq_ = mat("glimpse.q");
    }
    if (cfg.sequence_policy()) w_lk_ = mat("glimpse.logit_k");
    if (cfg.factored_placement()) {
      w_selected_ = mat("q.selected");
      if (cfg.placement_leftover()) w_p_leftover_ = mat("q.p_leftover");
      p1_ = lin("place.fc1", d, d);
      pln1_ = ln("place.ln1", d);
      p2_ = lin("place.fc2", d, d);
      pln2_ = ln("place.ln2", d);
      pout_ = lin("place.out", d, cfg.action_width());
    } else {
      j1_ = lin("joint.fc1", d, d);
      jln1_ = ln("joint.ln1", d);
      j2_ = lin("joint.fc2", d, d);
      jln2_ = ln("joint.ln2", d);
      jout_ = lin("joint.out", d, cfg.joint_n * cfg.action_width());
    }
  }

  Conv<S> attach_conv(const std::string& name, int rank, int pad, int stride) {
    Conv<S> c;
    c.w = params.id(name + ".w");
    c.two_d = rank == 2;
    c.pad = pad;
    c.stride = stride;
    return c;
  }
};

}  // namespace binpack
