#pragma once
// Episode drivers: sampled, greedy, and replayed rollouts. One episode is one
// forward pass over a caller-provided tape; log-probability nodes are returned
// so the trainer can assemble policy-gradient losses on the same tape.

#include <binpack/model.hpp>
#include <binpack/packer.hpp>
#include <binpack/rng.hpp>

#include <array>
#include <vector>

namespace binpack {

enum class DecodeMode { Sample, Greedy, Replay };

struct RolloutOptions {
  DecodeMode mode = DecodeMode::Greedy;
  Rng* rng = nullptr;                               // Sample
  const std::vector<std::array<int, 3>>* replay = nullptr;  // Replay: (s,o,y) per step
  const std::vector<int>* order = nullptr;          // fixed box order (no-seq variants)
};

struct EpisodeOutcome {
  std::vector<std::array<int, 3>> actions;
  std::vector<int> logp_nodes;  // tape nodes, one per decoded distribution
  double utility = 0.0;
  double cost = 1.0;
  bool aborted = false;
  Configuration config;  // valid iff !aborted
};

template <typename S>
std::size_t decode_pick(DecodeMode mode, const Tape<S>& t, int probs_node, Rng* rng,
                        std::size_t replay_idx) {
  const S* p = t.value(probs_node);
  const std::size_t n = t.numel(probs_node);
  switch (mode) {
    case DecodeMode::Greedy: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (p[i] > p[best]) best = i;
      return best;
    }
    case DecodeMode::Sample: {
      if (!rng) throw std::invalid_argument("sampled decoding needs an rng");
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = (double)p[i];
      return rng->discrete(w);
    }
    case DecodeMode::Replay:
      if (replay_idx >= n) throw std::invalid_argument("replay action out of range");
      return replay_idx;
  }
  throw std::logic_error("unhandled decode mode");
}

template <typename S>
EpisodeOutcome run_episode(Policy<S>& pol, const ProblemInstance& inst, Tape<S>& t,
                           const RolloutOptions& opt) {
  const int n = inst.n();
  const int W = pol.cfg.W;
  const int OW = pol.cfg.action_width();
  if (opt.mode == DecodeMode::Replay && (!opt.replay || (int)opt.replay->size() != n))
    throw std::invalid_argument("replay needs exactly one action per box");
  if (!pol.cfg.sequence_policy() && !pol.cfg.joint_head() && opt.order &&
      (int)opt.order->size() != n)
    throw std::invalid_argument("fixed order needs exactly one entry per box");

  auto ep = pol.start_episode(t, inst);
  PackState st(inst);
  EpisodeOutcome out;
  std::vector<std::uint8_t> packed((std::size_t)n, 0);

  for (int step = 0; step < n; ++step) {
    int fnode = pol.frontier_embedding(t, st);
    int s, o, y;
    if (pol.cfg.joint_head()) {
      std::vector<std::uint8_t> feas((std::size_t)n * OW, 0);
      bool any = false;
      for (int b = 0; b < n; ++b) {
        if (packed[(std::size_t)b]) continue;
        auto m = st.placement_mask(b);
        for (int i = 0; i < OW; ++i) {
          feas[(std::size_t)b * OW + i] = m[(std::size_t)i];
          any = any || m[(std::size_t)i];
        }
      }
      if (!any) {
        out.aborted = true;
        break;
      }
      int probs = pol.joint_probs(t, ep, packed, fnode, feas);
      std::size_t ridx = 0;
      if (opt.mode == DecodeMode::Replay) {
        const auto& a = (*opt.replay)[(std::size_t)step];
        ridx = (std::size_t)a[0] * OW + (std::size_t)a[1] * W + (std::size_t)a[2];
      }
      std::size_t idx = decode_pick(opt.mode, t, probs, opt.rng, ridx);
      out.logp_nodes.push_back(t.log_prob(probs, idx));
      s = (int)(idx / (std::size_t)OW);
      o = (int)(idx % (std::size_t)OW) / W;
      y = (int)(idx % (std::size_t)OW) % W;
    } else {
      if (pol.cfg.sequence_policy()) {
        int sprobs = pol.sequence_probs(t, ep, packed, fnode);
        std::size_t ridx =
            opt.mode == DecodeMode::Replay ? (std::size_t)(*opt.replay)[(std::size_t)step][0] : 0;
        std::size_t sidx = decode_pick(opt.mode, t, sprobs, opt.rng, ridx);
        out.logp_nodes.push_back(t.log_prob(sprobs, sidx));
        s = (int)sidx;
      } else if (opt.mode == DecodeMode::Replay) {
        s = (*opt.replay)[(std::size_t)step][0];
      } else {
        s = opt.order ? (*opt.order)[(std::size_t)step] : step;
      }
      auto mask = st.placement_mask(s);
      bool any = false;
      for (auto b : mask) any = any || b;
      if (!any) {
        out.aborted = true;
        break;
      }
      std::vector<std::uint8_t> packed_after = packed;
      packed_after[(std::size_t)s] = 1;
      int pprobs = pol.placement_probs(t, ep, s, packed_after, fnode, mask);
      std::size_t ridx = 0;
      if (opt.mode == DecodeMode::Replay) {
        const auto& a = (*opt.replay)[(std::size_t)step];
        ridx = (std::size_t)a[1] * W + (std::size_t)a[2];
      }
      std::size_t pidx = decode_pick(opt.mode, t, pprobs, opt.rng, ridx);
      out.logp_nodes.push_back(t.log_prob(pprobs, pidx));
      o = (int)(pidx / (std::size_t)W);
      y = (int)(pidx % (std::size_t)W);
    }
    st.apply(s, o, y);
    packed[(std::size_t)s] = 1;
    out.actions.push_back({s, o, y});
  }

  if (!out.aborted) {
    out.config = st.configuration();
    out.utility = utility(out.config);
    out.cost = 1.0 - out.utility;
  }
  return out;
}

}  // namespace binpack
