#pragma once
// REINFORCE with a frozen greedy-rollout baseline (paired t-test replacement)
// and prioritized oversampling of the worst-advantage samples, weighted by
// running advantage statistics. Each sampled episode records onto its own
// short-lived tape; gradients accumulate in the shared parameter store.

#include <binpack/checkpoint.hpp>
#include <binpack/datagen.hpp>
#include <binpack/model.hpp>
#include <binpack/rollout.hpp>

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace binpack {

// Momentum-tracked advantage statistics driving the oversampling weight.
struct RunningStats {
  double beta = 0.95;
  double a_plus = 0.0, b_plus = 0.0;  // positive-advantage mean and set size
  double a_po = 0.0, b_po = 0.0;      // collected worst-sample mean and size

  void update_plus(double count, double mean_adv);
  void update_po(double count, double mean_adv);
  // clamp(1 - a_plus/a_po, [0.5, 1.0]); 0.5 while a_po is zero or unset
  double eta() const;
};

struct TrainerConfig {
  int batch = 64;
  int po_batch = 4;
  bool po = true;
  double lr = 1e-3;
  // lr holds until lr_decay_start of the budget is spent, then falls linearly
  // to lr * lr_final_frac at the budget end
  double lr_final_frac = 1.0;
  double lr_decay_start = 0.0;
  double cost_scale = 3.0;
  double stats_beta = 0.95;
  double ttest_alpha = 0.05;
  long long max_episodes = 200000;
  int steps_per_epoch = 100;
  std::uint64_t seed = 1;
  bool permute_boxes = true;  // reshuffle box order per sampled episode

  void validate() const;
};

// Supplies the box order for fixed-sequence variants. rng is null during
// greedy evaluation; deterministic policies ignore it.
using OrderFn = std::function<std::vector<int>(const ProblemInstance&, Rng*)>;

struct EvalResult {
  double mean_utility = 0.0;
  double std_utility = 0.0;
  double mean_cost = 1.0;
  int aborted = 0;
  std::vector<double> costs;  // per instance, evaluation-set order
};

EvalResult greedy_eval(Policy<float>& pol, const std::vector<ProblemInstance>& set,
                       const OrderFn& order_fn = nullptr);

// One-sided paired t-test on cost differences (baseline - candidate): true iff
// the candidate improves significantly at level alpha. Zero spread degenerates
// to "replace iff the mean difference is positive".
bool baseline_should_replace(const std::vector<double>& baseline_costs,
                             const std::vector<double>& candidate_costs, double alpha);

struct StatsReplayResult {
  long long steps = 0;
  double max_abs_diff = 0.0;  // logged vs recomputed statistics and eta
  bool eta_in_range = true;   // every logged eta within [0.5, 1.0]
};

// Recomputes the running statistics from a metric log's recorded inputs and
// compares against the logged outputs line by line.
StatsReplayResult replay_stats_log(std::istream& log);

class Trainer {
 public:
  Trainer(const ModelConfig& mc, const TrainerConfig& tc,
          std::function<ProblemInstance(long long)> train_provider,
          std::vector<ProblemInstance> val_set, OrderFn order_fn = nullptr);

  // Runs until the episode budget is spent. Writes line-delimited JSON metric
  // records to `log` if non-null; records carry no timestamps so identical
  // seeds yield byte-identical logs.
  void train(std::ostream* log);

  // train() composes these; tests drive them directly.
  void main_step(std::ostream* log);
  void po_relearn(std::ostream* log);
  EvalResult epoch_eval(std::ostream* log);  // greedy eval + t-test + best retention
  void log_run_header(std::ostream* log);

  Policy<float>& policy() { return policy_; }
  Policy<float>& baseline_policy() { return baseline_; }
  Policy<float> best_policy() const { return Policy<float>(policy_.cfg, best_params_); }
  const RunningStats& stats() const { return stats_; }
  Adam<float>& main_opt() { return opt_main_; }
  Adam<float>& po_opt() { return opt_po_; }
  long long episodes() const { return episodes_; }
  long long step_count() const { return step_; }
  std::size_t po_buffer_size() const { return po_buffer_.size(); }
  double best_utility() const { return best_utility_; }
  double last_eval_mean() const { return last_eval_mean_; }

  Checkpoint snapshot();             // full training state
  void restore(const Checkpoint&);   // inverse of snapshot

 private:
  struct PoEntry {
    ProblemInstance inst;
    double weight = 0.5;  // 1 - eta at collection time
    std::vector<int> order;
  };

  std::vector<int> order_for(const ProblemInstance& inst, Rng* rng);
  double greedy_cost(Policy<float>& pol, const ProblemInstance& inst,
                     const std::vector<int>& order);
  double scheduled_lr() const;  // linear in episodes spent, lr -> lr * lr_final_frac

  ModelConfig model_cfg_;
  TrainerConfig cfg_;
  std::function<ProblemInstance(long long)> provider_;
  std::vector<ProblemInstance> val_;
  OrderFn order_fn_;
  Rng rng_;
  Policy<float> policy_;
  Policy<float> baseline_;
  ParamStore<float> best_params_;
  Adam<float> opt_main_, opt_po_;
  RunningStats stats_;
  std::vector<PoEntry> po_buffer_;
  std::vector<double> baseline_eval_costs_;
  long long episodes_ = 0;
  long long step_ = 0;
  long long next_train_idx_ = 0;
  double best_utility_ = -1.0;
  double last_eval_mean_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace binpack
