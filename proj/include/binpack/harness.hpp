#pragma once
// Experiment harness: variant wiring (including order policies), non-learned
// baselines, evaluation reports, reproducibility manifests, and the oracle
// selftest shared with the acceptance gate.

#include <binpack/datagen.hpp>
#include <binpack/trainer.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace binpack {

// Descending volume; ties broken by descending w/h, then descending l/w;
// stable on full ties.
std::vector<int> sorted_order(const ProblemInstance& inst);

// Non-learned packer: boxes in sorted order, each placed at the (o, y) whose
// placement minimizes (resulting packed length, z, x, y, o) lexicographically.
Configuration sorted_heuristic_pack(const ProblemInstance& inst);

// Boxes in input order, uniform choice among feasible (o, y) actions.
Configuration random_feasible_pack(const ProblemInstance& inst, Rng& rng);

// Order policy for fixed-sequence variants; null for learned sequencing.
OrderFn order_fn_for(const std::string& variant);

struct ExperimentConfig {
  std::string name = "run";
  std::string variant = "full";  // accepts aliases random-order / sorted-order
  DatasetSpec train_data;
  DatasetSpec val_data;
  DatasetSpec test_data;
  ModelConfig model;
  TrainerConfig trainer;

  // Fills model bin/variant fields from the dataset and variant, turns PO off
  // for every variant except full, then validates everything.
  void finalize();
};

ExperimentConfig experiment_from_json(const std::string& text);
std::string experiment_to_json(const ExperimentConfig& cfg);

struct FullEval {
  EvalResult base;
  double mean_rr = 0.0;
  double mean_rl = 0.0;           // meaningful for 2D only
  double mean_online_count = 0.0; // populated when trim_cube is given
  double mean_online_util = 0.0;
  int evaluated = 0;
};

FullEval full_eval(Policy<float>& pol, const std::vector<ProblemInstance>& set,
                   const OrderFn& order_fn = nullptr, const BinSpec* trim_cube = nullptr);

// Same metrics for a non-learned packer (heuristic or random baseline).
FullEval full_eval_packer(const std::function<Configuration(const ProblemInstance&)>& pack,
                          const std::vector<ProblemInstance>& set,
                          const BinSpec* trim_cube = nullptr);

struct RunResult {
  double best_val_utility = 0.0;
  FullEval test_eval;
  double wall_seconds = 0.0;  // reported in the manifest, never in metric logs
  std::string log_path, checkpoint_path, manifest_path, report_path;
};

// Trains per config, evaluates the best checkpoint on the held-out test set,
// and writes log/checkpoint/manifest/report files under out_dir.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

// {git-describe, config hash, seeds, dataset checksums}
std::string manifest_json(const ExperimentConfig& cfg);

// --- oracle selftest --------------------------------------------------------

// Independent brute-force placement oracle: enumerates every (x, z), keeps
// in-bounds drop-consistent non-overlapping candidates, returns the (x, z)
// lexicographic minimum.
std::optional<std::pair<int, int>> brute_force_locate(const PackState& st,
                                                      const BoxDims& oriented, int y);

struct SelftestResult {
  bool ok = true;
  std::vector<std::string> lines;  // one "ok:"/"FAIL:" line per suite
};

// Geometry brute-force equivalence, toy-model gradient check, and cut-dataset
// conservation/replay. Sizes are scaled for seconds, not minutes.
SelftestResult run_selftest();

}  // namespace binpack
