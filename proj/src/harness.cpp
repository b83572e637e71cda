#include <binpack/harness.hpp>
#include <binpack/io.hpp>
#include <binpack/rollout.hpp>
#include <binpack/version.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <tuple>

namespace binpack {

using json = nlohmann::json;

// --- order policies and non-learned baselines ------------------------------

std::vector<int> sorted_order(const ProblemInstance& inst) {
  std::vector<int> idx((std::size_t)inst.n());
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [&](int i) {
    const BoxDims& b = inst.boxes[(std::size_t)i];
    return std::tuple<long long, double, double>(b.volume(), (double)b.w / (double)b.h,
                                                 (double)b.l / (double)b.w);
  };
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) > key(b); });
  return idx;
}

Configuration sorted_heuristic_pack(const ProblemInstance& inst) {
  PackState st(inst);
  const BinSpec& bin = inst.bin;
  const int O = orientation_count(bin.dims);
  for (int s : sorted_order(inst)) {
    // smallest (resulting packed length, z, x, y, o) wins
    std::tuple<long long, int, int, int, int> best;
    bool found = false;
    int best_y = 0, best_o = 0;
    for (int o = 0; o < O; ++o) {
      BoxDims od = orient(inst.boxes[(std::size_t)s], o, bin.dims);
      if (od.w > bin.W || od.h > bin.H) continue;
      for (int y = 0; y + od.w <= bin.W; ++y) {
        auto loc = st.locate(od, y);
        if (!loc) continue;
        auto [x, z] = *loc;
        long long new_lc = std::max(st.x_max(), (long long)x + od.l);
        std::tuple<long long, int, int, int, int> cand{new_lc, z, x, y, o};
        if (!found || cand < best) {
          best = cand;
          best_y = y;
          best_o = o;
          found = true;
        }
      }
    }
    if (!found) throw contract_error("heuristic found no feasible placement for box " +
                                     std::to_string(s));
    st.apply(s, best_o, best_y);
  }
  return st.configuration();
}

Configuration random_feasible_pack(const ProblemInstance& inst, Rng& rng) {
  PackState st(inst);
  const int W = inst.bin.W;
  for (int s = 0; s < inst.n(); ++s) {
    auto mask = st.placement_mask(s);
    std::vector<int> feas;
    for (int i = 0; i < (int)mask.size(); ++i)
      if (mask[(std::size_t)i]) feas.push_back(i);
    if (feas.empty())
      throw contract_error("no feasible placement for box " + std::to_string(s));
    int pick = feas[(std::size_t)rng.below(feas.size())];
    st.apply(s, pick / W, pick % W);
  }
  return st.configuration();
}

OrderFn order_fn_for(const std::string& variant) {
  if (variant == "sorted-order")
    return [](const ProblemInstance& inst, Rng*) { return sorted_order(inst); };
  if (variant == "random-order")
    return [](const ProblemInstance& inst, Rng* rng) {
      std::vector<int> order((std::size_t)inst.n());
      std::iota(order.begin(), order.end(), 0);
      if (rng) rng->shuffle(order);  // evaluation keeps the (already shuffled) input order
      return order;
    };
  return nullptr;
}

// --- experiment configuration ----------------------------------------------

void ExperimentConfig::finalize() {
  model.variant = canonical_variant(variant);
  model.dims = train_data.dims;
  model.W = train_data.W;
  model.H = train_data.H;
  model.frontier_variant = model.dims == 2
                               ? "cnn-w10-2d"
                               : (model.W == 100 ? "cnn-100x100-3d" : "cnn-10x10-3d");
  if (model.joint_head()) model.joint_n = train_data.n;
  trainer.po = model.variant == "full";

  train_data.validate();
  val_data.validate();
  test_data.validate();
  model.validate();
  trainer.validate();
  for (const DatasetSpec* ds : {&val_data, &test_data})
    if (ds->dims != train_data.dims || ds->W != train_data.W || ds->H != train_data.H)
      throw std::invalid_argument("validation/test bins must match the training bin");
}

namespace {

json dataset_to_json(const DatasetSpec& ds) {
  return json{{"kind", ds.kind},     {"dims", ds.dims},
              {"W", ds.W},           {"H", ds.H},
              {"n", ds.n},           {"edge_min", ds.edge_min},
              {"edge_max", ds.edge_max}, {"count", ds.count},
              {"seed", ds.seed}};
}

DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec ds;
  ds.kind = j.value("kind", ds.kind);
  ds.dims = j.value("dims", ds.dims);
  ds.W = j.value("W", ds.W);
  ds.H = j.value("H", ds.H);
  ds.n = j.value("n", ds.n);
  ds.edge_min = j.value("edge_min", ds.edge_min);
  ds.edge_max = j.value("edge_max", ds.edge_max);
  ds.count = j.value("count", ds.count);
  ds.seed = j.value("seed", ds.seed);
  return ds;
}

}  // namespace

std::string experiment_to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["variant"] = cfg.variant;
  j["train_data"] = dataset_to_json(cfg.train_data);
  j["val_data"] = dataset_to_json(cfg.val_data);
  j["test_data"] = dataset_to_json(cfg.test_data);
  j["model"] = {{"d", cfg.model.d},
                {"M", cfg.model.M},
                {"layers", cfg.model.layers},
                {"mlp_hidden", cfg.model.mlp_hidden},
                {"C", cfg.model.C},
                {"latest_frontier_only", cfg.model.latest_frontier_only}};
  j["trainer"] = {{"batch", cfg.trainer.batch},
                  {"po_batch", cfg.trainer.po_batch},
                  {"lr", cfg.trainer.lr},
                  {"lr_final_frac", cfg.trainer.lr_final_frac},
                  {"lr_decay_start", cfg.trainer.lr_decay_start},
                  {"cost_scale", cfg.trainer.cost_scale},
                  {"stats_beta", cfg.trainer.stats_beta},
                  {"ttest_alpha", cfg.trainer.ttest_alpha},
                  {"max_episodes", cfg.trainer.max_episodes},
                  {"steps_per_epoch", cfg.trainer.steps_per_epoch},
                  {"seed", cfg.trainer.seed},
                  {"permute_boxes", cfg.trainer.permute_boxes}};
  return j.dump(2);
}

ExperimentConfig experiment_from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  cfg.variant = j.value("variant", cfg.variant);
  if (j.contains("train_data")) cfg.train_data = dataset_from_json(j["train_data"]);
  if (j.contains("val_data")) cfg.val_data = dataset_from_json(j["val_data"]);
  if (j.contains("test_data")) cfg.test_data = dataset_from_json(j["test_data"]);
  if (j.contains("model")) {
    const json& m = j["model"];
    cfg.model.d = m.value("d", cfg.model.d);
    cfg.model.M = m.value("M", cfg.model.M);
    cfg.model.layers = m.value("layers", cfg.model.layers);
    cfg.model.mlp_hidden = m.value("mlp_hidden", cfg.model.mlp_hidden);
    cfg.model.C = m.value("C", cfg.model.C);
    cfg.model.latest_frontier_only =
        m.value("latest_frontier_only", cfg.model.latest_frontier_only);
  }
  if (j.contains("trainer")) {
    const json& t = j["trainer"];
    cfg.trainer.batch = t.value("batch", cfg.trainer.batch);
    cfg.trainer.po_batch = t.value("po_batch", cfg.trainer.po_batch);
    cfg.trainer.lr = t.value("lr", cfg.trainer.lr);
    cfg.trainer.lr_final_frac = t.value("lr_final_frac", cfg.trainer.lr_final_frac);
    cfg.trainer.lr_decay_start = t.value("lr_decay_start", cfg.trainer.lr_decay_start);
    cfg.trainer.cost_scale = t.value("cost_scale", cfg.trainer.cost_scale);
    cfg.trainer.stats_beta = t.value("stats_beta", cfg.trainer.stats_beta);
    cfg.trainer.ttest_alpha = t.value("ttest_alpha", cfg.trainer.ttest_alpha);
    cfg.trainer.max_episodes = t.value("max_episodes", cfg.trainer.max_episodes);
    cfg.trainer.steps_per_epoch = t.value("steps_per_epoch", cfg.trainer.steps_per_epoch);
    cfg.trainer.seed = t.value("seed", cfg.trainer.seed);
    cfg.trainer.permute_boxes = t.value("permute_boxes", cfg.trainer.permute_boxes);
  }
  return cfg;
}

// --- evaluation -------------------------------------------------------------

namespace {

void accumulate_metrics(FullEval& fe, const Configuration& config, const BinSpec* trim_cube,
                        int dims) {
  fe.mean_rr += reward_rr(config);
  if (dims == 2) fe.mean_rl += reward_l(config);
  if (trim_cube) {
    TrimResult tr = online_trim(config, *trim_cube);
    fe.mean_online_count += (double)tr.kept;
    fe.mean_online_util += tr.trimmed_utility;
  }
  ++fe.evaluated;
}

void finalize_metrics(FullEval& fe, const std::vector<double>& utils) {
  const double n = (double)utils.size();
  if (n > 0) {
    double sum = 0.0;
    for (double u : utils) sum += u;
    fe.base.mean_utility = sum / n;
    double sq = 0.0;
    for (double u : utils) sq += (u - fe.base.mean_utility) * (u - fe.base.mean_utility);
    fe.base.std_utility = std::sqrt(sq / n);
    double c = 0.0;
    for (double v : fe.base.costs) c += v;
    fe.base.mean_cost = c / n;
  }
  if (fe.evaluated > 0) {
    fe.mean_rr /= (double)fe.evaluated;
    fe.mean_rl /= (double)fe.evaluated;
    fe.mean_online_count /= (double)fe.evaluated;
    fe.mean_online_util /= (double)fe.evaluated;
  }
}

}  // namespace

FullEval full_eval(Policy<float>& pol, const std::vector<ProblemInstance>& set,
                   const OrderFn& order_fn, const BinSpec* trim_cube) {
  FullEval fe;
  std::vector<double> utils;
  utils.reserve(set.size());
  for (const auto& inst : set) {
    Tape<float> t;
    t.set_recording(false);
    RolloutOptions opt;
    opt.mode = DecodeMode::Greedy;
    std::vector<int> order;
    if (!pol.cfg.sequence_policy() && !pol.cfg.joint_head()) {
      if (order_fn) order = order_fn(inst, nullptr);
      if ((int)order.size() != inst.n()) {
        order.resize((std::size_t)inst.n());
        std::iota(order.begin(), order.end(), 0);
      }
      opt.order = &order;
    }
    auto out = run_episode(pol, inst, t, opt);
    fe.base.costs.push_back(out.cost);
    fe.base.aborted += out.aborted ? 1 : 0;
    utils.push_back(out.utility);
    if (!out.aborted) accumulate_metrics(fe, out.config, trim_cube, inst.bin.dims);
  }
  finalize_metrics(fe, utils);
  return fe;
}

FullEval full_eval_packer(const std::function<Configuration(const ProblemInstance&)>& pack,
                          const std::vector<ProblemInstance>& set, const BinSpec* trim_cube) {
  FullEval fe;
  std::vector<double> utils;
  utils.reserve(set.size());
  for (const auto& inst : set) {
    Configuration config = pack(inst);
    double u = utility(config);
    fe.base.costs.push_back(1.0 - u);
    utils.push_back(u);
    accumulate_metrics(fe, config, trim_cube, inst.bin.dims);
  }
  finalize_metrics(fe, utils);
  return fe;
}

// --- experiment driver ------------------------------------------------------

std::string manifest_json(const ExperimentConfig& cfg) {
  auto dataset_checksum = [](const DatasetSpec& ds) {
    std::string text;
    for (const auto& rec : generate_dataset(ds)) text += instance_to_json(rec) + "\n";
    return text_checksum_hex(text);
  };
  json m;
  m["git_describe"] = kGitDescribe;
  m["config_hash"] = text_checksum_hex(experiment_to_json(cfg));
  m["seeds"] = {{"trainer", cfg.trainer.seed},
                {"train_data", cfg.train_data.seed},
                {"val_data", cfg.val_data.seed},
                {"test_data", cfg.test_data.seed}};
  m["dataset_checksums"] = {{"train_spec", text_checksum_hex(dataset_to_json(cfg.train_data).dump())},
                            {"val", dataset_checksum(cfg.val_data)},
                            {"test", dataset_checksum(cfg.test_data)}};
  return m.dump(2);
}

RunResult run_experiment(const ExperimentConfig& raw, const std::string& out_dir) {
  ExperimentConfig cfg = raw;
  cfg.finalize();
  std::filesystem::create_directories(out_dir);

  DatasetSpec train_spec = cfg.train_data;
  auto provider = [train_spec](long long idx) {
    return generate_instance(train_spec, (std::uint64_t)idx).instance;
  };
  auto strip = [](std::vector<InstanceRecord> recs) {
    std::vector<ProblemInstance> out;
    out.reserve(recs.size());
    for (auto& r : recs) out.push_back(std::move(r.instance));
    return out;
  };
  std::vector<ProblemInstance> val = strip(generate_dataset(cfg.val_data));
  std::vector<ProblemInstance> test = strip(generate_dataset(cfg.test_data));

  OrderFn ofn = order_fn_for(cfg.variant);
  Trainer tr(cfg.model, cfg.trainer, provider, val, ofn);

  RunResult res;
  res.log_path = out_dir + "/" + cfg.name + ".log.jsonl";
  res.checkpoint_path = out_dir + "/" + cfg.name + ".ckpt";
  res.manifest_path = out_dir + "/" + cfg.name + ".manifest.json";
  res.report_path = out_dir + "/" + cfg.name + ".report.json";

  auto t0 = std::chrono::steady_clock::now();
  {
    std::ofstream log(res.log_path);
    if (!log) throw contract_error("cannot write " + res.log_path);
    tr.train(&log);
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.best_val_utility = tr.best_utility();

  Checkpoint ck = tr.snapshot();
  {
    json extra = json::parse(ck.extra);
    extra["experiment"] = json::parse(experiment_to_json(cfg));
    ck.extra = extra.dump();
  }
  save_checkpoint(res.checkpoint_path, ck);

  Policy<float> best = tr.best_policy();
  BinSpec cube{cfg.model.W, cfg.model.H, cfg.model.W, 3};
  const BinSpec* trim = cfg.model.variant == "strict-online" && cfg.model.dims == 3 &&
                                cfg.model.W == cfg.model.H
                            ? &cube
                            : nullptr;
  res.test_eval = full_eval(best, test, ofn, trim);

  write_text_file(res.manifest_path, manifest_json(cfg));

  json report;
  report["variant"] = cfg.variant;
  report["dataset"] = dataset_to_json(cfg.train_data);
  report["test_mean_utility"] = res.test_eval.base.mean_utility;
  report["test_std_utility"] = res.test_eval.base.std_utility;
  report["test_mean_rr"] = res.test_eval.mean_rr;
  if (cfg.model.dims == 2) report["test_mean_rl"] = res.test_eval.mean_rl;
  if (trim) {
    report["test_online_count"] = res.test_eval.mean_online_count;
    report["test_online_utility"] = res.test_eval.mean_online_util;
  }
  report["best_val_utility"] = res.best_val_utility;
  report["episodes"] = tr.episodes();
  report["wall_seconds"] = res.wall_seconds;
  write_text_file(res.report_path, report.dump(2));
  return res;
}

// --- oracle selftest --------------------------------------------------------

std::optional<std::pair<int, int>> brute_force_locate(const PackState& st,
                                                      const BoxDims& od, int y) {
  const BinSpec& bin = st.bin();
  if (y < 0 || od.w > bin.W - y || od.h > bin.H) return std::nullopt;
  for (int x = 0; (long long)x + od.l <= bin.L; ++x) {
    // drop height from the placement list alone
    int z = 0;
    for (const auto& p : st.placed()) {
      bool fx = x < p.x + p.dims.l && p.x < x + od.l;
      bool fy = y < p.y + p.dims.w && p.y < y + od.w;
      if (fx && fy) z = std::max(z, p.z + p.dims.h);
    }
    if (z + od.h > bin.H) continue;
    bool overlap = false;
    for (const auto& p : st.placed()) {
      bool ox = x < p.x + p.dims.l && p.x < x + od.l;
      bool oy = y < p.y + p.dims.w && p.y < y + od.w;
      bool oz = z < p.z + p.dims.h && p.z < z + od.h;
      if (ox && oy && oz) {
        overlap = true;
        break;
      }
    }
    if (!overlap) return std::make_pair(x, z);
  }
  return std::nullopt;
}

namespace {

std::string geometry_suite(int instances, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0);
  long long checked = 0;
  for (int i = 0; i < instances; ++i) {
    int dims = rng.below(2) == 0 ? 2 : 3;
    int W = (int)rng.uniform_int(2, 8);
    int H = dims == 2 ? 1 : (int)rng.uniform_int(2, 8);
    int n = (int)rng.uniform_int(1, 5);
    int emax = std::max(2, std::min(W, dims == 2 ? W : H));
    ProblemInstance inst;
    inst.id = "self-" + std::to_string(i);
    for (int b = 0; b < n; ++b)
      inst.boxes.push_back(canonicalize({(int)rng.uniform_int(1, emax),
                                         (int)rng.uniform_int(1, emax),
                                         dims == 2 ? 1 : (int)rng.uniform_int(1, emax)},
                                        dims));
    inst.bin = bin_for_boxes(inst.boxes, W, H, dims);

    PackState st(inst);
    const int O = orientation_count(dims);
    for (int t = 0; t < n; ++t) {
      int s = -1;
      for (int k = 0; k < n; ++k)
        if (!st.is_packed(k)) {
          s = k;
          break;
        }
      auto mask = st.placement_mask(s);
      std::vector<int> feas;
      for (int o = 0; o < O; ++o) {
        BoxDims od = orient(inst.boxes[(std::size_t)s], o, dims);
        for (int y = 0; y < W; ++y) {
          auto bf = brute_force_locate(st, od, y);
          bool m = mask[(std::size_t)(o * W + y)] != 0;
          if (m != bf.has_value())
            return "mask/brute-force disagree at instance " + inst.id;
          if (bf) {
            auto loc = st.locate(od, y);
            if (!loc || *loc != *bf) return "locate/brute-force disagree at instance " + inst.id;
            feas.push_back(o * W + y);
          }
          ++checked;
        }
      }
      if (feas.empty()) return "no feasible action at instance " + inst.id;
      int pick = feas[(std::size_t)rng.below(feas.size())];
      st.apply(s, pick / W, pick % W);
      auto chk = check_state(st);
      if (!chk.ok) return "invariant violation: " + chk.detail;
    }
  }
  return "";  // empty = pass
}

std::string gradient_suite() {
  ModelConfig mc;
  mc.d = 8;
  mc.M = 2;
  mc.layers = 1;
  mc.mlp_hidden = 16;
  mc.dims = 3;
  mc.W = 10;
  mc.H = 10;
  mc.frontier_variant = "cnn-10x10-3d";
  Rng rng = Rng::stream(61, 0);
  Policy<double> pol(mc, rng);
  Rng jit = Rng::stream(610, 0);
  for (int i = 0; i < pol.params.count(); ++i)
    for (auto& v : pol.params.entry(i).v) v += jit.uniform_real(-0.05, 0.05);

  ProblemInstance inst;
  inst.id = "grad";
  inst.boxes = {{2, 3, 4}, {1, 1, 6}, {5, 5, 5}};
  inst.bin = bin_for_boxes(inst.boxes, 10, 10, 3);

  Policy<float> fpol = pol.cast<float>();
  Tape<float> probe;
  probe.set_recording(false);
  RolloutOptions gopt;
  gopt.mode = DecodeMode::Greedy;
  auto ref = run_episode(fpol, inst, probe, gopt);

  RolloutOptions replay;
  replay.mode = DecodeMode::Replay;
  replay.replay = &ref.actions;
  auto loss_of = [&](bool backward) {
    Tape<double> t;
    if (!backward) t.set_recording(false);
    auto out = run_episode(pol, inst, t, replay);
    int total = out.logp_nodes.at(0);
    for (std::size_t i = 1; i < out.logp_nodes.size(); ++i)
      total = t.add(total, out.logp_nodes[i]);
    int loss = t.scale(total, -1.0);
    if (backward) t.backward(loss);
    return t.value(loss)[0];
  };
  pol.params.zero_grad();
  loss_of(true);
  auto rep = grad_check(pol.params, [&] { return loss_of(false); }, 6, 1e-5);
  if (rep.coords < 200) return "sampled only " + std::to_string(rep.coords) + " coordinates";
  if (rep.max_rel_err > 1e-3)
    return "max relative error " + std::to_string(rep.max_rel_err) + " at " + rep.worst;
  return "";
}

std::string cut_suite(int per_dims) {
  for (int dims : {2, 3}) {
    DatasetSpec spec;
    spec.kind = "cut";
    spec.dims = dims;
    spec.W = 10;
    spec.H = dims == 2 ? 1 : 10;
    spec.n = 10;
    spec.seed = 902 + (std::uint64_t)dims;
    long long bin_volume = (long long)spec.W * spec.H * spec.edge_max;
    for (int i = 0; i < per_dims; ++i) {
      auto rec = generate_instance(spec, (std::uint64_t)i);
      long long total = 0;
      for (const auto& b : rec.instance.boxes) total += b.volume();
      if (total != bin_volume)
        return "volume not conserved at " + rec.instance.id;
      auto config = replay_certificate(rec);
      if (!utility_is_exact_one(config))
        return "certificate replay not gap-free at " + rec.instance.id;
    }
  }
  return "";
}

}  // namespace

SelftestResult run_selftest() {
  SelftestResult res;
  auto gate = [&](const std::string& name, const std::string& err) {
    res.lines.push_back(err.empty() ? "ok: " + name : "FAIL: " + name + " - " + err);
    if (!err.empty()) res.ok = false;
  };
  gate("geometry matches brute force", geometry_suite(120, 1234));
  gate("policy gradient matches finite differences", gradient_suite());
  gate("cut datasets conserve volume and replay gap-free", cut_suite(100));
  return res;
}

}  // namespace binpack
