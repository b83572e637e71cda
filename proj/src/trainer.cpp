#include <binpack/io.hpp>
#include <binpack/trainer.hpp>

#include <json.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace binpack {

using json = nlohmann::json;

// --- running statistics ---------------------------------------------------

void RunningStats::update_plus(double count, double mean_adv) {
  double denom = beta * b_plus + (1.0 - beta) * count;
  if (denom > 0.0)
    a_plus = (beta * b_plus * a_plus + (1.0 - beta) * count * mean_adv) / denom;
  b_plus = beta * b_plus + (1.0 - beta) * count;
}

void RunningStats::update_po(double count, double mean_adv) {
  double denom = beta * b_po + (1.0 - beta) * count;
  if (denom > 0.0) a_po = (beta * b_po * a_po + (1.0 - beta) * count * mean_adv) / denom;
  b_po = beta * b_po + (1.0 - beta) * count;
}

double RunningStats::eta() const {
  if (a_po == 0.0) return 0.5;
  return std::max(std::min(1.0 - a_plus / a_po, 1.0), 0.5);
}

// --- config ---------------------------------------------------------------

void TrainerConfig::validate() const {
  if (batch < 1) throw std::invalid_argument("batch must be positive");
  if (po && (po_batch < 1 || po_batch > batch))
    throw std::invalid_argument("po_batch must be in [1, batch]");
  if (lr <= 0.0 || cost_scale <= 0.0) throw std::invalid_argument("lr and cost scale must be positive");
  if (lr_final_frac <= 0.0 || lr_final_frac > 1.0)
    throw std::invalid_argument("lr_final_frac must be in (0, 1]");
  if (lr_decay_start < 0.0 || lr_decay_start >= 1.0)
    throw std::invalid_argument("lr_decay_start must be in [0, 1)");
  if (stats_beta <= 0.0 || stats_beta >= 1.0)
    throw std::invalid_argument("stats momentum must be in (0, 1)");
  if (ttest_alpha <= 0.0 || ttest_alpha >= 0.5)
    throw std::invalid_argument("t-test level must be in (0, 0.5)");
  if (max_episodes < 0) throw std::invalid_argument("episode budget must be non-negative");
  if (steps_per_epoch < 1) throw std::invalid_argument("steps_per_epoch must be positive");
}

// --- evaluation and baseline test -----------------------------------------

EvalResult greedy_eval(Policy<float>& pol, const std::vector<ProblemInstance>& set,
                       const OrderFn& order_fn) {
  EvalResult ev;
  ev.costs.reserve(set.size());
  if (set.empty()) return ev;
  double sum_u = 0.0, sum_c = 0.0;
  std::vector<double> utils;
  utils.reserve(set.size());
  for (const auto& inst : set) {
    Tape<float> t;
    t.set_recording(false);
    RolloutOptions opt;
    opt.mode = DecodeMode::Greedy;
    std::vector<int> order;
    bool fixed_order = !pol.cfg.sequence_policy() && !pol.cfg.joint_head();
    if (fixed_order) {
      if (order_fn) order = order_fn(inst, nullptr);
      if ((int)order.size() != inst.n()) {
        order.resize((std::size_t)inst.n());
        std::iota(order.begin(), order.end(), 0);
      }
      opt.order = &order;
    }
    auto out = run_episode(pol, inst, t, opt);
    ev.costs.push_back(out.cost);
    ev.aborted += out.aborted ? 1 : 0;
    sum_u += out.utility;
    sum_c += out.cost;
    utils.push_back(out.utility);
  }
  double n = (double)set.size();
  ev.mean_utility = sum_u / n;
  ev.mean_cost = sum_c / n;
  double sq = 0.0;
  for (double u : utils) sq += (u - ev.mean_utility) * (u - ev.mean_utility);
  ev.std_utility = std::sqrt(sq / n);
  return ev;
}

bool baseline_should_replace(const std::vector<double>& baseline_costs,
                             const std::vector<double>& candidate_costs, double alpha) {
  if (baseline_costs.size() != candidate_costs.size())
    throw std::invalid_argument("paired t-test needs equal-length cost vectors");
  const std::size_t n = baseline_costs.size();
  if (n == 0) return false;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += baseline_costs[i] - candidate_costs[i];
  mean /= (double)n;
  if (n == 1) return mean > 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = baseline_costs[i] - candidate_costs[i] - mean;
    ss += d * d;
  }
  double sd = std::sqrt(ss / (double)(n - 1));
  if (sd == 0.0) return mean > 0.0;
  double t = mean / (sd / std::sqrt((double)n));
  boost::math::students_t dist((double)(n - 1));
  return t > boost::math::quantile(dist, 1.0 - alpha);
}

// --- trainer ---------------------------------------------------------------

namespace {

Policy<float> make_policy(const ModelConfig& mc, std::uint64_t seed) {
  Rng init = Rng::stream(seed, 0);
  return Policy<float>(mc, init);
}

int sum_nodes(Tape<float>& t, const std::vector<int>& nodes) {
  int total = nodes.at(0);
  for (std::size_t i = 1; i < nodes.size(); ++i) total = t.add(total, nodes[i]);
  return total;
}

}  // namespace

Trainer::Trainer(const ModelConfig& mc, const TrainerConfig& tc,
                 std::function<ProblemInstance(long long)> train_provider,
                 std::vector<ProblemInstance> val_set, OrderFn order_fn)
    : model_cfg_(mc),
      cfg_(tc),
      provider_(std::move(train_provider)),
      val_(std::move(val_set)),
      order_fn_(std::move(order_fn)),
      rng_(Rng::stream(tc.seed, 17)),
      policy_(make_policy(mc, tc.seed)),
      baseline_(policy_),
      best_params_(policy_.params),
      opt_main_((float)tc.lr),
      opt_po_((float)tc.lr) {
  cfg_.validate();
  stats_.beta = cfg_.stats_beta;
  if (!provider_) throw std::invalid_argument("trainer needs a training-instance provider");
}

std::vector<int> Trainer::order_for(const ProblemInstance& inst, Rng* rng) {
  std::vector<int> order;
  if (model_cfg_.sequence_policy() || model_cfg_.joint_head()) return order;
  if (order_fn_) order = order_fn_(inst, rng);
  if ((int)order.size() != inst.n()) {
    order.resize((std::size_t)inst.n());
    std::iota(order.begin(), order.end(), 0);
  }
  return order;
}

double Trainer::greedy_cost(Policy<float>& pol, const ProblemInstance& inst,
                            const std::vector<int>& order) {
  Tape<float> t;
  t.set_recording(false);
  RolloutOptions opt;
  opt.mode = DecodeMode::Greedy;
  if (!order.empty()) opt.order = &order;
  return run_episode(pol, inst, t, opt).cost;
}

void Trainer::log_run_header(std::ostream* log) {
  if (!log) return;
  json rec;
  rec["kind"] = "run";
  rec["model"] = {{"d", model_cfg_.d},
                  {"M", model_cfg_.M},
                  {"layers", model_cfg_.layers},
                  {"mlp_hidden", model_cfg_.mlp_hidden},
                  {"C", model_cfg_.C},
                  {"dims", model_cfg_.dims},
                  {"W", model_cfg_.W},
                  {"H", model_cfg_.H},
                  {"frontier_variant", model_cfg_.frontier_variant},
                  {"latest_frontier_only", model_cfg_.latest_frontier_only},
                  {"variant", model_cfg_.variant},
                  {"joint_n", model_cfg_.joint_n}};
  rec["trainer"] = {{"batch", cfg_.batch},
                    {"po_batch", cfg_.po_batch},
                    {"po", cfg_.po},
                    {"lr", cfg_.lr},
                    {"lr_final_frac", cfg_.lr_final_frac},
                    {"lr_decay_start", cfg_.lr_decay_start},
                    {"cost_scale", cfg_.cost_scale},
                    {"stats_beta", cfg_.stats_beta},
                    {"ttest_alpha", cfg_.ttest_alpha},
                    {"max_episodes", cfg_.max_episodes},
                    {"steps_per_epoch", cfg_.steps_per_epoch},
                    {"seed", cfg_.seed},
                    {"permute_boxes", cfg_.permute_boxes}};
  rec["val_size"] = val_.size();
  *log << rec.dump() << "\n";
}

void Trainer::main_step(std::ostream* log) {
  const int B = cfg_.batch;
  struct Sample {
    std::unique_ptr<Tape<float>> tape;
    ProblemInstance inst;
    std::vector<int> order;
    int logp_sum = -1;
    double cost = 1.0, base = 1.0, adv = 0.0;
    bool aborted = false;
  };
  std::vector<Sample> batch((std::size_t)B);

  double mean_cost = 0.0;
  int aborted = 0;
  for (auto& s : batch) {
    ProblemInstance raw = provider_(next_train_idx_++);
    s.inst = cfg_.permute_boxes ? permuted(raw, rng_) : raw;
    s.order = order_for(s.inst, &rng_);
    s.base = greedy_cost(baseline_, s.inst, s.order);
    s.tape = std::make_unique<Tape<float>>();
    RolloutOptions opt;
    opt.mode = DecodeMode::Sample;
    opt.rng = &rng_;
    if (!s.order.empty()) opt.order = &s.order;
    auto out = run_episode(policy_, s.inst, *s.tape, opt);
    s.cost = out.cost;
    s.aborted = out.aborted;
    if (!out.logp_nodes.empty()) s.logp_sum = sum_nodes(*s.tape, out.logp_nodes);
    s.adv = s.cost - s.base;
    mean_cost += s.cost;
    aborted += s.aborted ? 1 : 0;
  }
  mean_cost /= (double)B;
  episodes_ += B;

  // the running statistics absorb this batch before eta is read
  int b_plus_n = 0;
  double a_plus_sum = 0.0;
  for (const auto& s : batch)
    if (s.adv > 0.0) {
      ++b_plus_n;
      a_plus_sum += s.adv;
    }
  double a_plus_batch = b_plus_n > 0 ? a_plus_sum / (double)b_plus_n : 0.0;
  stats_.update_plus((double)b_plus_n, a_plus_batch);

  std::vector<double> weight((std::size_t)B, 1.0);
  double eta = 1.0, a_po_batch = 0.0;
  int po_n = 0;
  if (cfg_.po) {
    po_n = std::min(cfg_.po_batch, B);
    std::vector<int> idx((std::size_t)B);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return batch[(std::size_t)a].adv > batch[(std::size_t)b].adv; });
    double sum = 0.0;
    for (int i = 0; i < po_n; ++i) sum += batch[(std::size_t)idx[(std::size_t)i]].adv;
    a_po_batch = sum / (double)po_n;
    stats_.update_po((double)po_n, a_po_batch);
    eta = stats_.eta();
    for (int i = 0; i < po_n; ++i) {
      auto& s = batch[(std::size_t)idx[(std::size_t)i]];
      weight[(std::size_t)idx[(std::size_t)i]] = eta;
      po_buffer_.push_back({s.inst, 1.0 - eta, s.order});
    }
  }

  policy_.params.zero_grad();
  for (int b = 0; b < B; ++b) {
    auto& s = batch[(std::size_t)b];
    if (s.logp_sum < 0) continue;
    double coeff = weight[(std::size_t)b] * cfg_.cost_scale * s.adv / (double)B;
    s.tape->backward(s.tape->scale(s.logp_sum, (float)coeff));
  }
  opt_main_.set_lr((float)scheduled_lr());
  opt_main_.step(policy_.params);

  if (log) {
    json rec;
    rec["kind"] = "step";
    rec["epoch"] = step_ / cfg_.steps_per_epoch;
    rec["step"] = step_;
    rec["mean_cost"] = mean_cost;
    rec["mean_utility_eval"] = last_eval_mean_;  // NaN dumps as null before the first eval
    rec["aborted_rate"] = (double)aborted / (double)B;
    rec["baseline_replaced"] = false;
    rec["b_plus_n"] = b_plus_n;
    rec["a_plus_batch"] = a_plus_batch;
    rec["a_plus_beta"] = stats_.a_plus;
    rec["b_plus_beta"] = stats_.b_plus;
    if (cfg_.po) {
      rec["eta"] = eta;
      rec["po_n"] = po_n;
      rec["a_po_batch"] = a_po_batch;
      rec["a_po_beta"] = stats_.a_po;
      rec["b_po_beta"] = stats_.b_po;
    }
    *log << rec.dump() << "\n";
  }
  ++step_;
}

double Trainer::scheduled_lr() const {
  if (cfg_.max_episodes <= 0) return cfg_.lr;
  double spent = (double)episodes_ / (double)cfg_.max_episodes;
  double span = (spent - cfg_.lr_decay_start) / (1.0 - cfg_.lr_decay_start);
  span = std::max(0.0, std::min(1.0, span));
  return cfg_.lr * (1.0 - (1.0 - cfg_.lr_final_frac) * span);
}

void Trainer::po_relearn(std::ostream* log) {
  if (po_buffer_.empty()) return;
  const std::size_t n = po_buffer_.size();
  double mean_cost = 0.0;
  int aborted = 0;
  policy_.params.zero_grad();
  for (auto& entry : po_buffer_) {
    double base = greedy_cost(baseline_, entry.inst, entry.order);
    Tape<float> t;
    RolloutOptions opt;
    opt.mode = DecodeMode::Sample;
    opt.rng = &rng_;
    if (!entry.order.empty()) opt.order = &entry.order;
    auto out = run_episode(policy_, entry.inst, t, opt);
    mean_cost += out.cost;
    aborted += out.aborted ? 1 : 0;
    if (!out.logp_nodes.empty()) {
      int total = sum_nodes(t, out.logp_nodes);
      double coeff = entry.weight * cfg_.cost_scale * (out.cost - base) / (double)n;
      t.backward(t.scale(total, (float)coeff));
    }
  }
  opt_po_.set_lr((float)scheduled_lr());
  opt_po_.step(policy_.params);
  episodes_ += (long long)n;
  po_buffer_.clear();

  if (log) {
    json rec;
    rec["kind"] = "po";
    rec["epoch"] = step_ / cfg_.steps_per_epoch;
    rec["step"] = step_;
    rec["mean_cost"] = mean_cost / (double)n;
    rec["mean_utility_eval"] = last_eval_mean_;
    rec["aborted_rate"] = (double)aborted / (double)n;
    rec["baseline_replaced"] = false;
    rec["relearn_size"] = n;
    *log << rec.dump() << "\n";
  }
}

EvalResult Trainer::epoch_eval(std::ostream* log) {
  EvalResult ev;
  if (val_.empty()) return ev;
  ev = greedy_eval(policy_, val_, order_fn_);
  last_eval_mean_ = ev.mean_utility;
  if (baseline_eval_costs_.empty())
    baseline_eval_costs_ = greedy_eval(baseline_, val_, order_fn_).costs;
  bool replaced = baseline_should_replace(baseline_eval_costs_, ev.costs, cfg_.ttest_alpha);
  if (replaced) {
    baseline_ = policy_;
    baseline_eval_costs_ = ev.costs;
  }
  if (ev.mean_utility > best_utility_) {
    best_utility_ = ev.mean_utility;
    best_params_ = policy_.params;
  }
  if (log) {
    json rec;
    rec["kind"] = "eval";
    rec["epoch"] = step_ / cfg_.steps_per_epoch;
    rec["step"] = step_;
    rec["mean_cost"] = ev.mean_cost;
    rec["mean_utility_eval"] = ev.mean_utility;
    rec["eval_std"] = ev.std_utility;
    rec["aborted_rate"] = val_.empty() ? 0.0 : (double)ev.aborted / (double)val_.size();
    rec["baseline_replaced"] = replaced;
    rec["best_utility"] = best_utility_;
    rec["episodes"] = episodes_;
    *log << rec.dump() << "\n";
  }
  return ev;
}

void Trainer::train(std::ostream* log) {
  log_run_header(log);
  while (episodes_ < cfg_.max_episodes) {
    main_step(log);
    if (cfg_.po && po_buffer_.size() >= (std::size_t)cfg_.batch) po_relearn(log);
    if (step_ % cfg_.steps_per_epoch == 0) epoch_eval(log);
  }
  if (step_ % cfg_.steps_per_epoch != 0) epoch_eval(log);
}

// --- checkpointing ---------------------------------------------------------

namespace {

void store_moments(Checkpoint& ck, Adam<float>& opt, const ParamStore<float>& ps,
                   const std::string& prefix) {
  auto& m1 = opt.moments1();
  auto& m2 = opt.moments2();
  if ((int)m1.size() != ps.count()) return;  // optimizer not yet stepped
  for (int i = 0; i < ps.count(); ++i) {
    const auto& e = ps.entry(i);
    ck.arrays.push_back({prefix + "m1/" + e.name, e.shape, m1[(std::size_t)i]});
    ck.arrays.push_back({prefix + "m2/" + e.name, e.shape, m2[(std::size_t)i]});
  }
}

void load_moments(const Checkpoint& ck, Adam<float>& opt, const ParamStore<float>& ps,
                  const std::string& prefix) {
  if (!ck.find(prefix + "m1/" + ps.entry(0).name)) return;
  auto& m1 = opt.moments1();
  auto& m2 = opt.moments2();
  m1.resize((std::size_t)ps.count());
  m2.resize((std::size_t)ps.count());
  for (int i = 0; i < ps.count(); ++i) {
    const auto& e = ps.entry(i);
    const NamedArray* a1 = ck.find(prefix + "m1/" + e.name);
    const NamedArray* a2 = ck.find(prefix + "m2/" + e.name);
    if (!a1 || !a2 || a1->data.size() != e.v.size() || a2->data.size() != e.v.size())
      throw contract_error("checkpoint optimizer moments mismatch at " + e.name);
    m1[(std::size_t)i] = a1->data;
    m2[(std::size_t)i] = a2->data;
  }
}

}  // namespace

Checkpoint Trainer::snapshot() {
  Checkpoint ck;
  store_params(ck, policy_.params, "model/");
  store_params(ck, baseline_.params, "baseline/");
  store_params(ck, best_params_, "best/");
  store_moments(ck, opt_main_, policy_.params, "opt_main/");
  store_moments(ck, opt_po_, policy_.params, "opt_po/");

  json extra;
  extra["episodes"] = episodes_;
  extra["step"] = step_;
  extra["next_train_idx"] = next_train_idx_;
  extra["rng_state"] = rng_.state();
  extra["best_utility"] = best_utility_;
  extra["last_eval_mean"] = last_eval_mean_;  // null when NaN
  extra["opt_main_steps"] = opt_main_.steps();
  extra["opt_po_steps"] = opt_po_.steps();
  extra["stats"] = {{"beta", stats_.beta},
                    {"a_plus", stats_.a_plus},
                    {"b_plus", stats_.b_plus},
                    {"a_po", stats_.a_po},
                    {"b_po", stats_.b_po}};
  extra["baseline_eval_costs"] = baseline_eval_costs_;
  extra["po_buffer"] = json::array();
  for (const auto& e : po_buffer_) {
    json je;
    je["instance"] = json::parse(instance_to_json({e.inst, std::nullopt}));
    je["weight"] = e.weight;
    je["order"] = e.order;
    extra["po_buffer"].push_back(std::move(je));
  }
  ck.extra = extra.dump();
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  load_params(ck, policy_.params, "model/");
  load_params(ck, baseline_.params, "baseline/");
  load_params(ck, best_params_, "best/");
  load_moments(ck, opt_main_, policy_.params, "opt_main/");
  load_moments(ck, opt_po_, policy_.params, "opt_po/");

  json extra = json::parse(ck.extra);
  episodes_ = extra.at("episodes").get<long long>();
  step_ = extra.at("step").get<long long>();
  next_train_idx_ = extra.at("next_train_idx").get<long long>();
  rng_.set_state(extra.at("rng_state").get<std::uint64_t>());
  best_utility_ = extra.at("best_utility").get<double>();
  last_eval_mean_ = extra.at("last_eval_mean").is_null()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : extra.at("last_eval_mean").get<double>();
  opt_main_.set_steps(extra.at("opt_main_steps").get<long long>());
  opt_po_.set_steps(extra.at("opt_po_steps").get<long long>());
  const auto& js = extra.at("stats");
  stats_.beta = js.at("beta").get<double>();
  stats_.a_plus = js.at("a_plus").get<double>();
  stats_.b_plus = js.at("b_plus").get<double>();
  stats_.a_po = js.at("a_po").get<double>();
  stats_.b_po = js.at("b_po").get<double>();
  baseline_eval_costs_ = extra.at("baseline_eval_costs").get<std::vector<double>>();
  po_buffer_.clear();
  for (const auto& je : extra.at("po_buffer")) {
    PoEntry e;
    e.inst = instance_from_json(je.at("instance").dump()).instance;
    e.weight = je.at("weight").get<double>();
    e.order = je.at("order").get<std::vector<int>>();
    po_buffer_.push_back(std::move(e));
  }
}

// --- statistics replay ------------------------------------------------------

StatsReplayResult replay_stats_log(std::istream& log) {
  StatsReplayResult res;
  RunningStats rs;
  std::string line;
  bool beta_known = false;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    std::string kind = rec.value("kind", "");
    if (kind == "run") {
      if (rec.contains("trainer") && rec["trainer"].contains("stats_beta")) {
        rs.beta = rec["trainer"]["stats_beta"].get<double>();
        beta_known = true;
      }
      continue;
    }
    if (kind != "step") continue;
    if (!beta_known) beta_known = true;  // default beta stands
    rs.update_plus(rec.at("b_plus_n").get<double>(), rec.at("a_plus_batch").get<double>());
    res.max_abs_diff =
        std::max(res.max_abs_diff, std::abs(rs.a_plus - rec.at("a_plus_beta").get<double>()));
    res.max_abs_diff =
        std::max(res.max_abs_diff, std::abs(rs.b_plus - rec.at("b_plus_beta").get<double>()));
    if (rec.contains("po_n")) {
      rs.update_po(rec.at("po_n").get<double>(), rec.at("a_po_batch").get<double>());
      res.max_abs_diff =
          std::max(res.max_abs_diff, std::abs(rs.a_po - rec.at("a_po_beta").get<double>()));
      res.max_abs_diff =
          std::max(res.max_abs_diff, std::abs(rs.b_po - rec.at("b_po_beta").get<double>()));
      double eta = rec.at("eta").get<double>();
      res.max_abs_diff = std::max(res.max_abs_diff, std::abs(rs.eta() - eta));
      if (!(eta >= 0.5 && eta <= 1.0)) res.eta_in_range = false;
    }
    ++res.steps;
  }
  return res;
}

}  // namespace binpack
