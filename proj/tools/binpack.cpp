// Command-line entry points: datagen, train, eval, export, baseline, selftest.

#include <binpack/harness.hpp>
#include <binpack/io.hpp>
#include <binpack/rollout.hpp>
#include <binpack/svg.hpp>
#include <binpack/version.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace binpack;
using json = nlohmann::json;

namespace {

// "WxH" -> (W, H)
std::pair<int, int> parse_bin(const std::string& text) {
  auto at = text.find('x');
  if (at == std::string::npos) throw CLI::ValidationError("--bin expects WxH, e.g. 10x10");
  return {std::stoi(text.substr(0, at)), std::stoi(text.substr(at + 1))};
}

// "a..b" -> (a, b)
std::pair<int, int> parse_edges(const std::string& text) {
  auto at = text.find("..");
  if (at == std::string::npos) throw CLI::ValidationError("--edges expects a..b, e.g. 1..10");
  return {std::stoi(text.substr(0, at)), std::stoi(text.substr(at + 2))};
}

Policy<float> policy_from_checkpoint(const Checkpoint& ck, ExperimentConfig& cfg,
                                     const std::string& which) {
  json extra = json::parse(ck.extra);
  if (!extra.contains("experiment"))
    throw contract_error("checkpoint carries no experiment configuration");
  cfg = experiment_from_json(extra["experiment"].dump());
  cfg.finalize();
  Rng init = Rng::stream(cfg.trainer.seed, 0);
  Policy<float> pol(cfg.model, init);
  load_params(ck, pol.params, which + "/");
  return pol;
}

std::vector<ProblemInstance> instances_of(const std::vector<InstanceRecord>& recs) {
  std::vector<ProblemInstance> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(r.instance);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural bin packing: data generation, training, evaluation, export"};
  app.set_version_flag("--version", std::string(kGitDescribe));
  app.require_subcommand(1);

  // --- datagen -------------------------------------------------------------
  auto* dg = app.add_subcommand("datagen", "generate an instance dataset");
  std::string dg_kind = "cut", dg_bin = "10x10", dg_edges = "1..10", dg_out;
  int dg_dims = 3, dg_n = 10, dg_count = 1000;
  std::uint64_t dg_seed = 1;
  dg->add_option("--kind", dg_kind, "cut | random")->check(CLI::IsMember({"cut", "random"}));
  dg->add_option("--dims", dg_dims, "2 | 3")->check(CLI::IsMember({2, 3}));
  dg->add_option("--bin", dg_bin, "bin cross-section WxH (H must be 1 when 2D)");
  dg->add_option("--n", dg_n, "boxes per instance");
  dg->add_option("--edges", dg_edges, "edge range a..b");
  dg->add_option("--count", dg_count, "number of instances");
  dg->add_option("--seed", dg_seed, "dataset seed");
  dg->add_option("--out", dg_out, "output JSONL path")->required();

  // --- train ---------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train a policy per experiment config");
  std::string tr_config, tr_out = "runs";
  tr->add_option("--config", tr_config, "experiment config JSON file")->required();
  tr->add_option("--out", tr_out, "output directory");

  // --- eval ----------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string ev_ckpt, ev_data;
  std::string ev_which = "best";
  bool ev_trim = false;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--data", ev_data, "instance JSONL (defaults to the config's test set)");
  ev->add_option("--params", ev_which, "best | model | baseline")
      ->check(CLI::IsMember({"best", "model", "baseline"}));
  ev->add_flag("--online-trim", ev_trim, "also report cube-trimmed online metrics");

  // --- export --------------------------------------------------------------
  auto* ex = app.add_subcommand("export", "render configurations to JSON/SVG");
  std::string ex_data, ex_out = "export", ex_format = "json", ex_ckpt;
  int ex_limit = 10;
  ex->add_option("--data", ex_data, "instance JSONL file")->required();
  ex->add_option("--out", ex_out, "output directory");
  ex->add_option("--format", ex_format, "json | svg | both")
      ->check(CLI::IsMember({"json", "svg", "both"}));
  ex->add_option("--checkpoint", ex_ckpt,
                 "pack with this policy (default: certificate, else sorted heuristic)");
  ex->add_option("--limit", ex_limit, "max instances to export");

  // --- baseline ------------------------------------------------------------
  auto* bl = app.add_subcommand("baseline", "run a non-learned packer over a dataset");
  std::string bl_data, bl_policy = "sorted";
  std::uint64_t bl_seed = 1;
  bool bl_trim = false;
  bl->add_option("--data", bl_data, "instance JSONL file")->required();
  bl->add_option("--policy", bl_policy, "sorted | random")
      ->check(CLI::IsMember({"sorted", "random"}));
  bl->add_option("--seed", bl_seed, "seed for the random policy");
  bl->add_flag("--online-trim", bl_trim, "also report cube-trimmed online metrics");

  // --- selftest ------------------------------------------------------------
  auto* st = app.add_subcommand("selftest", "run the oracle suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dg) {
      DatasetSpec spec;
      spec.kind = dg_kind;
      spec.dims = dg_dims;
      std::tie(spec.W, spec.H) = parse_bin(dg_bin);
      spec.n = dg_n;
      std::tie(spec.edge_min, spec.edge_max) = parse_edges(dg_edges);
      spec.count = dg_count;
      spec.seed = dg_seed;
      spec.validate();
      save_instances(dg_out, generate_dataset(spec));
      std::cout << "wrote " << dg_count << " instances to " << dg_out << "\n";
    } else if (*tr) {
      ExperimentConfig cfg = experiment_from_json(read_text_file(tr_config));
      RunResult res = run_experiment(cfg, tr_out);
      std::cout << "best validation utility " << res.best_val_utility << "\n"
                << "test utility " << res.test_eval.base.mean_utility << " +- "
                << res.test_eval.base.std_utility << "\n"
                << "wall seconds " << res.wall_seconds << "\n"
                << "log " << res.log_path << "\ncheckpoint " << res.checkpoint_path << "\n"
                << "report " << res.report_path << "\nmanifest " << res.manifest_path << "\n";
    } else if (*ev) {
      Checkpoint ck = load_checkpoint(ev_ckpt);
      ExperimentConfig cfg;
      Policy<float> pol = policy_from_checkpoint(ck, cfg, ev_which);
      std::vector<ProblemInstance> set =
          ev_data.empty() ? instances_of(generate_dataset(cfg.test_data))
                          : instances_of(load_instances(ev_data));
      BinSpec cube{cfg.model.W, cfg.model.H, cfg.model.W, 3};
      const BinSpec* trim = ev_trim ? &cube : nullptr;
      FullEval fe = full_eval(pol, set, order_fn_for(cfg.variant), trim);
      json out;
      out["instances"] = set.size();
      out["mean_utility"] = fe.base.mean_utility;
      out["std_utility"] = fe.base.std_utility;
      out["mean_rr"] = fe.mean_rr;
      if (cfg.model.dims == 2) out["mean_rl"] = fe.mean_rl;
      if (ev_trim) {
        out["online_count"] = fe.mean_online_count;
        out["online_utility"] = fe.mean_online_util;
      }
      std::cout << out.dump(2) << "\n";
    } else if (*ex) {
      auto recs = load_instances(ex_data);
      std::filesystem::create_directories(ex_out);
      ExperimentConfig cfg;
      std::optional<Policy<float>> pol;
      if (!ex_ckpt.empty()) pol.emplace(policy_from_checkpoint(load_checkpoint(ex_ckpt), cfg, "best"));
      int done = 0;
      for (const auto& rec : recs) {
        if (done >= ex_limit) break;
        Configuration config;
        if (pol) {
          Tape<float> t;
          t.set_recording(false);
          RolloutOptions opt;
          opt.mode = DecodeMode::Greedy;
          std::vector<int> order;
          if (!pol->cfg.sequence_policy() && !pol->cfg.joint_head()) {
            order.resize((std::size_t)rec.instance.n());
            std::iota(order.begin(), order.end(), 0);
            opt.order = &order;
          }
          auto out = run_episode(*pol, rec.instance, t, opt);
          if (out.aborted) continue;
          config = out.config;
        } else if (rec.certificate) {
          config = replay_certificate(rec);
        } else {
          config = sorted_heuristic_pack(rec.instance);
        }
        std::string stem = ex_out + "/" + rec.instance.id;
        if (ex_format != "svg") write_text_file(stem + ".json", configuration_to_json(config));
        if (ex_format != "json") write_text_file(stem + ".svg", render_svg(config));
        ++done;
      }
      std::cout << "exported " << done << " configurations to " << ex_out << "\n";
    } else if (*bl) {
      auto set = instances_of(load_instances(bl_data));
      if (set.empty()) throw contract_error("empty dataset");
      Rng rng = Rng::stream(bl_seed, 3);
      auto pack = [&](const ProblemInstance& inst) {
        return bl_policy == "sorted" ? sorted_heuristic_pack(inst)
                                     : random_feasible_pack(inst, rng);
      };
      BinSpec cube{set[0].bin.W, set[0].bin.H, set[0].bin.W, 3};
      FullEval fe = full_eval_packer(pack, set, bl_trim ? &cube : nullptr);
      json out;
      out["policy"] = bl_policy;
      out["instances"] = set.size();
      out["mean_utility"] = fe.base.mean_utility;
      out["std_utility"] = fe.base.std_utility;
      out["mean_rr"] = fe.mean_rr;
      if (bl_trim) {
        out["online_count"] = fe.mean_online_count;
        out["online_utility"] = fe.mean_online_util;
      }
      std::cout << out.dump(2) << "\n";
    } else if (*st) {
      SelftestResult res = run_selftest();
      for (const auto& line : res.lines) std::cout << line << "\n";
      return res.ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
