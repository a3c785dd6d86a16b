// ssdal: synthetic data, three-stage attribute training, and ReID evaluation.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssdal/commands.hpp"
#include "ssdal/error.hpp"

namespace {

using namespace ssdal;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;  // key=value

  RunConfig load() const {
    RunConfig config = path.empty() ? RunConfig{} : RunConfig::load(path);
    for (const auto& item : overrides) {
      const auto eq = item.find('=');
      require(eq != std::string::npos, ErrorKind::config, "--set expects key=value, got '" + item + "'");
      config.set(item.substr(0, eq), item.substr(eq + 1));
    }
    return config;
  }
};

void add_config_options(CLI::App* cmd, ConfigArgs& args, bool required) {
  auto* opt = cmd->add_option("-c,--config", args.path, "key = value configuration file");
  if (required) opt->required();
  cmd->add_option("--set", args.overrides, "override a config key (key=value), repeatable");
}

void print(const Json& value) { std::cout << dump_json(value); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised deep attribute learning for person re-identification"};
  app.require_subcommand(1);

  ConfigArgs synth_args;
  auto* synth = app.add_subcommand("synth", "write the synthetic T, U and probe/gallery CSVs");
  add_config_options(synth, synth_args, true);

  ConfigArgs train_args;
  std::string stage = "all";
  auto* train = app.add_subcommand("train", "train a stage and write its checkpoint");
  add_config_options(train, train_args, true);
  train->add_option("--stage", stage, "1, 2, 3, all or baseline-fc")
      ->check(CLI::IsMember({"1", "2", "3", "all", "baseline-fc"}));

  std::string model, features, policy = "threshold", out;
  std::size_t p = 10;
  double tau = 0.0;
  auto* predict = app.add_subcommand("predict", "binary attributes for a features CSV");
  predict->add_option("--model", model, "checkpoint")->required();
  predict->add_option("--features", features, "features CSV")->required();
  predict->add_option("--policy", policy, "top-p or threshold")
      ->check(CLI::IsMember({"top-p", "threshold"}));
  predict->add_option("--p", p, "positives per row for top-p");
  predict->add_option("--tau", tau, "logit threshold");
  predict->add_option("-o,--out", out, "attributes CSV to write");

  ConfigArgs eval_args;
  std::string mode, probe, gallery, attributes, kind = "raw", query_mode = "single", prefix;
  auto* eval = app.add_subcommand("eval", "CMC, mAP or attribute accuracy");
  add_config_options(eval, eval_args, false);
  eval->add_option("mode", mode, "cmc, map or attr")
      ->required()
      ->check(CLI::IsMember({"cmc", "map", "attr"}));
  eval->add_option("--probe", probe, "probe (cmc) or query (map) features CSV");
  eval->add_option("--gallery", gallery, "gallery features CSV");
  eval->add_option("--features", features, "features CSV (attr)");
  eval->add_option("--attributes", attributes, "ground-truth attributes CSV (attr)");
  eval->add_option("--model", model, "checkpoint");
  eval->add_option("--kind", kind, "raw, deep-attributes or penultimate")
      ->check(CLI::IsMember({"raw", "deep-attributes", "penultimate"}));
  eval->add_option("--query-mode", query_mode, "single, multi_avg or multi_max");
  eval->add_option("-o,--out", prefix, "output prefix for <prefix>.csv and <prefix>.json");

  ConfigArgs grad_args;
  std::string grad_out;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every loss");
  add_config_options(grad, grad_args, false);
  grad->add_option("-o,--out", grad_out, "JSON report");

  ConfigArgs all_args;
  auto* run_all = app.add_subcommand("run-all", "synth, train all stages and the baseline, evaluate");
  add_config_options(run_all, all_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::config);
  }

  try {
    if (*synth) {
      print(cmd_synth(synth_args.load()));
    } else if (*train) {
      const RunConfig config = train_args.load();
      print(to_json(cmd_train(config, parse_train_stage(stage)),
                    config.get_bool("report.include_timing")));
    } else if (*predict) {
      const auto table =
          cmd_predict(model, features, parse_predict_policy(policy), p, tau, out);
      if (out.empty()) {
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
          std::cout << table.sample_ids[i];
          for (auto b : table.rows[i].bits()) std::cout << ',' << static_cast<int>(b);
          std::cout << '\n';
        }
      }
    } else if (*eval) {
      const RunConfig config = eval_args.load();
      const FeatureSource source{parse_feature_kind(kind), model, config.get_real("tau")};
      if (mode == "cmc") {
        require(!probe.empty() && !gallery.empty(), ErrorKind::config,
                "eval cmc needs --probe and --gallery");
        print(cmd_eval_cmc(probe, gallery, source, split_protocol(config), prefix));
      } else if (mode == "map") {
        require(!probe.empty() && !gallery.empty(), ErrorKind::config,
                "eval map needs --probe and --gallery");
        print(cmd_eval_map(probe, gallery, source, parse_query_mode(query_mode),
                           retrieval_options(config), prefix));
      } else {
        require(!model.empty() && !features.empty() && !attributes.empty(), ErrorKind::config,
                "eval attr needs --model, --features and --attributes");
        print(cmd_eval_attr(model, features, attributes, prefix));
      }
    } else if (*grad) {
      const GradcheckReport report = run_gradcheck(gradcheck_options(grad_args.load()));
      std::printf("%-24s %14s  %s\n", "loss", "max_rel_error", "status");
      for (const auto& check : report.losses) {
        std::printf("%-24s %14.3e  %s\n", check.loss.c_str(), check.max_relative_error,
                    check.passed ? "pass" : "FAIL");
      }
      if (!grad_out.empty()) write_json(grad_out, to_json(report));
      if (!report.passed()) return exit_code(ErrorKind::verification);
    } else if (*run_all) {
      print(cmd_run_all(all_args.load()));
    }
  } catch (const Error& e) {
    std::cerr << "ssdal: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ssdal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
