// Command-line front end: dataset generation, prior training, incremental
// mapping, mesh evaluation, and prior-file inspection. Exit codes: 0 on
// success, 1 on usage errors (bad flags, bad config keys), 2 on data or
// integrity errors (unreadable inputs, corrupt files).
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "noma/commands.hpp"
#include "noma/config.hpp"
#include "noma/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
};

void add_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--config", args->config_path, "key=value config file");
  sub->add_option("--set", args->overrides, "override one config key (key=value), repeatable");
  sub->add_option("--seed", args->seed, "override the 'seed' config key");
}

// config file < --set overrides < dedicated flags.
noma::Config build_config(const CommonArgs& args,
                          const std::vector<std::pair<std::string, std::string>>& flags) {
  noma::Config cfg = args.config_path.empty() ? noma::Config::from_string("")
                                              : noma::Config::from_file(args.config_path);
  cfg.apply_overrides(args.overrides);
  if (args.seed) cfg.set("seed", std::to_string(*args.seed));
  for (const auto& [key, value] : flags)
    if (!value.empty()) cfg.set(key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"category-prior neural-field mapping pipeline"};
  app.require_subcommand(1);

  CommonArgs gen_args;
  std::string gen_out, gen_categories;
  CLI::App* gen = app.add_subcommand("gen-tasks", "render synthetic train/test tasks and scenes");
  add_common(gen, &gen_args);
  gen->add_option("--out", gen_out, "dataset output directory");
  gen->add_option("--categories", gen_categories, "comma-separated category names");

  CommonArgs train_args;
  std::string train_dataset, train_category, train_out;
  CLI::App* train = app.add_subcommand("train-prior", "search + meta-train one category prior");
  add_common(train, &train_args);
  train->add_option("--dataset", train_dataset, "dataset root directory");
  train->add_option("--category", train_category, "category name");
  train->add_option("--out", train_out, "prior output file");

  CommonArgs map_args;
  std::string map_scene, map_priors, map_out, map_ablate_ps;
  bool map_no_priors = false;
  CLI::App* map = app.add_subcommand("map", "reconstruct objects from a recorded sequence");
  add_common(map, &map_args);
  map->add_option("--scene", map_scene, "sequence directory");
  map->add_option("--priors", map_priors, "directory of .prior files");
  map->add_option("--out", map_out, "output directory for meshes + report");
  map->add_flag("--no-priors", map_no_priors, "ignore priors: default arch + random init");
  map->add_option("--ablate-ps", map_ablate_ps, "on|off: density-guided ray sampling")
      ->check(CLI::IsMember({"on", "off"}));

  CommonArgs eval_args;
  std::string eval_rec, eval_gt, eval_report;
  CLI::App* eval = app.add_subcommand("eval", "score reconstructed meshes against ground truth");
  add_common(eval, &eval_args);
  eval->add_option("--rec", eval_rec, "directory of reconstructed .obj files");
  eval->add_option("--gt", eval_gt, "directory of ground-truth .obj files");
  eval->add_option("--report", eval_report, "also write the table to this CSV path");

  CommonArgs inspect_args;
  std::string inspect_path;
  CLI::App* inspect = app.add_subcommand("inspect", "print a prior file's header and stats");
  add_common(inspect, &inspect_args);
  inspect->add_option("path", inspect_path, "prior file");

  try {
    app.parse(argc, argv);

    if (gen->parsed()) {
      noma::cmd_gen_tasks(
          build_config(gen_args, {{"out", gen_out}, {"categories", gen_categories}}), std::cout);
    } else if (train->parsed()) {
      noma::cmd_train_prior(build_config(train_args, {{"dataset", train_dataset},
                                                      {"category", train_category},
                                                      {"out", train_out}}),
                            std::cout);
    } else if (map->parsed()) {
      std::vector<std::pair<std::string, std::string>> flags = {
          {"scene", map_scene}, {"priors", map_priors}, {"out", map_out}};
      if (map_no_priors) flags.emplace_back("no_priors", "true");
      if (!map_ablate_ps.empty())
        flags.emplace_back("prior_sampling", map_ablate_ps == "on" ? "true" : "false");
      noma::cmd_map(build_config(map_args, flags), std::cout);
    } else if (eval->parsed()) {
      noma::cmd_eval(build_config(eval_args, {{"rec", eval_rec},
                                              {"gt", eval_gt},
                                              {"report", eval_report}}),
                     std::cout);
    } else if (inspect->parsed()) {
      noma::cmd_inspect(build_config(inspect_args, {{"prior", inspect_path}}), std::cout);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const noma::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const noma::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
