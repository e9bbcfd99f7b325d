#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cellstream/cli/commands.hpp"
#include "cellstream/cli/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", args.overrides, "override: key=value (repeatable)");
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_flag("--json", args.json, "machine-readable summary on stdout");
}

cellstream::cli::CommandContext make_context(const CommonArgs& args) {
  std::optional<std::filesystem::path> file;
  if (!args.config_path.empty()) file = args.config_path;
  cellstream::cli::CommandContext ctx{
      cellstream::cli::AppConfig::load(file, args.overrides), args.out_dir,
      args.json, &std::cout};
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic blood-cell video dataset: generate, train, eval, report"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, report_args;
  CLI::App* gen = app.add_subcommand("generate", "generate the video dataset");
  add_common(gen, gen_args);
  CLI::App* train = app.add_subcommand("train", "train classifiers, one per seed");
  add_common(train, train_args);
  CLI::App* eval = app.add_subcommand("eval", "evaluate checkpoints on the test split");
  add_common(eval, eval_args);
  CLI::App* report = app.add_subcommand("report", "emit figures and summary CSV");
  add_common(report, report_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cellstream::cli::cmd_generate(make_context(gen_args));
    if (train->parsed())
      return cellstream::cli::cmd_train(make_context(train_args));
    if (eval->parsed())
      return cellstream::cli::cmd_eval(make_context(eval_args));
    if (report->parsed())
      return cellstream::cli::cmd_report(make_context(report_args));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
