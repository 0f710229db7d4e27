#include <CLI11.hpp>

#include "bilictrl/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = bilictrl::cli;
  CLI::App app{"Bilinear control synthesis driver"};
  app.require_subcommand(1);

  cli::Options opt;
  std::string out;
  const std::pair<const char*, cli::Command> commands[] = {
      {"check-mu", cli::Command::CheckMu},
      {"simulate", cli::Command::Simulate},
      {"synthesize", cli::Command::Synthesize},
      {"moment", cli::Command::Moment},
  };
  const char* help[] = {
      "Check the coupling hypothesis for a dipolar moment",
      "Propagate a control and write the trajectory",
      "Synthesize a control reaching the target",
      "Solve a standalone trigonometric moment problem",
  };
  for (int i = 0; i < 4; ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->add_option("--config", opt.config, "JSON run configuration")->required();
    sub->add_option("--jobs", opt.jobs, "Parallel sweep entries")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Output directory (overrides output_dir)");
    sub->callback([&opt, cmd = commands[i].second] { opt.command = cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }
  if (!out.empty()) opt.out = out;
  return cli::run(opt);
}
