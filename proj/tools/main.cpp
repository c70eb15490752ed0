#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "qsteer/io/commands.hpp"

namespace {

void add_common(CLI::App* cmd, qsteer::io::CommonOptions& opt) {
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--samples", opt.samples, "samples per stage");
  cmd->add_option("--mode", opt.mode, "stage-2 mode")->check(CLI::IsMember({"ideal", "pulse"}));
  cmd->add_option("--a", opt.a, "stage-1 parameter a (overrides an explicit duration)");
  cmd->add_option("--nmax", opt.n_max, "occupation cap");
  cmd->add_option("--threshold", opt.threshold, "pass threshold");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qsteer::io;

  CLI::App app{"qsteer: two-stage density matrix engineering"};
  app.require_subcommand(1);

  CommonOptions opt;
  VerifyOptions vopt;
  std::string path;
  std::size_t kraus_trials = 100;
  std::uint64_t kraus_seed = 0;

  auto* engineer = app.add_subcommand("engineer", "plan and run a scenario");
  engineer->add_option("scenario", path, "scenario file")->required();
  add_common(engineer, opt);

  auto* verify = app.add_subcommand("verify", "all-to-one check and controllability sweep");
  verify->add_option("scenario", path, "scenario file")->required();
  std::size_t verify_trials = 0;
  auto* trials_opt = verify->add_option("--trials", verify_trials, "random initial states (default: scenario trials)");
  auto* seed_opt = verify->add_option("--seed", vopt.seed, "RNG seed (default: scenario seed)");
  verify->add_option("--cases", vopt.sweep_cases, "controllability sweep cases");
  add_common(verify, opt);

  auto* controllability = app.add_subcommand("controllability", "Lie-algebra rank test");
  controllability->add_option("system", path, "system file")->required();

  auto* kraus = app.add_subcommand("kraus", "all-to-one operator-sum map for a target");
  kraus->add_option("target", path, "target state file")->required();
  kraus->add_option("--trials", kraus_trials, "random inputs for the constant-output check");
  kraus->add_option("--seed", kraus_seed, "RNG seed");
  add_common(kraus, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitParse;
  }
  vopt.seed_given = seed_opt->count() > 0;
  if (trials_opt->count() > 0) vopt.trials = verify_trials;

  return guarded(
      [&] {
        if (*engineer) return cmd_engineer(path, opt, std::cout, std::cerr);
        if (*verify) return cmd_verify(path, opt, vopt, std::cout, std::cerr);
        if (*controllability) return cmd_controllability(path, std::cout);
        return cmd_kraus(path, opt, kraus_trials, kraus_seed, std::cout);
      },
      std::cerr);
}
