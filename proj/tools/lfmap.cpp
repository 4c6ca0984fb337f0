// Command-line entry point: simulate | weight | project | toy-validate | inspect.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned workers = 0;
  bool workers_set = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&f](std::uint64_t s) { f.seed = s, f.seed_set = true; }, "master random seed");
  cmd->add_option_function<unsigned>(
      "--workers", [&f](unsigned w) { f.workers = w, f.workers_set = true; }, "worker threads (0 = all cores)");
}

lfmap::io::RunConfig resolve(const CommonFlags& f) {
  auto config = lfmap::app::load_config(f.config);
  if (f.seed_set) config.seed = f.seed;
  if (f.workers_set) config.workers = f.workers;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reweight a transmission-model simulation bank to pixel-level prevalence maps"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string delta;
  std::string ernd;

  auto* sim = app.add_subcommand("simulate", "build or resume the simulation bank");
  add_common(sim, flags);
  sim->add_option("--out", flags.out, "bank directory")->required();
  std::string sim_scenario;
  sim->add_option("--scenario", sim_scenario, "simulate only this configured scenario");

  lfmap::app::WeightOptions wopt;
  auto* wt = app.add_subcommand("weight", "pool pixels and compute per-unit weights");
  add_common(wt, flags);
  wt->add_option("--bank", wopt.bank_dir, "bank directory")->required();
  wt->add_option("--pixels", wopt.pixels, "pixel posterior CSV")->required()->check(CLI::ExistingFile);
  wt->add_option("--out", flags.out, "output directory")->required();
  wt->add_option("--delta", delta, "window width for the distance ERND, or 'auto'");
  wt->add_option("--ernd", ernd, "distance | histogram | discrepancy")
      ->check(CLI::IsMember({"distance", "histogram", "discrepancy"}));

  lfmap::app::ProjectOptions popt;
  auto* pj = app.add_subcommand("project", "weighted projections per scenario");
  add_common(pj, flags);
  pj->add_option("--bank", popt.bank_dir, "bank directory")->required();
  pj->add_option("--weights", popt.weights_dir, "directory written by 'weight'")->required();
  pj->add_option("--out", flags.out, "output directory")->required();
  pj->add_option("--scenario", popt.scenario, "project only this scenario");

  auto* toy = app.add_subcommand("toy-validate", "estimator comparison on the analytic toy model");
  add_common(toy, flags);
  toy->add_option("--out", flags.out, "directory for the table and per-replicate CSV");
  toy->add_option("--delta", delta, "fixed window width, or 'auto'");
  toy->add_option("--ernd", ernd, "restrict to one estimator")
      ->check(CLI::IsMember({"distance", "histogram", "discrepancy"}));

  lfmap::app::InspectOptions iopt;
  auto* ins = app.add_subcommand("inspect", "describe a bank directory or lfmap CSV file");
  ins->add_option("path", iopt.path, "bank directory or CSV file")->required();
  ins->add_option("--export-csv", iopt.export_csv, "write the bank as one CSV");

  CLI11_PARSE(app, argc, argv);

  lfmap::app::Diagnostics diag;
  lfmap::io::Severity fail = lfmap::io::Severity::kError;
  try {
    if (ins->parsed()) {
      lfmap::app::inspect(iopt, diag, std::cout);
    } else {
      auto config = resolve(flags);
      if (!ernd.empty()) config.weighting.ernd.kind = lfmap::parse_ernd_kind(ernd);
      if (!delta.empty()) {
        const double d = delta == "auto" ? 0.0 : std::stod(delta);
        config.weighting.ernd.delta = d;
        config.toy.delta = d;
      }
      fail = config.fail_severity;
      if (sim->parsed()) {
        if (!sim_scenario.empty()) {
          std::erase_if(config.scenarios, [&](const auto& s) { return s.name != sim_scenario; });
          if (config.scenarios.empty()) throw lfmap::InvalidArgument("no configured scenario named " + sim_scenario);
        }
        lfmap::app::simulate(config, {flags.out}, diag, std::cout);
      } else if (wt->parsed()) {
        wopt.out_dir = flags.out;
        lfmap::app::weight(config, wopt, diag, std::cout);
      } else if (pj->parsed()) {
        popt.out_dir = flags.out;
        lfmap::app::project(config, popt, diag, std::cout);
      } else if (toy->parsed()) {
        lfmap::app::ToyOptions topt{flags.out, {}};
        if (!ernd.empty()) topt.ernd = lfmap::parse_ernd_kind(ernd);
        lfmap::app::toy_validate(config, topt, diag, std::cout);
      }
    }
  } catch (const std::exception& e) {
    diag.print(std::cerr);
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  diag.print(std::cerr);
  return diag.count_at_least(fail) > 0 ? 1 : 0;
}
