#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <ostream>

#include "lfmap/bank.hpp"
#include "lfmap/io/bank_io.hpp"
#include "lfmap/io/results_io.hpp"
#include "lfmap/pipeline/pixels.hpp"
#include "lfmap/pipeline/projection.hpp"
#include "lfmap/pipeline/weighting.hpp"
#include "lfmap/toy.hpp"

namespace fs = std::filesystem;

namespace lfmap::app {

void Diagnostics::add(io::Severity severity, std::string message) {
  messages_.emplace_back(severity, std::move(message));
}

std::size_t Diagnostics::count_at_least(io::Severity threshold) const {
  return static_cast<std::size_t>(std::count_if(messages_.begin(), messages_.end(), [&](const auto& m) {
    return static_cast<int>(m.first) >= static_cast<int>(threshold);
  }));
}

void Diagnostics::print(std::ostream& out) const {
  for (const auto& [severity, message] : messages_) out << to_string(severity) << ": " << message << '\n';
}

io::RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return io::config_from_json(io::read_json(path));
}

namespace {

BankProposal make_proposal(const io::RunConfig& config) {
  BankProposal p;
  p.population = adapt_population_proposal(config.bank.population).proposal;
  p.vh_k = config.bank.vh_k_grid.empty() ? VhKGrid::default_grid() : io::read_vh_k_grid(config.bank.vh_k_grid);
  p.importation_max = config.bank.importation_max;
  return p;
}

nlohmann::json schedule_to_json(const transfil::ImportationSchedule& s) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, values] : s.table()) j[name] = values;
  return j;
}

transfil::ImportationSchedule schedule_from_json(const nlohmann::json& j) {
  transfil::ImportationSchedule s;
  for (const auto& item : j.items()) s.set(item.key(), item.value().get<std::vector<double>>());
  return s;
}

std::string severity_counts(const pipeline::UnitWeights& w) {
  std::string out = "unit " + w.unit_id;
  if (!w.ok()) return out + ": weighting failed: " + w.failure;
  std::ostringstream s;
  s << out << ": ESS " << std::setprecision(4) << w.ess;
  return s.str();
}

}  // namespace

void simulate(const io::RunConfig& config, const SimulateOptions& options, Diagnostics& diag, std::ostream& log) {
  detail::require(!options.out_dir.empty(), "--out is required");
  config.validate();
  fs::create_directories(options.out_dir);
  const auto scenarios = config.build_scenarios();
  const BankProposal proposal = make_proposal(config);
  const nlohmann::json config_json = io::to_json(config);

  io::BankManifest manifest;
  if (fs::exists(io::manifest_path(options.out_dir))) {
    manifest = io::read_manifest(options.out_dir);
    if (manifest.config != config_json) {
      throw InvalidArgument(options.out_dir + " holds a bank built from a different configuration");
    }
    log << "resuming bank in " << options.out_dir << '\n';
  } else {
    manifest.seed = config.seed;
    manifest.simulations = config.bank.simulations;
    manifest.shard_size = config.bank.shard_size;
    manifest.scenarios = scenario_names(scenarios);
    manifest.horizon_years = config.horizon_years;
    manifest.config = config_json;
    manifest.importation = nullptr;
  }

  if (manifest.importation.is_null()) {
    transfil::ImportationSchedule schedule;
    if (config.bank.pilot_simulations > 0) {
      log << "pilot: " << config.bank.pilot_simulations << " simulations with constant importation\n";
      schedule = pilot_importation_schedule(proposal, config.bank.model, scenarios, config.bank.pilot_simulations,
                                            config.seed, config.workers);
    }
    manifest.importation = schedule_to_json(schedule);
    io::write_manifest(options.out_dir, manifest);
  }
  const auto schedule = schedule_from_json(manifest.importation);

  const std::uint64_t total = config.bank.simulations;
  const std::uint64_t shard_size = config.bank.shard_size;
  const std::size_t shard_count = static_cast<std::size_t>((total + shard_size - 1) / shard_size);
  std::vector<io::ShardEntry> entries(shard_count);
  std::vector<bool> done(shard_count, false);
  for (const auto& e : manifest.shards) {
    const std::size_t k = static_cast<std::size_t>(e.first / shard_size);
    if (k < shard_count && e.first == k * shard_size && io::shard_intact(options.out_dir, e)) {
      entries[k] = e;
      done[k] = true;
    } else if (k < shard_count) {
      diag.add(io::Severity::kWarning, e.file + " is missing or corrupt; regenerating");
    }
  }

  for (std::size_t k = 0; k < shard_count; ++k) {
    if (done[k]) continue;
    const std::uint64_t first = k * shard_size;
    const std::uint64_t count = std::min(shard_size, total - first);
    const SimulationBank part = simulate_bank(proposal, config.bank.model, scenarios, count, config.seed,
                                              config.workers, schedule, first);
    const std::string name = io::shard_name(k);
    const std::uint32_t crc = io::write_shard((fs::path(options.out_dir) / name).string(), part, first);
    entries[k] = {name, first, count, crc};
    done[k] = true;
    manifest.shards.clear();
    for (std::size_t i = 0; i < shard_count; ++i) {
      if (done[i]) manifest.shards.push_back(entries[i]);
    }
    io::write_manifest(options.out_dir, manifest);
    log << "shard " << k + 1 << "/" << shard_count << " written (" << first + count << " simulations)\n";
  }

  const SimulationBank bank = io::read_bank(options.out_dir);
  std::size_t zero = 0;
  for (double p : bank.equilibrium_column()) zero += p == 0.0 ? 1U : 0U;
  log << "bank complete: " << bank.size() << " simulations, " << zero << " with zero baseline prevalence\n";
}

void weight(const io::RunConfig& config, const WeightOptions& options, Diagnostics& diag, std::ostream& log) {
  detail::require(!options.out_dir.empty(), "--out is required");
  detail::require(!options.bank_dir.empty(), "--bank is required");
  detail::require(!options.pixels.empty(), "--pixels is required");
  config.validate();
  fs::create_directories(options.out_dir);
  const SimulationBank bank = io::read_bank(options.bank_dir);
  const auto pixels = io::read_pixels(options.pixels);
  const auto pooled = pipeline::pool_and_filter(pixels, config.pooling);
  for (const auto& w : pooled.warnings) diag.add(io::Severity::kWarning, w);
  for (const auto& e : pooled.exclusions) {
    diag.add(io::Severity::kInfo, "pixel " + e.pixel_id + " excluded: " + e.reason);
  }
  log << pixels.size() << " pixels -> " << pooled.units.size() << " units (" << pooled.exclusions.size()
      << " excluded)\n";

  const auto weights = pipeline::weight_all(pooled.units, bank, config.weighting, config.workers);
  for (const auto& w : weights) {
    if (!w.ok()) {
      diag.add(io::Severity::kError, severity_counts(w));
    } else if (w.low_ess) {
      diag.add(io::Severity::kWarning, severity_counts(w) + " is below the floor");
    }
    if (w.delta_fallback) diag.add(io::Severity::kWarning, "unit " + w.unit_id + ": degenerate window width");
  }

  io::write_units((fs::path(options.out_dir) / "units.csv").string(), pooled.units, weights);
  io::write_weights((fs::path(options.out_dir) / "weights.csv").string(), weights);
  {
    io::CsvWriter ex((fs::path(options.out_dir) / "exclusions.csv").string(), "exclusions",
                     {"pixel_id", "country", "population", "reason"});
    for (const auto& e : pooled.exclusions) {
      ex.row({e.pixel_id, e.country, io::format_double(e.population), e.reason});
    }
    ex.close();
  }
  nlohmann::json run;
  run["config"] = io::to_json(config);
  run["bank_seed"] = io::read_manifest(options.bank_dir).seed;
  run["bank_simulations"] = bank.size();
  run["pixels_crc32"] = io::file_crc32(options.pixels);
  io::write_json((fs::path(options.out_dir) / "weights_manifest.json").string(), run);
  log << "weights written to " << options.out_dir << '\n';
}

void project(const io::RunConfig& config, const ProjectOptions& options, Diagnostics& diag, std::ostream& log) {
  detail::require(!options.out_dir.empty(), "--out is required");
  detail::require(!options.bank_dir.empty(), "--bank is required");
  detail::require(!options.weights_dir.empty(), "--weights is required");
  config.validate();
  fs::create_directories(options.out_dir);
  const SimulationBank bank = io::read_bank(options.bank_dir);
  const auto weights = io::read_weights((fs::path(options.weights_dir) / "units.csv").string(),
                                        (fs::path(options.weights_dir) / "weights.csv").string());
  for (const auto& w : weights) {
    if (!w.ok()) diag.add(io::Severity::kWarning, "unit " + w.unit_id + " has no weights and is skipped");
    for (std::uint32_t j : w.index) {
      if (j >= bank.size()) throw FormatError("weights refer to simulation " + std::to_string(j) + " beyond the bank");
    }
  }

  std::vector<std::size_t> selected;
  if (options.scenario.empty()) {
    for (std::size_t s = 0; s < bank.scenarios().size(); ++s) selected.push_back(s);
  } else {
    selected.push_back(bank.scenario_index(options.scenario));
  }

  std::vector<io::ProportionRow> proportions;
  for (std::size_t s : selected) {
    const auto summaries = pipeline::project_all(weights, bank, s, config.projection, config.workers);
    const std::string name = bank.scenarios()[s];
    io::write_summary((fs::path(options.out_dir) / ("summary_" + name + ".csv")).string(), summaries);
    io::write_elimination((fs::path(options.out_dir) / ("elimination_" + name + ".csv")).string(), summaries,
                          config.projection);
    for (std::size_t y = 0; y < bank.points(); ++y) {
      for (double p : config.projection.probability_thresholds) {
        proportions.push_back({name, static_cast<int>(y), p, pipeline::proportion_eliminated(summaries, y, p)});
      }
    }
    log << "scenario " << name << ": " << summaries.size() << " units projected\n";
  }
  io::write_proportions((fs::path(options.out_dir) / "proportion_eliminated.csv").string(), proportions);

  io::CsvWriter base((fs::path(options.out_dir) / "baseline.csv").string(), "baseline",
                     {"unit_id", "lower", "median", "upper", "mean", "estimated_population", "ess"});
  for (const auto& w : weights) {
    if (!w.ok()) continue;
    const auto b = pipeline::baseline_summary(w, bank, config.projection.elimination_threshold);
    base.row({w.unit_id, io::format_double(b.lower), io::format_double(b.median), io::format_double(b.upper),
              io::format_double(b.mean), io::format_double(pipeline::estimated_population(w, bank)),
              io::format_double(w.ess)});
  }
  base.close();
}

void toy_validate(const io::RunConfig& config, const ToyOptions& options, Diagnostics& diag, std::ostream& log) {
  (void)diag;
  config.validate();
  std::vector<ErndKind> kinds{ErndKind::kDistance, ErndKind::kHistogram, ErndKind::kDiscrepancy};
  if (options.ernd) kinds = {*options.ernd};
  const auto delta = config.toy.delta > 0.0 ? toy::DeltaPolicy::constant(config.toy.delta)
                                            : toy::DeltaPolicy::automatic();
  std::vector<toy::TableRow> rows;
  std::vector<toy::ToyExperimentReport> all;
  for (auto proposal : {toy::ProposalKind::kPrior, toy::ProposalKind::kUniform}) {
    for (auto kind : kinds) {
      const auto reports = toy::run_toy_experiment(config.toy.samples, config.toy.simulations, config.toy.replicates,
                                                   kind, proposal, delta, config.seed, config.workers);
      rows.push_back(toy::table_row(reports));
      all.insert(all.end(), reports.begin(), reports.end());
    }
  }

  log << std::left << std::setw(13) << "proposal" << std::setw(13) << "ernd" << std::setw(36)
      << "ISDx1000 median (2.5%, 97.5%)" << "ESS median (2.5%, 97.5%)\n";
  for (const auto& r : rows) {
    std::ostringstream isd;
    isd << std::setprecision(5) << r.isd_x1000.median << " (" << r.isd_x1000.lower << ", " << r.isd_x1000.upper
        << ")";
    std::ostringstream ess;
    ess << std::fixed << std::setprecision(0) << r.ess.median << " (" << r.ess.lower << ", " << r.ess.upper << ")";
    log << std::left << std::setw(13) << toy::to_string(r.proposal) << std::setw(13) << to_string(r.ernd)
        << std::setw(36) << isd.str() << ess.str() << '\n';
  }

  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    io::CsvWriter table((fs::path(options.out_dir) / "toy_table.csv").string(), "toy_table",
                        {"proposal", "ernd", "isd_x1000_median", "isd_x1000_mean", "isd_x1000_lower",
                         "isd_x1000_upper", "ess_median", "ess_mean", "ess_lower", "ess_upper"});
    for (const auto& r : rows) {
      table.row({toy::to_string(r.proposal), to_string(r.ernd), io::format_double(r.isd_x1000.median),
                 io::format_double(r.isd_x1000.mean), io::format_double(r.isd_x1000.lower),
                 io::format_double(r.isd_x1000.upper), io::format_double(r.ess.median), io::format_double(r.ess.mean),
                 io::format_double(r.ess.lower), io::format_double(r.ess.upper)});
    }
    table.close();
    io::CsvWriter reps((fs::path(options.out_dir) / "toy_replicates.csv").string(), "toy_replicates",
                       {"proposal", "ernd", "replicate_seed", "ks", "isd", "ess", "delta"});
    for (const auto& r : all) {
      reps.row({toy::to_string(r.proposal), to_string(r.ernd), std::to_string(r.replicate_seed),
                io::format_double(r.ks), io::format_double(r.isd), io::format_double(r.ess),
                io::format_double(r.delta)});
    }
    reps.close();
  }
}

void inspect(const InspectOptions& options, Diagnostics& diag, std::ostream& log) {
  detail::require(!options.path.empty(), "a path to inspect is required");
  if (fs::is_directory(options.path)) {
    const auto manifest = io::read_manifest(options.path);
    std::size_t bad = 0;
    for (const auto& e : manifest.shards) {
      if (!io::shard_intact(options.path, e)) {
        ++bad;
        diag.add(io::Severity::kError, e.file + ": missing or checksum mismatch");
      }
    }
    log << "bank: " << manifest.simulations << " simulations in " << manifest.shards.size() << " shards, seed "
        << manifest.seed << '\n';
    log << "scenarios:";
    for (const auto& s : manifest.scenarios) log << ' ' << s;
    log << "\nhorizon: " << manifest.horizon_years << " years\n";
    if (bad > 0) return;
    const SimulationBank bank = io::read_bank(options.path);
    std::vector<std::size_t> bins(10, 0);
    for (double p : bank.equilibrium_column()) bins[std::min<std::size_t>(9, static_cast<std::size_t>(p * 10))]++;
    log << "baseline prevalence deciles:";
    for (auto b : bins) log << ' ' << b;
    log << '\n';
    for (std::size_t s = 0; s < bank.scenarios().size(); ++s) {
      const auto last = bank.column(s, bank.points() - 1);
      double mean = 0.0;
      for (double v : last) mean += v;
      log << "  " << bank.scenarios()[s] << ": mean final-year prevalence " << mean / static_cast<double>(last.size())
          << '\n';
    }
    if (!options.export_csv.empty()) {
      io::export_bank_csv(bank, options.export_csv);
      log << "exported to " << options.export_csv << '\n';
    }
    return;
  }
  const auto table = io::read_csv(options.path);
  log << options.path << ": " << (table.kind.empty() ? "unversioned" : "lfmap " + table.kind) << ", "
      << table.rows.size() << " rows, columns:";
  for (const auto& c : table.columns) log << ' ' << c;
  log << '\n';
}

}  // namespace lfmap::app
