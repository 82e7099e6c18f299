// pulselock: steady-state spin dynamics, nuclear frequency focusing and
// ensemble pump-probe signals for a periodically pulsed quantum dot ensemble.
//
//   pulselock <subcommand> [--config FILE] [--set key=value ...]
//             [--out FILE] [--format csv|json] [--threads N]

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pulselock/pulselock.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;
  std::string format = "csv";
  int threads = -1;  // -1: honor the config value
};

void add_common(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("--config", opts.config_path, "configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", opts.overrides, "override a config entry, key=value (repeatable)");
  sub->add_option("--out", opts.out_path, "output path (default: stdout)");
  sub->add_option("--format", opts.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--threads", opts.threads, "worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
}

int execute(const std::string& name, const CommonOptions& opts) {
  pulselock::ExperimentConfig cfg = pulselock::parse_config(opts.config_path, opts.overrides);
  if (opts.threads >= 0) cfg.threads = opts.threads;

  std::ostringstream buffer;
  const int rc = pulselock::run_subcommand(name, cfg, buffer, pulselock::parse_format(opts.format));

  if (opts.out_path.empty()) {
    std::cout << buffer.str();
  } else {
    std::ofstream out(opts.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + opts.out_path + "'");
    out << buffer.str();
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum dot spin mode-locking and nuclear frequency focusing simulator"};
  app.require_subcommand(1);

  struct SubEntry {
    std::string name;
    CommonOptions opts;
  };
  std::vector<SubEntry> entries;
  entries.reserve(pulselock::subcommand_names().size());

  const std::vector<std::pair<std::string, std::string>> descriptions{
      {"pulse", "single-pulse action (analytic and ODE oracle) vs detuning"},
      {"steady-state", "post-pulse steady spin components vs precession frequency"},
      {"trace", "time-resolved rotation/ellipticity over positive and negative delay"},
      {"spectra", "positive-delay rotation/ellipticity spectra vs probe detuning"},
      {"nuclear-evolve", "time evolution of the nuclear polarization distribution"},
      {"nuclear-dos", "steady-state density of states of precession frequencies"},
      {"selftest", "run the built-in analytic and oracle checks"},
  };

  for (const auto& [name, desc] : descriptions) {
    entries.push_back({name, {}});
    CLI::App* sub = app.add_subcommand(name, desc);
    add_common(sub, entries.back().opts);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& entry : entries) {
      if (app.get_subcommand(entry.name)->parsed()) return execute(entry.name, entry.opts);
    }
    std::cerr << "pulselock: no subcommand selected\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "pulselock: " << err.what() << "\n";
    return 1;
  }
}
