#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pulselock/config.hpp"
#include "pulselock/runner.hpp"
#include "pulselock/table.hpp"

using namespace pulselock;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    path = std::string("pulselock_test_cfg_") + std::to_string(::getpid()) + ".tmp";
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

std::string run_to_string(const std::string& sub, const ExperimentConfig& cfg,
                          OutputFormat fmt = OutputFormat::csv) {
  std::ostringstream os;
  run_subcommand(sub, cfg, os, fmt);
  return os.str();
}

}  // namespace

TEST_CASE("empty config file yields all defaults") {
  TempFile f("");
  const ExperimentConfig cfg = parse_config(f.path);
  CHECK(cfg.b_tesla == 3.0);
  CHECK(cfg.g_e == 0.43);
  CHECK(cfg.rep_rate_mhz == 81.0);
  CHECK(cfg.t2_ns == 150.0);
  CHECK(cfg.resolved_t1_ns() == 150.0);
  CHECK(cfg.n_nuclei == 20000);
}

TEST_CASE("comments, blank lines and overrides") {
  TempFile f("# a comment\n\nB_tesla = 2.0  # trailing comment\n  T2_ns=120\n");
  const ExperimentConfig cfg = parse_config(f.path, {"g_e=0.5", "T1_ns=400"});
  CHECK(cfg.b_tesla == 2.0);
  CHECK(cfg.t2_ns == 120.0);
  CHECK(cfg.g_e == 0.5);
  CHECK(cfg.resolved_t1_ns() == 400.0);
}

TEST_CASE("halving the repetition rate doubles the period and halves PSC spacing") {
  const ExperimentConfig base = parse_config("");
  const ExperimentConfig slow = parse_config("", {"rep_rate_mhz=40.5"});
  CHECK(slow.t_rep_ps() == Catch::Approx(2.0 * base.t_rep_ps()).epsilon(1e-15));
  CHECK(slow.psc_spacing() == Catch::Approx(0.5 * base.psc_spacing()).epsilon(1e-15));
}

TEST_CASE("unknown keys and malformed values are rejected with the key name") {
  TempFile f("no_such_key = 1\n");
  CHECK_THROWS_WITH(parse_config(f.path), Catch::Matchers::ContainsSubstring("no_such_key"));
  CHECK_THROWS_WITH(parse_config("", {"B_tesla=abc"}),
                    Catch::Matchers::ContainsSubstring("B_tesla"));
  CHECK_THROWS_WITH(parse_config("", {"bogus=1"}),
                    Catch::Matchers::ContainsSubstring("bogus"));
}

TEST_CASE("validation errors name the offending field") {
  CHECK_THROWS_WITH(parse_config("", {"T2_ns=-5"}), Catch::Matchers::ContainsSubstring("T2_ns"));
  CHECK_THROWS_WITH(parse_config("", {"n_nuclei=3"}),
                    Catch::Matchers::ContainsSubstring("n_nuclei"));
  CHECK_THROWS_WITH(parse_config("", {"pump_shape=gauss"}),
                    Catch::Matchers::ContainsSubstring("pump_shape"));
  CHECK_THROWS_WITH(parse_config("", {"delay_min_ps=-99999999"}),
                    Catch::Matchers::ContainsSubstring("delay_min_ps"));
}

TEST_CASE("config echo is stable and hashed") {
  const ExperimentConfig cfg = parse_config("");
  const auto echo = cfg.echo();
  CHECK(echo.front().first == "B_tesla");
  const std::string h1 = config_hash(echo);
  const std::string h2 = config_hash(cfg.echo());
  CHECK(h1 == h2);
  const ExperimentConfig other = parse_config("", {"g_e=0.44"});
  CHECK(config_hash(other.echo()) != h1);
}

TEST_CASE("pulse subcommand emits the transparency row at delta = sigma") {
  ExperimentConfig cfg = parse_config("", {"pump_area_pi=2", "pulse_x_min=1", "pulse_x_max=1"});
  const std::string csv = run_to_string("pulse", cfg);

  // last line is the single data row
  std::istringstream is(csv);
  std::string line, data, header;
  bool next_is_data = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    if (!next_is_data) {
      header = line;
      next_is_data = true;
    } else {
      data = line;
    }
  }
  CHECK(header ==
        "delta_over_rate,detuning_rad_ps,detuning_mev,q,phi_rad,w,q_ode,phi_ode_rad,w_ode");
  std::vector<double> vals;
  std::stringstream ds(data);
  std::string item;
  while (std::getline(ds, item, ',')) vals.push_back(std::stod(item));
  REQUIRE(vals.size() == 9);
  CHECK(vals[3] == Catch::Approx(1.0).margin(1e-9));          // q
  CHECK(vals[4] == Catch::Approx(pi / 2.0).margin(1e-9));     // phi
  CHECK(vals[5] == Catch::Approx(0.0).margin(1e-9));          // w
}

TEST_CASE("steady-state subcommand: header shape and Sz troughs at integers") {
  ExperimentConfig cfg =
      parse_config("", {"omega_samples=201", "omega_window_psc=1", "threads=1"});
  const std::string csv = run_to_string("steady-state", cfg);

  std::istringstream is(csv);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::string header;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = line;
      continue;
    }
    std::vector<double> vals;
    std::stringstream ds(line);
    std::string item;
    while (std::getline(ds, item, ',')) vals.push_back(std::stod(item));
    rows.push_back(vals);
  }
  CHECK(header == "omega_psc_units,sx_neg,sy_neg,sz_neg,sx_pos,sy_pos,sz_pos");
  REQUIRE(rows.size() == 201);

  // Sz minimum sits at the central integer x; Sx odd between the two signs
  std::size_t argmin = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i][3] < rows[argmin][3]) argmin = i;
  CHECK(std::abs(rows[argmin][0] - std::round(rows[argmin][0])) < 0.02);
  for (const auto& r : rows) CHECK(r[1] == Catch::Approx(-r[4]).margin(1e-12));
}

TEST_CASE("subcommand output is byte-identical across runs and thread counts") {
  ExperimentConfig cfg = parse_config(
      "", {"omega_samples=101", "delta_qd_samples=11", "spectra_omega_per_psc=4",
           "trace_omega_per_psc=16", "delay_step_ps=50", "n_nuclei=2000", "window_psc=1.5",
           "dos_omega_samples=8", "dos_bins=64", "evolve_points=5", "evolve_t_max_ps=1e5",
           "pulse_x_step=0.5", "spectra_areas_pi=0.5"});

  for (const std::string& sub : subcommand_names()) {
    cfg.threads = 1;
    const std::string a = run_to_string(sub, cfg);
    const std::string b = run_to_string(sub, cfg);
    cfg.threads = 0;  // all cores
    const std::string c = run_to_string(sub, cfg);
    INFO("subcommand " << sub);
    CHECK(a == b);
    // the threads key is echoed in the header; compare data payloads only
    const auto payload = [](const std::string& s) {
      std::string out;
      std::istringstream is(s);
      std::string line;
      while (std::getline(is, line))
        if (line.rfind("# threads", 0) != 0 && line.rfind("# config_hash", 0) != 0)
          out += line + "\n";
      return out;
    };
    CHECK(payload(a) == payload(c));
  }
}

TEST_CASE("json output carries meta, columns and rows") {
  ExperimentConfig cfg = parse_config("", {"pulse_x_min=0", "pulse_x_max=1", "pulse_x_step=0.5"});
  const std::string js = run_to_string("pulse", cfg, OutputFormat::json);
  CHECK(js.find("\"meta\"") != std::string::npos);
  CHECK(js.find("\"config_hash\"") != std::string::npos);
  CHECK(js.find("\"columns\"") != std::string::npos);
  CHECK(js.find("\"rows\"") != std::string::npos);
}

TEST_CASE("selftest passes on the default configuration") {
  const ExperimentConfig cfg = parse_config("");
  std::ostringstream os;
  const int rc = run_subcommand("selftest", cfg, os);
  INFO(os.str());
  CHECK(rc == 0);
  CHECK(os.str().find("[FAIL]") == std::string::npos);
}
