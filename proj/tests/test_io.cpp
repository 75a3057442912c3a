#include <catch2/catch_amalgamated.hpp>

#include <mdest/runner.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace mdest;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
  REQUIRE(os.good());
}

// Fresh empty directory under the system temp root. Unique per call so
// parallel test runs cannot collide.
fs::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path p =
      fs::temp_directory_path() / ("mdest_io_" + tag + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

// Minimal two-block domain spec with an embedded fracture, as JSON text.
// Geometry matches the unit square cut at x = 0.5.
std::string fracture_spec_text() {
  return R"({
  "subdomains": [
    {"id": 1, "dim": 2,
     "polygon": [[0, 0], [0.5, 0], [0.5, 1], [0, 1]],
     "k": 1.0,
     "boundary": [
       {"type": "dirichlet", "a": [0, 0], "b": [0, 1], "value": 1.0},
       {"type": "neumann", "rest": true}
     ]},
    {"id": 2, "dim": 2,
     "polygon": [[0.5, 0], [1, 0], [1, 1], [0.5, 1]],
     "k_tensor": [1.0, 0.0, 1.0],
     "boundary": [
       {"type": "dirichlet", "a": [1, 0], "b": [1, 1], "value": 0.0},
       {"type": "neumann", "rest": true}
     ]},
    {"id": 3, "dim": 1,
     "segment": [[0.5, 0], [0.5, 1]],
     "k": 1.0,
     "source": 0.0,
     "boundary": [{"type": "neumann", "rest": true}]}
  ],
  "interfaces": [
    {"id": 10, "hi": 1, "lo": 3, "dim": 1, "a": [0.5, 0], "b": [0.5, 1],
     "side_normal": [-1, 0], "kappa": 2.0},
    {"id": 11, "hi": 2, "lo": 3, "dim": 1, "a": [0.5, 0], "b": [0.5, 1],
     "side_normal": [1, 0], "kappa": 2.0}
  ]
})";
}

} // namespace

TEST_CASE("g17 round-trips doubles exactly") {
  std::mt19937_64 rng(0x10aa);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  std::vector<double> values = {0.0, 1.0, -1.0, 1.0 / 3.0, 0.125, 1e-300, 6.25e-2, 3.141592653589793};
  for (int t = 0; t < 200; ++t) values.push_back(std::ldexp(mant(rng), expo(rng)));
  for (double v : values) {
    const std::string s = g17(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("table headers are stable") {
  CHECK(std::string(majorant_header()) ==
        "scenario,h,config,majorant,eta_df,eta_res,err_primal,err_dual,eff_primal,eff_dual");
  CHECK(std::string(indicator_header()) ==
        "scenario,h,config,eta_omega_2,eta_omega_1,eta_omega_0,eta_gamma_1,eta_gamma_0");
  CHECK(std::string(summary_header()) == "scenario,h,quantity,matching,mean,stddev,rel_deviation");
}

TEST_CASE("majorant rows serialize with and without true errors") {
  MajorantRow with{};
  with.scenario = "demo";
  with.h = 0.25;
  with.config = "matching";
  with.majorant = 2.0;
  with.eta_df = 1.5;
  with.eta_res = 0.5;
  with.has_err = true;
  with.err_primal = 1.0;
  with.err_dual = 0.5;
  with.eff_primal = 2.0;
  with.eff_dual = 4.0;

  MajorantRow without = with;
  without.config = "plus";
  without.has_err = false;

  const std::string csv = to_csv(std::vector<MajorantRow>{with, without});
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == majorant_header());

  std::getline(ss, line);
  auto cells = split_csv_line(line);
  REQUIRE(cells.size() == 10);
  CHECK(cells[0] == "demo");
  CHECK(std::stod(cells[1]) == 0.25);
  CHECK(cells[2] == "matching");
  CHECK(std::stod(cells[3]) == 2.0);
  CHECK(std::stod(cells[6]) == 1.0);
  CHECK(std::stod(cells[9]) == 4.0);

  // Reference-free rows keep the column count with empty error fields.
  std::getline(ss, line);
  cells = split_csv_line(line);
  REQUIRE(cells.size() == 10);
  CHECK(cells[2] == "plus");
  CHECK(cells[6].empty());
  CHECK(cells[7].empty());
  CHECK(cells[8].empty());
  CHECK(cells[9].empty());

  const nlohmann::json jw = to_json(with);
  CHECK(jw.contains("err_primal"));
  const nlohmann::json jo = to_json(without);
  CHECK(!jo.contains("err_primal"));
}

TEST_CASE("indicator and summary rows serialize in declared column order") {
  IndicatorRow ir{};
  ir.scenario = "demo";
  ir.h = 0.5;
  ir.config = "minus";
  ir.eta_omega = {3.0, 2.0, 1.0}; // indexed by dimension
  ir.eta_gamma = {5.0, 4.0};
  const std::string csv = to_csv(std::vector<IndicatorRow>{ir});
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  std::getline(ss, line);
  const auto cells = split_csv_line(line);
  REQUIRE(cells.size() == 8);
  // Dimensions descend: omega 2,1,0 then gamma 1,0.
  CHECK(std::stod(cells[3]) == 1.0);
  CHECK(std::stod(cells[4]) == 2.0);
  CHECK(std::stod(cells[5]) == 3.0);
  CHECK(std::stod(cells[6]) == 4.0);
  CHECK(std::stod(cells[7]) == 5.0);

  SummaryRow sr{};
  sr.scenario = "demo";
  sr.quantity = "majorant";
  sr.h = 0.25;
  sr.matching = 1.0;
  sr.mean = 1.1;
  sr.stddev = 0.05;
  sr.rel_deviation = 0.1;
  const std::string scsv = to_csv(std::vector<SummaryRow>{sr});
  std::stringstream ss2(scsv);
  std::getline(ss2, line);
  std::getline(ss2, line);
  const auto scells = split_csv_line(line);
  REQUIRE(scells.size() == 7);
  CHECK(scells[2] == "majorant");
  CHECK(std::stod(scells[6]) == 0.1);
}

TEST_CASE("per-cell JSON recomposes the majorant by the square-sum rules") {
  const Scenario sc = *scenario_by_name("series_resistance");
  GridBundle bundle = generate_matching_bundle(sc.domain, 0.25);
  MdSystem sys = build_system(bundle);
  const MdSolution sol = solve(sys, {});
  const std::vector<GridField> srec = reconstruct_all(sys, sol);
  const EstimateReport rep = estimate(sys, sol, srec);

  const nlohmann::json j = cells_json(sc.name, 0.25, "matching", sc.domain, rep);
  CHECK(j["scenario"] == sc.name);
  CHECK(j["h"].get<double>() == 0.25);
  REQUIRE(j["subdomains"].size() == sc.domain.subdomains.size());
  REQUIRE(j["interfaces"].size() == sc.domain.interfaces.size());

  double df2 = 0, r2 = 0;
  for (const auto& e : j["subdomains"]) {
    for (double v : e["eta_df_par"]) df2 += v * v;
    for (double v : e["eta_r"]) r2 += v * v;
  }
  for (const auto& e : j["interfaces"])
    for (double v : e["eta_df_perp"]) df2 += v * v;
  const double recomposed = std::sqrt(df2) + std::sqrt(r2);
  CHECK(std::abs(recomposed - j["majorant"].get<double>()) <=
        1e-13 * std::max(1.0, rep.majorant));
  CHECK(std::abs(std::sqrt(df2) - j["eta_df"].get<double>()) <= 1e-13);
  CHECK(std::abs(std::sqrt(r2) - j["eta_res"].get<double>()) <= 1e-13);

  // Every cell of every grid is accounted for.
  for (size_t i = 0; i < sc.domain.subdomains.size(); ++i)
    CHECK(j["subdomains"][i]["eta_df_par"].size() == size_t(bundle.subgrids[i].num_cells()));
  for (size_t q = 0; q < sc.domain.interfaces.size(); ++q)
    CHECK(j["interfaces"][q]["eta_df_perp"].size() ==
          size_t(bundle.interface_grids[q].num_cells()));
}

TEST_CASE("grid, bundle, and transfer JSON mirror the in-memory shapes") {
  const Scenario sc = *scenario_by_name("series_resistance");
  GridBundle bundle = generate_matching_bundle(sc.domain, 0.25);

  const nlohmann::json gj = grid_json(bundle.subgrids[0]);
  CHECK(gj["dim"] == 2);
  CHECK(gj["nodes"].size() == size_t(bundle.subgrids[0].num_nodes()));
  REQUIRE(gj["cells"].size() == size_t(bundle.subgrids[0].num_cells()));
  CHECK(gj["cells"][0].size() == 3);

  const nlohmann::json bj = bundle_json(bundle);
  CHECK(bj["target_h"].get<double>() == 0.25);
  REQUIRE(bj["subdomains"].size() == sc.domain.subdomains.size());
  CHECK(bj["subdomains"][0]["id"] == sc.domain.subdomains[0].id);
  REQUIRE(bj["interfaces"].size() == sc.domain.interfaces.size());

  MdSystem sys = build_system(bundle);
  const TransferGrid& tg = sys.projectors[0].tg_lo;
  const nlohmann::json tj = transfer_json(tg);
  CHECK(tj["dim"] == tg.dim);
  REQUIRE(tj["cells"].size() == tg.cells.size());
  CHECK(tj["total_measure"].get<double>() == Catch::Approx(tg.total_measure()).margin(1e-15));
  double sum = 0;
  for (const auto& c : tj["cells"]) sum += c["measure"].get<double>();
  CHECK(std::abs(sum - tj["total_measure"].get<double>()) <= 1e-12);
}

TEST_CASE("domain spec reader builds a solvable domain") {
  const fs::path dir = scratch_dir("spec");
  const fs::path spec = dir / "fracture.json";
  spit(spec, fracture_spec_text());

  const MdDomain dom = read_domain_spec(spec);
  REQUIRE(dom.subdomains.size() == 3);
  CHECK(dom.subdomains[0].dim == 2);
  CHECK(dom.subdomains[2].dim == 1);
  REQUIRE(dom.interfaces.size() == 2);
  CHECK(dom.interfaces[0].hi == 1);
  CHECK(dom.interfaces[0].lo == 3);
  CHECK(dom.interfaces[0].kappa(Vec2(0.5, 0.5)) == 2.0);
  CHECK(dom.hat_S(3).size() == 2);

  // The k_tensor block must land in the permeability callable.
  const Mat2 K = dom.subdomains[1].K2(Vec2(0.7, 0.5));
  CHECK(K(0, 0) == 1.0);
  CHECK(K(0, 1) == 0.0);
  CHECK(K(1, 1) == 1.0);

  GridBundle bundle = generate_matching_bundle(dom, 0.25);
  MdSystem sys = build_system(bundle);
  const MdSolution sol = solve(sys, {});
  CHECK(max_conservation_residual(sys, sol) < 1e-10);
  fs::remove_all(dir);
}

TEST_CASE("domain spec reader rejects malformed input") {
  const fs::path dir = scratch_dir("badspec");

  CHECK_THROWS_AS(read_domain_spec(dir / "missing.json"), ConfigError);

  const fs::path bad_json = dir / "bad.json";
  spit(bad_json, "{ not json");
  CHECK_THROWS_AS(read_domain_spec(bad_json), ConfigError);

  const fs::path no_arrays = dir / "no_arrays.json";
  spit(no_arrays, R"({"subdomains": []})");
  CHECK_THROWS_AS(read_domain_spec(no_arrays), ConfigError);

  // Unknown boundary type.
  std::string text = fracture_spec_text();
  const auto pos = text.find("\"dirichlet\"");
  REQUIRE(pos != std::string::npos);
  std::string mutated = text;
  mutated.replace(pos, 11, "\"robin\"");
  const fs::path bad_bc = dir / "bad_bc.json";
  spit(bad_bc, mutated);
  CHECK_THROWS_AS(read_domain_spec(bad_bc), ConfigError);

  // k_tensor must have exactly three entries.
  mutated = text;
  const auto tpos = mutated.find("[1.0, 0.0, 1.0]");
  REQUIRE(tpos != std::string::npos);
  mutated.replace(tpos, 15, "[1.0, 0.0]");
  const fs::path bad_tensor = dir / "bad_tensor.json";
  spit(bad_tensor, mutated);
  CHECK_THROWS_AS(read_domain_spec(bad_tensor), ConfigError);

  // Indefinite tensor passes parsing but fails domain validation; the reader
  // wraps that as a config error naming the cause.
  mutated = text;
  mutated.replace(mutated.find("[1.0, 0.0, 1.0]"), 15, "[1.0, 0.0, -1.0]");
  const fs::path bad_spd = dir / "bad_spd.json";
  spit(bad_spd, mutated);
  try {
    read_domain_spec(bad_spd);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("domain spec rejected") != std::string::npos);
  }

  // Missing required field on an interface.
  mutated = text;
  const auto hpos = mutated.find("\"hi\": 1, ");
  REQUIRE(hpos != std::string::npos);
  mutated.erase(hpos, 9);
  const fs::path no_hi = dir / "no_hi.json";
  spit(no_hi, mutated);
  CHECK_THROWS(read_domain_spec(no_hi));

  // A 1D interface without a side normal is ambiguous and must be refused.
  mutated = text;
  const auto npos_ = mutated.find("\"side_normal\": [-1, 0], ");
  REQUIRE(npos_ != std::string::npos);
  mutated.erase(npos_, 24);
  const fs::path no_normal = dir / "no_normal.json";
  spit(no_normal, mutated);
  try {
    read_domain_spec(no_normal);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("side_normal") != std::string::npos);
  }

  fs::remove_all(dir);
}

TEST_CASE("write_reports emits the expected files, byte-stable across reruns") {
  const Scenario sc = *scenario_by_name("series_resistance");
  RunOptions opt;
  opt.mesh_sizes = {0.25};
  opt.perturb = false;
  opt.out_dir = scratch_dir("reports");

  SweepResult result = run_sweep(sc, opt);
  write_reports(sc.domain, result, opt);

  const fs::path maj = opt.out_dir / "series_resistance_majorant.csv";
  const fs::path ind = opt.out_dir / "series_resistance_indicators.csv";
  const fs::path cells = opt.out_dir / "series_resistance_h0.25_matching_cells.json";
  CHECK(fs::exists(maj));
  CHECK(fs::exists(ind));
  CHECK(fs::exists(cells));
  // No perturbation sweep, so no deviation summary.
  CHECK(!fs::exists(opt.out_dir / "series_resistance_sweep.csv"));

  const std::string maj_bytes = slurp(maj);
  const std::string ind_bytes = slurp(ind);
  const std::string cells_bytes = slurp(cells);

  // Rerun into the same directory: outputs must be byte-identical.
  SweepResult again = run_sweep(sc, opt);
  write_reports(sc.domain, again, opt);
  CHECK(slurp(maj) == maj_bytes);
  CHECK(slurp(ind) == ind_bytes);
  CHECK(slurp(cells) == cells_bytes);

  // The cells JSON parses and names the run it belongs to.
  const nlohmann::json j = nlohmann::json::parse(cells_bytes);
  CHECK(j["config"] == "matching");
  CHECK(j["h"].get<double>() == 0.25);

  fs::remove_all(opt.out_dir);
}

TEST_CASE("perturbed sweeps add the deviation summary and per-config files") {
  const Scenario sc = *scenario_by_name("series_resistance");
  RunOptions opt;
  opt.mesh_sizes = {0.25};
  opt.perturb = true;
  opt.mesh_out = true;
  opt.dump_transfer = true;
  opt.out_dir = scratch_dir("perturbed");

  SweepResult result = run_sweep(sc, opt);
  write_reports(sc.domain, result, opt);

  CHECK(fs::exists(opt.out_dir / "series_resistance_sweep.csv"));
  for (const std::string config : {"matching", "plus", "minus"}) {
    const std::string stem = "series_resistance_h0.25_" + config;
    CHECK(fs::exists(opt.out_dir / (stem + "_cells.json")));
    CHECK(fs::exists(opt.out_dir / (stem + "_mesh.json")));
    CHECK(fs::exists(opt.out_dir / (stem + "_transfer.json")));
  }

  // Mesh dump holds one grid per subdomain and interface.
  const nlohmann::json mesh = nlohmann::json::parse(
      slurp(opt.out_dir / "series_resistance_h0.25_plus_mesh.json"));
  CHECK(mesh["subdomains"].size() == sc.domain.subdomains.size());
  CHECK(mesh["interfaces"].size() == sc.domain.interfaces.size());

  // Transfer dump pairs each interface with its two projection grids.
  const nlohmann::json tj = nlohmann::json::parse(
      slurp(opt.out_dir / "series_resistance_h0.25_plus_transfer.json"));
  REQUIRE(tj.size() == sc.domain.interfaces.size());
  CHECK(tj[0].contains("to_internal_boundary"));
  CHECK(tj[0].contains("to_lower_subdomain"));

  fs::remove_all(opt.out_dir);
}

TEST_CASE("json table format writes the same rows as csv") {
  const Scenario sc = *scenario_by_name("series_resistance");
  RunOptions opt;
  opt.mesh_sizes = {0.25};
  opt.perturb = false;
  opt.format = "json";
  opt.out_dir = scratch_dir("jsonfmt");

  SweepResult result = run_sweep(sc, opt);
  write_reports(sc.domain, result, opt);

  const fs::path maj = opt.out_dir / "series_resistance_majorant.json";
  CHECK(fs::exists(maj));
  CHECK(!fs::exists(opt.out_dir / "series_resistance_majorant.csv"));

  const nlohmann::json rows = nlohmann::json::parse(slurp(maj));
  REQUIRE(rows.size() == result.majorant_rows.size());
  CHECK(rows[0]["scenario"] == "series_resistance");
  CHECK(rows[0]["majorant"].get<double>() == result.majorant_rows[0].majorant);

  const nlohmann::json ind =
      nlohmann::json::parse(slurp(opt.out_dir / "series_resistance_indicators.json"));
  REQUIRE(ind.size() == result.indicator_rows.size());
  CHECK(ind[0]["eta_omega"].size() == 3);
  CHECK(ind[0]["eta_gamma"].size() == 2);

  fs::remove_all(opt.out_dir);
}
