#include <cstdio>
#include <cstdlib>

#include "CLI11.hpp"

#include "mdest/mdest.hpp"
#include "mdest/selftest.hpp"

namespace {

int check_projections_main() {
  bool all = true;
  for (const mdest::PropertyResult& r : mdest::run_projection_selftests()) {
    all = all && r.pass;
    std::printf("%-22s %s  worst %.3e  bound %.0e  (%d cases)\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.worst, r.bound, r.cases);
  }
  return all ? 0 : 4;
}

void print_result(const mdest::SweepResult& result) {
  std::printf("%-22s %10s %9s %12s %12s %12s %8s %8s\n", "scenario", "h", "config",
              "majorant", "err_primal", "err_dual", "eff_p", "eff_u");
  for (const mdest::MajorantRow& r : result.majorant_rows) {
    if (r.has_err)
      std::printf("%-22s %10.6g %9s %12.5e %12.5e %12.5e %8.3f %8.3f\n", r.scenario.c_str(),
                  r.h, r.config.c_str(), r.majorant, r.err_primal, r.err_dual, r.eff_primal,
                  r.eff_dual);
    else
      std::printf("%-22s %10.6g %9s %12.5e %12s %12s %8s %8s\n", r.scenario.c_str(), r.h,
                  r.config.c_str(), r.majorant, "-", "-", "-", "-");
  }
  for (const mdest::SummaryRow& s : result.summary_rows)
    if (s.quantity == "majorant")
      std::printf("h=%-10.6g majorant matching %.6e vs perturbation mean %.6e "
                  "(stddev %.2e), relative deviation %.4f%%\n",
                  s.h, s.matching, s.mean, s.stddev, 100 * s.rel_deviation);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-dimensional Darcy solve with a guaranteed a posteriori error bound"};
  app.set_help_flag("--help", "Print usage"); // frees -h for the --h mesh list
  std::string scenario_name, domain_spec, out_dir, format = "csv";
  std::vector<double> mesh_sizes;
  bool perturb = false, check_projections = false, dump_transfer = false, mesh_out = false;
  double solver_tol = 1e-9;
  int dense_threshold = 500;

  app.add_option("--scenario", scenario_name,
                 "Bundled scenario: series_resistance, smooth_source, network_2d");
  app.add_option("--domain-spec", domain_spec, "JSON file describing a custom domain");
  app.add_option("--h", mesh_sizes, "Mesh sizes, strictly decreasing")->delimiter(',');
  app.add_flag("--perturb", perturb, "Add the two shifted non-matching configurations");
  app.add_flag("--check-projections", check_projections,
               "Run the randomized projection property suites and exit");
  app.add_flag("--dump-transfer", dump_transfer, "Write per-interface transfer grids (JSON)");
  app.add_flag("--mesh-out", mesh_out, "Write the grids of every run (JSON)");
  app.add_option("--solver-tol", solver_tol, "Linear residual acceptance threshold");
  app.add_option("--dense-threshold", dense_threshold,
                 "Use a dense factorization up to this many unknowns");
  app.add_option("--out", out_dir, "Report directory");
  app.add_option("--format", format, "Table format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (check_projections) return check_projections_main();

    if (scenario_name.empty() == domain_spec.empty()) {
      std::fprintf(stderr, "exactly one of --scenario or --domain-spec is required\n%s\n",
                   app.help().c_str());
      return 2;
    }

    mdest::Scenario sc;
    if (!scenario_name.empty()) {
      std::optional<mdest::Scenario> found = mdest::scenario_by_name(scenario_name);
      if (!found) throw mdest::ConfigError("unknown scenario '" + scenario_name + "'");
      sc = std::move(*found);
    } else {
      sc.name = std::filesystem::path(domain_spec).stem().string();
      sc.domain = mdest::read_domain_spec(domain_spec);
      sc.perturb_directions = {+1, -1};
      sc.reference = mdest::ReferenceKind::none;
      if (mesh_sizes.empty())
        throw mdest::ConfigError("--domain-spec runs need explicit --h mesh sizes");
    }

    mdest::RunOptions opt;
    opt.mesh_sizes = mesh_sizes;
    opt.perturb = perturb;
    opt.solve.solver_tol = solver_tol;
    opt.solve.dense_threshold = dense_threshold;
    opt.out_dir = out_dir;
    opt.format = format;
    opt.mesh_out = mesh_out;
    opt.dump_transfer = dump_transfer;
    if ((mesh_out || dump_transfer) && out_dir.empty())
      throw mdest::ConfigError("--mesh-out/--dump-transfer need --out <dir>");
    if (const char* env = std::getenv("MDEST_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 1)
        throw mdest::ConfigError("MDEST_THREADS must be a positive integer");
      opt.threads = static_cast<int>(v);
    }

    const mdest::SweepResult result = mdest::run_sweep(sc, opt);
    mdest::write_reports(sc.domain, result, opt);
    print_result(result);
    return 0;
  } catch (const mdest::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mdest::SingularSystemError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const mdest::InvariantViolationError& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return 4;
  } catch (const mdest::MdError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
