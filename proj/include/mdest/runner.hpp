#pragma once

#include <atomic>
#include <mutex>
#include <thread>

#include "mdest/io.hpp"
#include "mdest/scenario.hpp"

namespace mdest {

struct RunOptions {
  std::vector<double> mesh_sizes; // empty: scenario defaults
  bool perturb = false;
  SolveOptions solve;
  std::filesystem::path out_dir; // empty: no files written
  std::string format = "csv";    // tables as csv or json
  bool mesh_out = false;
  bool dump_transfer = false;
  int threads = 0; // 0: one worker per mesh size, capped by hardware
  double surrogate_factor = 0.125;
};

/// One solved and estimated configuration.
struct RunRecord {
  double h = 0;
  std::string config;
  double conservation = 0;
  int unknowns = 0;
  EstimateReport report;
};

struct SweepResult {
  std::string scenario;
  std::vector<RunRecord> runs; // mesh-size major, configuration minor
  std::vector<MajorantRow> majorant_rows;
  std::vector<IndicatorRow> indicator_rows;
  std::vector<SummaryRow> summary_rows; // empty without perturbations
};

namespace detail {

/// The guarantees every run must satisfy regardless of scenario; violations
/// are programming errors or broken assumptions, not data issues.
inline void assert_run_invariants(const RunRecord& rec, ReferenceKind ref) {
  if (rec.conservation > 1e-10)
    throw InvariantViolationError("conservation residual " + g17(rec.conservation) +
                                  " above 1e-10 (h=" + g17(rec.h) + ", " + rec.config + ")");
  const EstimateReport& rep = rec.report;
  double df2 = 0, r2 = 0;
  for (const auto& sub : rep.eta_df_par)
    for (double v : sub) df2 += v * v;
  for (const auto& ifc : rep.eta_df_perp)
    for (double v : ifc) df2 += v * v;
  for (const auto& sub : rep.eta_r)
    for (double v : sub) r2 += v * v;
  const double recomputed = std::sqrt(df2) + std::sqrt(r2);
  if (std::abs(recomputed - rep.majorant) > 1e-13 * std::max(1.0, rep.majorant))
    throw InvariantViolationError("majorant does not match its square-sum parts");
  if (rep.has_true_errors) {
    // Guaranteed bound. Surrogate truth carries its own discretization error;
    // the 0.99 factor absorbs it. Below the noise floor both sides are zero
    // up to roundoff and the ratio is meaningless.
    const double factor = ref == ReferenceKind::surrogate ? 0.99 : 1.0 - 1e-6;
    const double floor_ = 1e-10;
    if (rep.err_primal > floor_ && rep.majorant < factor * rep.err_primal)
      throw InvariantViolationError("majorant below primal error (h=" + g17(rec.h) + ", " +
                                    rec.config + ")");
    if (rep.err_dual > floor_ && rep.majorant < factor * rep.err_dual)
      throw InvariantViolationError("majorant below dual error (h=" + g17(rec.h) + ", " +
                                    rec.config + ")");
  }
}

inline std::string run_file_stem(const std::string& scenario, double h,
                                 const std::string& config) {
  return scenario + "_h" + g17(h) + "_" + config;
}

} // namespace detail

/// Solve + estimate one configuration of a scenario. The surrogate may be
/// null for analytic or reference-free runs.
inline RunRecord run_single(const Scenario& sc, double h, int direction,
                            const Surrogate* surrogate, const RunOptions& opt) {
  RunRecord rec;
  rec.h = h;
  rec.config = direction == 0 ? "matching" : (direction > 0 ? "plus" : "minus");
  GridBundle matching = generate_matching_bundle(sc.domain, h);
  GridBundle bundle = direction == 0 ? std::move(matching) : perturb_bundle(matching, direction);
  MdSystem sys = build_system(bundle);
  MdSolution sol = solve(sys, opt.solve);
  rec.unknowns = sol.unknowns;
  rec.conservation = max_conservation_residual(sys, sol);
  const std::vector<GridField> srec = reconstruct_all(sys, sol);
  rec.report = estimate(sys, sol, srec);
  if (sc.reference == ReferenceKind::analytic)
    attach_true_errors(rec.report, true_errors_exact(sys, sol, srec, sc.exact));
  else if (sc.reference == ReferenceKind::surrogate && surrogate)
    attach_true_errors(rec.report, true_errors_surrogate(sys, sol, srec, *surrogate));
  detail::assert_run_invariants(rec, sc.reference);

  if (!opt.out_dir.empty() && (opt.mesh_out || opt.dump_transfer)) {
    const std::string stem = detail::run_file_stem(sc.name, h, rec.config);
    if (opt.mesh_out)
      detail::write_file(opt.out_dir / (stem + "_mesh.json"), bundle_json(bundle).dump(1));
    if (opt.dump_transfer) {
      nlohmann::json j = nlohmann::json::array();
      for (size_t q = 0; q < sc.domain.interfaces.size(); ++q)
        j.push_back({{"interface", sc.domain.interfaces[q].id},
                     {"to_internal_boundary", transfer_json(sys.projectors[q].tg_hi)},
                     {"to_lower_subdomain", transfer_json(sys.projectors[q].tg_lo)}});
      detail::write_file(opt.out_dir / (stem + "_transfer.json"), j.dump(1));
    }
  }
  return rec;
}

/// Full sweep: per mesh size one matching run plus one run per perturbation
/// direction, reference truth shared across the configurations of one size.
inline SweepResult run_sweep(const Scenario& sc, const RunOptions& opt) {
  SweepResult result;
  result.scenario = sc.name;
  const std::vector<double>& hs = opt.mesh_sizes.empty() ? sc.mesh_sizes : opt.mesh_sizes;
  if (hs.empty()) throw ConfigError("no mesh sizes given");
  for (size_t i = 0; i < hs.size(); ++i) {
    if (hs[i] <= 0) throw ConfigError("mesh sizes must be positive");
    if (i > 0 && hs[i] >= hs[i - 1])
      throw ConfigError("mesh sizes must be strictly decreasing");
  }
  std::vector<int> directions{0};
  if (opt.perturb)
    for (int d : sc.perturb_directions) directions.push_back(d);

  if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir);

  std::vector<std::vector<RunRecord>> per_h(hs.size());
  std::vector<std::exception_ptr> errors(hs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t k = next.fetch_add(1); k < hs.size(); k = next.fetch_add(1)) {
      try {
        std::unique_ptr<Surrogate> surrogate;
        if (sc.reference == ReferenceKind::surrogate)
          surrogate = std::make_unique<Surrogate>(
              make_surrogate(sc.domain, hs[k] * opt.surrogate_factor, opt.solve));
        for (int dir : directions)
          per_h[k].push_back(run_single(sc, hs[k], dir, surrogate.get(), opt));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  size_t n_workers = hs.size();
  if (opt.threads > 0) n_workers = std::min<size_t>(n_workers, opt.threads);
  n_workers = std::min<size_t>(n_workers, std::max(1u, std::thread::hardware_concurrency()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::vector<RunRecord>& recs : per_h)
    for (RunRecord& r : recs) result.runs.push_back(std::move(r));

  for (const RunRecord& rec : result.runs) {
    MajorantRow m;
    m.scenario = sc.name;
    m.config = rec.config;
    m.h = rec.h;
    m.majorant = rec.report.majorant;
    m.eta_df = rec.report.eta_df;
    m.eta_res = rec.report.eta_res;
    m.has_err = rec.report.has_true_errors;
    m.err_primal = rec.report.err_primal;
    m.err_dual = rec.report.err_dual;
    m.eff_primal = rec.report.eff_primal;
    m.eff_dual = rec.report.eff_dual;
    result.majorant_rows.push_back(m);

    IndicatorRow ind;
    ind.scenario = sc.name;
    ind.config = rec.config;
    ind.h = rec.h;
    for (const auto& [d, v] : rec.report.eta_omega_dim) ind.eta_omega[d] = v;
    for (const auto& [d, v] : rec.report.eta_gamma_dim) ind.eta_gamma[d] = v;
    result.indicator_rows.push_back(ind);
  }

  if (opt.perturb && directions.size() > 1) {
    for (double h : hs) {
      const RunRecord* matching = nullptr;
      std::vector<const RunRecord*> shifted;
      for (const RunRecord& r : result.runs) {
        if (r.h != h) continue;
        if (r.config == "matching")
          matching = &r;
        else
          shifted.push_back(&r);
      }
      auto add = [&](const std::string& name, auto getter) {
        SummaryRow row;
        row.scenario = sc.name;
        row.quantity = name;
        row.h = h;
        row.matching = getter(*matching);
        double sum = 0;
        for (const RunRecord* r : shifted) sum += getter(*r);
        row.mean = sum / double(shifted.size());
        double var = 0;
        for (const RunRecord* r : shifted) {
          const double d = getter(*r) - row.mean;
          var += d * d;
        }
        row.stddev = shifted.size() > 1 ? std::sqrt(var / double(shifted.size() - 1)) : 0;
        row.rel_deviation = row.mean != 0 ? std::abs(row.matching - row.mean) / std::abs(row.mean) : 0;
        result.summary_rows.push_back(row);
      };
      add("majorant", [](const RunRecord& r) { return r.report.majorant; });
      add("eta_df", [](const RunRecord& r) { return r.report.eta_df; });
      add("eta_res", [](const RunRecord& r) { return r.report.eta_res; });
      if (matching->report.has_true_errors) {
        add("err_primal", [](const RunRecord& r) { return r.report.err_primal; });
        add("err_dual", [](const RunRecord& r) { return r.report.err_dual; });
      }
    }
  }
  return result;
}

/// Table and per-cell detail output. Tables go to the chosen format; the
/// per-cell detail is always JSON.
inline void write_reports(const MdDomain& dom, const SweepResult& result,
                          const RunOptions& opt) {
  if (opt.out_dir.empty()) return;
  std::filesystem::create_directories(opt.out_dir);
  const std::string& s = result.scenario;
  if (opt.format == "json") {
    auto dump_rows = [&](const std::string& name, const auto& rows) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : rows) j.push_back(to_json(r));
      detail::write_file(opt.out_dir / (s + "_" + name + ".json"), j.dump(1));
    };
    dump_rows("majorant", result.majorant_rows);
    dump_rows("indicators", result.indicator_rows);
    if (!result.summary_rows.empty()) dump_rows("sweep", result.summary_rows);
  } else {
    detail::write_file(opt.out_dir / (s + "_majorant.csv"), to_csv(result.majorant_rows));
    detail::write_file(opt.out_dir / (s + "_indicators.csv"), to_csv(result.indicator_rows));
    if (!result.summary_rows.empty())
      detail::write_file(opt.out_dir / (s + "_sweep.csv"), to_csv(result.summary_rows));
  }
  for (const RunRecord& rec : result.runs)
    detail::write_file(
        opt.out_dir / (detail::run_file_stem(s, rec.h, rec.config) + "_cells.json"),
        cells_json(s, rec.h, rec.config, dom, rec.report).dump(1));
}

} // namespace mdest
