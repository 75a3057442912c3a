// Acceptance gate: one line per criterion, exit code = number of failures.
// Runs the full scenario protocol, so expect on the order of a minute.

#include <mdest/mdest.hpp>
#include <mdest/selftest.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace mdest;

namespace {

int failures = 0;

void report(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s (%s)\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SweepSet {
  Scenario series, smooth, network;
  SweepResult series_r, smooth_r, network_r;
};

// Guaranteed-bound check over one sweep's rows. Analytic truth admits only
// roundoff slack; surrogate truth carries its own discretization error, which
// the 0.99 factor absorbs.
void check_bound(const SweepResult& r, ReferenceKind ref, double& min_ratio, int& checked) {
  const double factor = ref == ReferenceKind::surrogate ? 0.99 : 1.0 - 1e-6;
  for (const MajorantRow& row : r.majorant_rows) {
    if (!row.has_err) continue;
    for (double err : {row.err_primal, row.err_dual}) {
      if (err <= 1e-10) continue;
      min_ratio = std::min(min_ratio, row.majorant / (factor * err));
      ++checked;
    }
  }
}

} // namespace

int main() {
  SweepSet s;
  s.series = *scenario_by_name("series_resistance");
  s.smooth = *scenario_by_name("smooth_source");
  s.network = *scenario_by_name("network_2d");

  RunOptions opt;
  opt.perturb = true;

  // Criterion 1: the majorant bounds both true error norms on every
  // configuration of the analytic and surrogate-referenced scenarios, within
  // the wall-clock budget.
  try {
    const auto t0 = std::chrono::steady_clock::now();
    s.series_r = run_sweep(s.series, opt);
    s.smooth_r = run_sweep(s.smooth, opt);
    const double elapsed = wall_seconds(t0);
    double min_ratio = std::numeric_limits<double>::infinity();
    int checked = 0;
    check_bound(s.series_r, s.series.reference, min_ratio, checked);
    check_bound(s.smooth_r, s.smooth.reference, min_ratio, checked);
    const bool pass = checked > 0 && min_ratio >= 1.0 && elapsed <= 120.0;
    report(1, pass,
           std::to_string(checked) + " bound checks, min margin ratio " + fmt(min_ratio) +
               ", " + fmt(elapsed) + " s");
  } catch (const std::exception& e) {
    report(1, false, std::string("exception: ") + e.what());
  }

  // Criterion 2: the piecewise-linear series solution is reproduced to
  // solver precision on matching and perturbed grids at every mesh size,
  // and the majorant collapses with it.
  try {
    double worst_state = 0, worst_majorant = 0;
    for (double h : s.series.mesh_sizes) {
      GridBundle matching = generate_matching_bundle(s.series.domain, h);
      for (int direction : {0, +1, -1}) {
        GridBundle b = direction == 0 ? matching : perturb_bundle(matching, direction);
        MdSystem sys = build_system(b);
        const MdSolution sol = solve(sys);
        for (size_t k = 0; k < b.subgrids.size(); ++k) {
          const SimplicialGrid& g = b.subgrids[k];
          const int id = s.series.domain.subdomains[k].id;
          for (int c = 0; c < g.num_cells(); ++c)
            worst_state = std::max(worst_state,
                                   std::abs(sol.pressure[k][c] -
                                            s.series.exact.pressure(id, cell_barycenter(g, c))));
          for (int f = 0; f < g.num_faces(); ++f) {
            const Face& face = g.faces[f];
            const Vec2 mid = face.num_nodes() == 2
                                 ? Vec2(0.5 * (g.nodes[face.nodes[0]] + g.nodes[face.nodes[1]]))
                                 : g.nodes[face.nodes[0]];
            worst_state = std::max(
                worst_state,
                std::abs(sol.flux[k][f] - s.series.exact.flux(id, mid).dot(face.normal)));
          }
        }
        for (size_t q = 0; q < b.interface_grids.size(); ++q) {
          const int iid = s.series.domain.interfaces[q].id;
          for (double lam : sol.mortar[q])
            worst_state =
                std::max(worst_state, std::abs(lam - s.series.exact.mortar(iid, Vec2(0, 0))));
        }
        const std::vector<GridField> srec = reconstruct_all(sys, sol);
        const EstimateReport rep = estimate(sys, sol, srec);
        worst_majorant = std::max(worst_majorant, rep.majorant);
      }
    }
    const bool pass = worst_state <= 1e-10 && worst_majorant <= 1e-8;
    report(2, pass,
           "worst state error " + fmt(worst_state) + ", worst majorant " + fmt(worst_majorant));
  } catch (const std::exception& e) {
    report(2, false, std::string("exception: ") + e.what());
  }

  // Criterion 3: exact local conservation on every run of every scenario,
  // and mass preservation of the randomized projection suite.
  try {
    s.network_r = run_sweep(s.network, opt);
    double worst_cons = 0;
    int runs = 0;
    for (const SweepResult* r : {&s.series_r, &s.smooth_r, &s.network_r})
      for (const RunRecord& rec : r->runs) {
        worst_cons = std::max(worst_cons, rec.conservation);
        ++runs;
      }
    const PropertyResult mass = selftest_projection_mass(1000, 200);
    const bool pass = runs > 0 && worst_cons <= 1e-10 && mass.pass && mass.worst <= 1e-12;
    report(3, pass,
           std::to_string(runs) + " runs, worst conservation " + fmt(worst_cons) +
               ", projection mass worst " + fmt(mass.worst) + " over " +
               std::to_string(mass.cases) + " fields");
  } catch (const std::exception& e) {
    report(3, false, std::string("exception: ") + e.what());
  }

  // Criterion 4: on matching grids all six operators are the identity, and
  // the k = 0 constrained projection returns the overlap average.
  try {
    const PropertyResult ident = selftest_matching_identity();
    const PropertyResult avg = selftest_overlap_average(500);
    const bool pass = ident.pass && ident.worst <= 1e-13 && avg.pass && avg.worst <= 1e-14;
    report(4, pass,
           "identity worst " + fmt(ident.worst) + " (" + std::to_string(ident.cases) +
               " cases), average worst " + fmt(avg.worst) + " (" + std::to_string(avg.cases) +
               " cases)");
  } catch (const std::exception& e) {
    report(4, false, std::string("exception: ") + e.what());
  }

  // Criterion 5: transfer grids partition every interface of every sweep
  // configuration, and the randomized partition suite holds.
  try {
    double worst_rel = 0;
    bool nodes_ok = true;
    int grids = 0;
    for (const Scenario* sc : {&s.series, &s.smooth, &s.network})
      for (double h : sc->mesh_sizes) {
        GridBundle matching = generate_matching_bundle(sc->domain, h);
        for (int direction : {0, +1, -1}) {
          GridBundle b = direction == 0 ? matching : perturb_bundle(matching, direction);
          MdSystem sys = build_system(b);
          for (size_t q = 0; q < sys.projectors.size(); ++q) {
            const InterfaceProjector& pr = sys.projectors[q];
            const double len = grid_measure(b.interface_grids[q]);
            const double tol = 1e-9 * std::max(1.0, len);
            for (const TransferGrid* tg : {&pr.tg_hi, &pr.tg_lo}) {
              worst_rel = std::max(worst_rel,
                                   std::abs(tg->total_measure() - len) / std::max(1.0, len));
              ++grids;
            }
            nodes_ok = nodes_ok && detail::nodes_included(pr.tg_hi, *pr.gamma, tol) &&
                       detail::nodes_included(pr.tg_hi, pr.ib->grid, tol) &&
                       detail::nodes_included(pr.tg_lo, *pr.gamma, tol) &&
                       detail::nodes_included(pr.tg_lo, *pr.lo, tol);
          }
        }
      }
    const PropertyResult part = selftest_transfer_partition(200, 200);
    const bool pass =
        worst_rel <= 1e-12 && nodes_ok && part.pass && part.worst <= 1e-12 && grids > 0;
    report(5, pass,
           std::to_string(grids) + " transfer grids, worst measure defect " + fmt(worst_rel) +
               ", nodes " + (nodes_ok ? "included" : "MISSING") + ", random worst " +
               fmt(part.worst));
  } catch (const std::exception& e) {
    report(5, false, std::string("exception: ") + e.what());
  }

  // Criterion 6: the majorant and each per-dimension indicator strictly
  // decrease across the smooth refinement sequence (matching grids).
  try {
    std::vector<const EstimateReport*> reps;
    for (const RunRecord& rec : s.smooth_r.runs)
      if (rec.config == "matching") reps.push_back(&rec.report);
    bool pass = reps.size() == s.smooth.mesh_sizes.size() && reps.size() >= 3;
    std::string chain;
    for (size_t k = 0; pass && k + 1 < reps.size(); ++k) {
      pass = reps[k + 1]->majorant < reps[k]->majorant;
      for (const auto& [d, v] : reps[k]->eta_omega_dim)
        pass = pass && reps[k + 1]->eta_omega_dim.at(d) < v;
      for (const auto& [d, v] : reps[k]->eta_gamma_dim)
        pass = pass && reps[k + 1]->eta_gamma_dim.at(d) < v;
    }
    for (const EstimateReport* rep : reps)
      chain += (chain.empty() ? "" : " > ") + fmt(rep->majorant);
    report(6, pass, "majorant chain " + chain + ", per-dimension indicators checked");
  } catch (const std::exception& e) {
    report(6, false, std::string("exception: ") + e.what());
  }

  // Criterion 7: grid-perturbation robustness of the smooth majorant at the
  // middle mesh size.
  try {
    const SummaryRow* found = nullptr;
    for (const SummaryRow& row : s.smooth_r.summary_rows)
      if (row.quantity == "majorant" && std::abs(row.h - 0.0625) < 1e-12) found = &row;
    const bool pass = found && found->rel_deviation <= 0.10;
    report(7, pass,
           found ? ("relative deviation " + fmt(found->rel_deviation) + " at h=0.0625")
                 : std::string("summary row missing"));
  } catch (const std::exception& e) {
    report(7, false, std::string("exception: ") + e.what());
  }

  // Criterion 8: effectivity at least one wherever true errors are resolved;
  // the smooth efficiency band is advisory only.
  try {
    double min_eff = std::numeric_limits<double>::infinity();
    int checked = 0;
    for (const SweepResult* r : {&s.series_r, &s.smooth_r, &s.network_r})
      for (const RunRecord& rec : r->runs) {
        if (!rec.report.has_true_errors) continue;
        if (rec.report.err_primal > 1e-10) {
          min_eff = std::min(min_eff, rec.report.eff_primal);
          ++checked;
        }
        if (rec.report.err_dual > 1e-10) {
          min_eff = std::min(min_eff, rec.report.eff_dual);
          ++checked;
        }
      }
    double max_ip = 0, max_iu = 0;
    for (const RunRecord& rec : s.smooth_r.runs)
      if (rec.report.has_true_errors) {
        max_ip = std::max(max_ip, rec.report.eff_primal);
        max_iu = std::max(max_iu, rec.report.eff_dual);
      }
    const bool pass = checked > 0 && min_eff >= 1.0;
    std::string detail = std::to_string(checked) + " effectivities, min " + fmt(min_eff) +
                         ", smooth max I_p " + fmt(max_ip) + " I_u " + fmt(max_iu);
    if (max_ip > 2.0 || max_iu > 6.0) detail += " [warning: outside efficiency band]";
    report(8, pass, detail);
  } catch (const std::exception& e) {
    report(8, false, std::string("exception: ") + e.what());
  }

  // Criterion 9: the trace projection reproduces conforming P1 fields across
  // random non-matching grid pairs.
  try {
    const PropertyResult sz = selftest_sz_reproduction(500);
    const bool pass = sz.pass && sz.worst <= 1e-13;
    report(9, pass,
           "worst reproduction error " + fmt(sz.worst) + " over " + std::to_string(sz.cases) +
               " fields");
  } catch (const std::exception& e) {
    report(9, false, std::string("exception: ") + e.what());
  }

  std::printf("%d of 9 criteria failed\n", failures);
  return failures;
}
