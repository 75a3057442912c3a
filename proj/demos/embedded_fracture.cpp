// Build a domain with an embedded fracture directly against the library API,
// solve it on two resolutions, and print the majorant decomposition.

#include <cstdio>

#include "mdest/mdest.hpp"

using namespace mdest;

int main() try {
  Subdomain matrix;
  matrix.id = 1;
  matrix.dim = 2;
  matrix.polygon = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  matrix.K2 = constant_tensor(1.0);
  BoundaryPiece inlet;
  inlet.type = BcType::dirichlet;
  inlet.a = Vec2(0, 0);
  inlet.b = Vec2(0, 1);
  inlet.value = constant_field(1.0);
  BoundaryPiece outlet = inlet;
  outlet.a = Vec2(1, 0);
  outlet.b = Vec2(1, 1);
  outlet.value = constant_field(0.0);
  BoundaryPiece sealed;
  sealed.type = BcType::neumann;
  sealed.rest = true;
  matrix.boundary = {inlet, outlet, sealed};

  // A conductive fracture whose tips end inside the matrix. It couples to the
  // matrix once per side, so the slit carries two independent mortar fluxes.
  Subdomain fracture;
  fracture.id = 2;
  fracture.dim = 1;
  fracture.seg_a = Vec2(0.5, 0.2);
  fracture.seg_b = Vec2(0.5, 0.8);
  fracture.K1 = constant_field(1e3);
  fracture.boundary = {sealed};

  Interface left;
  left.id = 10;
  left.hi = 1;
  left.lo = 2;
  left.a = fracture.seg_a;
  left.b = fracture.seg_b;
  left.side_normal = Vec2(-1, 0);
  left.kappa = constant_field(1e3);
  Interface right = left;
  right.id = 11;
  right.side_normal = Vec2(1, 0);

  const MdDomain domain = build_domain({matrix, fracture}, {left, right});

  for (double h : {0.125, 0.0625}) {
    const GridBundle bundle = generate_matching_bundle(domain, h);
    const MdSystem system = build_system(bundle);
    const MdSolution solution = solve(system);
    const std::vector<GridField> potential = reconstruct_all(system, solution);
    const EstimateReport report = estimate(system, solution, potential);

    std::printf("h = %-8g unknowns = %-6d majorant = %.5e  (eta_df %.3e, eta_res %.3e)\n", h,
                solution.unknowns, report.majorant, report.eta_df, report.eta_res);
    for (const auto& [dim, v] : report.eta_omega_dim)
      std::printf("  subdomain estimators, dim %d: %.4e\n", dim, v);
    for (const auto& [dim, v] : report.eta_gamma_dim)
      std::printf("  interface estimators, dim %d: %.4e\n", dim, v);
    std::printf("  worst cell conservation residual: %.2e\n",
                max_conservation_residual(system, solution));
  }
  return 0;
} catch (const std::exception& e) {
  std::fprintf(stderr, "failed: %s\n", e.what());
  return 1;
}
