#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mdest/estimator.hpp"

namespace mdest {

/// 17 significant digits: round-trips any double and keeps report files
/// byte-stable across runs.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One majorant-table row: a solved configuration with its bound and, when a
/// reference was available, true errors and effectivities.
struct MajorantRow {
  std::string scenario, config;
  double h = 0;
  double majorant = 0, eta_df = 0, eta_res = 0;
  bool has_err = false;
  double err_primal = 0, err_dual = 0, eff_primal = 0, eff_dual = 0;
};

/// One indicator-table row: dimension-aggregated subdomain and interface
/// estimator totals. Missing dimensions stay zero.
struct IndicatorRow {
  std::string scenario, config;
  double h = 0;
  std::array<double, 3> eta_omega{0, 0, 0}; // index = dimension
  std::array<double, 2> eta_gamma{0, 0};
};

/// One sweep-summary row: matching baseline against the perturbation set.
struct SummaryRow {
  std::string scenario, quantity;
  double h = 0;
  double matching = 0, mean = 0, stddev = 0, rel_deviation = 0;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file " + path.string());
  os << body;
}

} // namespace detail

inline const char* majorant_header() {
  return "scenario,h,config,majorant,eta_df,eta_res,err_primal,err_dual,eff_primal,eff_dual";
}

inline std::string to_csv(const std::vector<MajorantRow>& rows) {
  std::string s = majorant_header();
  s += '\n';
  for (const MajorantRow& r : rows) {
    s += r.scenario + ',' + g17(r.h) + ',' + r.config + ',' + g17(r.majorant) + ',' +
         g17(r.eta_df) + ',' + g17(r.eta_res) + ',';
    if (r.has_err)
      s += g17(r.err_primal) + ',' + g17(r.err_dual) + ',' + g17(r.eff_primal) + ',' +
           g17(r.eff_dual);
    else
      s += ",,,";
    s += '\n';
  }
  return s;
}

inline const char* indicator_header() {
  return "scenario,h,config,eta_omega_2,eta_omega_1,eta_omega_0,eta_gamma_1,eta_gamma_0";
}

inline std::string to_csv(const std::vector<IndicatorRow>& rows) {
  std::string s = indicator_header();
  s += '\n';
  for (const IndicatorRow& r : rows) {
    s += r.scenario + ',' + g17(r.h) + ',' + r.config;
    for (int d : {2, 1, 0}) s += ',' + g17(r.eta_omega[d]);
    for (int d : {1, 0}) s += ',' + g17(r.eta_gamma[d]);
    s += '\n';
  }
  return s;
}

inline const char* summary_header() {
  return "scenario,h,quantity,matching,mean,stddev,rel_deviation";
}

inline std::string to_csv(const std::vector<SummaryRow>& rows) {
  std::string s = summary_header();
  s += '\n';
  for (const SummaryRow& r : rows)
    s += r.scenario + ',' + g17(r.h) + ',' + r.quantity + ',' + g17(r.matching) + ',' +
         g17(r.mean) + ',' + g17(r.stddev) + ',' + g17(r.rel_deviation) + '\n';
  return s;
}

inline nlohmann::json to_json(const MajorantRow& r) {
  nlohmann::json j{{"scenario", r.scenario}, {"h", r.h},         {"config", r.config},
                   {"majorant", r.majorant}, {"eta_df", r.eta_df}, {"eta_res", r.eta_res}};
  if (r.has_err) {
    j["err_primal"] = r.err_primal;
    j["err_dual"] = r.err_dual;
    j["eff_primal"] = r.eff_primal;
    j["eff_dual"] = r.eff_dual;
  }
  return j;
}

inline nlohmann::json to_json(const IndicatorRow& r) {
  return {{"scenario", r.scenario},
          {"h", r.h},
          {"config", r.config},
          {"eta_omega", {r.eta_omega[2], r.eta_omega[1], r.eta_omega[0]}},
          {"eta_gamma", {r.eta_gamma[1], r.eta_gamma[0]}}};
}

inline nlohmann::json to_json(const SummaryRow& r) {
  return {{"scenario", r.scenario}, {"h", r.h},           {"quantity", r.quantity},
          {"matching", r.matching}, {"mean", r.mean},     {"stddev", r.stddev},
          {"rel_deviation", r.rel_deviation}};
}

/// Per-cell estimator detail of one run; the aggregates in the tables are
/// recomputable from these arrays by the square-sum rules.
inline nlohmann::json cells_json(const std::string& scenario, double h,
                                 const std::string& config, const MdDomain& dom,
                                 const EstimateReport& rep) {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["h"] = h;
  j["config"] = config;
  j["majorant"] = rep.majorant;
  j["eta_df"] = rep.eta_df;
  j["eta_res"] = rep.eta_res;
  j["subdomains"] = nlohmann::json::array();
  for (size_t i = 0; i < dom.subdomains.size(); ++i)
    j["subdomains"].push_back({{"id", dom.subdomains[i].id},
                               {"dim", dom.subdomains[i].dim},
                               {"eta_df_par", rep.eta_df_par[i]},
                               {"eta_r", rep.eta_r[i]}});
  j["interfaces"] = nlohmann::json::array();
  for (size_t q = 0; q < dom.interfaces.size(); ++q)
    j["interfaces"].push_back({{"id", dom.interfaces[q].id},
                               {"dim", dom.interfaces[q].dim},
                               {"eta_df_perp", rep.eta_df_perp[q]}});
  return j;
}

inline nlohmann::json grid_json(const SimplicialGrid& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Vec2& p : g.nodes) nodes.push_back({p.x(), p.y()});
  nlohmann::json cells = nlohmann::json::array();
  for (int c = 0; c < g.num_cells(); ++c) {
    nlohmann::json cn = nlohmann::json::array();
    for (int k = 0; k <= g.dim; ++k) cn.push_back(g.cells[c][k]);
    cells.push_back(cn);
  }
  return {{"dim", g.dim}, {"nodes", nodes}, {"cells", cells}};
}

inline nlohmann::json bundle_json(const GridBundle& b) {
  const MdDomain& dom = *b.domain;
  nlohmann::json j;
  j["target_h"] = b.target_h;
  j["subdomains"] = nlohmann::json::array();
  for (size_t i = 0; i < dom.subdomains.size(); ++i) {
    nlohmann::json e = grid_json(b.subgrids[i]);
    e["id"] = dom.subdomains[i].id;
    j["subdomains"].push_back(e);
  }
  j["interfaces"] = nlohmann::json::array();
  for (size_t q = 0; q < dom.interfaces.size(); ++q) {
    nlohmann::json e = grid_json(b.interface_grids[q]);
    e["id"] = dom.interfaces[q].id;
    j["interfaces"].push_back(e);
  }
  return j;
}

inline nlohmann::json transfer_json(const TransferGrid& tg) {
  nlohmann::json cells = nlohmann::json::array();
  for (const TransferCell& c : tg.cells) {
    nlohmann::json verts = nlohmann::json::array();
    for (int k = 0; k < c.nverts; ++k) verts.push_back({c.verts[k].x(), c.verts[k].y()});
    cells.push_back(
        {{"src", c.src}, {"dst", c.dst}, {"measure", c.measure}, {"verts", verts}});
  }
  return {{"dim", tg.dim}, {"total_measure", tg.total_measure()}, {"cells", cells}};
}

namespace detail {

inline Vec2 json_vec(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(std::string(what) + " must be a [x, y] pair");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

inline ScalarField json_const_field(double v) { return constant_field(v); }

} // namespace detail

/// Reads a custom problem description: constant material data, piecewise
/// boundary values, optional wells. The schema is documented in the README.
inline MdDomain read_domain_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open domain spec " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("domain spec is not valid JSON: " + std::string(e.what()));
  }
  if (!j.contains("subdomains") || !j.contains("interfaces"))
    throw ConfigError("domain spec needs 'subdomains' and 'interfaces' arrays");

  std::vector<Subdomain> subs;
  for (const auto& e : j["subdomains"]) {
    Subdomain s;
    s.id = e.at("id").get<int>();
    s.dim = e.at("dim").get<int>();
    if (s.dim == 2) {
      if (!e.contains("polygon")) throw ConfigError("2D subdomain needs 'polygon'");
      for (const auto& p : e["polygon"]) s.polygon.push_back(detail::json_vec(p, "polygon vertex"));
    } else if (s.dim == 1) {
      if (!e.contains("segment")) throw ConfigError("1D subdomain needs 'segment'");
      s.seg_a = detail::json_vec(e["segment"][0], "segment endpoint");
      s.seg_b = detail::json_vec(e["segment"][1], "segment endpoint");
    } else if (s.dim == 0) {
      s.point = detail::json_vec(e.at("point"), "point");
    } else {
      throw ConfigError("subdomain dim must be 0, 1, or 2");
    }
    const double k = e.value("k", 1.0);
    if (s.dim == 2) {
      if (e.contains("k_tensor")) {
        const auto& t = e["k_tensor"];
        if (!t.is_array() || t.size() != 3) throw ConfigError("k_tensor must be [kxx,kxy,kyy]");
        const double kxx = t[0], kxy = t[1], kyy = t[2];
        Mat2 K;
        K << kxx, kxy, kxy, kyy;
        s.K2 = [K](const Vec2&) { return K; };
      } else {
        s.K2 = constant_tensor(k);
      }
    } else if (s.dim == 1) {
      s.K1 = constant_field(k);
    }
    if (e.contains("source")) s.source = detail::json_const_field(e["source"].get<double>());
    if (e.contains("wells"))
      for (const auto& w : e["wells"])
        s.cell_sources.emplace_back(detail::json_vec(w[0], "well location"), w[1].get<double>());
    if (e.contains("boundary")) {
      for (const auto& bp : e["boundary"]) {
        BoundaryPiece p;
        const std::string type = bp.at("type").get<std::string>();
        if (type == "dirichlet")
          p.type = BcType::dirichlet;
        else if (type == "neumann")
          p.type = BcType::neumann;
        else
          throw ConfigError("boundary type must be 'dirichlet' or 'neumann'");
        p.rest = bp.value("rest", false);
        if (!p.rest) {
          p.a = detail::json_vec(bp.at("a"), "boundary endpoint");
          p.b = detail::json_vec(bp.value("b", bp.at("a")), "boundary endpoint");
        }
        p.value = constant_field(bp.value("value", 0.0));
        s.boundary.push_back(p);
      }
    }
    subs.push_back(std::move(s));
  }

  std::vector<Interface> ifcs;
  for (const auto& e : j["interfaces"]) {
    Interface ifc;
    ifc.id = e.at("id").get<int>();
    ifc.hi = e.at("hi").get<int>();
    ifc.lo = e.at("lo").get<int>();
    ifc.dim = e.at("dim").get<int>();
    ifc.a = detail::json_vec(e.at("a"), "interface endpoint");
    ifc.b = ifc.dim == 0 ? ifc.a : detail::json_vec(e.at("b"), "interface endpoint");
    if (e.contains("side_normal")) ifc.side_normal = detail::json_vec(e["side_normal"], "side_normal");
    ifc.kappa = constant_field(e.value("kappa", 1.0));
    ifcs.push_back(std::move(ifc));
  }

  try {
    return build_domain(subs, ifcs);
  } catch (const MdError& e) {
    throw ConfigError("domain spec rejected: " + std::string(e.what()));
  }
}

} // namespace mdest
