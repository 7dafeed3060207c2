#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "remrate/common.hpp"
#include "remrate/matching.hpp"
#include "remrate/model.hpp"
#include "remrate/model_io.hpp"
#include "remrate/region.hpp"
#include "remrate/selfcheck.hpp"
#include "remrate/waterfill.hpp"

namespace {

using nlohmann::ordered_json;
using namespace remrate;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

struct RunConfig {
  std::string model;
  std::optional<double> D;
  std::string r_csv;
  std::string out;
  std::string format = "csv";
  std::string units = "nats";
  std::uint64_t seed = matching::kDefaultSeed;
  int samples = 1000;
  int grid = 200;
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Rate quantities are internally in nats; bits are an output-layer division.
struct UnitScale {
  double div = 1.0;
  double rate(double nats) const { return nats / div; }
};

std::vector<double> parse_rates(const std::string& csv, int L) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      vals.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw InvalidInput("--r: cannot parse '" + tok + "' as a number");
    }
  }
  if (vals.size() == 1) vals.assign(L, vals[0]);
  if (static_cast<int>(vals.size()) != L)
    throw InvalidInput("--r: expected 1 or L comma-separated values");
  return vals;
}

model::SourceSpec load_model(const std::string& descriptor) {
  auto parse_args = [](const std::string& s) {
    std::vector<double> vals;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    return vals;
  };
  try {
    if (descriptor.rfind("equicorr:", 0) == 0) {
      const std::vector<double> a = parse_args(descriptor.substr(9));
      if (a.size() != 3) throw InvalidInput("equicorr builtin needs L,rho,sigma2");
      const int L = static_cast<int>(a[0]);
      if (L < 1 || a[0] != L) throw InvalidInput("equicorr: L must be a positive integer");
      return model::build_equicorrelated(L, a[1], std::vector<double>(L, a[2]));
    }
    if (descriptor.rfind("circulant4:", 0) == 0) {
      const std::vector<double> a = parse_args(descriptor.substr(11));
      if (a.size() != 2) throw InvalidInput("circulant4 builtin needs rho,sigma2");
      return model::build_circulant4(a[0], std::vector<double>(4, a[1]));
    }
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(std::string("model descriptor: ") + e.what());
  }
  const std::string path =
      descriptor.rfind("file:", 0) == 0 ? descriptor.substr(5) : descriptor;
  return model::load_model_file(path);
}

// Recognizes a unit-diagonal equicorrelated covariance; returns rho.
std::optional<double> detect_equicorr(const model::SourceSpec& spec) {
  const int L = spec.dim();
  const auto& s = spec.cov_x();
  for (int i = 0; i < L; ++i)
    if (std::abs(s(i, i) - 1.0) > 1e-12) return std::nullopt;
  if (L == 1) return 0.0;
  const double rho = s(0, 1);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      if (i != j && std::abs(s(i, j) - rho) > 1e-12) return std::nullopt;
  return rho;
}

std::optional<double> detect_circulant4(const model::SourceSpec& spec) {
  if (spec.dim() != 4 || !spec.identical_noise()) return std::nullopt;
  const auto& s = spec.cov_x();
  const double rho = s(0, 1);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const int d = (j - i + 4) % 4;
      const double want = d == 0 ? 1.0 : (d == 2 ? 0.0 : rho);
      if (std::abs(s(i, j) - want) > 1e-12) return std::nullopt;
    }
  return rho;
}

void write_output(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw InvalidInput("cannot open output file " + cfg.out);
  f << text;
}

model::RateAllocation resolve_rates(const RunConfig& cfg, const model::SourceSpec& spec,
                                    double D) {
  if (!cfg.r_csv.empty()) return model::RateAllocation(parse_rates(cfg.r_csv, spec.dim()));
  if (D >= spec.trace_cov()) return model::RateAllocation::zero(spec.dim());
  return model::RateAllocation::uniform(spec.dim(), model::symmetric_boundary_r(spec, D));
}

double require_D(const RunConfig& cfg) {
  if (!cfg.D) throw InvalidInput("--D is required for this command");
  if (!std::isfinite(*cfg.D) || *cfg.D <= 0.0) throw InvalidInput("--D must be finite and > 0");
  return *cfg.D;
}

std::string members_of(region::Mask S, int L, char sep) {
  std::string s;
  for (int i = 0; i < L; ++i)
    if (S & (region::Mask{1} << i)) {
      if (!s.empty()) s += sep;
      s += std::to_string(i + 1);
    }
  return s;
}

int cmd_region(const RunConfig& cfg) {
  const model::SourceSpec spec = load_model(cfg.model);
  const double D = require_D(cfg);
  const UnitScale u{cfg.units == "bits" ? std::log(2.0) : 1.0};
  const bool trivial = D >= spec.trace_cov();
  const model::RateAllocation r = resolve_rates(cfg, spec, D);

  const region::RegionBound outer = region::outer_bound(spec, D, r);
  const region::RegionBound inner = region::inner_bound(spec, r);
  const int L = spec.dim();

  if (cfg.format == "json") {
    ordered_json j;
    j["command"] = "region";
    j["model"] = cfg.model;
    j["units"] = cfg.units;
    j["L"] = L;
    j["D"] = D;
    j["trivial"] = trivial;
    ordered_json rr = ordered_json::array();
    for (double x : r.r) rr.push_back(u.rate(x));
    j["r"] = rr;
    ordered_json rows = ordered_json::array();
    for (region::Mask S = 1; S < (region::Mask{1} << L); ++S) {
      ordered_json row;
      row["mask"] = S;
      ordered_json mem = ordered_json::array();
      for (int i = 0; i < L; ++i)
        if (S & (region::Mask{1} << i)) mem.push_back(i + 1);
      row["members"] = mem;
      row["outer"] = u.rate(outer.at(S));
      row["inner"] = u.rate(inner.at(S));
      row["gap"] = u.rate(inner.at(S) - outer.at(S));
      rows.push_back(row);
    }
    j["rows"] = rows;
    write_output(cfg, j.dump(2) + "\n");
  } else {
    std::string s = "mask,members,outer,inner,gap\n";
    for (region::Mask S = 1; S < (region::Mask{1} << L); ++S) {
      s += std::to_string(S) + "," + members_of(S, L, '|') + "," + fmt17(u.rate(outer.at(S))) +
           "," + fmt17(u.rate(inner.at(S))) + "," + fmt17(u.rate(inner.at(S) - outer.at(S))) +
           "\n";
    }
    write_output(cfg, s);
  }
  return kExitOk;
}

int cmd_endpoints(const RunConfig& cfg) {
  const model::SourceSpec spec = load_model(cfg.model);
  const double D = require_D(cfg);
  const UnitScale u{cfg.units == "bits" ? std::log(2.0) : 1.0};
  const model::RateAllocation r = resolve_rates(cfg, spec, D);
  const region::RegionBound outer = region::outer_bound(spec, D, r);
  const std::vector<region::RatePoint> pts = region::all_endpoints(outer);
  const int L = spec.dim();

  if (cfg.format == "json") {
    ordered_json j;
    j["command"] = "endpoints";
    j["model"] = cfg.model;
    j["units"] = cfg.units;
    j["L"] = L;
    j["D"] = D;
    ordered_json rr = ordered_json::array();
    for (double x : r.r) rr.push_back(u.rate(x));
    j["r"] = rr;
    ordered_json eps = ordered_json::array();
    for (const auto& p : pts) {
      ordered_json e = ordered_json::array();
      for (double x : p.rates) e.push_back(u.rate(x));
      eps.push_back(e);
    }
    j["endpoints"] = eps;
    write_output(cfg, j.dump(2) + "\n");
  } else {
    std::string s = "index";
    for (int i = 0; i < L; ++i) s += ",R_" + std::to_string(i + 1);
    s += "\n";
    for (std::size_t k = 0; k < pts.size(); ++k) {
      s += std::to_string(k);
      for (double x : pts[k].rates) s += "," + fmt17(u.rate(x));
      s += "\n";
    }
    write_output(cfg, s);
  }
  return kExitOk;
}

int cmd_sum_rate(const RunConfig& cfg) {
  const model::SourceSpec spec = load_model(cfg.model);
  const double D = require_D(cfg);
  const UnitScale u{cfg.units == "bits" ? std::log(2.0) : 1.0};
  const int L = spec.dim();

  const region::SumRateResult min = region::sum_rate_min(spec, D);
  std::optional<region::ScalarMinResult> cyc;
  if (model::cyclic_shift_invariant(spec) && D < spec.trace_cov())
    cyc = region::sum_rate_lower_cyclic(spec, D);

  matching::Theorem8Result th8;
  const std::optional<double> rho = detect_equicorr(spec);
  if (rho && spec.identical_noise()) {
    const model::EquicorrCoeffs co = model::equicorr_inverse_coeffs(L, *rho);
    th8 = matching::theorem8_closed_form(co.a, co.b, spec.c(0), L, D, *rho);
  }

  if (cfg.format == "json") {
    ordered_json j;
    j["command"] = "sum-rate";
    j["model"] = cfg.model;
    j["units"] = cfg.units;
    j["L"] = L;
    j["D"] = D;
    j["sum_rate_min"] = u.rate(min.value);
    j["boundary_residual"] = min.boundary_residual;
    ordered_json am = ordered_json::array();
    for (double x : min.argmin.r) am.push_back(u.rate(x));
    j["argmin_r"] = am;
    if (cyc) {
      j["sum_rate_lower_cyclic"] = u.rate(cyc->value);
      j["lower_cyclic_argmin_r"] = u.rate(cyc->argmin_r);
    }
    if (th8.applicable) {
      j["theorem8_r_sum"] = u.rate(th8.r_sum);
      j["theorem8_r_opt"] = u.rate(th8.r_opt);
      j["theorem8_window"] = {th8.window_lo, th8.window_hi};
    }
    write_output(cfg, j.dump(2) + "\n");
  } else {
    std::string s = "quantity,value\n";
    s += "L," + std::to_string(L) + "\n";
    s += "D," + fmt17(D) + "\n";
    s += "sum_rate_min," + fmt17(u.rate(min.value)) + "\n";
    s += "boundary_residual," + fmt17(min.boundary_residual) + "\n";
    for (int i = 0; i < L; ++i)
      s += "argmin_r_" + std::to_string(i + 1) + "," + fmt17(u.rate(min.argmin.r[i])) + "\n";
    if (cyc) {
      s += "sum_rate_lower_cyclic," + fmt17(u.rate(cyc->value)) + "\n";
      s += "lower_cyclic_argmin_r," + fmt17(u.rate(cyc->argmin_r)) + "\n";
    }
    if (th8.applicable) {
      s += "theorem8_r_sum," + fmt17(u.rate(th8.r_sum)) + "\n";
      s += "theorem8_r_opt," + fmt17(u.rate(th8.r_opt)) + "\n";
    }
    write_output(cfg, s);
  }
  return kExitOk;
}

int cmd_curve(const RunConfig& cfg) {
  const model::SourceSpec spec = load_model(cfg.model);
  const UnitScale u{cfg.units == "bits" ? std::log(2.0) : 1.0};
  const int n = std::max(2, cfg.grid);
  std::vector<double> grid(n);
  const double lo = std::log(1e-3), hi = std::log(8.0);
  for (int i = 0; i < n; ++i) grid[i] = std::exp(lo + (hi - lo) * i / (n - 1));
  const std::vector<region::CurvePoint> pts = region::parametric_curve(spec, grid);

  if (cfg.format == "json") {
    ordered_json j;
    j["command"] = "curve";
    j["model"] = cfg.model;
    j["units"] = cfg.units;
    ordered_json rows = ordered_json::array();
    for (const auto& p : pts)
      rows.push_back({{"r", u.rate(p.r)}, {"D", p.D}, {"R", u.rate(p.R)}});
    j["points"] = rows;
    write_output(cfg, j.dump(2) + "\n");
  } else {
    std::string s = "r,D,R\n";
    for (const auto& p : pts)
      s += fmt17(u.rate(p.r)) + "," + fmt17(p.D) + "," + fmt17(u.rate(p.R)) + "\n";
    write_output(cfg, s);
  }
  return kExitOk;
}

int cmd_matching(const RunConfig& cfg) {
  const model::SourceSpec spec = load_model(cfg.model);
  const double D = require_D(cfg);
  const int L = spec.dim();

  std::vector<matching::MatchingReport> reports;
  reports.push_back(matching::check_theorem4(spec, D));
  reports.push_back(matching::check_lemma3(spec, D, cfg.samples, cfg.seed));
  reports.push_back(matching::check_md_sampled(spec, D, cfg.samples, cfg.seed));

  const std::optional<double> rho = detect_equicorr(spec);
  if (rho) {
    std::vector<double> c(L);
    for (int i = 0; i < L; ++i) c[i] = spec.c(i);
    reports.push_back(matching::check_corollary4(L, *rho, c, D));
    const model::EquicorrCoeffs co = model::equicorr_inverse_coeffs(L, *rho);
    if (co.b >= 0.0) {
      const double c_min = *std::min_element(c.begin(), c.end());
      const double c_max = *std::max_element(c.begin(), c.end());
      reports.push_back(matching::check_theorem6(co.a, co.b, c_min, c_max, L, D));
    } else {
      reports.push_back({matching::ConditionId::Theorem6, matching::Verdict::not_applicable, 0.0,
                         {}, 0, "window derivation needs rho >= 0"});
    }
    if (spec.identical_noise()) {
      const matching::Theorem8Result th8 =
          matching::theorem8_closed_form(co.a, co.b, spec.c(0), L, D, *rho);
      matching::MatchingReport rep{matching::ConditionId::Theorem8_window,
                                   matching::Verdict::not_applicable,
                                   0.0,
                                   {},
                                   0,
                                   ""};
      if (*rho >= 0.0) {
        rep.slack = std::min(D - th8.window_lo, th8.window_hi - D);
        rep.verdict = th8.applicable ? matching::Verdict::holds : matching::Verdict::fails;
      } else {
        rep.note = "closed form needs rho >= 0";
      }
      reports.push_back(rep);
    }
  } else {
    reports.push_back({matching::ConditionId::Corollary4, matching::Verdict::not_applicable, 0.0,
                       {}, 0, "model is not equicorrelated"});
  }

  if (model::cyclic_shift_invariant(spec)) {
    reports.push_back(matching::check_theorem7(spec));
  } else {
    reports.push_back({matching::ConditionId::Theorem7, matching::Verdict::not_applicable, 0.0,
                       {}, 0, "model is not cyclic shift invariant"});
  }

  if (const std::optional<double> rho4 = detect_circulant4(spec)) {
    const double sigma2 = spec.noise_var()[0];
    const double thr =
        3.0 * std::abs(*rho4) * (1.0 + 2.0 * std::abs(*rho4)) / (1.0 - 2.0 * std::abs(*rho4));
    matching::MatchingReport rep{matching::ConditionId::Theorem9,
                                 sigma2 >= thr ? matching::Verdict::holds
                                               : matching::Verdict::fails,
                                 sigma2 - thr,
                                 {},
                                 0,
                                 ""};
    reports.push_back(rep);
  }

  if (cfg.format == "json") {
    ordered_json j;
    j["command"] = "matching";
    j["model"] = cfg.model;
    j["D"] = D;
    j["seed"] = cfg.seed;
    j["samples"] = cfg.samples;
    ordered_json rows = ordered_json::array();
    for (const auto& rep : reports) {
      ordered_json row;
      row["condition"] = matching::to_string(rep.id);
      row["verdict"] = matching::to_string(rep.verdict);
      row["slack"] = rep.slack;
      row["samples"] = rep.samples;
      if (!rep.witnesses.empty()) row["witness"] = rep.witnesses.front();
      if (!rep.note.empty()) row["note"] = rep.note;
      rows.push_back(row);
    }
    j["reports"] = rows;
    write_output(cfg, j.dump(2) + "\n");
  } else {
    std::string s = "condition,verdict,slack,samples,witness,note\n";
    for (const auto& rep : reports) {
      std::string wit;
      if (!rep.witnesses.empty())
        for (std::size_t i = 0; i < rep.witnesses.front().size(); ++i)
          wit += (i ? "|" : "") + fmt17(rep.witnesses.front()[i]);
      s += std::string(matching::to_string(rep.id)) + "," + matching::to_string(rep.verdict) +
           "," + fmt17(rep.slack) + "," + std::to_string(rep.samples) + "," + wit + "," +
           rep.note + "\n";
    }
    write_output(cfg, s);
  }
  return kExitOk;
}

int cmd_selftest(const RunConfig& cfg) {
  if (!cfg.model.empty()) load_model(cfg.model);  // validate only

  std::vector<selfcheck::SuiteResult> suites;
  suites.push_back(selfcheck::run_waterfill_suite(60, cfg.seed));
  suites.push_back(selfcheck::run_sensitivity_suite(200, cfg.seed + 1));
  suites.push_back(selfcheck::run_det_identity_suite(500, cfg.seed + 2));
  suites.push_back(selfcheck::run_mi_oracle_suite(200, cfg.seed + 3));

  bool all_pass = true;
  if (cfg.format == "json") {
    ordered_json j;
    j["command"] = "selftest";
    j["seed"] = cfg.seed;
    ordered_json rows = ordered_json::array();
    for (const auto& s : suites) {
      rows.push_back({{"suite", s.name}, {"pass", s.pass}, {"worst", s.worst},
                      {"cases", s.cases}});
      all_pass = all_pass && s.pass;
    }
    j["suites"] = rows;
    write_output(cfg, j.dump(2) + "\n");
  } else {
    std::string out = "suite,pass,worst,cases\n";
    for (const auto& s : suites) {
      out += s.name + "," + (s.pass ? "PASS" : "FAIL") + "," + fmt17(s.worst) + "," +
             std::to_string(s.cases) + "\n";
      all_pass = all_pass && s.pass;
    }
    write_output(cfg, out);
  }
  return all_pass ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate region bounds for distributed coding of noisy Gaussian sources"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string command;
  for (const char* name : {"region", "endpoints", "sum-rate", "curve", "matching", "selftest"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--model", cfg.model, "equicorr:L,rho,sigma2 | circulant4:rho,sigma2 | file:path");
    sub->add_option_function<double>("--D", [&cfg](double v) { cfg.D = v; }, "sum distortion budget");
    sub->add_option("--r", cfg.r_csv, "comma-separated rates (single value broadcasts)");
    sub->add_option("--out", cfg.out, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--units", cfg.units, "nats | bits")
        ->check(CLI::IsMember({"nats", "bits"}));
    sub->add_option("--seed", cfg.seed, "sampling seed");
    sub->add_option("--samples", cfg.samples, "sample count for matching checks");
    sub->add_option("--grid", cfg.grid, "grid size for curve output");
    sub->callback([&command, name]() { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (command != "selftest" && cfg.model.empty())
      throw InvalidInput("--model is required");
    if (command == "region") return cmd_region(cfg);
    if (command == "endpoints") return cmd_endpoints(cfg);
    if (command == "sum-rate") return cmd_sum_rate(cfg);
    if (command == "curve") return cmd_curve(cfg);
    if (command == "matching") return cmd_matching(cfg);
    if (command == "selftest") return cmd_selftest(cfg);
    throw InvalidInput("unknown command");
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
