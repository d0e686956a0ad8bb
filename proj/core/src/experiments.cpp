#include "zerostat/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "zerostat/ensembles.hpp"
#include "zerostat/errors.hpp"
#include "zerostat/io.hpp"
#include "zerostat/kernel.hpp"
#include "zerostat/norms.hpp"
#include "zerostat/parallel.hpp"
#include "zerostat/polytopes.hpp"
#include "zerostat/rng.hpp"
#include "zerostat/statistics.hpp"
#include "zerostat/zeros.hpp"

namespace zerostat {

using nlohmann::json;

std::string version() { return ZEROSTAT_VERSION; }

// ---------------------------------------------------------------------------
// Config envelope.

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  const auto problems = validate_json(j);
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  ExperimentConfig c;
  c.experiment = j.at("experiment").get<std::string>();
  if (j.contains("parameters")) c.parameters = j.at("parameters");
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  return json{{"experiment", experiment},
              {"parameters", parameters},
              {"master_seed", master_seed},
              {"output_dir", output_dir.generic_string()}};
}

// ---------------------------------------------------------------------------
// Parameter schemas.

namespace {

enum class Kind { Int, Number, NumberOrInf, IntList, NumberList, Band, Polytope, ComplexVector };

struct Field {
  std::string name;
  Kind kind;
  double lo;
  double hi;
  json fallback;  // null: optional without default
  bool lo_open = false;
};

constexpr double kBig = 1e300;

const std::map<std::string, std::vector<Field>>& schemas() {
  static const std::map<std::string, std::vector<Field>> s = {
      {"pair-corr",
       {{"N", Kind::Int, 2, 400, 100},
        {"trials", Kind::Int, 1, 1e8, 20000},
        {"rmax", Kind::Number, 0, 5, 5.0, true},
        {"bins", Kind::Int, 1, 100000, 100},
        {"reference_cutoff", Kind::NumberOrInf, 0, kBig, "inf", true}}},
      {"kappa-analytic",
       {{"m", Kind::Int, 1, 3, 1},
        {"radii", Kind::NumberList, 1e-3, 50, json::array({0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0})},
        {"mc_samples", Kind::Int, 2, 1e10, 1000000}}},
      {"density-map",
       {{"N", Kind::Int, 1, 400, 60},
        {"trials", Kind::Int, 1, 1e8, 5000},
        {"bands", Kind::Int, 1, 10000, 10},
        {"mu_range", Kind::Band, 0, 1, json::array({0.05, 0.95})},
        {"tolerance", Kind::Number, 0, 1, 0.05, true}}},
      {"polytope-density",
       {{"polytope", Kind::Polytope, 1, 1, "[1,3]"},
        {"p", Kind::Int, 1, 400, 4},
        {"dilation", Kind::Int, 1, 400, 50},
        {"trials", Kind::Int, 1, 1e8, 5000},
        {"bands", Kind::Int, 1, 10000, 20},
        {"forbidden_mu", Kind::Number, 0, 1, 0.2, true},
        {"allowed_mu", Kind::Band, 0, 1, json::array({0.4, 0.6})},
        {"leak_bound", Kind::Number, 0, 1, 0.02, true},
        {"tolerance", Kind::Number, 0, 1, 0.05, true}}},
      {"bk-count",
       {{"polytope", Kind::Polytope, 2, 2, "[[0,0],[3,0],[0,3]]"},
        {"trials", Kind::Int, 1, 1e7, 200},
        {"threshold", Kind::Number, 0, 1, 0.95, true},
        {"max_degree", Kind::Int, 1, 12, 12}}},
      {"kernel-scaling",
       {{"m", Kind::Int, 1, 3, 1},
        {"u", Kind::ComplexVector, 0, 0, json::array({json::array({0.5, 0.0})})},
        {"v", Kind::ComplexVector, 0, 0, json::array({json::array({0.0, 0.3})})},
        {"degrees", Kind::IntList, 1, 1e7, json::array({25, 50, 100, 200, 400})},
        {"rate_band", Kind::Band, 0, kBig, json::array({0.4, 0.6})},
        {"ratio_band", Kind::Band, 0, kBig, json::array({1.6, 2.6})}}},
      {"norms-growth",
       {{"degrees", Kind::IntList, 16, 1024, json::array({64, 256, 1024})},
        {"trials", Kind::Int, 2, 1e7, 500},
        {"p", Kind::NumberOrInf, 1, kBig, "inf"},
        {"variation_bound", Kind::Number, 0, kBig, nullptr, true}}},
      {"poisson-selftest",
       {{"mean_points", Kind::Number, 0, 1e5, 100.0, true},
        {"trials", Kind::Int, 1, 1e8, 2000},
        {"rmax", Kind::Number, 0, kBig, 5.0, true},
        {"bins", Kind::Int, 1, 100000, 25},
        {"scale", Kind::Number, 0, kBig, nullptr, true}}},
      {"root-gap",
       {{"degrees", Kind::IntList, 2, 400, json::array({25, 50, 100, 200, 400})},
        {"trials", Kind::Int, 2, 1e7, 500}}},
  };
  return s;
}

bool is_number(const json& v) { return v.is_number() && !v.is_boolean(); }
bool is_integer(const json& v) { return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())); }

std::string range_text(const Field& f) {
  return std::string(f.lo_open ? "(" : "[") + format_double(f.lo) + ", " + (f.hi >= kBig ? "inf" : format_double(f.hi)) + "]";
}

bool in_range(const Field& f, double x) { return (f.lo_open ? x > f.lo : x >= f.lo) && x <= f.hi; }

std::optional<LatticePolytope> polytope_from(const json& v, std::string* error) {
  try {
    if (v.is_string()) return LatticePolytope::parse(v.get<std::string>());
    if (v.is_array()) return LatticePolytope::parse(v.dump());
    *error = "must be a polytope literal";
  } catch (const std::exception& e) {
    *error = e.what();
  }
  return std::nullopt;
}

void check_field(const Field& f, const json& v, std::vector<std::string>& out) {
  const std::string where = "parameters." + f.name + ": ";
  switch (f.kind) {
    case Kind::Int:
      if (!is_number(v) || !is_integer(v)) out.push_back(where + "must be an integer");
      else if (!in_range(f, v.get<double>())) out.push_back(where + "must lie in " + range_text(f));
      break;
    case Kind::Number:
      if (!is_number(v)) out.push_back(where + "must be a number");
      else if (!in_range(f, v.get<double>())) out.push_back(where + "must lie in " + range_text(f));
      break;
    case Kind::NumberOrInf:
      if (v.is_string()) {
        if (v.get<std::string>() != "inf") out.push_back(where + "must be a number or \"inf\"");
      } else if (!is_number(v)) {
        out.push_back(where + "must be a number or \"inf\"");
      } else if (!in_range(f, v.get<double>())) {
        out.push_back(where + "must lie in " + range_text(f));
      }
      break;
    case Kind::IntList:
    case Kind::NumberList: {
      if (!v.is_array() || v.empty()) {
        out.push_back(where + "must be a non-empty list");
        break;
      }
      double prev = -INFINITY;
      for (const auto& x : v) {
        if (!is_number(x) || (f.kind == Kind::IntList && !is_integer(x))) {
          out.push_back(where + (f.kind == Kind::IntList ? "entries must be integers" : "entries must be numbers"));
          return;
        }
        const double d = x.get<double>();
        if (!in_range(f, d)) {
          out.push_back(where + "entries must lie in " + range_text(f));
          return;
        }
        if (!(d > prev)) {
          out.push_back(where + "entries must be strictly increasing");
          return;
        }
        prev = d;
      }
      break;
    }
    case Kind::Band:
      if (!v.is_array() || v.size() != 2 || !is_number(v[0]) || !is_number(v[1])) {
        out.push_back(where + "must be a pair [lo, hi]");
      } else {
        const double a = v[0].get<double>(), b = v[1].get<double>();
        if (!(a < b)) out.push_back(where + "needs lo < hi");
        else if (a < f.lo || b > f.hi) out.push_back(where + "must lie inside " + range_text(f));
      }
      break;
    case Kind::Polytope: {
      std::string err;
      const auto P = polytope_from(v, &err);
      if (!P) out.push_back(where + err);
      else if (P->dim() != static_cast<int>(f.lo)) out.push_back(where + "must be " + std::to_string(int(f.lo)) + "-dimensional");
      break;
    }
    case Kind::ComplexVector:
      if (!v.is_array() || v.empty()) {
        out.push_back(where + "must be a list of [re, im] pairs");
        break;
      }
      for (const auto& x : v)
        if (!x.is_array() || x.size() != 2 || !is_number(x[0]) || !is_number(x[1])) {
          out.push_back(where + "must be a list of [re, im] pairs");
          return;
        }
      break;
  }
}

double as_number(const json& v) {
  if (v.is_string()) return std::numeric_limits<double>::infinity();
  return v.get<double>();
}

std::vector<Complex> as_point(const json& v) {
  std::vector<Complex> z;
  for (const auto& x : v) z.emplace_back(x[0].get<double>(), x[1].get<double>());
  return z;
}

bool multiple_of(double x, int bands) {
  const double k = x * bands;
  return std::abs(k - std::round(k)) < 1e-9;
}

void cross_checks(const std::string& name, const json& p, std::vector<std::string>& out) {
  if (name == "polytope-density") {
    std::string err;
    const auto P = polytope_from(p["polytope"], &err);
    if (!P) return;
    const long long pdeg = p["p"].get<long long>();
    const long long dil = p["dilation"].get<long long>();
    if (P->degree() > pdeg) out.push_back("parameters.p: must be at least the polytope degree " + std::to_string(P->degree()));
    if (pdeg * dil > 400) out.push_back("parameters: p * dilation must not exceed 400");
    if (P->vertices()[0][0] == P->vertices()[1][0])
      out.push_back("parameters.polytope: must have positive length");
    const int bands = p["bands"].get<int>();
    const double f = p["forbidden_mu"].get<double>();
    const double a = p["allowed_mu"][0].get<double>(), b = p["allowed_mu"][1].get<double>();
    if (!multiple_of(f, bands) || !multiple_of(a, bands) || !multiple_of(b, bands))
      out.push_back("parameters: forbidden_mu and allowed_mu must be multiples of 1/bands");
    if (f > a) out.push_back("parameters.forbidden_mu: must not exceed the allowed band");
  } else if (name == "bk-count") {
    std::string err;
    const auto P = polytope_from(p["polytope"], &err);
    if (!P) return;
    if (P->degree() > p["max_degree"].get<long long>())
      out.push_back("parameters.polytope: degree " + std::to_string(P->degree()) + " exceeds max_degree");
    if (volume(*P) <= Rational(0)) out.push_back("parameters.polytope: must have positive area");
  } else if (name == "kernel-scaling") {
    const auto m = p["m"].get<std::size_t>();
    if (p["u"].size() != m) out.push_back("parameters.u: needs m coordinates");
    if (p["v"].size() != m) out.push_back("parameters.v: needs m coordinates");
    if (p["degrees"].size() < 2) out.push_back("parameters.degrees: needs at least two degrees");
  } else if (name == "norms-growth") {
    if (p["degrees"].size() < 2) out.push_back("parameters.degrees: needs at least two degrees");
  }
}

}  // namespace

const std::vector<ExperimentInfo>& list_experiments() {
  static const std::vector<ExperimentInfo> list = {
      {"pair-corr", "rescaled pair correlation of zeros of the full m = 1 ensemble, with the Kac-Rice comparison",
       "CP^1", true},
      {"kappa-analytic", "two-point function of the Heisenberg field by Kac-Rice (m = 1, 2, 3)", "-", false},
      {"density-map", "zero density of the full m = 1 ensemble against Fubini-Study and the kernel formula", "CP^1",
       true},
      {"polytope-density", "zero density of a polytope-constrained m = 1 ensemble in allowed and forbidden regions",
       "C^*", true},
      {"bk-count", "common zeros of two polytope-constrained sections on CP^2 against m! Vol(P)", "C^*2", true},
      {"kernel-scaling", "distance of the rescaled kernel from the Heisenberg kernel as N grows", "-", true},
      {"norms-growth", "mean L^p or sup norm of normalized random sections against the degree", "-", true},
      {"poisson-selftest", "pair-correlation estimator on synthetic Poisson configurations", "CP^1", true},
      {"root-gap", "exploratory: mean minimal chordal gap between zeros against the degree", "CP^1", false},
  };
  return list;
}

std::vector<std::string> validate(const ExperimentConfig& config) {
  std::vector<std::string> out;
  const auto& all = schemas();
  const auto it = all.find(config.experiment);
  if (it == all.end()) {
    out.push_back("experiment: unknown name '" + config.experiment + "'");
    return out;
  }
  if (!config.parameters.is_object()) {
    out.push_back("parameters: must be an object");
    return out;
  }
  for (const auto& [key, value] : config.parameters.items()) {
    (void)value;
    const bool known = std::any_of(it->second.begin(), it->second.end(), [&](const Field& f) { return f.name == key; });
    if (!known) out.push_back("parameters." + key + ": unknown parameter for " + config.experiment);
  }
  for (const auto& f : it->second)
    if (config.parameters.contains(f.name)) check_field(f, config.parameters[f.name], out);
  if (config.output_dir.empty()) out.push_back("output_dir: must not be empty");
  if (out.empty()) cross_checks(config.experiment, resolved_parameters(config), out);
  return out;
}

std::vector<std::string> validate_json(const json& j) {
  std::vector<std::string> out;
  if (!j.is_object()) return {"config: must be a JSON object"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "experiment" && key != "parameters" && key != "master_seed" && key != "output_dir")
      out.push_back(key + ": unknown field");
  }
  if (!j.contains("experiment") || !j["experiment"].is_string()) out.push_back("experiment: required string");
  const auto seed_ok = [&] {
    if (!j.contains("master_seed")) return false;
    const auto& v = j["master_seed"];
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  };
  if (!seed_ok())
    out.push_back("master_seed: required non-negative 64-bit integer");
  if (j.contains("output_dir") && !j["output_dir"].is_string()) out.push_back("output_dir: must be a string");
  if (j.contains("parameters") && !j["parameters"].is_object()) out.push_back("parameters: must be an object");
  if (!out.empty()) return out;
  ExperimentConfig c;
  c.experiment = j["experiment"].get<std::string>();
  if (j.contains("parameters")) c.parameters = j["parameters"];
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  return validate(c);
}

json resolved_parameters(const ExperimentConfig& config) {
  json p = config.parameters.is_object() ? config.parameters : json::object();
  const auto it = schemas().find(config.experiment);
  if (it == schemas().end()) return p;
  for (const auto& f : it->second)
    if (!p.contains(f.name) && !f.fallback.is_null()) p[f.name] = f.fallback;
  return p;
}

// ---------------------------------------------------------------------------
// Runners.

namespace {

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

struct Outcome {
  std::vector<Check> checks;
  bool has_verdict = false;
  json failures = json::object();
  json notes = json::object();
};

class Csv {
 public:
  explicit Csv(std::string header) { os_ << header << '\n'; }
  template <class... T>
  void row(const T&... cells) {
    std::size_t i = 0;
    ((os_ << (i++ ? "," : "") << cell(cells)), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double x) { return format_double(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I x) {
    return std::to_string(x);
  }
  std::ostringstream os_;
};

struct Context {
  const ExperimentConfig& config;
  json params;
  int workers;
  std::vector<std::filesystem::path> files;

  void write(const std::string& name, const std::string& contents) {
    write_file(config.output_dir / name, contents);
    files.push_back(name);
  }
};

std::string curve_csv(const PairCorrelationCurve& c) {
  Csv csv("r_mid,kappa_hat,stderr,pair_count,flag");
  for (std::size_t b = 0; b < c.bins(); ++b)
    csv.row(c.r_mid(b), c.kappa_hat[b], c.std_errors[b], c.pair_count[b],
            std::string(c.low_confidence[b] ? "low-confidence" : "ok"));
  return csv.str();
}

json failure_json(const FailureAccount& f) {
  return json{{"trials", f.trials}, {"failures", f.failures}};
}

Outcome run_pair_corr(Context& ctx) {
  const auto& p = ctx.params;
  const int N = p["N"].get<int>();
  PairCorrelationOptions opts;
  opts.rmax = p["rmax"].get<double>();
  opts.bins = p["bins"].get<std::size_t>();
  opts.reference_cutoff = as_number(p["reference_cutoff"]);
  TrialRunOptions run;
  run.trials = p["trials"].get<std::size_t>();
  run.master_seed = ctx.config.master_seed;
  run.workers = ctx.workers;
  const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::full(1, N));
  FailureAccount fails;
  Outcome out;
  PairCorrelationCurve curve;
  try {
    curve = pair_correlation_empirical(spec, opts, run, &fails);
  } catch (const SolverFailure&) {
    out.failures = failure_json(fails);
    throw;
  }
  out.failures = failure_json(fails);
  out.notes["normalization"] = curve.normalization;
  ctx.write("pair_correlation.csv", curve_csv(curve));

  const AnalyticCurve analytic = [](double r) { return kappa_kacrice(1, r); };
  const double band_hi = std::min(3.0, opts.rmax);
  if (band_hi > 0.5) {
    const auto cmp = compare_curves(curve, analytic, 0.5, band_hi);
    Csv csv("r_mid,kappa_hat,kappa_kacrice,relative_deviation,z_score,flagged");
    for (std::size_t k = 0; k < cmp.bins.size(); ++k)
      csv.row(curve.r_mid(cmp.bins[k]), curve.kappa_hat[cmp.bins[k]], cmp.reference[k], cmp.relative_deviation[k],
              cmp.z_scores[k], static_cast<int>(cmp.flagged[k]));
    ctx.write("comparison.csv", csv.str());
    if (opts.rmax >= 3.5) {
      out.has_verdict = true;
      const auto fit = fit_power_law(curve, 0.1, 0.4);
      out.checks.push_back({"small-r slope on [0.1, 0.4] within 2 +- 0.15", std::abs(fit.exponent - 2.0) <= 0.15,
                            "slope " + format_double(fit.exponent)});
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t b = 0; b < curve.bins(); ++b)
        if (curve.bin_edges[b] >= 0.1 - 1e-12 && curve.bin_edges[b + 1] <= 0.3 + 1e-12) {
          const double q = curve.kappa_hat[b] / std::pow(curve.r_eff(b), 2);
          lo = std::min(lo, q);
          hi = std::max(hi, q);
        }
      out.checks.push_back({"kappa/r^2 on [0.1, 0.3] inside [0.4, 0.6]", lo >= 0.4 && hi <= 0.6,
                            "range [" + format_double(lo) + ", " + format_double(hi) + "]"});
      const auto avg = band_average(curve, 2.5, 3.5);
      out.checks.push_back({"mean kappa on [2.5, 3.5] inside [0.95, 1.05]", avg.value >= 0.95 && avg.value <= 1.05,
                            "mean " + format_double(avg.value)});
      out.checks.push_back({"max relative deviation from Kac-Rice on [0.5, 3] below 5%",
                            cmp.max_relative_deviation < 0.05,
                            "max deviation " + format_double(cmp.max_relative_deviation)});
    }
  }
  return out;
}

Outcome run_kappa(Context& ctx) {
  const auto& p = ctx.params;
  const int m = p["m"].get<int>();
  const auto samples = p["mc_samples"].get<std::size_t>();
  const auto radii = p["radii"].get<std::vector<double>>();
  const auto values = parallel_map(radii.size(), ctx.workers, [&](std::size_t k) {
    return kappa_kacrice(m, radii[k], samples, ctx.config.master_seed + k);
  });
  Csv csv("r,kappa,stderr,asymptote");
  for (std::size_t k = 0; k < radii.size(); ++k)
    csv.row(radii[k], values[k].value, values[k].std_error, kappa_asymptote(m, radii[k]));
  ctx.write("kappa.csv", csv.str());
  return {};
}

double band_expected_density(const EnsembleSpec& spec, double r0, double r1) {
  // Chart-area average of the kernel density over an annulus, 8-point Gauss-Legendre in r.
  static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  double acc = 0.0;
  for (int s = -1; s <= 1; s += 2)
    for (int q = 0; q < 4; ++q) {
      const double r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * s * x[q];
      const Complex z[1] = {Complex(r, 0.0)};
      acc += w[q] * expected_density(spec, z) * 2.0 * std::numbers::pi * r;
    }
  acc *= 0.5 * (r1 - r0);
  return acc / (std::numbers::pi * (r1 * r1 - r0 * r0));
}

double mu_to_radius(double mu) { return std::sqrt(mu / (1.0 - mu)); }

Outcome run_density(Context& ctx) {
  const auto& p = ctx.params;
  const int N = p["N"].get<int>();
  const int bands = p["bands"].get<int>();
  const double mu0 = p["mu_range"][0].get<double>(), mu1 = p["mu_range"][1].get<double>();
  const double tol = p["tolerance"].get<double>();
  std::vector<double> mu(bands + 1), edges(bands + 1);
  for (int k = 0; k <= bands; ++k) {
    mu[k] = mu0 + (mu1 - mu0) * k / bands;
    edges[k] = mu_to_radius(mu[k]);
  }
  const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::full(1, N));
  TrialRunOptions run;
  run.trials = p["trials"].get<std::size_t>();
  run.master_seed = ctx.config.master_seed;
  run.workers = ctx.workers;
  FailureAccount fails;
  Outcome out;
  DensityMap map;
  try {
    map = empirical_density(spec, DensityGrid::radial(edges), run, false, &fails);
  } catch (const SolverFailure&) {
    out.failures = failure_json(fails);
    throw;
  }
  out.failures = failure_json(fails);
  out.has_verdict = true;
  Csv csv("band,mu_lo,mu_hi,r_lo,r_hi,count,density,fs_density,kernel_density,rel_dev_fs,rel_dev_kernel");
  double worst_fs = 0.0, worst_kernel = 0.0;
  for (int k = 0; k < bands; ++k) {
    const double d = map.density(k);
    const double fs = (mu[k + 1] - mu[k]) / map.grid.area(k);
    const double kd = band_expected_density(*spec, edges[k], edges[k + 1]) / N;
    const double dev_fs = std::abs(d / fs - 1.0), dev_k = std::abs(d / kd - 1.0);
    worst_fs = std::max(worst_fs, dev_fs);
    worst_kernel = std::max(worst_kernel, dev_k);
    csv.row(k, mu[k], mu[k + 1], edges[k], edges[k + 1], map.counts[k], d, fs, kd, dev_fs, dev_k);
  }
  ctx.write("density.csv", csv.str());
  out.checks.push_back({"every band within tolerance of Fubini-Study", worst_fs < tol,
                        "max deviation " + format_double(worst_fs)});
  out.checks.push_back({"every band within tolerance of the kernel density", worst_kernel < tol,
                        "max deviation " + format_double(worst_kernel)});
  return out;
}

Outcome run_polytope(Context& ctx) {
  const auto& p = ctx.params;
  std::string err;
  const auto P = *polytope_from(p["polytope"], &err);
  const int pdeg = p["p"].get<int>();
  const int dil = p["dilation"].get<int>();
  const int D = pdeg * dil;
  const int bands = p["bands"].get<int>();
  const double forb = p["forbidden_mu"].get<double>();
  const double a = p["allowed_mu"][0].get<double>(), b = p["allowed_mu"][1].get<double>();
  const double leak = p["leak_bound"].get<double>(), tol = p["tolerance"].get<double>();

  const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::constrained(1, D, dilate(P, dil)));
  std::vector<double> edges(bands + 1);
  for (int k = 0; k < bands; ++k) edges[k] = mu_to_radius(double(k) / bands);
  edges[bands] = INFINITY;
  TrialRunOptions run;
  run.trials = p["trials"].get<std::size_t>();
  run.master_seed = ctx.config.master_seed;
  run.workers = ctx.workers;
  FailureAccount fails;
  Outcome out;
  DensityMap map;
  try {
    map = empirical_density(spec, DensityGrid::radial(edges), run, true, &fails);
  } catch (const SolverFailure&) {
    out.failures = failure_json(fails);
    throw;
  }
  out.failures = failure_json(fails);
  out.has_verdict = true;
  // Levels are zeros per trial per unit Fubini-Study mass, divided by the degree: 1 is the Fubini-Study level.
  auto level = [&](double lo, double hi) {
    double c = 0.0;
    for (int k = 0; k < bands; ++k) {
      const double m0 = double(k) / bands, m1 = double(k + 1) / bands;
      if (m0 >= lo - 1e-12 && m1 <= hi + 1e-12) c += map.counts[k];
    }
    return c / (double(map.trials) * D * (hi - lo));
  };
  Csv csv("band,mu_lo,mu_hi,count,level,region");
  for (int k = 0; k < bands; ++k) {
    const double m0 = double(k) / bands, m1 = double(k + 1) / bands;
    const double mid = 0.5 * (m0 + m1);
    const Complex z[1] = {Complex(mu_to_radius(mid), 0.0)};
    csv.row(k, m0, m1, map.counts[k], level(m0, m1), to_string(classify_region(P, pdeg, z).region));
  }
  ctx.write("profile.csv", csv.str());
  const double forbidden = level(0.0, forb), allowed = level(a, b);
  Csv summary("quantity,value");
  summary.row(std::string("degree"), D);
  summary.row(std::string("forbidden_level"), forbidden);
  summary.row(std::string("allowed_level"), allowed);
  summary.row(std::string("leak_ratio"), forbidden / allowed);
  ctx.write("summary.csv", summary.str());
  out.checks.push_back({"forbidden-disk level below the leak bound times the allowed level",
                        forbidden < leak * allowed, "ratio " + format_double(forbidden / allowed)});
  out.checks.push_back({"allowed-annulus level within tolerance of Fubini-Study", std::abs(allowed - 1.0) < tol,
                        "level " + format_double(allowed)});
  return out;
}

Outcome run_bk(Context& ctx) {
  const auto& p = ctx.params;
  std::string err;
  const auto P = *polytope_from(p["polytope"], &err);
  const auto trials = p["trials"].get<std::size_t>();
  const double threshold = p["threshold"].get<double>();
  SystemOptions sys;
  sys.max_degree = p["max_degree"].get<int>();
  const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::constrained(2, P.degree(), P));
  const Rational bk = volume(P) * Rational(2);
  const long long expected = bk.numerator() / bk.denominator();
  struct Trial {
    std::string status;
    int torus = 0, chart = 0, infinity = 0;
  };
  const auto results = parallel_map(trials, ctx.workers, [&](std::size_t t) {
    Rng rng = trial_stream(ctx.config.master_seed, t);
    const auto f = sample_section(spec, rng);
    const auto g = sample_section(spec, rng);
    Trial r;
    try {
      const auto zs = solve_system_2d(f, g, sys);
      r.status = "ok";
      r.torus = count_in(zs, in_torus(2));
      r.chart = zs.chart_count();
      r.infinity = zs.at_infinity;
    } catch (const DegeneracyError&) {
      r.status = "degenerate";
    } catch (const SolverFailure&) {
      r.status = "uncertified";
    }
    return r;
  });
  Csv csv("trial,status,torus_count,chart_count,at_infinity");
  std::size_t exact = 0, uncertified = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto& r = results[t];
    csv.row(t, r.status, r.torus, r.chart, r.infinity);
    if (r.status == "ok" && r.torus == expected) ++exact;
    if (r.status == "uncertified") ++uncertified;
  }
  ctx.write("trials.csv", csv.str());
  Outcome out;
  out.failures = json{{"trials", trials}, {"failures", uncertified}};
  out.notes["expected_torus_count"] = expected;
  if (double(uncertified) > 0.01 * double(trials))
    throw SolverFailure(std::to_string(uncertified) + " of " + std::to_string(trials) +
                        " systems failed certification (budget 1%)");
  out.has_verdict = true;
  const double frac = double(exact) / double(trials);
  out.checks.push_back({"fraction of trials with exactly m! Vol(P) = " + std::to_string(expected) +
                            " torus zeros at least the threshold",
                        frac >= threshold, "fraction " + format_double(frac)});
  return out;
}

Outcome run_kernel_scaling(Context& ctx) {
  const auto& p = ctx.params;
  const int m = p["m"].get<int>();
  const auto u = as_point(p["u"]), v = as_point(p["v"]);
  const auto degrees = p["degrees"].get<std::vector<int>>();
  const Complex limit = heisenberg_kernel(u, v);
  Csv csv("N,scaled_re,scaled_im,heisenberg_re,heisenberg_im,error");
  std::vector<double> errors;
  for (int N : degrees) {
    const Complex k = scaled_kernel(m, N, u, v);
    errors.push_back(scaled_kernel_error(m, N, u, v));
    csv.row(N, k.real(), k.imag(), limit.real(), limit.imag(), errors.back());
  }
  ctx.write("kernel_scaling.csv", csv.str());
  Outcome out;
  out.has_verdict = true;
  // Least-squares decay exponent of log error against log N.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(degrees.size());
  for (std::size_t k = 0; k < degrees.size(); ++k) {
    const double x = std::log(double(degrees[k])), y = std::log(errors[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double r0 = p["rate_band"][0].get<double>(), r1 = p["rate_band"][1].get<double>();
  out.checks.push_back({"decay exponent of the error inside the rate band", rate >= r0 && rate <= r1,
                        "exponent " + format_double(rate)});
  const auto i100 = std::find(degrees.begin(), degrees.end(), 100);
  const auto i400 = std::find(degrees.begin(), degrees.end(), 400);
  if (i100 != degrees.end() && i400 != degrees.end()) {
    const double ratio = errors[i100 - degrees.begin()] / errors[i400 - degrees.begin()];
    const double q0 = p["ratio_band"][0].get<double>(), q1 = p["ratio_band"][1].get<double>();
    out.checks.push_back({"error(100)/error(400) inside the ratio band", ratio >= q0 && ratio <= q1,
                          "ratio " + format_double(ratio)});
  }
  return out;
}

Outcome run_norms(Context& ctx) {
  const auto& p = ctx.params;
  GrowthOptions g;
  g.degrees = p["degrees"].get<std::vector<int>>();
  g.trials = p["trials"].get<std::size_t>();
  g.p = as_number(p["p"]);
  g.master_seed = ctx.config.master_seed;
  g.workers = ctx.workers;
  const auto series = growth_series(g);
  Csv csv("N,p,mean,stderr,trials");
  const std::string ptext = std::isinf(g.p) ? "inf" : format_double(g.p);
  std::vector<double> scaled;
  for (std::size_t k = 0; k < series.degrees.size(); ++k) {
    csv.row(series.degrees[k], ptext, series.means[k], series.stderrs[k], series.trials);
    const double s = std::isinf(g.p) ? series.means[k] / std::sqrt(std::log(double(series.degrees[k])))
                                     : series.means[k];
    scaled.push_back(s);
  }
  ctx.write("norms.csv", csv.str());
  Outcome out;
  out.has_verdict = true;
  const double bound = p.contains("variation_bound") && !p["variation_bound"].is_null()
                           ? p["variation_bound"].get<double>()
                           : (std::isinf(g.p) ? 0.2 : 0.1);
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  const double variation = (*hi - *lo) / *lo;
  out.checks.push_back({std::string(std::isinf(g.p) ? "mean sup norm / sqrt(log N)" : "mean norm") +
                            " varies less than the bound across degrees",
                        variation < bound, "variation " + format_double(variation)});
  return out;
}

Outcome run_poisson(Context& ctx) {
  const auto& p = ctx.params;
  const double mean = p["mean_points"].get<double>();
  PairCorrelationOptions opts;
  opts.rmax = p["rmax"].get<double>();
  opts.bins = p["bins"].get<std::size_t>();
  opts.scale = p.contains("scale") && !p["scale"].is_null() ? p["scale"].get<double>() : std::sqrt(mean);
  const auto curve = pair_correlation_poisson(mean, opts, p["trials"].get<std::size_t>(), ctx.config.master_seed,
                                              ctx.workers);
  ctx.write("pair_correlation.csv", curve_csv(curve));
  Outcome out;
  out.has_verdict = true;
  std::size_t bad = 0;
  double worst = 0.0;
  for (std::size_t b = 0; b < curve.bins(); ++b) {
    const double z = curve.std_errors[b] > 0 ? std::abs(curve.kappa_hat[b] - 1.0) / curve.std_errors[b] : INFINITY;
    worst = std::max(worst, z);
    if (!(z <= 3.0)) ++bad;
  }
  out.checks.push_back({"every bin within 3 standard errors of 1", bad == 0,
                        std::to_string(bad) + " bins outside, max |z| " + format_double(worst)});
  return out;
}

Outcome run_root_gap(Context& ctx) {
  const auto& p = ctx.params;
  const auto degrees = p["degrees"].get<std::vector<int>>();
  Csv csv("N,mean_min_gap,stderr,trials,failures");
  Outcome out;
  for (int N : degrees) {
    const auto spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::full(1, N));
    TrialRunOptions run;
    run.trials = p["trials"].get<std::size_t>();
    run.master_seed = splitmix64(ctx.config.master_seed ^ static_cast<std::uint64_t>(N));
    run.workers = ctx.workers;
    FailureAccount fails;
    const auto g = mean_minimal_gap(spec, run, &fails);
    out.failures[std::to_string(N)] = failure_json(fails);
    csv.row(N, g.value, g.std_error, run.trials, fails.failures);
  }
  ctx.write("root_gap.csv", csv.str());
  return out;
}

using Runner = std::function<Outcome(Context&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r = {
      {"pair-corr", run_pair_corr},     {"kappa-analytic", run_kappa},         {"density-map", run_density},
      {"polytope-density", run_polytope}, {"bk-count", run_bk},              {"kernel-scaling", run_kernel_scaling},
      {"norms-growth", run_norms},      {"poisson-selftest", run_poisson},     {"root-gap", run_root_gap},
  };
  return r;
}

}  // namespace

RunResult run(const ExperimentConfig& config, int workers) {
  RunResult result;
  const auto problems = validate(config);
  if (!problems.empty()) {
    result.exit_code = kExitConfigError;
    for (const auto& p : problems) result.message += p + "\n";
    return result;
  }
  std::filesystem::create_directories(config.output_dir);
  Context ctx{config, resolved_parameters(config), std::max(1, workers), {}};
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  std::string error;
  try {
    outcome = runners().at(config.experiment)(ctx);
  } catch (const SolverFailure& e) {
    result.exit_code = kExitSolverBudget;
    error = e.what();
  } catch (const ConfigError& e) {
    result.exit_code = kExitConfigError;
    error = e.what();
  } catch (const std::invalid_argument& e) {
    result.exit_code = kExitConfigError;
    error = e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (result.exit_code == kExitOk && outcome.has_verdict) {
    bool pass = true;
    std::string text;
    for (const auto& c : outcome.checks) {
      pass = pass && c.pass;
      text += std::string(c.pass ? "PASS" : "FAIL") + "  " + c.name + "  (" + c.detail + ")\n";
    }
    result.verdict = pass ? "PASS" : "FAIL";
    ctx.write("verdict.txt", result.verdict + "\n" + text);
    if (!pass) result.exit_code = kExitAcceptanceFail;
  }

  json manifest;
  manifest["config"] = config.to_json();
  manifest["config"]["parameters"] = ctx.params;
  manifest["software"] = {{"name", "zerostat"}, {"version", version()}};
  manifest["master_seed"] = config.master_seed;
  manifest["wall_time_seconds"] = seconds;
  manifest["workers"] = ctx.workers;
  for (const auto& info : list_experiments())
    if (info.name == config.experiment) manifest["zero_domain"] = info.zero_domain;
  manifest["failures"] = outcome.failures;
  if (!outcome.notes.empty()) manifest["notes"] = outcome.notes;
  manifest["exit_code"] = result.exit_code;
  if (!result.verdict.empty()) manifest["verdict"] = result.verdict;
  if (!error.empty()) manifest["error"] = error;
  json files = json::array();
  for (const auto& f : ctx.files) {
    const std::string data = read_file(config.output_dir / f);
    files.push_back({{"name", f.generic_string()}, {"bytes", data.size()}, {"sha256", sha256_hex(data)}});
  }
  manifest["files"] = files;
  write_file(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  result.files = ctx.files;
  result.files.push_back("manifest.json");
  result.message = error.empty() ? (result.verdict.empty() ? "done" : result.verdict) : error;
  return result;
}

}  // namespace zerostat
