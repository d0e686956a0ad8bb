#include "zerostat/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "zerostat/errors.hpp"

namespace zerostat {

MonomialIndex::MonomialIndex(std::initializer_list<int> exps) : m(static_cast<int>(exps.size())) {
  if (m < 1 || m > kMaxDim) throw InvalidIndexError("monomial dimension must be 1..3");
  std::copy(exps.begin(), exps.end(), alpha.begin());
}

std::string MonomialIndex::to_string() const {
  std::ostringstream os;
  os << '(';
  for (int j = 0; j < m; ++j) os << (j ? "," : "") << alpha[j];
  os << ')';
  return os.str();
}

std::strong_ordering graded_lex(const MonomialIndex& a, const MonomialIndex& b) {
  if (auto c = a.degree() <=> b.degree(); c != 0) return c;
  for (int j = 0; j < std::max(a.m, b.m); ++j)
    if (auto c = a.alpha[j] <=> b.alpha[j]; c != 0) return c;
  return std::strong_ordering::equal;
}

double log_monomial_norm_sq(int m, int N, const MonomialIndex& alpha) {
  const int d = alpha.degree();
  if (d > N) throw InvalidIndexError("monomial " + alpha.to_string() + " exceeds degree " + std::to_string(N));
  for (int j = 0; j < alpha.m; ++j)
    if (alpha[j] < 0) throw InvalidIndexError("negative exponent in " + alpha.to_string());
  // Haar probability on S^{2m+1}: E|Z^beta|^2 = beta! m! / (|beta| + m)!, beta = (N - |alpha|, alpha).
  double s = std::lgamma(N - d + 1.0) + std::lgamma(m + 1.0) - std::lgamma(N + m + 1.0);
  for (int j = 0; j < m; ++j) s += std::lgamma(alpha[j] + 1.0);
  return s;
}

double monomial_norm(int m, int N, const MonomialIndex& alpha) {
  return std::exp(0.5 * log_monomial_norm_sq(m, N, alpha));
}

namespace {

void append_degree(int m, int d, std::vector<MonomialIndex>& out) {
  MonomialIndex idx(m);
  if (m == 1) {
    idx[0] = d;
    out.push_back(idx);
  } else if (m == 2) {
    for (int a = 0; a <= d; ++a) {
      idx[0] = a;
      idx[1] = d - a;
      out.push_back(idx);
    }
  } else {
    for (int a = 0; a <= d; ++a)
      for (int b = 0; b <= d - a; ++b) {
        idx[0] = a;
        idx[1] = b;
        idx[2] = d - a - b;
        out.push_back(idx);
      }
  }
}

}  // namespace

EnsembleSpec::EnsembleSpec(int m, int N, std::optional<LatticePolytope> constraint)
    : m_(m), N_(N), constraint_(std::move(constraint)) {
  if (m < 1 || m > kMaxDim) throw std::invalid_argument("dimension m must be 1, 2 or 3");
  if (N < 0) throw std::invalid_argument("degree must be non-negative");
  if (constraint_ && constraint_->dim() != m)
    throw PolytopeError("constraint dimension differs from m");
  for (int d = 0; d <= N; ++d) append_degree(m, d, basis_);
  if (constraint_) {
    std::erase_if(basis_, [&](const MonomialIndex& a) { return !constraint_->contains(a); });
    if (basis_.empty())
      throw EmptyBasisError("constraint " + constraint_->to_literal() +
                            " has no lattice point of degree <= " + std::to_string(N));
  }
  norms_.reserve(basis_.size());
  log_norms_sq_.reserve(basis_.size());
  for (const auto& a : basis_) {
    const double l = log_monomial_norm_sq(m, N, a);
    log_norms_sq_.push_back(l);
    norms_.push_back(std::exp(0.5 * l));
  }
}

EnsembleSpec EnsembleSpec::full(int m, int N) { return EnsembleSpec(m, N, std::nullopt); }

EnsembleSpec EnsembleSpec::constrained(int m, int N, LatticePolytope constraint) {
  return EnsembleSpec(m, N, std::move(constraint));
}

std::optional<std::size_t> EnsembleSpec::find(const MonomialIndex& alpha) const {
  auto it = std::lower_bound(basis_.begin(), basis_.end(), alpha, GradedLexLess{});
  if (it == basis_.end() || !(*it == alpha)) return std::nullopt;
  return static_cast<std::size_t>(it - basis_.begin());
}

std::vector<MonomialIndex> basis_indices(const EnsembleSpec& spec) { return spec.basis(); }

std::vector<Complex> SectionSample::univariate_coefficients() const {
  if (spec->dim() != 1) throw std::invalid_argument("univariate coefficients need m = 1");
  std::vector<Complex> a(spec->degree() + 1, Complex(0.0));
  for (std::size_t i = 0; i < coeffs.size(); ++i) a[spec->basis()[i][0]] = chart_coefficient(i);
  return a;
}

SectionSample sample_section(const SpecPtr& spec, Rng& rng) {
  SectionSample s{spec, std::vector<Complex>(spec->size())};
  for (auto& c : s.coeffs) c = standard_complex_gaussian(rng);
  return s;
}

SectionSample operator+(const SectionSample& a, const SectionSample& b) {
  if (a.spec != b.spec && (a.spec->basis() != b.spec->basis() || a.spec->degree() != b.spec->degree()))
    throw std::invalid_argument("adding samples from different ensembles");
  SectionSample s{a.spec, a.coeffs};
  for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] += b.coeffs[i];
  return s;
}

Complex ScaledValue::value() const { return mantissa * std::exp(log_scale); }

namespace {

using PowerTable = std::vector<std::vector<Complex>>;

PowerTable powers(std::span<const Complex> z, int N) {
  PowerTable t(z.size(), std::vector<Complex>(N + 1));
  for (std::size_t j = 0; j < z.size(); ++j) {
    t[j][0] = 1.0;
    for (int k = 1; k <= N; ++k) t[j][k] = t[j][k - 1] * z[j];
  }
  return t;
}

void check_point(const SectionSample& s, std::span<const Complex> z) {
  if (static_cast<int>(z.size()) != s.spec->dim())
    throw std::invalid_argument("chart point dimension differs from the ensemble");
}

Complex direct_sum(const SectionSample& s, std::span<const Complex> z) {
  const auto& spec = *s.spec;
  const auto pw = powers(z, spec.degree());
  Complex acc = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    Complex term = s.chart_coefficient(i);
    for (int j = 0; j < spec.dim(); ++j) term *= pw[j][spec.basis()[i][j]];
    acc += term;
  }
  return acc;
}

}  // namespace

ScaledValue evaluate_scaled(const SectionSample& s, std::span<const Complex> z) {
  check_point(s, z);
  double n2 = 0.0;
  for (const auto& zj : z) n2 += std::norm(zj);
  if (n2 <= 1.0) return {direct_sum(s, z), 0.0};
  const auto& spec = *s.spec;
  const int N = spec.degree();
  const double z0 = 1.0 / std::sqrt(1.0 + n2);
  std::vector<Complex> Z(z.begin(), z.end());
  for (auto& c : Z) c *= z0;
  const auto pw = powers(Z, N);
  std::vector<double> p0(N + 1);
  p0[0] = 1.0;
  for (int k = 1; k <= N; ++k) p0[k] = p0[k - 1] * z0;
  Complex acc = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& a = spec.basis()[i];
    Complex term = s.chart_coefficient(i) * p0[N - a.degree()];
    for (int j = 0; j < spec.dim(); ++j) term *= pw[j][a[j]];
    acc += term;
  }
  return {acc, 0.5 * N * std::log1p(n2)};
}

Complex evaluate_section(const SectionSample& s, std::span<const Complex> z) {
  return evaluate_scaled(s, z).value();
}

double hermitian_magnitude(const SectionSample& s, std::span<const Complex> z) {
  const auto v = evaluate_scaled(s, z);
  double n2 = 0.0;
  for (const auto& zj : z) n2 += std::norm(zj);
  return std::abs(v.mantissa) * std::exp(v.log_scale - 0.5 * s.spec->degree() * std::log1p(n2));
}

std::vector<Complex> evaluate_gradient(const SectionSample& s, std::span<const Complex> z) {
  check_point(s, z);
  const auto& spec = *s.spec;
  const auto pw = powers(z, spec.degree());
  std::vector<Complex> g(spec.dim(), Complex(0.0));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& a = spec.basis()[i];
    const Complex c = s.chart_coefficient(i);
    for (int j = 0; j < spec.dim(); ++j) {
      if (a[j] == 0) continue;
      Complex term = c * double(a[j]);
      for (int l = 0; l < spec.dim(); ++l) term *= pw[l][l == j ? a[l] - 1 : a[l]];
      g[j] += term;
    }
  }
  return g;
}

std::string to_json(const SectionSample& s) {
  nlohmann::json j;
  j["m"] = s.spec->dim();
  j["N"] = s.spec->degree();
  if (s.spec->constraint()) j["constraint"] = nlohmann::json::parse(s.spec->constraint()->to_literal());
  auto& arr = j["coeffs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
    const auto& a = s.spec->basis()[i];
    std::vector<int> alpha(a.alpha.begin(), a.alpha.begin() + a.m);
    arr.push_back({alpha, s.coeffs[i].real(), s.coeffs[i].imag()});
  }
  return j.dump();
}

SectionSample section_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed section JSON: ") + e.what());
  }
  try {
    const int m = j.at("m").get<int>();
    const int N = j.at("N").get<int>();
    std::shared_ptr<const EnsembleSpec> spec;
    if (j.contains("constraint") && !j["constraint"].is_null()) {
      const auto& c = j["constraint"];
      auto P = LatticePolytope::parse(c.is_string() ? c.get<std::string>() : c.dump());
      spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::constrained(m, N, std::move(P)));
    } else {
      spec = std::make_shared<const EnsembleSpec>(EnsembleSpec::full(m, N));
    }
    SectionSample s{spec, std::vector<Complex>(spec->size())};
    std::vector<bool> seen(spec->size(), false);
    for (const auto& entry : j.at("coeffs")) {
      const auto alpha = entry.at(0).get<std::vector<int>>();
      if (static_cast<int>(alpha.size()) != m) throw InvalidIndexError("coefficient key has wrong dimension");
      MonomialIndex idx(m);
      for (int k = 0; k < m; ++k) idx[k] = alpha[k];
      const auto pos = spec->find(idx);
      if (!pos) throw InvalidIndexError("coefficient " + idx.to_string() + " is not in the basis");
      if (seen[*pos]) throw InvalidIndexError("duplicate coefficient " + idx.to_string());
      seen[*pos] = true;
      s.coeffs[*pos] = {entry.at(1).get<double>(), entry.at(2).get<double>()};
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw InvalidIndexError("coefficient keys do not cover the basis");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed section JSON: ") + e.what());
  }
}

}  // namespace zerostat
