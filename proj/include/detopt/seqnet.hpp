#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "detopt/crn.hpp"
#include "detopt/engine.hpp"

namespace detopt::seq {

/// Parameter bundle for the closed forms of the fully open sequestration
/// network on n species with sequestration multiplicity m.
struct SeqParams {
  int m = 2;
  int n = 3;
  double lambda = 1.0;
  double eps = 0.1;
  double delta1 = 1.0;

  static SeqParams checked(int m, int n, double lambda, double eps, double delta1) {
    if (m < 2) throw std::invalid_argument("SeqParams: m must be at least 2");
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("SeqParams: n must be odd and at least 3");
    if (!(lambda > 0.0) || !(eps > 0.0)) throw std::invalid_argument("SeqParams: lambda and eps must be positive");
    if (delta1 == 0.0) throw std::invalid_argument("SeqParams: delta1 must be nonzero");
    return SeqParams{m, n, lambda, eps, delta1};
  }
};

/// The parameter values under which the closed forms were validated:
/// eps = 0.1 for n = 3, eps = 0.001 for larger n (lambda = 1 throughout).
inline double default_eps_for(int n) { return n == 3 ? 0.1 : 0.001; }

/// Principal minors of the tridiagonal part of the singular T matrix, from
/// the m-independent three-term recurrence
///   minor_{i+2} = (2 lambda + eps) minor_{i+1} - lambda^2 minor_i
/// with minor_0 = 1 and minor_1 = 2 lambda + eps. Valid for i <= n-2; the
/// (n-1)st minor needs the m-dependent row (see principal_minors).
inline std::vector<double> principal_minor_recurrence(double lambda, double eps, int up_to) {
  if (up_to < 0) throw std::invalid_argument("principal_minor_recurrence: negative index");
  std::vector<double> t(static_cast<size_t>(up_to) + 1);
  t[0] = 1.0;
  if (up_to >= 1) t[1] = 2.0 * lambda + eps;
  for (int i = 2; i <= up_to; ++i) {
    t[i] = (2.0 * lambda + eps) * t[i - 1] - lambda * lambda * t[i - 2];
  }
  return t;
}

/// Closed form of the same minors via the characteristic roots
/// (c2 +- c1)/2 with c1 = sqrt(eps (eps + 4 lambda)), c2 = eps + 2 lambda.
/// Requires eps > 0 (c1 = 0 makes the form degenerate; use the recurrence).
inline double principal_minor_closed_form(double lambda, double eps, int i) {
  if (i < 0) throw std::invalid_argument("principal_minor_closed_form: negative index");
  if (!(eps > 0.0)) throw std::invalid_argument("principal_minor_closed_form: requires eps > 0");
  const double c1 = std::sqrt(eps) * std::sqrt(eps + 4.0 * lambda);
  const double c2 = eps + 2.0 * lambda;
  const double diff_pow = detail::ipow(c2 - c1, i);
  const double sum_pow = detail::ipow(c1 + c2, i);
  return (-c2 * diff_pow + c1 * diff_pow + c2 * sum_pow + c1 * sum_pow) / (detail::ipow(2.0, i + 1) * c1);
}

struct PrincipalMinors {
  std::vector<double> values;  // minor_0 .. minor_{n-1}
  SeqParams params;
};

/// All n principal minors: the recurrence up to n-2, then the m-dependent
/// last row, minor_{n-1} = (lambda (m+2) + eps) minor_{n-2} - lambda^2 minor_{n-3}.
inline PrincipalMinors principal_minors(const SeqParams& p) {
  std::vector<double> t = principal_minor_recurrence(p.lambda, p.eps, p.n - 2);
  t.push_back((p.lambda * (p.m + 2) + p.eps) * t[p.n - 2] - p.lambda * p.lambda * t[p.n - 3]);
  return PrincipalMinors{std::move(t), p};
}

/// Eta weights of the singular T matrix, last entry unchecked: lambda on the
/// internal reactions except (m+1) lambda on the (n-1)st, eps on the first
/// n-1 outflows, and the closed-form value on the last outflow that makes
/// det(T) = 0. The last entry can be nonpositive for unsuitable parameters.
inline Eigen::VectorXd eta_zero_unchecked(const SeqParams& p) {
  const PrincipalMinors minors = principal_minors(p);
  Eigen::VectorXd w(2 * p.n);
  for (int i = 0; i < p.n; ++i) w(i) = p.lambda;
  w(p.n - 2) = (p.m + 1) * p.lambda;
  for (int i = p.n; i < 2 * p.n - 1; ++i) w(i) = p.eps;
  const double numerator =
      (p.m + 1) * (p.m * detail::ipow(p.lambda, p.n) + p.lambda * p.lambda * (p.m + 1) * minors.values[p.n - 2]);
  const double denominator = minors.values[p.n - 1];
  w(2 * p.n - 1) = numerator / denominator - p.lambda * (p.m + 1);
  return w;
}

/// Checked version: throws NonPositiveEtaLast when the last weight is not
/// strictly positive. Positivity is known for n in {3, 5, 7, 9, 11} at the
/// default parameters and is a runtime outcome, not an assumption, beyond.
inline EtaVector eta_zero_closed_form(const SeqParams& p) {
  Eigen::VectorXd w = eta_zero_unchecked(p);
  if (!(w(2 * p.n - 1) > 0.0)) {
    throw MethodError(MethodErrorKind::NonPositiveEtaLast,
                      "closed-form eta has nonpositive last entry " + std::to_string(w(2 * p.n - 1)) +
                          " (m=" + std::to_string(p.m) + ", n=" + std::to_string(p.n) +
                          ", eps=" + std::to_string(p.eps) + ")");
  }
  return EtaVector(std::move(w));
}

/// Bottom-row expansion of det(T) with the last outflow weight eta_last:
///   (-1)^n m (m+1) lambda^n - lambda^2 (m+1)^2 minor_{n-2}
///   + (lambda (m+1) + eta_last) minor_{n-1}.
inline double det_t_eta_zero_expansion(const SeqParams& p, double eta_last) {
  const PrincipalMinors minors = principal_minors(p);
  const double sign = (p.n % 2 == 0) ? 1.0 : -1.0;
  return sign * p.m * (p.m + 1) * detail::ipow(p.lambda, p.n) -
         p.lambda * p.lambda * (p.m + 1) * (p.m + 1) * minors.values[p.n - 2] +
         (p.lambda * (p.m + 1) + eta_last) * minors.values[p.n - 1];
}

/// Nullvector of the singular T matrix by the row recurrences, anchored at
/// delta_1 = params.delta1 (with delta_0 = 0):
///   delta_k = -((2 lambda + eps)/lambda) delta_{k-1} - delta_{k-2}
/// for 2 <= k <= n-1, and the m-dependent last coordinate
///   delta_n = -((lambda (m+2) + eps)/(lambda (m+1))) delta_{n-1} - delta_{n-2}/(m+1).
inline Eigen::VectorXd delta_recurrence(const SeqParams& p) {
  Eigen::VectorXd d(p.n);
  d(0) = p.delta1;
  const double ratio = (2.0 * p.lambda + p.eps) / p.lambda;
  if (p.n >= 3) d(1) = -ratio * d(0);
  for (int k = 3; k <= p.n - 1; ++k) {
    d(k - 1) = -ratio * d(k - 2) - d(k - 3);
  }
  d(p.n - 1) = -((p.lambda * (p.m + 2) + p.eps) / (p.lambda * (p.m + 1))) * d(p.n - 2) - d(p.n - 3) / (p.m + 1);
  return d;
}

/// Closed form of the first n-1 nullvector coordinates (1-based k).
inline double delta_closed_form(const SeqParams& p, int k) {
  if (k < 1 || k > p.n - 1) {
    throw std::invalid_argument("delta_closed_form: k must lie in [1, n-1]");
  }
  const double root = std::sqrt(4.0 * p.lambda * p.eps + p.eps * p.eps);
  const double c2 = 2.0 * p.lambda + p.eps;
  const double plus_pow = detail::ipow(root - c2, k);
  const double minus_pow = detail::ipow(-root - c2, k);
  return p.delta1 * p.lambda * (plus_pow - minus_pow) / (detail::ipow(2.0 * p.lambda, k) * root);
}

/// The nine explicit rate constants for n = 3 at lambda = 1, eps = 0.1,
/// delta1 = 1; only r2, r6, r8, r9 depend on m.
inline RateAssignment rates_n3(int m) {
  if (m < 2) throw std::invalid_argument("rates_n3: m must be at least 2");
  const double x3_exponent = (2.1 * m + 3.41) / (m + 1);
  Eigen::VectorXd r(9);
  r(0) = -1.1 / std::expm1(-1.1);
  r(1) = 1.31 / std::expm1(1.31 / (m + 1));
  r(2) = 1.0 / std::expm1(1.0);
  r(3) = 0.1 / std::expm1(1.0);
  r(4) = -0.21 / std::expm1(-2.1);
  r(5) = (m - 1.31) / std::expm1(x3_exponent);
  r(6) = r(0) + r(2) + r(3);
  r(7) = r(0) + r(1) + r(4);
  r(8) = r(1) + r(5) - m * r(2);
  return RateAssignment(std::move(r));
}

/// The second steady state for n = 3: (e, e^{-2.1}, e^{(2.1m+3.41)/(m+1)}).
inline Eigen::VectorXd x_sharp_n3(int m) {
  Eigen::VectorXd x(3);
  x(0) = std::exp(1.0);
  x(1) = std::exp(-2.1);
  x(2) = std::exp((2.1 * m + 3.41) / (m + 1));
  return x;
}

/// Jacobian determinants at the two steady states for n = 3, via the
/// rearranged explicit polynomials in the rates (not via elimination).
inline std::pair<double, double> jac_dets_n3(int m) {
  const Eigen::VectorXd r = rates_n3(m).values;
  const double r1 = r(0), r2 = r(1), r3 = r(2), r4 = r(3), r5 = r(4), r6 = r(5);
  const double d1 = r2 * r1 * r3 * m - (r2 + r6) * (r1 * r3 + r1 * r4 + r1 * r5 + r3 * r5 + r4 * r5) -
                    r2 * r6 * (r1 + r3 + r4);

  const Eigen::VectorXd xs = x_sharp_n3(m);
  const double x1 = xs(0), x2 = xs(1), x3 = xs(2);
  const double d2 = r2 * x2 * ((r1 * x2 + r3 + r4) * (r2 * x3) + r1 * x1 * m * r3) -
                    (r2 * x2 + r6) * (r1 * x2 + r3 + r4) * (r1 * x1 + r2 * x3 + r5) +
                    (r2 * x2 + r6) * (r1 * x1 * r1 * x2);
  return {d1, d2};
}

// -- Reference values reproduced by the table command ------------------------

struct Table1Row {
  int m = 0;
  double computed_d1 = 0.0;
  double computed_d2 = 0.0;
  std::optional<double> printed_d1;
  std::optional<double> printed_d2;
  bool d1_ok = true;
  bool d2_ok = true;
};

struct Table1Result {
  std::vector<Table1Row> rows;
  int comparisons = 0;
  bool all_pass = true;
};

/// Reference determinant table: D1 for m = 2..4 and D2 for m = 2..19, each
/// compared at +-0.005 * max(1, |reference|).
inline Table1Result reproduce_table1() {
  static const double kD1[] = {0.336, 2.784, 6.525};
  static const double kD2[] = {-1.063, -3.811, -7.85,  -13.19, -19.8,  -27.71, -36.89, -47.36, -59.11,
                               -72.14, -86.4,  -102.0, -118.9, -137.1, -156.5, -177.2, -199.2, -222.5};
  Table1Result result;
  for (int m = 2; m <= 19; ++m) {
    Table1Row row;
    row.m = m;
    const auto [d1, d2] = jac_dets_n3(m);
    row.computed_d1 = d1;
    row.computed_d2 = d2;
    if (m <= 4) {
      row.printed_d1 = kD1[m - 2];
      row.d1_ok = std::abs(d1 - *row.printed_d1) <= 0.005 * std::max(1.0, std::abs(*row.printed_d1));
      ++result.comparisons;
    }
    row.printed_d2 = kD2[m - 2];
    row.d2_ok = std::abs(d2 - *row.printed_d2) <= 0.005 * std::max(1.0, std::abs(*row.printed_d2));
    ++result.comparisons;
    result.all_pass = result.all_pass && row.d1_ok && row.d2_ok;
    result.rows.push_back(row);
  }
  return result;
}

// -- Certificates from the closed forms ---------------------------------------

/// Builds the certificate for the parameters entirely from the closed forms:
/// eta from eta_zero_closed_form, delta from the recurrence, rates and
/// inflows assembled by the engine.
inline Certificate closed_form_certificate(const SeqParams& p, const CertificateOptions& opts = {}) {
  const Network net = build_sequestration(p.m, p.n);
  return build_certificate(net, eta_zero_closed_form(p), delta_recurrence(p), 1.0, opts);
}

// -- Parameter sweeps ----------------------------------------------------------

struct DeterminantPair {
  double det_star = 0.0;
  double det_sharp = 0.0;
  bool rates_positive = false;  // whether the rates still form a valid certificate
};

/// The full rate vector (internal, outflow, inflow) induced by the closed
/// forms at the given parameters, tolerating a nonpositive last eta weight:
/// past the positivity region the rates are still a well-defined function of
/// the parameters, just no longer a certificate.
inline Eigen::VectorXd rates_unchecked(const SeqParams& p) {
  const Network net = build_sequestration(p.m, p.n);
  const Eigen::VectorXd w = eta_zero_unchecked(p);
  const Eigen::VectorXd delta = delta_recurrence(p);
  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(net.reaction_count());
  Eigen::VectorXd inflow = Eigen::VectorXd::Zero(net.species_count);
  for (size_t j = 0; j < g.indices.size(); ++j) {
    const double r = rate_factor(g.reactants[j].dot(delta)) * w(static_cast<Eigen::Index>(j));
    rates(g.indices[j]) = r;
    inflow += r * g.changes[j];
  }
  for (int i = 0; i < net.species_count; ++i) rates(2 * p.n + i) = inflow(i);
  return rates;
}

/// Evaluates det(df(x_star)) and det(df(x_sharp_ref)) under the rates induced
/// by the parameters, where x_sharp_ref is a fixed evaluation point. The
/// sweep holds the second state at its reference-parameter value while the
/// rates vary; this is the parametrization under which the reference
/// degeneracy locations were reported.
inline DeterminantPair determinant_pair(const SeqParams& p, const Eigen::VectorXd& x_sharp_ref) {
  const Network net = build_sequestration(p.m, p.n);
  const Eigen::VectorXd rates = rates_unchecked(p);
  DeterminantPair pair;
  pair.rates_positive = rates.minCoeff() > 0.0;
  pair.det_star = jacobian_determinant(net, rates, Eigen::VectorXd::Ones(p.n));
  pair.det_sharp = jacobian_determinant(net, rates, x_sharp_ref);
  return pair;
}

struct SweepSample {
  double eps = 0.0;
  double det_star = 0.0;
  double det_sharp = 0.0;
  bool rates_positive = false;
};

struct SignBracket {
  double lo = 0.0;
  double hi = 0.0;
  double value_lo = 0.0;
  double value_hi = 0.0;
};

struct SweepFailure {
  double eps = 0.0;
  std::string reason;
};

struct SweepResult {
  std::vector<SweepSample> samples;
  std::vector<SignBracket> star_brackets;
  std::vector<SignBracket> sharp_brackets;
  std::vector<SweepFailure> failures;
};

namespace detail_sweep {

template <typename F>
inline SignBracket bisect_sign_change(F&& f, double lo, double hi, double f_lo, double f_hi, double width) {
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (f_mid == 0.0) {
      lo = hi = mid;
      f_lo = f_hi = 0.0;
      break;
    }
    if ((f_lo < 0.0) == (f_mid < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  return SignBracket{lo, hi, f_lo, f_hi};
}

}  // namespace detail_sweep

/// Sweeps eps over a uniform grid, recording det(df(x*)) and det(df(x#))
/// under the eps-dependent rates with x# held at its value for the reference
/// eps of the given n, then bisects every sign change down to the requested
/// bracket width (default 1e-6). Grid points where the evaluation fails are
/// recorded and skipped; an empty bracket list is a valid outcome.
inline SweepResult epsilon_sweep(int m, int n, double lambda, double eps_lo, double eps_hi, int grid_steps,
                                 double bracket_width = 1e-6) {
  if (!(eps_lo > 0.0 && eps_hi > eps_lo)) throw std::invalid_argument("epsilon_sweep: bad eps range");
  if (grid_steps < 2) throw std::invalid_argument("epsilon_sweep: need at least two grid points");

  const Eigen::VectorXd x_sharp_ref =
      delta_recurrence(SeqParams::checked(m, n, lambda, default_eps_for(n), 1.0)).array().exp();
  auto eval = [&](double eps) {
    return determinant_pair(SeqParams::checked(m, n, lambda, eps, 1.0), x_sharp_ref);
  };

  SweepResult result;
  for (int i = 0; i < grid_steps; ++i) {
    const double eps = eps_lo + (eps_hi - eps_lo) * i / (grid_steps - 1);
    try {
      const DeterminantPair pair = eval(eps);
      if (!std::isfinite(pair.det_star) || !std::isfinite(pair.det_sharp)) {
        throw std::runtime_error("determinant evaluation is not finite");
      }
      result.samples.push_back(SweepSample{eps, pair.det_star, pair.det_sharp, pair.rates_positive});
    } catch (const std::exception& e) {
      result.failures.push_back(SweepFailure{eps, e.what()});
    }
  }

  auto scan = [&](bool star, std::vector<SignBracket>& out) {
    auto f = [&](double eps) {
      const DeterminantPair pair = eval(eps);
      return star ? pair.det_star : pair.det_sharp;
    };
    for (size_t i = 1; i < result.samples.size(); ++i) {
      const SweepSample& a = result.samples[i - 1];
      const SweepSample& b = result.samples[i];
      const double fa = star ? a.det_star : a.det_sharp;
      const double fb = star ? b.det_star : b.det_sharp;
      if (fa == 0.0 || fa * fb >= 0.0) continue;
      out.push_back(detail_sweep::bisect_sign_change(f, a.eps, b.eps, fa, fb, bracket_width));
    }
  };
  scan(true, result.star_brackets);
  scan(false, result.sharp_brackets);
  return result;
}

// -- Scan over small m and n ---------------------------------------------------

struct ScanCell {
  int m = 0;
  int n = 0;
  bool ok = false;
  double det_star = 0.0;
  double det_sharp = 0.0;
  bool both_nonzero = false;
  double residual_star = 0.0;
  double residual_sharp = 0.0;
  std::string error;
};

/// Builds the closed-form certificate for every (m, n) cell and records both
/// Jacobian determinants and the nondegeneracy verdicts. Cell failures are
/// recorded and the scan continues. When eps is not given, each n uses its
/// validated default (0.1 for n = 3, 0.001 otherwise).
inline std::vector<ScanCell> small_mn_scan(int m_lo, int m_hi, const std::vector<int>& n_set, double lambda = 1.0,
                                           std::optional<double> eps = std::nullopt, double delta1 = 1.0) {
  std::vector<ScanCell> cells;
  for (int n : n_set) {
    for (int m = m_lo; m <= m_hi; ++m) {
      ScanCell cell;
      cell.m = m;
      cell.n = n;
      try {
        const SeqParams params = SeqParams::checked(m, n, lambda, eps.value_or(default_eps_for(n)), delta1);
        const Certificate cert = closed_form_certificate(params);
        const VerificationReport report = verify_certificate(cert);
        cell.ok = report.steady_states_ok();
        cell.det_star = report.det_star;
        cell.det_sharp = report.det_sharp;
        cell.both_nonzero = report.nondegenerate_star && report.nondegenerate_sharp;
        cell.residual_star = report.residual_star;
        cell.residual_sharp = report.residual_sharp;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

// -- Numeric validation of the bounds ------------------------------------------

struct BoundsReport {
  int checks = 0;
  std::vector<std::string> violations;
  bool clean() const { return violations.empty(); }
};

/// Numerically asserts the rate and steady-state bounds for n = 3 at every
/// integer m up to m_max: m+1 > r2 >= m and 0.14 m > r6 (m >= 2),
/// r6 > 0.13 m - 0.5 (m >= 20), x3_sharp decreasing in m and trapped in
/// (e^{2.1}, x3_sharp(2)], and the inflow rate r9 > 0.
inline BoundsReport validate_bounds(int m_max) {
  if (m_max < 20) throw std::invalid_argument("validate_bounds: m_max must be at least 20");
  BoundsReport report;
  auto expect = [&report](bool ok, int m, const std::string& what) {
    ++report.checks;
    if (!ok) report.violations.push_back("m=" + std::to_string(m) + ": " + what);
  };
  const double x3_limit = std::exp(2.1);
  const double x3_at_2 = std::exp((2.1 * 2 + 3.41) / 3.0);
  double x3_prev = 0.0;
  for (int m = 2; m <= m_max; ++m) {
    const Eigen::VectorXd r = rates_n3(m).values;
    expect(m + 1 > r(1), m, "r2 below m+1");
    expect(r(1) >= m, m, "r2 at least m");
    expect(0.14 * m > r(5), m, "r6 below 0.14 m");
    if (m >= 20) expect(r(5) > 0.13 * m - 0.5, m, "r6 above 0.13 m - 0.5");
    const double x3 = std::exp((2.1 * m + 3.41) / (m + 1));
    expect(x3 > x3_limit, m, "x3_sharp above e^2.1");
    expect(x3 <= x3_at_2, m, "x3_sharp at most x3_sharp(2)");
    if (m >= 3) expect(x3 < x3_prev, m, "x3_sharp strictly decreasing");
    x3_prev = x3;
    expect(r(8) > 0.0, m, "inflow rate r9 positive");
  }
  return report;
}

}  // namespace detopt::seq
