#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "detopt/crn.hpp"
#include "detopt/linalg.hpp"

namespace detopt {

enum class MethodErrorKind {
  HypothesisFailed,     // input conditions (I)/(II) not satisfied by the witness
  NoEtaMinusFound,      // (lambda, eps) grid exhausted
  NoEtaPlusFound,
  ToleranceNotReached,  // bisection iteration cap hit
  ZeroCoefficient,      // free weight absent from the determinant
  NonPositiveSolution,  // free-variable strategy produced a nonpositive weight
  RankDeficiency,
  DeltaNotNullvector,
  InflowPositivity,     // no scaling of delta made all inflow rates positive
  NonPositiveEtaLast,   // closed-form eta has a nonpositive last entry
  VerificationFailed,
};

/// Failure of a method stage. These are "inconclusive" outcomes, not proofs
/// that the network lacks multiple steady states.
class MethodError : public std::runtime_error {
 public:
  MethodError(MethodErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(stage.empty() ? message : stage + ": " + message),
        kind(kind),
        stage(std::move(stage)) {}

  MethodErrorKind kind;
  std::string stage;
};

/// Strictly positive weights over the internal and outflow reactions of a
/// network, in network order.
struct EtaVector {
  Eigen::VectorXd weights;

  EtaVector() = default;
  explicit EtaVector(Eigen::VectorXd w) : weights(std::move(w)) {
    if (weights.size() == 0 || !(weights.minCoeff() > 0.0)) {
      throw std::invalid_argument("EtaVector: weights must be strictly positive");
    }
  }
};

/// A witness for the method's input hypotheses: n distinct reactions among
/// the internal and outflow reactions (indices into that subsequence), plus
/// the positive weights used in condition (II).
struct HypothesisWitness {
  std::vector<int> reaction_indices;
  Eigen::VectorXd eta_tilde;
};

struct CertificateDiagnostics {
  double residual_star = 0.0;
  double residual_sharp = 0.0;
  double det_star = 0.0;
  double det_sharp = 0.0;
  bool nondegenerate_star = false;
  bool nondegenerate_sharp = false;
};

/// A multistationarity certificate: a rate assignment under which both
/// x_star = (1,...,1) and x_sharp = exp(delta) are positive steady states.
struct Certificate {
  Network network;
  RateAssignment rates;
  Eigen::VectorXd x_star;
  Eigen::VectorXd x_sharp;
  Eigen::VectorXd delta;
  EtaVector eta_zero;
  CertificateDiagnostics diagnostics;
};

struct VerificationReport {
  double residual_star = 0.0;   // max-norm residual relative to the largest monomial term
  double residual_sharp = 0.0;
  double det_star = 0.0;
  double det_sharp = 0.0;
  bool nondegenerate_star = false;
  bool nondegenerate_sharp = false;
  bool residual_star_ok = false;
  bool residual_sharp_ok = false;
  bool distinct = false;
  bool rates_positive = false;
  bool concentrations_positive = false;

  bool steady_states_ok() const {
    return residual_star_ok && residual_sharp_ok && distinct && rates_positive && concentrations_positive;
  }
  bool all_pass() const { return steady_states_ok() && nondegenerate_star && nondegenerate_sharp; }
};

struct MethodConfig {
  std::vector<double> lambda_grid = {1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  std::vector<double> eps_grid = {1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  double bisect_tol = 1e-10;   // |det| <= tol * Hadamard bound
  int bisect_max_iter = 200;
  double rank_tol = 1e-8;      // relative singular-value threshold
  double delta_scaling = 1.0;
  int max_scaling_halvings = 60;
  double tol_residual = 1e-10;
  double tol_det = 1e-8;       // nondegeneracy threshold, relative to the Hadamard bound

  enum class EtaZeroStrategy { Bisect, FreeVariable };
  EtaZeroStrategy strategy = EtaZeroStrategy::Bisect;
  std::optional<int> free_index;  // free-variable strategy; defaults to the last outflow
};

/// Indices of the internal and outflow reactions, in network order. Eta
/// vectors and witness indices refer to positions in this subsequence.
inline std::vector<int> non_inflow_indices(const Network& net) {
  std::vector<int> idx;
  for (int k = 0; k < net.reaction_count(); ++k) {
    if (net.reactions[k].kind != ReactionKind::Inflow) idx.push_back(k);
  }
  return idx;
}

namespace detail {

struct ReactionGeometry {
  std::vector<int> indices;                 // into net.reactions
  std::vector<Eigen::VectorXd> reactants;   // y
  std::vector<Eigen::VectorXd> changes;     // y - y'
};

inline ReactionGeometry non_inflow_geometry(const Network& net) {
  ReactionGeometry g;
  g.indices = non_inflow_indices(net);
  for (int k : g.indices) {
    const Reaction& r = net.reactions[k];
    Eigen::VectorXd y = r.reactant.to_vector(net.species_count);
    g.reactants.push_back(y);
    g.changes.push_back(y - r.product.to_vector(net.species_count));
  }
  return g;
}

inline void check_witness(const Network& net, const HypothesisWitness& w, int non_inflow_count) {
  const int n = net.species_count;
  if (static_cast<int>(w.reaction_indices.size()) != n) {
    throw std::invalid_argument("witness: need exactly one reaction per species");
  }
  if (w.eta_tilde.size() != n || !(w.eta_tilde.minCoeff() > 0.0)) {
    throw std::invalid_argument("witness: eta_tilde must be strictly positive, one entry per selected reaction");
  }
  std::vector<int> sorted = w.reaction_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("witness: reaction indices must be distinct");
  }
  for (int i : w.reaction_indices) {
    if (i < 0 || i >= non_inflow_count) {
      throw std::invalid_argument("witness: reaction index out of range of internal+outflow reactions");
    }
  }
}

}  // namespace detail

/// Matrix of the linear map T_eta(d) = sum eta_k (y_k . d)(y_k - y_k') over
/// internal and outflow reactions; equals the negated mass-action Jacobian at
/// (1,...,1) when the rates on those reactions are eta. Raw-weight form.
inline Eigen::MatrixXd t_eta_matrix(const Network& net, const Eigen::VectorXd& weights) {
  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  if (weights.size() != static_cast<Eigen::Index>(g.indices.size())) {
    throw std::invalid_argument("t_eta_matrix: weight count does not match internal+outflow reactions");
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(net.species_count, net.species_count);
  for (size_t j = 0; j < g.indices.size(); ++j) {
    t.noalias() += weights(static_cast<Eigen::Index>(j)) * g.changes[j] * g.reactants[j].transpose();
  }
  return t;
}

inline Eigen::MatrixXd build_t_eta(const Network& net, const EtaVector& eta) {
  return t_eta_matrix(net, eta.weights);
}

struct ConditionIResult {
  bool holds = false;
  double det_reactants = 0.0;
  double det_reaction_vectors = 0.0;
};

/// Input condition (I): det(y_1,...,y_n) * det(y_1-y_1',...,y_n-y_n') < 0
/// for the witness reactions. The result does not depend on eta_tilde.
inline ConditionIResult check_condition_i(const Network& net, const HypothesisWitness& witness) {
  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  detail::check_witness(net, witness, static_cast<int>(g.indices.size()));
  const int n = net.species_count;
  Eigen::MatrixXd reactants(n, n), changes(n, n);
  for (int col = 0; col < n; ++col) {
    const int j = witness.reaction_indices[col];
    reactants.col(col) = g.reactants[j];
    changes.col(col) = g.changes[j];
  }
  ConditionIResult result;
  result.det_reactants = determinant(reactants);
  result.det_reaction_vectors = determinant(changes);
  result.holds = result.det_reactants * result.det_reaction_vectors < 0.0;
  return result;
}

struct ConditionIIResult {
  bool holds = false;
  Eigen::VectorXd sum;
};

/// Input condition (II): sum_i eta_tilde_i (y_i - y_i') is strictly positive
/// in every coordinate.
inline ConditionIIResult check_condition_ii(const Network& net, const HypothesisWitness& witness) {
  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  detail::check_witness(net, witness, static_cast<int>(g.indices.size()));
  ConditionIIResult result;
  result.sum = Eigen::VectorXd::Zero(net.species_count);
  for (size_t i = 0; i < witness.reaction_indices.size(); ++i) {
    result.sum += witness.eta_tilde(static_cast<Eigen::Index>(i)) * g.changes[witness.reaction_indices[i]];
  }
  result.holds = result.sum.minCoeff() > 0.0;
  return result;
}

namespace detail {

inline Eigen::VectorXd condition_ii_sum(const ReactionGeometry& g, const Eigen::VectorXd& weights) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(g.changes.empty() ? 0 : g.changes[0].size());
  for (size_t j = 0; j < g.changes.size(); ++j) {
    sum += weights(static_cast<Eigen::Index>(j)) * g.changes[j];
  }
  return sum;
}

}  // namespace detail

/// Searches the (lambda, eps) grids for eta_minus = lambda*eta_tilde on the
/// witness reactions and eps elsewhere, with det(T) < 0 and the condition (II)
/// sum strictly positive. Grids are scanned in order (lambda outer); the
/// first success wins, so the result is deterministic.
inline EtaVector construct_eta_minus(const Network& net, const HypothesisWitness& witness,
                                     const std::vector<double>& lambda_grid = MethodConfig{}.lambda_grid,
                                     const std::vector<double>& eps_grid = MethodConfig{}.eps_grid) {
  const ConditionIResult ci = check_condition_i(net, witness);
  if (!ci.holds) {
    throw MethodError(MethodErrorKind::HypothesisFailed,
                      "condition (I) fails: determinant product is " +
                          std::to_string(ci.det_reactants * ci.det_reaction_vectors));
  }
  const ConditionIIResult cii = check_condition_ii(net, witness);
  if (!cii.holds) {
    throw MethodError(MethodErrorKind::HypothesisFailed, "condition (II) fails for eta_tilde");
  }

  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  const int count = static_cast<int>(g.indices.size());
  std::vector<int> slot(count, -1);
  for (size_t i = 0; i < witness.reaction_indices.size(); ++i) {
    slot[witness.reaction_indices[i]] = static_cast<int>(i);
  }
  for (double lambda : lambda_grid) {
    for (double eps : eps_grid) {
      Eigen::VectorXd w(count);
      for (int j = 0; j < count; ++j) {
        w(j) = slot[j] >= 0 ? lambda * witness.eta_tilde(slot[j]) : eps;
      }
      if (determinant(t_eta_matrix(net, w)) < 0.0 && detail::condition_ii_sum(g, w).minCoeff() > 0.0) {
        return EtaVector(std::move(w));
      }
    }
  }
  throw MethodError(MethodErrorKind::NoEtaMinusFound, "no eta_minus on the (lambda, eps) grid; method inconclusive");
}

struct EtaPlusOptions {
  double lambda_start = 1e3;
  double eps_start = 1e-3;
  double factor = 10.0;
  int max_steps = 8;
};

/// Builds eta_plus with a large weight on every outflow and a small weight on
/// every internal reaction, growing the ratio until det(T) > 0.
inline EtaVector construct_eta_plus(const Network& net, const EtaPlusOptions& opts = {}) {
  if (!is_fully_open(net)) {
    throw std::invalid_argument("construct_eta_plus: network is not fully open");
  }
  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  const int count = static_cast<int>(g.indices.size());
  for (int step = 0; step < opts.max_steps; ++step) {
    const double scale = detail::ipow(opts.factor, step);
    Eigen::VectorXd w(count);
    for (int j = 0; j < count; ++j) {
      w(j) = net.reactions[g.indices[j]].kind == ReactionKind::Outflow ? opts.lambda_start * scale
                                                                       : opts.eps_start / scale;
    }
    if (determinant(t_eta_matrix(net, w)) > 0.0 && detail::condition_ii_sum(g, w).minCoeff() > 0.0) {
      return EtaVector(std::move(w));
    }
  }
  throw MethodError(MethodErrorKind::NoEtaPlusFound, "no eta_plus found; method inconclusive");
}

/// Bisects the segment between eta_minus (det < 0) and eta_plus (det > 0)
/// until |det(T)| <= tol * HadamardBound(T). The result satisfies condition
/// (II) automatically: the set of weights with a positive condition (II) sum
/// is convex and contains both endpoints.
inline EtaVector interpolate_eta_zero(const Network& net, const EtaVector& eta_minus, const EtaVector& eta_plus,
                                      double tol = MethodConfig{}.bisect_tol,
                                      int max_iter = MethodConfig{}.bisect_max_iter) {
  if (eta_minus.weights.size() != eta_plus.weights.size()) {
    throw std::invalid_argument("interpolate_eta_zero: endpoint dimensions differ");
  }
  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  const double det_minus = determinant(t_eta_matrix(net, eta_minus.weights));
  const double det_plus = determinant(t_eta_matrix(net, eta_plus.weights));
  if (!(det_minus < 0.0 && det_plus > 0.0)) {
    throw std::invalid_argument("interpolate_eta_zero: need det(T_minus) < 0 < det(T_plus), got " +
                                std::to_string(det_minus) + " and " + std::to_string(det_plus));
  }
  if (!(detail::condition_ii_sum(g, eta_minus.weights).minCoeff() > 0.0) ||
      !(detail::condition_ii_sum(g, eta_plus.weights).minCoeff() > 0.0)) {
    throw std::invalid_argument("interpolate_eta_zero: both endpoints must satisfy condition (II)");
  }

  double lo = 0.0, hi = 1.0;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    const double t = 0.5 * (lo + hi);
    Eigen::VectorXd w = (1.0 - t) * eta_minus.weights + t * eta_plus.weights;
    const Eigen::MatrixXd mat = t_eta_matrix(net, w);
    const double det = determinant(mat);
    const double bound = hadamard_bound(mat);
    if (std::abs(det) <= tol * bound) {
      return EtaVector(std::move(w));
    }
    best_ratio = std::min(best_ratio, bound > 0 ? std::abs(det) / bound : std::abs(det));
    (det < 0.0 ? lo : hi) = t;
  }
  throw MethodError(MethodErrorKind::ToleranceNotReached,
                    "bisection did not reach tolerance; best |det|/bound = " + std::to_string(best_ratio) +
                        " on bracket [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

/// Single-free-variable strategy for a singular T: hold every weight of
/// eta_base fixed except the one at free_index, whose reaction must satisfy
/// y - y' >= 0 while the remaining weights already make the condition (II)
/// sum strictly positive. The determinant is affine in any single weight
/// (a rank-one update), so the free entry solves a linear equation.
inline EtaVector solve_eta_zero_free_variable(const Network& net, const EtaVector& eta_base, int free_index) {
  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  const int count = static_cast<int>(g.indices.size());
  if (eta_base.weights.size() != count) {
    throw std::invalid_argument("solve_eta_zero_free_variable: base weight count mismatch");
  }
  if (free_index < 0 || free_index >= count) {
    throw std::invalid_argument("solve_eta_zero_free_variable: free index out of range");
  }
  if (!(g.changes[free_index].minCoeff() >= 0.0)) {
    throw std::invalid_argument("solve_eta_zero_free_variable: free reaction must have y - y' >= 0");
  }
  Eigen::VectorXd rest_sum = detail::condition_ii_sum(g, eta_base.weights) -
                             eta_base.weights(free_index) * g.changes[free_index];
  if (!(rest_sum.minCoeff() > 0.0)) {
    throw std::invalid_argument(
        "solve_eta_zero_free_variable: remaining weights do not satisfy condition (II) without the free reaction");
  }

  Eigen::VectorXd w = eta_base.weights;
  w(free_index) = 0.0;
  const double det0 = determinant(t_eta_matrix(net, w));
  w(free_index) = 1.0;
  const double det1 = determinant(t_eta_matrix(net, w));
  const double coeff = det1 - det0;
  const double scale = std::max({std::abs(det0), std::abs(det1), 1e-300});
  if (std::abs(coeff) <= 1e-12 * scale) {
    throw MethodError(MethodErrorKind::ZeroCoefficient,
                      "determinant does not depend on the free weight (coefficient " + std::to_string(coeff) + ")");
  }
  const double solution = -det0 / coeff;
  if (!(solution > 0.0)) {
    throw MethodError(MethodErrorKind::NonPositiveSolution,
                      "free weight solves to " + std::to_string(solution) + "; strategy failed");
  }
  w(free_index) = solution;
  return EtaVector(std::move(w));
}

/// Nullspace vector of T under the rank-deficiency-one test; see
/// nullspace_vector for the contract.
inline Eigen::VectorXd nullspace_delta(const Eigen::MatrixXd& t, double rel_tol = MethodConfig{}.rank_tol) {
  try {
    return nullspace_vector(t, rel_tol);
  } catch (const RankDeficiencyError& e) {
    throw MethodError(MethodErrorKind::RankDeficiency, e.what());
  }
}

/// u / (e^u - 1), continuously extended by 1 at u = 0. This is the factor
/// that turns eta weights into reaction rates. Below |u| = 1e-4 the direct
/// quotient is replaced by the reciprocal series 1/(1 + u/2 + u^2/6 + u^3/24).
inline double rate_factor(double u) {
  if (std::abs(u) < 1e-4) {
    return 1.0 / (1.0 + u / 2.0 + u * u / 6.0 + u * u * u / 24.0);
  }
  return u / std::expm1(u);
}

struct CertificateOptions {
  int max_scaling_halvings = MethodConfig{}.max_scaling_halvings;
  double null_tol = 1e-8;  // acceptance threshold for T * delta
  double tol_residual = MethodConfig{}.tol_residual;
  double tol_det = MethodConfig{}.tol_det;
};

inline VerificationReport verify_certificate(const Certificate& cert, double tol_residual, double tol_det);

/// Assembles a certificate from a singular eta and a nullvector delta of
/// T_eta. Internal/outflow rates are rate_factor(<y, delta>) * eta; inflow
/// rates are the row sums of r (y - y'), which make x_star = (1,...,1) an
/// exact steady state; x_sharp = exp(delta) is then a steady state because
/// T_eta * delta = 0. If some inflow rate comes out nonpositive the scaling
/// of delta is halved and the construction retried.
inline Certificate build_certificate(const Network& net, const EtaVector& eta_zero, const Eigen::VectorXd& delta,
                                     double scaling, const CertificateOptions& opts = {}) {
  if (!(scaling > 0.0)) throw std::invalid_argument("build_certificate: scaling must be positive");
  if (delta.size() != net.species_count) throw std::invalid_argument("build_certificate: delta has wrong length");
  if (!is_fully_open(net)) throw std::invalid_argument("build_certificate: network is not fully open");

  const detail::ReactionGeometry g = detail::non_inflow_geometry(net);
  const Eigen::MatrixXd t = t_eta_matrix(net, eta_zero.weights);
  const double residual = (t * delta).lpNorm<Eigen::Infinity>();
  const double scale = t.lpNorm<Eigen::Infinity>() * delta.lpNorm<Eigen::Infinity>();
  if (!(residual <= opts.null_tol * scale)) {
    throw MethodError(MethodErrorKind::DeltaNotNullvector,
                      "delta is not a nullvector of T (|T delta| = " + std::to_string(residual) + ")");
  }

  // One inflow reaction per species is required to place the inflow rates.
  std::vector<int> inflow_reaction(net.species_count, -1);
  for (int k = 0; k < net.reaction_count(); ++k) {
    if (net.reactions[k].kind != ReactionKind::Inflow) continue;
    const int species = net.reactions[k].product.coefficients.begin()->first;
    if (inflow_reaction[species] >= 0) {
      throw std::invalid_argument("build_certificate: species has multiple inflow reactions");
    }
    inflow_reaction[species] = k;
  }

  double s = scaling;
  for (int attempt = 0; attempt <= opts.max_scaling_halvings; ++attempt, s *= 0.5) {
    const Eigen::VectorXd scaled_delta = s * delta;
    Eigen::VectorXd rates = Eigen::VectorXd::Zero(net.reaction_count());
    Eigen::VectorXd inflow = Eigen::VectorXd::Zero(net.species_count);
    for (size_t j = 0; j < g.indices.size(); ++j) {
      const double r = rate_factor(g.reactants[j].dot(scaled_delta)) * eta_zero.weights(static_cast<Eigen::Index>(j));
      rates(g.indices[j]) = r;
      inflow += r * g.changes[j];
    }
    if (!(inflow.minCoeff() > 0.0)) continue;

    for (int i = 0; i < net.species_count; ++i) rates(inflow_reaction[i]) = inflow(i);
    Certificate cert;
    cert.network = net;
    cert.rates = RateAssignment(std::move(rates));
    cert.x_star = Eigen::VectorXd::Ones(net.species_count);
    cert.x_sharp = scaled_delta.array().exp();
    cert.delta = scaled_delta;
    cert.eta_zero = eta_zero;
    const VerificationReport report = verify_certificate(cert, opts.tol_residual, opts.tol_det);
    cert.diagnostics = CertificateDiagnostics{report.residual_star,     report.residual_sharp,
                                              report.det_star,          report.det_sharp,
                                              report.nondegenerate_star, report.nondegenerate_sharp};
    return cert;
  }
  throw MethodError(MethodErrorKind::InflowPositivity,
                    "no scaling of delta yields strictly positive inflow rates within the halving cap");
}

namespace detail {

// Largest single monomial term |Gamma_ik r_k x^{y_k}| over the whole system;
// the residual scale for steady-state checks.
inline double residual_scale(const Network& net, const Eigen::VectorXd& rates, const Eigen::VectorXd& x) {
  double scale = 0.0;
  for (int k = 0; k < net.reaction_count(); ++k) {
    const Reaction& r = net.reactions[k];
    const double flux = std::abs(rates(k) * complex_monomial(r.reactant, x));
    for (const auto& [i, c] : r.product.coefficients) scale = std::max(scale, std::abs(c * flux));
    for (const auto& [i, c] : r.reactant.coefficients) scale = std::max(scale, std::abs(c * flux));
  }
  return scale;
}

inline double relative_residual(const Network& net, const Eigen::VectorXd& rates, const Eigen::VectorXd& x) {
  const double norm = ode_rhs(net, rates, x).lpNorm<Eigen::Infinity>();
  const double scale = residual_scale(net, rates, x);
  return scale > 0.0 ? norm / scale : norm;
}

}  // namespace detail

/// Recomputes everything a certificate claims: steady-state residuals at both
/// concentration vectors (max norm, relative to the largest monomial term),
/// Jacobian determinants, nondegeneracy flags, distinctness and positivity.
/// Failures land in the report, never in exceptions.
inline VerificationReport verify_certificate(const Certificate& cert, double tol_residual = 1e-10,
                                             double tol_det = 1e-8) {
  VerificationReport report;
  const Network& net = cert.network;
  report.rates_positive = cert.rates.values.size() == net.reaction_count() && cert.rates.values.minCoeff() > 0.0;
  report.concentrations_positive = cert.x_star.minCoeff() > 0.0 && cert.x_sharp.minCoeff() > 0.0;
  report.residual_star = detail::relative_residual(net, cert.rates.values, cert.x_star);
  report.residual_sharp = detail::relative_residual(net, cert.rates.values, cert.x_sharp);
  report.residual_star_ok = report.residual_star <= tol_residual;
  report.residual_sharp_ok = report.residual_sharp <= tol_residual;
  report.det_star = jacobian_determinant(net, cert.rates.values, cert.x_star);
  report.det_sharp = jacobian_determinant(net, cert.rates.values, cert.x_sharp);
  if (is_fully_open(net)) {
    report.nondegenerate_star = is_nondegenerate(net, cert.rates, cert.x_star, tol_det);
    report.nondegenerate_sharp = is_nondegenerate(net, cert.rates, cert.x_sharp, tol_det);
  }
  report.distinct = (cert.x_star - cert.x_sharp).lpNorm<Eigen::Infinity>() > 0.0;
  return report;
}

/// Runs the whole method: hypothesis checks, eta_minus / eta_plus
/// construction, eta_zero (bisection or the free-variable strategy),
/// nullspace extraction, certificate assembly, verification. Any stage
/// failure is rethrown annotated with the stage name.
inline Certificate run_method(const Network& net, const HypothesisWitness& witness,
                              const MethodConfig& config = {}) {
  if (!is_fully_open(net)) throw std::invalid_argument("run_method: network is not fully open");

  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (MethodError& e) {
      if (!e.stage.empty()) throw;
      throw MethodError(e.kind, e.what(), name);
    }
  };

  stage("hypothesis-check", [&] {
    const ConditionIResult ci = check_condition_i(net, witness);
    if (!ci.holds) {
      throw MethodError(MethodErrorKind::HypothesisFailed,
                        "condition (I) fails: det(reactants) = " + std::to_string(ci.det_reactants) +
                            ", det(reaction vectors) = " + std::to_string(ci.det_reaction_vectors));
    }
    if (!check_condition_ii(net, witness).holds) {
      throw MethodError(MethodErrorKind::HypothesisFailed, "condition (II) fails for eta_tilde");
    }
    return 0;
  });

  const EtaVector eta_minus =
      stage("eta-minus", [&] { return construct_eta_minus(net, witness, config.lambda_grid, config.eps_grid); });

  EtaVector eta_zero;
  if (config.strategy == MethodConfig::EtaZeroStrategy::FreeVariable) {
    eta_zero = stage("eta-zero", [&] {
      int free_index = config.free_index.value_or(-1);
      if (free_index < 0) {
        const std::vector<int> idx = non_inflow_indices(net);
        for (int j = static_cast<int>(idx.size()) - 1; j >= 0; --j) {
          if (net.reactions[idx[j]].kind == ReactionKind::Outflow) {
            free_index = j;
            break;
          }
        }
        if (free_index < 0) {
          throw std::invalid_argument("run_method: no outflow reaction available as free variable");
        }
      }
      return solve_eta_zero_free_variable(net, eta_minus, free_index);
    });
  } else {
    const EtaVector eta_plus = stage("eta-plus", [&] { return construct_eta_plus(net); });
    eta_zero = stage("eta-zero", [&] {
      return interpolate_eta_zero(net, eta_minus, eta_plus, config.bisect_tol, config.bisect_max_iter);
    });
  }

  const Eigen::VectorXd delta =
      stage("nullspace", [&] { return nullspace_delta(t_eta_matrix(net, eta_zero.weights), config.rank_tol); });

  CertificateOptions cert_opts;
  cert_opts.max_scaling_halvings = config.max_scaling_halvings;
  cert_opts.tol_residual = config.tol_residual;
  cert_opts.tol_det = config.tol_det;
  Certificate cert = stage("certificate", [&] {
    return build_certificate(net, eta_zero, delta, config.delta_scaling, cert_opts);
  });

  return stage("verification", [&] {
    const VerificationReport report = verify_certificate(cert, config.tol_residual, config.tol_det);
    if (!report.all_pass()) {
      throw MethodError(MethodErrorKind::VerificationFailed,
                        "constructed certificate failed verification (residuals " +
                            std::to_string(report.residual_star) + ", " + std::to_string(report.residual_sharp) +
                            "; determinants " + std::to_string(report.det_star) + ", " +
                            std::to_string(report.det_sharp) + ")");
    }
    return cert;
  });
}

}  // namespace detopt
