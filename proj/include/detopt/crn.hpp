#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "detopt/linalg.hpp"

namespace detopt {

/// A complex: a non-negative integer combination of species. Zero
/// coefficients are never stored; the empty map is the zero complex "0".
struct Complex {
  std::map<int, int> coefficients;  // species index -> coefficient (> 0)

  bool is_zero() const { return coefficients.empty(); }

  /// True when the complex is a single species with coefficient 1.
  bool is_single_species() const {
    return coefficients.size() == 1 && coefficients.begin()->second == 1;
  }

  int coefficient(int species) const {
    auto it = coefficients.find(species);
    return it == coefficients.end() ? 0 : it->second;
  }

  /// Dense real vector of the coefficients, length species_count.
  Eigen::VectorXd to_vector(int species_count) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(species_count);
    for (const auto& [i, c] : coefficients) v(i) = static_cast<double>(c);
    return v;
  }

  static Complex zero() { return Complex{}; }

  static Complex of(std::initializer_list<std::pair<int, int>> terms) {
    Complex c;
    for (const auto& [i, k] : terms) c.add(i, k);
    return c;
  }

  void add(int species, int count) {
    if (species < 0) throw std::invalid_argument("Complex: negative species index");
    if (count <= 0) throw std::invalid_argument("Complex: coefficient must be positive");
    coefficients[species] += count;
  }

  friend bool operator==(const Complex&, const Complex&) = default;
};

enum class ReactionKind { Internal, Outflow, Inflow };

/// A reaction y -> y'. The kind is determined by the shape of the complexes:
/// X_i -> 0 is an outflow, 0 -> X_i is an inflow, everything else internal.
struct Reaction {
  Complex reactant;
  Complex product;
  ReactionKind kind = ReactionKind::Internal;

  static Reaction make(Complex reactant, Complex product) {
    if (reactant == product) {
      throw std::invalid_argument("Reaction: reactant equals product");
    }
    ReactionKind kind = ReactionKind::Internal;
    if (product.is_zero() && reactant.is_single_species()) kind = ReactionKind::Outflow;
    if (reactant.is_zero() && product.is_single_species()) kind = ReactionKind::Inflow;
    return Reaction{std::move(reactant), std::move(product), kind};
  }

  friend bool operator==(const Reaction&, const Reaction&) = default;
};

/// A chemical reaction network: a species count and an ordered reaction list.
/// The ordering is part of the contract; rate assignments and certificates
/// index into it.
struct Network {
  int species_count = 0;
  std::vector<Reaction> reactions;

  int reaction_count() const { return static_cast<int>(reactions.size()); }

  friend bool operator==(const Network&, const Network&) = default;
};

inline void validate(const Network& net) {
  if (net.species_count <= 0) throw std::invalid_argument("Network: species count must be positive");
  for (const Reaction& r : net.reactions) {
    for (const auto* c : {&r.reactant, &r.product}) {
      for (const auto& [i, k] : c->coefficients) {
        if (i < 0 || i >= net.species_count) throw std::invalid_argument("Network: species index out of range");
        if (k <= 0) throw std::invalid_argument("Network: nonpositive coefficient");
      }
    }
  }
}

/// Positive rate constants, one per reaction in network order.
struct RateAssignment {
  Eigen::VectorXd values;

  RateAssignment() = default;
  explicit RateAssignment(Eigen::VectorXd v) : values(std::move(v)) {
    if (values.size() == 0) return;
    if (!(values.minCoeff() > 0.0)) {
      throw std::invalid_argument("RateAssignment: all rates must be strictly positive");
    }
  }
};

inline bool has_outflow_for(const Network& net, int species) {
  for (const Reaction& r : net.reactions) {
    if (r.kind == ReactionKind::Outflow && r.reactant.coefficient(species) == 1) return true;
  }
  return false;
}

inline bool has_inflow_for(const Network& net, int species) {
  for (const Reaction& r : net.reactions) {
    if (r.kind == ReactionKind::Inflow && r.product.coefficient(species) == 1) return true;
  }
  return false;
}

/// True when every species has both an inflow and an outflow reaction.
inline bool is_fully_open(const Network& net) {
  for (int i = 0; i < net.species_count; ++i) {
    if (!has_outflow_for(net, i) || !has_inflow_for(net, i)) return false;
  }
  return true;
}

/// Adds the missing flow reactions X_i -> 0 and 0 -> X_i for every species:
/// outflows first (ascending species), then inflows. Species that already
/// have a flow reaction keep it, so the operation is idempotent. For a
/// flow-free input this yields the canonical order: internal reactions,
/// then all outflows, then all inflows.
inline Network fully_open_extension(const Network& net) {
  validate(net);
  Network out = net;
  for (int i = 0; i < net.species_count; ++i) {
    if (!has_outflow_for(net, i)) {
      out.reactions.push_back(Reaction::make(Complex::of({{i, 1}}), Complex::zero()));
    }
  }
  for (int i = 0; i < net.species_count; ++i) {
    if (!has_inflow_for(net, i)) {
      out.reactions.push_back(Reaction::make(Complex::zero(), Complex::of({{i, 1}})));
    }
  }
  return out;
}

/// The fully open sequestration network on n species: internal reactions
/// X1+X2 -> 0, ..., X_{n-1}+X_n -> 0, X1 -> m*X_n, followed by all outflows
/// and all inflows (3n reactions in canonical order).
inline Network build_sequestration(int m, int n) {
  if (m < 1 || n < 2) {
    throw std::invalid_argument("build_sequestration: require m >= 1 and n >= 2");
  }
  Network net;
  net.species_count = n;
  for (int i = 0; i + 1 < n; ++i) {
    net.reactions.push_back(Reaction::make(Complex::of({{i, 1}, {i + 1, 1}}), Complex::zero()));
  }
  net.reactions.push_back(Reaction::make(Complex::of({{0, 1}}), Complex::of({{n - 1, m}})));
  return fully_open_extension(net);
}

/// Detects whether a network is exactly build_sequestration(m, n) for some
/// m >= 1, n >= 2, and returns (m, n) if so.
inline std::optional<std::pair<int, int>> recognize_sequestration(const Network& net) {
  const int n = net.species_count;
  if (n < 2 || net.reaction_count() != 3 * n) return std::nullopt;
  for (int i = 0; i + 1 < n; ++i) {
    const Reaction& r = net.reactions[i];
    if (!(r.reactant == Complex::of({{i, 1}, {i + 1, 1}}) && r.product.is_zero())) return std::nullopt;
  }
  const Reaction& last = net.reactions[n - 1];
  if (!(last.reactant == Complex::of({{0, 1}}) && last.product.coefficients.size() == 1)) return std::nullopt;
  const auto [species, m] = *last.product.coefficients.begin();
  if (species != n - 1 || m < 1) return std::nullopt;
  for (int i = 0; i < n; ++i) {
    if (net.reactions[n + i] != Reaction::make(Complex::of({{i, 1}}), Complex::zero())) return std::nullopt;
    if (net.reactions[2 * n + i] != Reaction::make(Complex::zero(), Complex::of({{i, 1}}))) return std::nullopt;
  }
  return std::make_pair(m, n);
}

/// Stoichiometric matrix: column k is the reaction vector (product minus
/// reactant) of reaction k, over species.
inline Eigen::MatrixXi stoichiometric_matrix(const Network& net) {
  Eigen::MatrixXi gamma = Eigen::MatrixXi::Zero(net.species_count, net.reaction_count());
  for (int k = 0; k < net.reaction_count(); ++k) {
    for (const auto& [i, c] : net.reactions[k].product.coefficients) gamma(i, k) += c;
    for (const auto& [i, c] : net.reactions[k].reactant.coefficients) gamma(i, k) -= c;
  }
  return gamma;
}

namespace detail {

// Integer power by repeated multiplication; exponents here are small
// stoichiometric coefficients, so this avoids pow() edge cases at integers.
inline double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

inline double complex_monomial(const Complex& c, const Eigen::VectorXd& x) {
  double p = 1.0;  // the zero complex has monomial 1
  for (const auto& [i, k] : c.coefficients) p *= ipow(x(i), k);
  return p;
}

// d/dx_j of the monomial x^y: y_j * x^(y - e_j).
inline double complex_monomial_derivative(const Complex& c, const Eigen::VectorXd& x, int j) {
  const int yj = c.coefficient(j);
  if (yj == 0) return 0.0;
  double p = static_cast<double>(yj);
  for (const auto& [i, k] : c.coefficients) p *= ipow(x(i), i == j ? k - 1 : k);
  return p;
}

inline void check_dimensions(const Network& net, const Eigen::VectorXd& rates, const Eigen::VectorXd& x,
                             const char* where) {
  if (rates.size() != net.reaction_count()) {
    throw std::invalid_argument(std::string(where) + ": rate vector length does not match reaction count");
  }
  if (x.size() != net.species_count) {
    throw std::invalid_argument(std::string(where) + ": concentration vector length does not match species count");
  }
}

}  // namespace detail

/// Mass-action right-hand side Gamma * R(x), where R(x)_k is the rate times
/// the reactant monomial of reaction k. Raw-rate overload; rates may carry
/// any sign (used when evaluating determinant curves past the positivity
/// region).
inline Eigen::VectorXd ode_rhs(const Network& net, const Eigen::VectorXd& rates, const Eigen::VectorXd& x) {
  detail::check_dimensions(net, rates, x, "ode_rhs");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(net.species_count);
  for (int k = 0; k < net.reaction_count(); ++k) {
    const Reaction& r = net.reactions[k];
    const double flux = rates(k) * detail::complex_monomial(r.reactant, x);
    for (const auto& [i, c] : r.product.coefficients) f(i) += c * flux;
    for (const auto& [i, c] : r.reactant.coefficients) f(i) -= c * flux;
  }
  return f;
}

inline Eigen::VectorXd ode_rhs(const Network& net, const RateAssignment& rates, const Eigen::VectorXd& x) {
  return ode_rhs(net, rates.values, x);
}

/// Jacobian of the mass-action right-hand side, computed analytically from
/// the monomial structure.
inline Eigen::MatrixXd jacobian(const Network& net, const Eigen::VectorXd& rates, const Eigen::VectorXd& x) {
  detail::check_dimensions(net, rates, x, "jacobian");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(net.species_count, net.species_count);
  for (int k = 0; k < net.reaction_count(); ++k) {
    const Reaction& r = net.reactions[k];
    for (const auto& [j, yj] : r.reactant.coefficients) {
      (void)yj;
      const double dflux = rates(k) * detail::complex_monomial_derivative(r.reactant, x, j);
      for (const auto& [i, c] : r.product.coefficients) jac(i, j) += c * dflux;
      for (const auto& [i, c] : r.reactant.coefficients) jac(i, j) -= c * dflux;
    }
  }
  return jac;
}

inline Eigen::MatrixXd jacobian(const Network& net, const RateAssignment& rates, const Eigen::VectorXd& x) {
  return jacobian(net, rates.values, x);
}

inline double jacobian_determinant(const Network& net, const Eigen::VectorXd& rates, const Eigen::VectorXd& x) {
  return determinant(jacobian(net, rates, x));
}

inline double jacobian_determinant(const Network& net, const RateAssignment& rates, const Eigen::VectorXd& x) {
  return jacobian_determinant(net, rates.values, x);
}

/// Scale-aware nondegeneracy test: the Jacobian is row/column equilibrated
/// and |det| is compared against tol times the Hadamard bound of the
/// equilibrated matrix. Equilibration makes the verdict invariant under the
/// extreme row and column scalings that concentration vectors like exp(delta)
/// induce; the raw Hadamard bound would overwhelm genuinely nonzero
/// determinants there. Only defined for fully open networks, where the
/// stoichiometric matrix has full row rank and nondegeneracy reduces to a
/// nonzero Jacobian determinant. Networks with conservation laws are
/// rejected.
inline bool is_nondegenerate(const Network& net, const RateAssignment& rates, const Eigen::VectorXd& x,
                             double tol) {
  if (!is_fully_open(net)) {
    throw std::invalid_argument("is_nondegenerate: network is not fully open");
  }
  Eigen::MatrixXd jac = jacobian(net, rates, x);
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index i = 0; i < jac.rows(); ++i) {
      if (const double norm = jac.row(i).norm(); norm > 0.0) jac.row(i) /= norm;
    }
    for (Eigen::Index j = 0; j < jac.cols(); ++j) {
      if (const double norm = jac.col(j).norm(); norm > 0.0) jac.col(j) /= norm;
    }
  }
  return std::abs(determinant(jac)) > tol * hadamard_bound(jac);
}

}  // namespace detopt
