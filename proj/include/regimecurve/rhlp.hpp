#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "regimecurve/core.hpp"

namespace regimecurve {

/// m x K matrix of proportions pi_jk; rows sum to one.
using GateMatrix = Eigen::MatrixXd;

struct EmConfig {
  std::size_t max_iter = 1000;
  /// Stop when |L_q - L_{q-1}| <= tol * |L_{q-1}|.
  double tol = 1e-6;
  std::size_t restarts = 5;
  std::uint64_t seed = 42;
  std::size_t irls_max_iter = 50;
  double irls_grad_tol = 1e-6;
  /// Restarts fitted concurrently; 0 = hardware concurrency.
  unsigned threads = 1;

  void validate() const;
};

/// Posterior regime memberships tau_ijk: one n x m matrix per regime.
struct Responsibilities {
  std::vector<Eigen::MatrixXd> tau;
  /// Observed-data log-likelihood at the parameters that produced tau.
  double loglik = 0.0;

  std::size_t K() const { return tau.size(); }
  std::size_t n() const { return tau.empty() ? 0 : static_cast<std::size_t>(tau[0].rows()); }
  std::size_t m() const { return tau.empty() ? 0 : static_cast<std::size_t>(tau[0].cols()); }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return tau[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  /// m x K matrix of sum_i tau_ijk.
  Eigen::MatrixXd totals() const;
};

struct EmTrace {
  std::vector<double> logliks;
  std::size_t iterations = 0;
  bool converged = false;
};

struct BetaUpdate {
  std::vector<Eigen::VectorXd> betas;
  /// Regimes whose total responsibility fell below 1e-12; they got an unweighted OLS fit.
  std::vector<bool> starved;

  bool any_starved() const;
};

struct IrlsResult {
  GateWeights gate{1};
  double q1_initial = 0.0;
  double q1_final = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// The Newton system stayed singular after damping; `gate` is the best iterate seen.
  bool warning = false;
};

struct EmResult {
  RhlpModel model;
  EmTrace trace;
  /// Index of the winning initialization.
  std::size_t restart = 0;
  /// Number of initializations discarded as degenerate.
  std::size_t degenerate = 0;
};

/// Total responsibility below which a regime counts as starved.
inline constexpr double kStarvedMass = 1e-12;

GateMatrix logistic_proportions(const GateWeights& gate, const TimeGrid& grid);
/// log pi_jk computed directly by log-softmax (finite even where pi underflows).
Eigen::MatrixXd log_proportions(const GateWeights& gate, const TimeGrid& grid);

double rhlp_loglik(const RhlpModel& model, const CurveSet& curves);

Responsibilities e_step(const RhlpModel& model, const CurveSet& curves);
/// E-step under explicit log-proportions (m x K); -inf entries are allowed.
Responsibilities e_step(const Eigen::MatrixXd& log_pi, const std::vector<PolyRegime>& regimes,
                        const CurveSet& curves);

BetaUpdate m_step_beta(const Responsibilities& tau, const CurveSet& curves, int p);

/// Weighted residual variances, clamped at `sigma2_floor`.  Throws FitError on a
/// regime with zero total responsibility.
std::vector<double> m_step_sigma(const Responsibilities& tau, const CurveSet& curves,
                                 const std::vector<Eigen::VectorXd>& betas, double sigma2_floor);

/// Q1(w) = sum_j sum_k T_jk log pi_jk(w) with T_jk = sum_i tau_ijk.
double gate_objective(const Eigen::MatrixXd& totals, const TimeGrid& grid, const GateWeights& gate);
/// Gradient of Q1 with respect to GateWeights::free_parameters().
Eigen::VectorXd gate_gradient(const Eigen::MatrixXd& totals, double n, const TimeGrid& grid,
                              const GateWeights& gate);
/// Hessian of Q1 in the same parameterization (negative semi-definite).
Eigen::MatrixXd gate_hessian(double n, const TimeGrid& grid, const GateWeights& gate);

/// Multi-class IRLS: damped Newton ascent on Q1 with step halving.
IrlsResult irls_gate(const Responsibilities& tau, const TimeGrid& grid, const GateWeights& w_init,
                     const EmConfig& cfg);
IrlsResult irls_gate(const Eigen::MatrixXd& totals, double n, const TimeGrid& grid,
                     const GateWeights& w_init, const EmConfig& cfg);

/// Best of cfg.restarts EM runs.  The first run starts from K equal-length
/// intervals, the others from seeded random interval bounds.
EmResult fit_em(const CurveSet& curves, std::size_t K, int p, const EmConfig& cfg);

/// A single EM run from `init`.  When `frozen_log_pi` is given the gate is not
/// updated and those log-proportions are used in every E-step.  Throws
/// FitError if a regime starves or the likelihood stops being finite.
EmResult run_em(const CurveSet& curves, const RhlpModel& init, const EmConfig& cfg,
                const std::optional<Eigen::MatrixXd>& frozen_log_pi = std::nullopt);

/// Expected curve: sum_k pi_jk beta_k^T r_j.
Eigen::VectorXd rhlp_approximation(const RhlpModel& model);

}  // namespace regimecurve
