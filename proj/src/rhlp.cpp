#include "regimecurve/rhlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "regimecurve/parallel.hpp"
#include "regimecurve/piecewise.hpp"

namespace regimecurve {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxHalvings = 20;
constexpr int kMaxDampingRetries = 8;

// Regime means beta_k^T r_j as an m x K matrix.
Eigen::MatrixXd regime_means(const std::vector<PolyRegime>& regimes, const TimeGrid& grid) {
  Eigen::MatrixXd mu(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(regimes.size()));
  for (std::size_t k = 0; k < regimes.size(); ++k)
    for (std::size_t j = 0; j < grid.size(); ++j)
      mu(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = regimes[k].mean_at(grid[j]);
  return mu;
}

std::vector<std::size_t> equal_bounds(std::size_t m, std::size_t K) {
  std::vector<std::size_t> gamma(K + 1);
  for (std::size_t k = 0; k <= K; ++k)
    gamma[k] = static_cast<std::size_t>(std::llround(static_cast<double>(k * m) / static_cast<double>(K)));
  return gamma;
}

std::vector<std::size_t> random_bounds(std::size_t m, std::size_t K, std::mt19937_64& rng) {
  std::vector<std::size_t> inner(m - 1);
  std::iota(inner.begin(), inner.end(), std::size_t{1});
  std::vector<std::size_t> gamma;
  gamma.reserve(K + 1);
  gamma.push_back(0);
  std::sample(inner.begin(), inner.end(), std::back_inserter(gamma), K - 1, rng);
  gamma.push_back(m);
  std::sort(gamma.begin(), gamma.end());
  return gamma;
}

RhlpModel model_from_bounds(const CurveSet& curves, const std::vector<std::size_t>& gamma, int p,
                            double floor) {
  const std::size_t K = gamma.size() - 1;
  RhlpModel model{.grid = curves.grid(), .p = p, .gate = GateWeights(K), .regimes = {}, .loglik = 0.0};
  for (std::size_t k = 0; k < K; ++k) {
    SegmentFit fit = segment_fit(curves, gamma[k], gamma[k + 1], p, floor);
    model.regimes.push_back({std::move(fit.beta), fit.sigma2});
  }
  return model;
}

}  // namespace

void EmConfig::validate() const {
  if (max_iter < 1) throw DomainError("max_iter must be >= 1");
  if (!(tol > 0.0)) throw DomainError("tol must be > 0");
  if (restarts < 1) throw DomainError("restarts must be >= 1");
  if (irls_max_iter < 1) throw DomainError("irls_max_iter must be >= 1");
  if (!(irls_grad_tol > 0.0)) throw DomainError("irls_grad_tol must be > 0");
}

Eigen::MatrixXd Responsibilities::totals() const {
  Eigen::MatrixXd t(static_cast<Eigen::Index>(m()), static_cast<Eigen::Index>(K()));
  for (std::size_t k = 0; k < K(); ++k) t.col(static_cast<Eigen::Index>(k)) = tau[k].colwise().sum().transpose();
  return t;
}

bool BetaUpdate::any_starved() const { return std::find(starved.begin(), starved.end(), true) != starved.end(); }

Eigen::MatrixXd log_proportions(const GateWeights& gate, const TimeGrid& grid) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  const auto K = static_cast<Eigen::Index>(gate.K());
  Eigen::MatrixXd lp(m, K);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double t = grid[static_cast<std::size_t>(j)];
    double hi = kNegInf;
    for (Eigen::Index k = 0; k < K; ++k) {
      lp(j, k) = gate.matrix()(k, 0) + gate.matrix()(k, 1) * t;
      hi = std::max(hi, lp(j, k));
    }
    double acc = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) acc += std::exp(lp(j, k) - hi);
    const double lse = hi + std::log(acc);
    lp.row(j).array() -= lse;
  }
  return lp;
}

GateMatrix logistic_proportions(const GateWeights& gate, const TimeGrid& grid) {
  GateMatrix pi = log_proportions(gate, grid).array().exp().matrix();
  // Renormalize so rows sum to one to working precision.
  const Eigen::VectorXd sums = pi.rowwise().sum();
  for (Eigen::Index j = 0; j < pi.rows(); ++j) pi.row(j) /= sums(j);
  return pi;
}

Responsibilities e_step(const Eigen::MatrixXd& log_pi, const std::vector<PolyRegime>& regimes,
                        const CurveSet& curves) {
  const auto n = static_cast<Eigen::Index>(curves.n());
  const auto m = static_cast<Eigen::Index>(curves.m());
  const auto K = static_cast<Eigen::Index>(regimes.size());
  if (log_pi.rows() != m || log_pi.cols() != K) throw DomainError("e_step: proportions shape mismatch");

  const Eigen::MatrixXd mu = regime_means(regimes, curves.grid());
  const auto& x = curves.values();
  Responsibilities out;
  out.tau.assign(static_cast<std::size_t>(K), Eigen::MatrixXd(n, m));
  std::vector<double> lw(static_cast<std::size_t>(K));
  double total = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double lpi = log_pi(j, k);
        lw[static_cast<std::size_t>(k)] =
            lpi == kNegInf ? kNegInf : lpi + gaussian_logpdf(x(i, j), mu(j, k), regimes[static_cast<std::size_t>(k)].sigma2);
      }
      const double lse = log_sum_exp(lw);
      total += lse;
      for (Eigen::Index k = 0; k < K; ++k)
        out.tau[static_cast<std::size_t>(k)](i, j) = std::exp(lw[static_cast<std::size_t>(k)] - lse);
    }
  }
  out.loglik = total;
  return out;
}

Responsibilities e_step(const RhlpModel& model, const CurveSet& curves) {
  model.validate();
  if (!(model.grid == curves.grid())) throw DomainError("model grid differs from the curves grid");
  return e_step(log_proportions(model.gate, model.grid), model.regimes, curves);
}

double rhlp_loglik(const RhlpModel& model, const CurveSet& curves) { return e_step(model, curves).loglik; }

BetaUpdate m_step_beta(const Responsibilities& tau, const CurveSet& curves, int p) {
  if (tau.n() != curves.n() || tau.m() != curves.m()) throw DomainError("m_step_beta: shape mismatch");
  const Eigen::MatrixXd phi = design_matrix(curves.grid(), p);
  const auto& x = curves.values();
  BetaUpdate up;
  up.betas.reserve(tau.K());
  up.starved.assign(tau.K(), false);
  for (std::size_t k = 0; k < tau.K(); ++k) {
    const Eigen::MatrixXd& w = tau.tau[k];
    // sum_ij tau (x - b'r)^2 = sum_j T_j (ybar_j - b'r_j)^2 + const, so the nm-row
    // weighted problem reduces to m rows weighted by T_j.
    const Eigen::VectorXd t_j = w.colwise().sum().transpose();
    if (t_j.sum() < kStarvedMass) {
      up.starved[k] = true;
      up.betas.push_back(least_squares(phi, curves.mean_curve()));
      continue;
    }
    const Eigen::VectorXd s_j = w.cwiseProduct(x).colwise().sum().transpose();
    Eigen::VectorXd sqrt_w(t_j.size());
    Eigen::VectorXd rhs(t_j.size());
    for (Eigen::Index j = 0; j < t_j.size(); ++j) {
      sqrt_w(j) = std::sqrt(t_j(j));
      rhs(j) = t_j(j) > 0.0 ? s_j(j) / sqrt_w(j) : 0.0;
    }
    up.betas.push_back(least_squares(sqrt_w.asDiagonal() * phi, rhs));
  }
  return up;
}

std::vector<double> m_step_sigma(const Responsibilities& tau, const CurveSet& curves,
                                 const std::vector<Eigen::VectorXd>& betas, double sigma2_floor) {
  if (betas.size() != tau.K()) throw DomainError("m_step_sigma: beta count differs from K");
  const auto& x = curves.values();
  std::vector<double> sigma2(tau.K());
  for (std::size_t k = 0; k < tau.K(); ++k) {
    const Eigen::RowVectorXd mu = (design_matrix(curves.grid(), static_cast<int>(betas[k].size()) - 1) * betas[k]).transpose();
    const Eigen::MatrixXd& w = tau.tau[k];
    const double mass = w.sum();
    if (!(mass >= kStarvedMass))
      throw FitError("regime " + std::to_string(k + 1) + " is starved (zero total responsibility)");
    const double weighted = w.cwiseProduct((x.rowwise() - mu).cwiseAbs2()).sum();
    sigma2[k] = std::max(weighted / mass, sigma2_floor);
  }
  return sigma2;
}

double gate_objective(const Eigen::MatrixXd& totals, const TimeGrid& grid, const GateWeights& gate) {
  const Eigen::MatrixXd lp = log_proportions(gate, grid);
  double q1 = 0.0;
  for (Eigen::Index j = 0; j < lp.rows(); ++j)
    for (Eigen::Index k = 0; k < lp.cols(); ++k)
      if (totals(j, k) != 0.0) q1 += totals(j, k) * lp(j, k);
  return q1;
}

Eigen::VectorXd gate_gradient(const Eigen::MatrixXd& totals, double n, const TimeGrid& grid,
                              const GateWeights& gate) {
  const GateMatrix pi = logistic_proportions(gate, grid);
  const Eigen::Index free_rows = pi.cols() - 1;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * free_rows);
  for (Eigen::Index j = 0; j < pi.rows(); ++j) {
    const double t = grid[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < free_rows; ++k) {
      const double r = totals(j, k) - n * pi(j, k);
      g(2 * k) += r;
      g(2 * k + 1) += r * t;
    }
  }
  return g;
}

Eigen::MatrixXd gate_hessian(double n, const TimeGrid& grid, const GateWeights& gate) {
  const GateMatrix pi = logistic_proportions(gate, grid);
  const Eigen::Index free_rows = pi.cols() - 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * free_rows, 2 * free_rows);
  for (Eigen::Index j = 0; j < pi.rows(); ++j) {
    const double t = grid[static_cast<std::size_t>(j)];
    const Eigen::Matrix2d xx{{1.0, t}, {t, t * t}};
    for (Eigen::Index k = 0; k < free_rows; ++k)
      for (Eigen::Index l = 0; l < free_rows; ++l) {
        const double c = -n * pi(j, k) * ((k == l ? 1.0 : 0.0) - pi(j, l));
        h.block<2, 2>(2 * k, 2 * l) += c * xx;
      }
  }
  return h;
}

IrlsResult irls_gate(const Responsibilities& tau, const TimeGrid& grid, const GateWeights& w_init,
                     const EmConfig& cfg) {
  return irls_gate(tau.totals(), static_cast<double>(tau.n()), grid, w_init, cfg);
}

IrlsResult irls_gate(const Eigen::MatrixXd& totals, double n, const TimeGrid& grid,
                     const GateWeights& w_init, const EmConfig& cfg) {
  const std::size_t K = w_init.K();
  IrlsResult res;
  res.gate = w_init;
  res.q1_initial = gate_objective(totals, grid, w_init);
  res.q1_final = res.q1_initial;
  if (K < 2) {
    res.converged = true;
    return res;
  }

  Eigen::VectorXd theta = w_init.free_parameters();
  double q1 = res.q1_initial;
  for (std::size_t it = 0; it < cfg.irls_max_iter; ++it) {
    const GateWeights current = GateWeights::from_free_parameters(theta, K);
    const Eigen::VectorXd g = gate_gradient(totals, n, grid, current);
    if (g.lpNorm<Eigen::Infinity>() < cfg.irls_grad_tol) {
      res.converged = true;
      break;
    }
    // Newton direction from (-H) d = g; -H is positive semi-definite.
    const Eigen::MatrixXd neg_h = -gate_hessian(n, grid, current);
    Eigen::VectorXd dir;
    double damping = 0.0;
    bool solved = false;
    for (int attempt = 0; attempt <= kMaxDampingRetries; ++attempt) {
      Eigen::MatrixXd a = neg_h;
      a.diagonal().array() += damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
          (ldlt.vectorD().array() > 0.0).all()) {
        dir = ldlt.solve(g);
        if (dir.allFinite()) {
          solved = true;
          break;
        }
      }
      damping = damping == 0.0 ? 1e-8 : damping * 10.0;
    }
    if (!solved) {
      res.warning = true;
      spdlog::warn("IRLS: Newton system singular after damping; keeping best iterate");
      break;
    }

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, step *= 0.5) {
      const Eigen::VectorXd cand = theta + step * dir;
      const double qc = gate_objective(totals, grid, GateWeights::from_free_parameters(cand, K));
      if (std::isfinite(qc) && qc >= q1) {
        improved = qc > q1;
        theta = cand;
        q1 = qc;
        break;
      }
    }
    res.iterations = it + 1;
    // No ascent left at working precision.
    if (!improved) break;
  }
  res.gate = GateWeights::from_free_parameters(theta, K);
  res.q1_final = q1;
  return res;
}

EmResult run_em(const CurveSet& curves, const RhlpModel& init, const EmConfig& cfg,
                const std::optional<Eigen::MatrixXd>& frozen_log_pi) {
  cfg.validate();
  init.validate();
  const double floor = variance_floor(curves);
  RhlpModel model = init;
  EmTrace trace;
  double prev = 0.0;
  for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
    const Eigen::MatrixXd log_pi = frozen_log_pi ? *frozen_log_pi : log_proportions(model.gate, model.grid);
    Responsibilities tau = e_step(log_pi, model.regimes, curves);
    if (!std::isfinite(tau.loglik)) throw FitError("log-likelihood is not finite");
    trace.logliks.push_back(tau.loglik);
    model.loglik = tau.loglik;
    if (iter > 0 && std::abs(tau.loglik - prev) <= cfg.tol * std::abs(prev)) {
      trace.converged = true;
      break;
    }
    prev = tau.loglik;
    if (iter + 1 == cfg.max_iter) break;

    BetaUpdate beta = m_step_beta(tau, curves, model.p);
    if (beta.any_starved()) throw FitError("a regime lost all responsibility (starved regime)");
    const std::vector<double> sigma2 = m_step_sigma(tau, curves, beta.betas, floor);
    for (std::size_t k = 0; k < model.K(); ++k) model.regimes[k] = {std::move(beta.betas[k]), sigma2[k]};
    if (!frozen_log_pi) model.gate = irls_gate(tau, model.grid, model.gate, cfg).gate;
  }
  trace.iterations = trace.logliks.size();
  return {std::move(model), std::move(trace), 0, 0};
}

EmResult fit_em(const CurveSet& curves, std::size_t K, int p, const EmConfig& cfg) {
  cfg.validate();
  if (K < 1) throw DomainError("K must be >= 1");
  if (p < 0) throw DomainError("p must be >= 0");
  if (K * static_cast<std::size_t>(p + 1) > curves.n() * curves.m())
    throw DomainError("K(p+1) exceeds the number of observations nm");
  if (K > curves.m()) throw DomainError("K exceeds the curve length m");

  const double floor = variance_floor(curves);
  const std::size_t m = curves.m();
  std::vector<std::optional<EmResult>> runs(cfg.restarts);
  std::vector<std::string> failures(cfg.restarts);

  parallel_for(cfg.restarts, cfg.threads, [&](std::size_t r) {
    std::vector<std::size_t> bounds;
    if (r == 0 || K == 1) {
      bounds = equal_bounds(m, K);
    } else {
      std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(r)};
      std::mt19937_64 rng(seq);
      bounds = random_bounds(m, K, rng);
    }
    try {
      EmResult run = run_em(curves, model_from_bounds(curves, bounds, p, floor), cfg);
      run.restart = r;
      runs[r] = std::move(run);
    } catch (const FitError& e) {
      failures[r] = e.what();
    }
  });

  std::optional<EmResult> best;
  std::size_t degenerate = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (!runs[r]) {
      ++degenerate;
      spdlog::debug("EM restart {} discarded: {}", r, failures[r]);
      continue;
    }
    if (!best || runs[r]->model.loglik > best->model.loglik) best = std::move(runs[r]);
  }
  if (!best) throw FitError("all " + std::to_string(cfg.restarts) + " EM restarts degenerated: " + failures[0]);
  best->degenerate = degenerate;
  return std::move(*best);
}

Eigen::VectorXd rhlp_approximation(const RhlpModel& model) {
  model.validate();
  const GateMatrix pi = logistic_proportions(model.gate, model.grid);
  const Eigen::MatrixXd mu = regime_means(model.regimes, model.grid);
  return pi.cwiseProduct(mu).rowwise().sum();
}

}  // namespace regimecurve
