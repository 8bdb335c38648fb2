#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "regimecurve/core.hpp"

namespace regimecurve {

/// Parameters of the hidden-logistic-process generator.  `sigmas` are noise
/// standard deviations (not variances); zero is allowed.
struct SimSpec {
  std::size_t K = 1;
  int p = 0;
  std::vector<Eigen::VectorXd> betas;
  /// K x 2 gate weights.
  Eigen::MatrixXd w;
  std::vector<double> sigmas;
  std::size_t n = 1;
  std::size_t m = 2;
  double t_start = 0.0;
  double t_end = 1.0;
  std::uint64_t seed = 42;

  void validate() const;
  TimeGrid grid() const;
};

struct SimResult {
  CurveSet curves;
  /// Noise-free expected curve sum_k pi_jk beta_k^T r_j.
  Eigen::VectorXd mean;
  /// Drawn regime label (1-based) per sample, shared by all curves.
  std::vector<std::size_t> z;
};

/// Draws one hidden process z, then n curves x_ij ~ N(beta_{z_j}^T r_j, sigma_{z_j}^2).
/// Each curve uses its own RNG stream derived from the seed.
SimResult sample_rhlp(const SimSpec& spec);

/// Divisors applied to the gate weights for smoothness levels 1..10.
inline constexpr std::array<double, 10> kSmoothnessDivisors = {1, 2, 5, 10, 20, 40, 50, 80, 100, 125};

/// Three constant regimes (0, 10, 5) with abrupt-to-smooth transitions near
/// t = 1 and t = 3; n = 10, m = 100, t in [0, 5], sigma = 2.  Both gate
/// coefficients are divided by the level's divisor.
SimSpec smoothness_spec(int level);

/// Three quadratic regimes with transitions near t = 1 and t = 4; t in [0, 5].
SimSpec experiment23_spec(std::size_t n, std::size_t m);

/// Triangular base wave h1(t) = max(6 - |t - 11|, 0).
double waveform_base(double t);

/// Breiman's three-class waveforms on t = 0, 1, ..., 20 (or 0..19 when
/// `inclusive_end` is false).  Labels are 1, 2, 3, grouped by class.
LabeledCurves waveform(std::size_t n_per_class, std::uint64_t seed, bool inclusive_end = true);

/// Stand-in generators for the heterogeneous-class scenario: three quadratic
/// three-regime models sharing one gate and differing in their middle regime.
std::array<RhlpModel, 3> standin_complex_models(std::size_t m = 100);

/// Class 1 = 15 curves from `a` + 25 from `b`; class 2 = 17 from `b` + 20 from `c`.
LabeledCurves complex_classes(const RhlpModel& a, const RhlpModel& b, const RhlpModel& c,
                              std::uint64_t seed);

/// Homogeneous reference with the same class sizes: 40 curves from `a`, 37 from `c`.
LabeledCurves homogeneous_classes(const RhlpModel& a, const RhlpModel& c, std::uint64_t seed);

/// SimSpec that reproduces `model` (sigmas = sqrt(sigma2)).
SimSpec spec_from_model(const RhlpModel& model, std::size_t n, std::uint64_t seed);

}  // namespace regimecurve
