#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "regimecurve/core.hpp"
#include "regimecurve/rhlp.hpp"

namespace regimecurve {

/// Free parameter count K(p+4) - 2 of an RHLP model with the reference gate row pinned.
std::size_t parameter_count(std::size_t K, int p);

/// L - nu(K,p) log(nm) / 2 for a log-likelihood obtained on an n x m curve set.
double bic_value(double loglik, std::size_t K, int p, std::size_t n, std::size_t m);

/// BIC of `model` on the curves it was fitted to (log-likelihood recomputed).
double bic(const RhlpModel& model, const CurveSet& curves);

struct BicRow {
  std::size_t K = 0;
  int p = 0;
  double loglik = 0.0;
  std::size_t nu = 0;
  double bic = 0.0;
};

struct BicFailure {
  std::size_t K = 0;
  int p = 0;
  std::string reason;
};

struct BicReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<BicRow> rows;
  std::vector<BicFailure> failures;
  std::size_t best_K = 0;
  int best_p = 0;
};

/// Fits every (K, p) cell with fit_em and keeps the BIC maximizer; ties go to
/// the smaller K, then the smaller p.  Cells that fail are listed in
/// `failures`; throws FitError only if every cell fails.
BicReport grid_select(const CurveSet& curves, const std::vector<std::size_t>& K_range,
                      const std::vector<int>& p_range, const EmConfig& cfg);

}  // namespace regimecurve
