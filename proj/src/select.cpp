#include "regimecurve/select.hpp"

#include <cmath>
#include <optional>

#include "regimecurve/parallel.hpp"

namespace regimecurve {

std::size_t parameter_count(std::size_t K, int p) {
  if (K < 1 || p < 0) throw DomainError("parameter_count needs K >= 1 and p >= 0");
  return K * static_cast<std::size_t>(p + 4) - 2;
}

double bic_value(double loglik, std::size_t K, int p, std::size_t n, std::size_t m) {
  const double nm = static_cast<double>(n) * static_cast<double>(m);
  return loglik - static_cast<double>(parameter_count(K, p)) * std::log(nm) / 2.0;
}

double bic(const RhlpModel& model, const CurveSet& curves) {
  return bic_value(rhlp_loglik(model, curves), model.K(), model.p, curves.n(), curves.m());
}

BicReport grid_select(const CurveSet& curves, const std::vector<std::size_t>& K_range,
                      const std::vector<int>& p_range, const EmConfig& cfg) {
  if (K_range.empty() || p_range.empty()) throw DomainError("grid_select needs non-empty K and p ranges");

  struct Cell {
    std::size_t K;
    int p;
  };
  std::vector<Cell> cells;
  for (std::size_t K : K_range)
    for (int p : p_range) cells.push_back({K, p});

  std::vector<std::optional<BicRow>> rows(cells.size());
  std::vector<std::string> errors(cells.size());
  // Cells run in parallel; each restart loop inside stays sequential.
  EmConfig inner = cfg;
  inner.threads = 1;
  parallel_for(cells.size(), cfg.threads, [&](std::size_t c) {
    const auto [K, p] = cells[c];
    try {
      const EmResult fit = fit_em(curves, K, p, inner);
      BicRow row{K, p, fit.model.loglik, parameter_count(K, p), 0.0};
      row.bic = bic_value(row.loglik, K, p, curves.n(), curves.m());
      rows[c] = row;
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  });

  BicReport report;
  report.n = curves.n();
  report.m = curves.m();
  const BicRow* best = nullptr;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!rows[c]) {
      report.failures.push_back({cells[c].K, cells[c].p, errors[c]});
      continue;
    }
    report.rows.push_back(*rows[c]);
  }
  if (report.rows.empty()) throw FitError("grid_select: every (K, p) cell failed");
  for (const auto& row : report.rows) {
    const bool better = !best || row.bic > best->bic ||
                        (row.bic == best->bic && (row.K < best->K || (row.K == best->K && row.p < best->p)));
    if (better) best = &row;
  }
  report.best_K = best->K;
  report.best_p = best->p;
  return report;
}

}  // namespace regimecurve
