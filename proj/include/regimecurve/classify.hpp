#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "regimecurve/core.hpp"
#include "regimecurve/rhlp.hpp"

namespace regimecurve {

enum class Family { Rhlp, Piecewise };

std::string_view family_name(Family family);
/// Parses "rhlp" or "piecewise"; throws DomainError otherwise.
Family parse_family(std::string_view name);

/// Everything needed to fit one model of either family.
struct FitSettings {
  Family family = Family::Rhlp;
  std::size_t K = 1;
  int p = 0;
  EmConfig em;
  /// Minimum segment length for the piecewise family.
  std::size_t min_segment = 1;
};

using ClassConditional = std::variant<PiecewiseModel, RhlpModel>;

struct ClassModel {
  int label = 0;
  double prior = 0.0;
  ClassConditional model;
};

/// Generative MAP classifier: one fitted model and one prior per class, all of
/// the same family.  Classes are kept in increasing label order.
struct Classifier {
  Family family = Family::Rhlp;
  std::vector<ClassModel> classes;

  std::size_t G() const { return classes.size(); }
  std::size_t m() const;
  void validate() const;
};

/// Fits each class independently; prior_g = n_g / sum n.
Classifier train(const std::vector<std::pair<int, CurveSet>>& classes, const FitSettings& settings);
/// Groups rows of `data` by label first.
Classifier train(const LabeledCurves& data, const FitSettings& settings);

/// log p(x | model) for one curve on the model's grid.
double class_log_density(const ClassConditional& model, std::span<const double> curve);

/// Posterior class probabilities, normalized in log-space.
Eigen::VectorXd class_posteriors(const Classifier& classifier, std::span<const double> curve);

/// MAP label; ties go to the class listed first (smallest label).
int predict(const Classifier& classifier, std::span<const double> curve);

/// Batch prediction over the rows of `curves`.
std::vector<int> predict(const Classifier& classifier, const CurveSet& curves, unsigned threads = 1);

}  // namespace regimecurve
