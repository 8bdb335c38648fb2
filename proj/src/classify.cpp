#include "regimecurve/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "regimecurve/parallel.hpp"
#include "regimecurve/piecewise.hpp"

namespace regimecurve {

std::string_view family_name(Family family) {
  return family == Family::Rhlp ? "rhlp" : "piecewise";
}

Family parse_family(std::string_view name) {
  if (name == "rhlp") return Family::Rhlp;
  if (name == "piecewise") return Family::Piecewise;
  throw DomainError("unknown model family '" + std::string(name) + "' (expected rhlp or piecewise)");
}

namespace {

const TimeGrid& grid_of(const ClassConditional& model) {
  return std::visit([](const auto& mdl) -> const TimeGrid& { return mdl.grid; }, model);
}

}  // namespace

std::size_t Classifier::m() const { return classes.empty() ? 0 : grid_of(classes.front().model).size(); }

void Classifier::validate() const {
  if (classes.empty()) throw DomainError("classifier has no classes");
  double total = 0.0;
  for (std::size_t g = 0; g < classes.size(); ++g) {
    const auto& c = classes[g];
    if (!(c.prior > 0.0)) throw DomainError("class priors must be positive");
    total += c.prior;
    const bool is_rhlp = std::holds_alternative<RhlpModel>(c.model);
    if (is_rhlp != (family == Family::Rhlp)) throw DomainError("class model family mismatch");
    if (grid_of(c.model).size() != m()) throw DomainError("class models disagree on the curve length");
    if (g > 0 && !(classes[g - 1].label < c.label)) throw DomainError("class labels must be unique and increasing");
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("class priors must sum to one");
}

Classifier train(const std::vector<std::pair<int, CurveSet>>& classes, const FitSettings& settings) {
  if (classes.empty()) throw DomainError("train needs at least one class");
  std::vector<std::size_t> order(classes.size());
  for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return classes[a].first < classes[b].first; });

  double total = 0.0;
  for (const auto& [label, curves] : classes) {
    if (!(curves.grid() == classes.front().second.grid()))
      throw DomainError("class " + std::to_string(label) + " uses a different time grid");
    total += static_cast<double>(curves.n());
  }

  Classifier clf;
  clf.family = settings.family;
  for (std::size_t g : order) {
    const auto& [label, curves] = classes[g];
    if (!clf.classes.empty() && clf.classes.back().label == label)
      throw DomainError("duplicate class label " + std::to_string(label));
    try {
      ClassConditional model = settings.family == Family::Rhlp
                                   ? ClassConditional(fit_em(curves, settings.K, settings.p, settings.em).model)
                                   : ClassConditional(fisher_segment(curves, settings.K, settings.p, settings.min_segment));
      clf.classes.push_back({label, static_cast<double>(curves.n()) / total, std::move(model)});
    } catch (const std::exception& e) {
      throw FitError("training class " + std::to_string(label) + " failed: " + e.what());
    }
  }
  return clf;
}

Classifier train(const LabeledCurves& data, const FitSettings& settings) {
  if (data.labels.size() != data.curves.n()) throw DomainError("label count differs from curve count");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.labels.size(); ++i) groups[data.labels[i]].push_back(i);
  std::vector<std::pair<int, CurveSet>> classes;
  for (const auto& [label, rows] : groups) classes.emplace_back(label, data.curves.subset(rows));
  return train(classes, settings);
}

double class_log_density(const ClassConditional& model, std::span<const double> curve) {
  if (const auto* pw = std::get_if<PiecewiseModel>(&model)) {
    if (curve.size() != pw->grid.size()) throw DomainError("curve length differs from the model grid");
    double total = 0.0;
    for (std::size_t k = 0; k < pw->K(); ++k) {
      const auto& reg = pw->regimes[k];
      for (std::size_t j = pw->gamma[k]; j < pw->gamma[k + 1]; ++j)
        total += gaussian_logpdf(curve[j], reg.mean_at(pw->grid[j]), reg.sigma2);
    }
    return total;
  }
  const auto& rh = std::get<RhlpModel>(model);
  if (curve.size() != rh.grid.size()) throw DomainError("curve length differs from the model grid");
  const Eigen::MatrixXd log_pi = log_proportions(rh.gate, rh.grid);
  std::vector<double> terms(rh.K());
  double total = 0.0;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    for (std::size_t k = 0; k < rh.K(); ++k) {
      const auto& reg = rh.regimes[k];
      terms[k] = log_pi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) +
                 gaussian_logpdf(curve[j], reg.mean_at(rh.grid[j]), reg.sigma2);
    }
    total += log_sum_exp(terms);
  }
  return total;
}

Eigen::VectorXd class_posteriors(const Classifier& classifier, std::span<const double> curve) {
  const auto G = static_cast<Eigen::Index>(classifier.G());
  if (G == 0) throw DomainError("classifier has no classes");
  std::vector<double> logpost(classifier.G());
  for (std::size_t g = 0; g < classifier.G(); ++g) {
    const auto& c = classifier.classes[g];
    logpost[g] = std::log(c.prior) + class_log_density(c.model, curve);
  }
  const double norm = log_sum_exp(logpost);
  Eigen::VectorXd post(G);
  for (Eigen::Index g = 0; g < G; ++g) post(g) = std::exp(logpost[static_cast<std::size_t>(g)] - norm);
  post /= post.sum();
  return post;
}

int predict(const Classifier& classifier, std::span<const double> curve) {
  const Eigen::VectorXd post = class_posteriors(classifier, curve);
  Eigen::Index best = 0;
  for (Eigen::Index g = 1; g < post.size(); ++g)
    if (post(g) > post(best)) best = g;
  return classifier.classes[static_cast<std::size_t>(best)].label;
}

std::vector<int> predict(const Classifier& classifier, const CurveSet& curves, unsigned threads) {
  std::vector<int> labels(curves.n());
  parallel_for(curves.n(), threads, [&](std::size_t i) {
    const Eigen::VectorXd row = curves.values().row(static_cast<Eigen::Index>(i)).transpose();
    labels[i] = predict(classifier, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  });
  return labels;
}

}  // namespace regimecurve
