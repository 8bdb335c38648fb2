#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "regimecurve/classify.hpp"
#include "regimecurve/core.hpp"
#include "regimecurve/eval.hpp"
#include "regimecurve/select.hpp"
#include "regimecurve/simulate.hpp"

namespace regimecurve {

/// Malformed input file or unwritable output.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly `v` (locale independent).
std::string format_number(double v);

// Curves CSV: line 1 holds the m time stamps, each further line one curve.
CurveSet parse_curves(const std::string& text, const std::string& source = "<input>");
CurveSet read_curves(const std::filesystem::path& path);
std::string format_curves(const CurveSet& curves);
void write_curves(const std::filesystem::path& path, const CurveSet& curves);

// Labels CSV: one integer per line.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

using AnyModel = std::variant<PiecewiseModel, RhlpModel, Classifier>;

nlohmann::json model_to_json(const AnyModel& model);
/// Throws DataError naming the JSON path of the first schema violation.
AnyModel model_from_json(const nlohmann::json& doc);

void write_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel read_model(const std::filesystem::path& path);

/// TSV for external plotting: t, mean, fit, then pi_1..pi_K (RHLP) or label (piecewise).
std::string format_plot_data(const std::variant<PiecewiseModel, RhlpModel>& model, const CurveSet& curves);
void emit_plot_data(const std::variant<PiecewiseModel, RhlpModel>& model, const CurveSet& curves,
                    const std::filesystem::path& path);

nlohmann::json to_json(const BicReport& report);
std::string to_tsv(const BicReport& report);
nlohmann::json to_json(const CvReport& report);
std::string to_tsv(const CvReport& report);
nlohmann::json to_json(const BenchReport& report);
std::string to_tsv(const BenchReport& report);

/// TSV with columns t, mean, z for a simulated sample.
std::string format_truth(const SimResult& sim);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace regimecurve
