#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "regimecurve/classify.hpp"

namespace regimecurve::cli {

/// Bad command line; maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Subcommand { Simulate, Fit, Segment, Select, Classify, Cv, Bench };

struct RunConfig {
  Subcommand subcommand = Subcommand::Fit;

  std::string input;
  std::string labels;
  std::string output;
  std::string model_in;
  std::string model_out;
  std::string emit_plot;
  std::string truth;

  Family family = Family::Rhlp;
  std::size_t K = 0;
  int p = 0;
  std::vector<std::size_t> K_range{1, 2, 3, 4, 5};
  std::vector<int> p_range{0, 1, 2, 3};
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  std::size_t restarts = 5;
  unsigned threads = 0;
  std::size_t min_segment = 1;
  bool standardize_time = false;

  // simulate
  std::string scenario = "experiment23";
  int level = 1;
  /// 0 selects the scenario's own default.
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t n_per_class = 500;
  bool waveform_exclusive = false;

  // bench
  std::vector<std::size_t> bench_n{10, 20};
  std::vector<std::size_t> bench_m{100, 200};
  std::vector<Family> bench_methods{Family::Piecewise, Family::Rhlp};
  std::size_t repetitions = 3;

  /// EmConfig assembled from the shared fitting flags.
  EmConfig em() const;
};

/// Parses the arguments after the program name.  Throws UsageError, or
/// HelpRequested when --help was given.
RunConfig parse_args(const std::vector<std::string>& args);

/// Carries the help text for --help.
struct HelpRequested {
  std::string text;
};

/// Executes a parsed configuration.  Results without an output path go to `out`.
void run(const RunConfig& config, std::ostream& out);

/// parse_args + run with the exit-code contract: 0 success, 1 data or runtime
/// error, 2 usage error.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace regimecurve::cli
