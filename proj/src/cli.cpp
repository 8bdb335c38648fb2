#include "regimecurve/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "regimecurve/eval.hpp"
#include "regimecurve/io.hpp"
#include "regimecurve/parallel.hpp"
#include "regimecurve/piecewise.hpp"
#include "regimecurve/rhlp.hpp"
#include "regimecurve/select.hpp"
#include "regimecurve/simulate.hpp"

namespace regimecurve::cli {

using nlohmann::json;

EmConfig RunConfig::em() const {
  EmConfig cfg;
  cfg.max_iter = max_iter;
  cfg.tol = tol;
  cfg.restarts = restarts;
  cfg.seed = seed;
  cfg.threads = threads == 0 ? default_threads() : threads;
  return cfg;
}

namespace {

template <class T>
T parse_integer(std::string_view text, const std::string& flag) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw UsageError(flag + ": not an integer: '" + std::string(text) + "'");
  return v;
}

// "a:b" (inclusive) or "a,b,c".
template <class T>
std::vector<T> parse_range(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    const T lo = parse_integer<T>(std::string_view(text).substr(0, colon), flag);
    const T hi = parse_integer<T>(std::string_view(text).substr(colon + 1), flag);
    if (hi < lo) throw UsageError(flag + ": empty range '" + text + "'");
    for (T v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse_integer<T>(std::string_view(text).substr(start, comma - start), flag));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

struct Raw {
  long long K = -1;
  long long p = -1;
  std::string family = "rhlp";
  std::string K_range;
  std::string p_range;
  long long folds = 5;
  long long max_iter = 1000;
  long long restarts = 5;
  long long threads = 0;
  long long min_segment = 1;
  long long n = 0;
  long long m = 0;
  long long n_per_class = 500;
  long long repetitions = 3;
  std::string bench_n;
  std::string bench_m;
  std::string methods;
};

void validate(RunConfig& cfg, const Raw& raw, bool needs_model_dims) {
  if (needs_model_dims || raw.K != -1) {
    require(raw.K >= 1, "K must be ≥ 1");
    cfg.K = static_cast<std::size_t>(raw.K);
  }
  if (needs_model_dims || raw.p != -1) {
    require(raw.p >= 0, "p must be ≥ 0");
    cfg.p = static_cast<int>(raw.p);
  }
  try {
    cfg.family = parse_family(raw.family);
  } catch (const DomainError& e) {
    throw UsageError(std::string("--family: ") + e.what());
  }
  if (!raw.K_range.empty()) cfg.K_range = parse_range<std::size_t>(raw.K_range, "--K-range");
  if (!raw.p_range.empty()) cfg.p_range = parse_range<int>(raw.p_range, "--p-range");
  for (std::size_t k : cfg.K_range) require(k >= 1, "--K-range: K must be ≥ 1");
  for (int q : cfg.p_range) require(q >= 0, "--p-range: p must be ≥ 0");
  require(raw.folds >= 2, "folds must be ≥ 2");
  cfg.folds = static_cast<std::size_t>(raw.folds);
  require(cfg.tol > 0.0, "tol must be > 0");
  require(raw.max_iter >= 1, "max-iter must be ≥ 1");
  cfg.max_iter = static_cast<std::size_t>(raw.max_iter);
  require(raw.restarts >= 1, "restarts must be ≥ 1");
  cfg.restarts = static_cast<std::size_t>(raw.restarts);
  require(raw.threads >= 0, "threads must be ≥ 0");
  cfg.threads = static_cast<unsigned>(raw.threads);
  require(raw.min_segment >= 1, "min-segment must be ≥ 1");
  cfg.min_segment = static_cast<std::size_t>(raw.min_segment);
  require(raw.n >= 0 && raw.m >= 0, "n and m must be ≥ 0");
  cfg.n = static_cast<std::size_t>(raw.n);
  cfg.m = static_cast<std::size_t>(raw.m);
  require(raw.n_per_class >= 1, "n-per-class must be ≥ 1");
  cfg.n_per_class = static_cast<std::size_t>(raw.n_per_class);
  require(raw.repetitions >= 1, "repetitions must be ≥ 1");
  cfg.repetitions = static_cast<std::size_t>(raw.repetitions);
  if (!raw.bench_n.empty()) cfg.bench_n = parse_range<std::size_t>(raw.bench_n, "--n-values");
  if (!raw.bench_m.empty()) cfg.bench_m = parse_range<std::size_t>(raw.bench_m, "--m-values");
  if (!raw.methods.empty()) {
    cfg.bench_methods.clear();
    std::size_t start = 0;
    while (true) {
      const auto comma = raw.methods.find(',', start);
      try {
        cfg.bench_methods.push_back(parse_family(raw.methods.substr(start, comma - start)));
      } catch (const DomainError& e) {
        throw UsageError(std::string("--methods: ") + e.what());
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
}

CurveSet load_curves(const RunConfig& cfg) {
  CurveSet curves = read_curves(cfg.input);
  if (!cfg.standardize_time || curves.m() < 2) return curves;
  const TimeGrid& g = curves.grid();
  std::vector<double> t(g.size());
  const double span = g.back() - g.front();
  for (std::size_t j = 0; j < g.size(); ++j) t[j] = (g[j] - g.front()) / span;
  return CurveSet(TimeGrid(std::move(t)), curves.values());
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Reports go to `path` as TSV when it ends in .tsv, JSON otherwise; to `out` as TSV without a path.
void emit_report(const std::string& path, const json& doc, const std::string& tsv, std::ostream& out) {
  if (path.empty()) {
    out << tsv;
  } else if (ends_with(path, ".tsv")) {
    write_text(path, tsv);
  } else {
    write_text(path, doc.dump(2) + "\n");
  }
}

void emit_json(const std::string& path, const json& doc, std::ostream& out) {
  if (path.empty())
    out << doc.dump(2) << '\n';
  else
    write_text(path, doc.dump(2) + "\n");
}

void run_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto pick = [](std::size_t given, std::size_t fallback) { return given == 0 ? fallback : given; };
  std::optional<SimResult> sim;
  std::optional<LabeledCurves> labeled;
  if (cfg.scenario == "smoothness") {
    SimSpec spec = smoothness_spec(cfg.level);
    spec.n = pick(cfg.n, spec.n);
    spec.m = pick(cfg.m, spec.m);
    spec.seed = cfg.seed;
    sim = sample_rhlp(spec);
  } else if (cfg.scenario == "experiment23") {
    SimSpec spec = experiment23_spec(pick(cfg.n, 10), pick(cfg.m, 100));
    spec.seed = cfg.seed;
    sim = sample_rhlp(spec);
  } else if (cfg.scenario == "rhlp") {
    const AnyModel model = read_model(cfg.model_in);
    const auto* rh = std::get_if<RhlpModel>(&model);
    if (rh == nullptr) throw DataError(cfg.model_in + ": scenario rhlp needs an RHLP model");
    sim = sample_rhlp(spec_from_model(*rh, pick(cfg.n, 10), cfg.seed));
  } else if (cfg.scenario == "waveform") {
    labeled = waveform(cfg.n_per_class, cfg.seed, !cfg.waveform_exclusive);
  } else if (cfg.scenario == "complex" || cfg.scenario == "homogeneous") {
    const auto models = standin_complex_models(pick(cfg.m, 100));
    labeled = cfg.scenario == "complex" ? complex_classes(models[0], models[1], models[2], cfg.seed)
                                        : homogeneous_classes(models[0], models[2], cfg.seed);
  } else {
    throw UsageError("--scenario: unknown scenario '" + cfg.scenario + "'");
  }

  const CurveSet& curves = sim ? sim->curves : labeled->curves;
  write_curves(cfg.output, curves);
  if (labeled && !cfg.labels.empty()) write_labels(cfg.labels, labeled->labels);
  if (sim && !cfg.truth.empty()) write_text(cfg.truth, format_truth(*sim));
  out << "wrote " << curves.n() << " curves x " << curves.m() << " points to " << cfg.output << '\n';
}

void run_fit(const RunConfig& cfg, std::ostream& out) {
  const CurveSet curves = load_curves(cfg);
  const EmResult r = fit_em(curves, cfg.K, cfg.p, cfg.em());
  const json summary = {{"family", "rhlp"},
                        {"K", cfg.K},
                        {"p", cfg.p},
                        {"loglik", r.model.loglik},
                        {"bic", bic_value(r.model.loglik, cfg.K, cfg.p, curves.n(), curves.m())},
                        {"iterations", r.trace.iterations},
                        {"converged", r.trace.converged},
                        {"restart", r.restart},
                        {"discarded_restarts", r.degenerate}};
  if (!cfg.model_out.empty()) write_model(cfg.model_out, r.model);
  if (!cfg.emit_plot.empty()) emit_plot_data(r.model, curves, cfg.emit_plot);
  emit_json(cfg.output, summary, out);
}

void run_segment(const RunConfig& cfg, std::ostream& out) {
  const CurveSet curves = load_curves(cfg);
  const PiecewiseModel model = fisher_segment(curves, cfg.K, cfg.p, cfg.min_segment);
  const json summary = {{"family", "piecewise"},
                        {"K", cfg.K},
                        {"p", cfg.p},
                        {"gamma", model.gamma},
                        {"cost", model.cost},
                        {"loglik", piecewise_loglik(model, curves)}};
  if (!cfg.model_out.empty()) write_model(cfg.model_out, model);
  if (!cfg.emit_plot.empty()) emit_plot_data(model, curves, cfg.emit_plot);
  emit_json(cfg.output, summary, out);
}

void run_select(const RunConfig& cfg, std::ostream& out) {
  const CurveSet curves = load_curves(cfg);
  const BicReport report = grid_select(curves, cfg.K_range, cfg.p_range, cfg.em());
  emit_report(cfg.output, to_json(report), to_tsv(report), out);
}

FitSettings fit_settings(const RunConfig& cfg) {
  FitSettings s;
  s.family = cfg.family;
  s.K = cfg.K;
  s.p = cfg.p;
  s.em = cfg.em();
  s.min_segment = cfg.min_segment;
  return s;
}

LabeledCurves load_labeled(const RunConfig& cfg) {
  CurveSet curves = load_curves(cfg);
  std::vector<int> labels = read_labels(cfg.labels);
  if (labels.size() != curves.n())
    throw DataError(cfg.labels + ": " + std::to_string(labels.size()) + " labels for " + std::to_string(curves.n()) +
                    " curves");
  return {std::move(curves), std::move(labels)};
}

void run_classify(const RunConfig& cfg, std::ostream& out) {
  Classifier clf;
  if (!cfg.model_in.empty()) {
    AnyModel model = read_model(cfg.model_in);
    auto* c = std::get_if<Classifier>(&model);
    if (c == nullptr) throw DataError(cfg.model_in + ": not a classifier model");
    clf = std::move(*c);
  } else {
    require(!cfg.labels.empty(), "classify: training needs --labels (or pass --model-in to predict)");
    require(cfg.K >= 1, "K must be ≥ 1");
    clf = train(load_labeled(cfg), fit_settings(cfg));
    if (!cfg.model_out.empty()) write_model(cfg.model_out, clf);
    if (cfg.output.empty() && !cfg.model_out.empty()) return;
  }

  const CurveSet curves = load_curves(cfg);
  if (curves.m() != clf.m()) throw DataError(cfg.input + ": curves have a different grid size than the classifier");
  const unsigned threads = cfg.threads == 0 ? default_threads() : cfg.threads;
  std::vector<Eigen::VectorXd> post(curves.n());
  std::vector<int> labels(curves.n());
  parallel_for(curves.n(), threads, [&](std::size_t i) {
    const Eigen::VectorXd row = curves.values().row(static_cast<Eigen::Index>(i)).transpose();
    const std::span<const double> view(row.data(), static_cast<std::size_t>(row.size()));
    post[i] = class_posteriors(clf, view);
    labels[i] = predict(clf, view);
  });

  std::string text = "label";
  for (const auto& c : clf.classes) text += ",post_" + std::to_string(c.label);
  text += '\n';
  for (std::size_t i = 0; i < curves.n(); ++i) {
    text += std::to_string(labels[i]);
    for (Eigen::Index g = 0; g < post[i].size(); ++g) text += ',' + format_number(post[i](g));
    text += '\n';
  }
  if (cfg.output.empty())
    out << text;
  else
    write_text(cfg.output, text);
}

void run_cv(const RunConfig& cfg, std::ostream& out) {
  const LabeledCurves data = load_labeled(cfg);
  const unsigned threads = cfg.threads == 0 ? default_threads() : cfg.threads;
  const CvReport report = kfold_cv(data, cfg.folds, fit_settings(cfg), cfg.seed, threads);
  emit_report(cfg.output, to_json(report), to_tsv(report), out);
}

void run_bench(const RunConfig& cfg, std::ostream& out) {
  std::vector<BenchCell> cells;
  for (std::size_t n : cfg.bench_n)
    for (std::size_t m : cfg.bench_m) cells.push_back({n, m});
  FitSettings s = fit_settings(cfg);
  if (s.K == 0) s.K = 3;
  const BenchReport report = runtime_bench(cells, cfg.bench_methods, cfg.repetitions, cfg.seed, s);
  emit_report(cfg.output, to_json(report), to_tsv(report), out);
}

void configure_logging() {
  auto logger = spdlog::get("regimecurve");
  if (!logger) {
    logger = spdlog::stderr_color_mt("regimecurve");
    spdlog::set_default_logger(logger);
  }
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("REGIMECURVE_LOG"); env != nullptr && *env != '\0')
    level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

}  // namespace

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig cfg;
  Raw raw;

  CLI::App app{"Curve modeling with regime changes: piecewise regression and hidden logistic process models.",
               "regimecurve"};
  app.require_subcommand(1);

  const auto add_fit_flags = [&](CLI::App* sub, bool model_dims_required) {
    auto* k = sub->add_option("--K", raw.K, "number of regimes");
    auto* q = sub->add_option("--p", raw.p, "polynomial degree");
    if (model_dims_required) {
      k->required();
      q->required();
    }
    sub->add_option("--tol", cfg.tol, "EM relative log-likelihood tolerance");
    sub->add_option("--max-iter", raw.max_iter, "EM iteration cap");
    sub->add_option("--restarts", raw.restarts, "EM restarts");
    sub->add_option("--min-segment", raw.min_segment, "minimum samples per piecewise segment");
  };
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--threads", raw.threads, "worker threads (0 = available parallelism)");
  };

  auto* simulate = app.add_subcommand("simulate", "generate a simulated curve sample");
  simulate->add_option("--scenario", cfg.scenario,
                       "smoothness | experiment23 | rhlp | waveform | complex | homogeneous");
  simulate->add_option("--level", cfg.level, "smoothness level 1..10");
  simulate->add_option("--n", raw.n, "curves (0 = scenario default)");
  simulate->add_option("--m", raw.m, "points per curve (0 = scenario default)");
  simulate->add_option("--n-per-class", raw.n_per_class, "waveform curves per class");
  simulate->add_flag("--waveform-20", cfg.waveform_exclusive, "waveform grid t = 0..19 instead of 0..20");
  simulate->add_option("--model-in", cfg.model_in, "RHLP model for scenario rhlp");
  simulate->add_option("--output", cfg.output, "curves CSV")->required();
  simulate->add_option("--labels", cfg.labels, "labels CSV (labeled scenarios)");
  simulate->add_option("--truth", cfg.truth, "TSV with true mean curve and hidden labels");
  add_common(simulate);

  auto* fit = app.add_subcommand("fit", "fit an RHLP model by EM");
  auto* segment = app.add_subcommand("segment", "optimal piecewise polynomial segmentation");
  for (auto* sub : {fit, segment}) {
    sub->add_option("--input", cfg.input, "curves CSV")->required();
    sub->add_option("--output", cfg.output, "summary JSON (default stdout)");
    sub->add_option("--model-out", cfg.model_out, "model JSON");
    sub->add_option("--emit-plot", cfg.emit_plot, "plot TSV");
    sub->add_flag("--standardize-time", cfg.standardize_time, "rescale time to [0,1]");
    add_fit_flags(sub, true);
    add_common(sub);
  }

  auto* select = app.add_subcommand("select", "BIC grid search over (K, p)");
  select->add_option("--input", cfg.input, "curves CSV")->required();
  select->add_option("--output", cfg.output, "report (.tsv or JSON; default TSV on stdout)");
  select->add_option("--K-range", raw.K_range, "K values, a:b or a,b,c (default 1:5)");
  select->add_option("--p-range", raw.p_range, "p values, a:b or a,b,c (default 0:3)");
  select->add_flag("--standardize-time", cfg.standardize_time, "rescale time to [0,1]");
  add_fit_flags(select, false);
  add_common(select);

  auto* classify = app.add_subcommand("classify", "train a MAP classifier or label curves with one");
  classify->add_option("--input", cfg.input, "curves CSV")->required();
  classify->add_option("--labels", cfg.labels, "training labels CSV");
  classify->add_option("--model-in", cfg.model_in, "trained classifier JSON");
  classify->add_option("--model-out", cfg.model_out, "write the trained classifier");
  classify->add_option("--output", cfg.output, "predictions CSV: label, post_g... (default stdout)");
  classify->add_option("--family", raw.family, "rhlp | piecewise");
  classify->add_flag("--standardize-time", cfg.standardize_time, "rescale time to [0,1]");
  add_fit_flags(classify, false);
  add_common(classify);

  auto* cv = app.add_subcommand("cv", "stratified k-fold misclassification rate");
  cv->add_option("--input", cfg.input, "curves CSV")->required();
  cv->add_option("--labels", cfg.labels, "labels CSV")->required();
  cv->add_option("--output", cfg.output, "report (.tsv or JSON; default TSV on stdout)");
  cv->add_option("--family", raw.family, "rhlp | piecewise");
  cv->add_option("--folds", raw.folds, "number of folds");
  cv->add_flag("--standardize-time", cfg.standardize_time, "rescale time to [0,1]");
  add_fit_flags(cv, true);
  add_common(cv);

  auto* bench = app.add_subcommand("bench", "runtime scaling on simulated data");
  bench->add_option("--n-values", raw.bench_n, "curve counts, a:b or a,b,c");
  bench->add_option("--m-values", raw.bench_m, "curve lengths, a:b or a,b,c");
  bench->add_option("--methods", raw.methods, "comma list of rhlp, piecewise");
  bench->add_option("--repetitions", raw.repetitions, "timed repetitions per cell");
  bench->add_option("--output", cfg.output, "report (.tsv or JSON; default TSV on stdout)");
  add_fit_flags(bench, false);
  add_common(bench);

  std::vector<std::string> owned;
  owned.reserve(args.size() + 1);
  owned.push_back("regimecurve");
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : owned) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  bool dims = false;
  if (simulate->parsed()) {
    cfg.subcommand = Subcommand::Simulate;
  } else if (fit->parsed()) {
    cfg.subcommand = Subcommand::Fit;
    dims = true;
  } else if (segment->parsed()) {
    cfg.subcommand = Subcommand::Segment;
    dims = true;
  } else if (select->parsed()) {
    cfg.subcommand = Subcommand::Select;
  } else if (classify->parsed()) {
    cfg.subcommand = Subcommand::Classify;
  } else if (cv->parsed()) {
    cfg.subcommand = Subcommand::Cv;
    dims = true;
  } else {
    cfg.subcommand = Subcommand::Bench;
  }
  validate(cfg, raw, dims);
  if (cfg.subcommand == Subcommand::Segment) cfg.family = Family::Piecewise;
  if (cfg.subcommand == Subcommand::Bench && raw.p == -1) cfg.p = 2;
  if (cfg.subcommand == Subcommand::Classify && cfg.model_in.empty()) {
    require(!cfg.labels.empty(), "classify: pass --model-in to predict, or --labels --K --p to train");
    require(cfg.K >= 1, "K must be ≥ 1");
    require(raw.p != -1, "classify: training needs --p");
  }
  if (cfg.subcommand == Subcommand::Simulate) {
    require(cfg.scenario != "rhlp" || !cfg.model_in.empty(), "simulate: scenario rhlp needs --model-in");
  }
  return cfg;
}

void run(const RunConfig& cfg, std::ostream& out) {
  switch (cfg.subcommand) {
    case Subcommand::Simulate: run_simulate(cfg, out); break;
    case Subcommand::Fit: run_fit(cfg, out); break;
    case Subcommand::Segment: run_segment(cfg, out); break;
    case Subcommand::Select: run_select(cfg, out); break;
    case Subcommand::Classify: run_classify(cfg, out); break;
    case Subcommand::Cv: run_cv(cfg, out); break;
    case Subcommand::Bench: run_bench(cfg, out); break;
  }
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  RunConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for the subcommand grammar\n";
    return 2;
  }
  try {
    run(cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace regimecurve::cli
