#include "regimecurve/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

#include "regimecurve/piecewise.hpp"
#include "regimecurve/rhlp.hpp"

namespace regimecurve {

using nlohmann::json;

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_cell(std::string_view cell, const std::string& source, std::size_t line, std::size_t col) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw DataError(source + ": line " + std::to_string(line) + ", column " + std::to_string(col) +
                    ": not a finite number: '" + std::string(cell) + "'");
  return v;
}

// Non-blank lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string_view>> content_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t start = 0;
  std::size_t number = 1;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    const auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!trim(line).empty()) out.emplace_back(number, line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
    ++number;
  }
  return out;
}

template <class Row>
std::string join(const Row& row, char sep) {
  std::string out;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(row.size()); ++j) {
    if (j > 0) out += sep;
    out += format_number(row(j));
  }
  return out;
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw DataError("expected an object at " + path);
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError("missing field \"" + std::string(key) + "\" at " + path);
  return *it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw DataError("expected a number at " + path);
  return v.get<double>();
}

std::vector<double> numbers_at(const json& v, const std::string& path) {
  if (!v.is_array()) throw DataError("expected an array at " + path);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_at(v[i], path + "/" + std::to_string(i)));
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json regimes_beta(const std::vector<PolyRegime>& regimes) {
  json beta = json::array();
  for (const auto& r : regimes) beta.push_back(to_std(r.beta));
  return beta;
}

json regimes_sigma2(const std::vector<PolyRegime>& regimes) {
  json s = json::array();
  for (const auto& r : regimes) s.push_back(r.sigma2);
  return s;
}

json curve_model_json(const PiecewiseModel& m) {
  json gamma = json::array();
  for (auto g : m.gamma) gamma.push_back(g);
  return {{"family", "piecewise"}, {"K", m.K()},       {"p", m.p},
          {"t", std::vector<double>(m.grid.values().begin(), m.grid.values().end())},
          {"gamma", gamma},         {"beta", regimes_beta(m.regimes)},
          {"sigma2", regimes_sigma2(m.regimes)},   {"cost", m.cost}};
}

json curve_model_json(const RhlpModel& m) {
  json w = json::array();
  for (std::size_t k = 0; k < m.gate.K(); ++k) w.push_back({m.gate.intercept(k), m.gate.slope(k)});
  return {{"family", "rhlp"}, {"K", m.K()}, {"p", m.p},
          {"t", std::vector<double>(m.grid.values().begin(), m.grid.values().end())},
          {"w", w},           {"beta", regimes_beta(m.regimes)},
          {"sigma2", regimes_sigma2(m.regimes)}, {"loglik", m.loglik}};
}

struct CommonFields {
  TimeGrid grid;
  int p;
  std::vector<PolyRegime> regimes;
};

CommonFields common_from_json(const json& doc, const std::string& path) {
  const double K_raw = number_at(field(doc, "K", path), path + "/K");
  const double p_raw = number_at(field(doc, "p", path), path + "/p");
  if (K_raw < 1 || K_raw != std::floor(K_raw)) throw DataError("K must be a positive integer at " + path + "/K");
  if (p_raw < 0 || p_raw != std::floor(p_raw)) throw DataError("p must be a non-negative integer at " + path + "/p");
  const auto K = static_cast<std::size_t>(K_raw);
  const int p = static_cast<int>(p_raw);

  std::vector<double> t = numbers_at(field(doc, "t", path), path + "/t");
  std::optional<TimeGrid> grid;
  try {
    grid.emplace(std::move(t));
  } catch (const DomainError& e) {
    throw DataError(std::string(e.what()) + " at " + path + "/t");
  }

  const json& beta = field(doc, "beta", path);
  const json& sigma2 = field(doc, "sigma2", path);
  if (!beta.is_array() || beta.size() != K) throw DataError("expected K coefficient vectors at " + path + "/beta");
  if (!sigma2.is_array() || sigma2.size() != K) throw DataError("expected K variances at " + path + "/sigma2");
  std::vector<PolyRegime> regimes;
  for (std::size_t k = 0; k < K; ++k) {
    const std::string bpath = path + "/beta/" + std::to_string(k);
    const std::vector<double> b = numbers_at(beta[k], bpath);
    if (b.size() != static_cast<std::size_t>(p + 1)) throw DataError("expected p+1 coefficients at " + bpath);
    const double s = number_at(sigma2[k], path + "/sigma2/" + std::to_string(k));
    if (!(s > 0.0)) throw DataError("variance must be positive at " + path + "/sigma2/" + std::to_string(k));
    regimes.push_back({to_vector(b), s});
  }
  return {std::move(*grid), p, std::move(regimes)};
}

std::variant<PiecewiseModel, RhlpModel> curve_model_from_json(const json& doc, const std::string& path) {
  const json& fam = field(doc, "family", path);
  if (!fam.is_string()) throw DataError("expected a string at " + path + "/family");
  const std::string family = fam.get<std::string>();
  if (family == "piecewise") {
    CommonFields c = common_from_json(doc, path);
    const std::vector<double> graw = numbers_at(field(doc, "gamma", path), path + "/gamma");
    std::vector<std::size_t> gamma;
    for (double g : graw) {
      if (g < 0 || g != std::floor(g)) throw DataError("segment bounds must be non-negative integers at " + path + "/gamma");
      gamma.push_back(static_cast<std::size_t>(g));
    }
    double cost = 0.0;
    if (doc.contains("cost")) cost = number_at(doc["cost"], path + "/cost");
    PiecewiseModel model{std::move(c.grid), c.p, std::move(gamma), std::move(c.regimes), cost};
    try {
      model.validate();
    } catch (const DomainError& e) {
      throw DataError(std::string(e.what()) + " at " + path);
    }
    return model;
  }
  if (family == "rhlp") {
    CommonFields c = common_from_json(doc, path);
    const json& w = field(doc, "w", path);
    if (!w.is_array() || w.size() != c.regimes.size()) throw DataError("expected K gate rows at " + path + "/w");
    Eigen::MatrixXd wm(static_cast<Eigen::Index>(w.size()), 2);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const std::string wpath = path + "/w/" + std::to_string(k);
      const std::vector<double> row = numbers_at(w[k], wpath);
      if (row.size() != 2) throw DataError("expected [w_k0, w_k1] at " + wpath);
      wm(static_cast<Eigen::Index>(k), 0) = row[0];
      wm(static_cast<Eigen::Index>(k), 1) = row[1];
    }
    const double loglik = number_at(field(doc, "loglik", path), path + "/loglik");
    return RhlpModel{std::move(c.grid), c.p, GateWeights(std::move(wm)), std::move(c.regimes), loglik};
  }
  throw DataError("unknown family \"" + family + "\" at " + path + "/family");
}

}  // namespace

CurveSet parse_curves(const std::string& text, const std::string& source) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw DataError(source + ": empty file (expected a time header)");
  std::vector<double> t;
  {
    const auto cells = split(lines[0].second, ',');
    for (std::size_t c = 0; c < cells.size(); ++c) t.push_back(parse_cell(cells[c], source, lines[0].first, c + 1));
    for (std::size_t c = 1; c < t.size(); ++c)
      if (!(t[c - 1] < t[c]))
        throw DataError(source + ": line " + std::to_string(lines[0].first) + ", column " + std::to_string(c + 1) +
                        ": time stamps are not strictly increasing");
  }
  if (lines.size() < 2) throw DataError(source + ": no curves (only a time header)");
  const std::size_t m = t.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(m));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split(lines[r].second, ',');
    if (cells.size() != m)
      throw DataError(source + ": line " + std::to_string(lines[r].first) + ": " + std::to_string(cells.size()) +
                      " values, expected " + std::to_string(m));
    for (std::size_t c = 0; c < m; ++c)
      x(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = parse_cell(cells[c], source, lines[r].first, c + 1);
  }
  return CurveSet(TimeGrid(std::move(t)), std::move(x));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

CurveSet read_curves(const std::filesystem::path& path) { return parse_curves(read_text(path), path.string()); }

std::string format_curves(const CurveSet& curves) {
  std::string out;
  const auto t = curves.grid().values();
  out += join(Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size())), ',');
  out += '\n';
  for (Eigen::Index i = 0; i < curves.values().rows(); ++i) {
    out += join(curves.values().row(i), ',');
    out += '\n';
  }
  return out;
}

void write_curves(const std::filesystem::path& path, const CurveSet& curves) { write_text(path, format_curves(curves)); }

std::vector<int> read_labels(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::vector<int> labels;
  for (const auto& [number, line] : content_lines(text)) {
    const auto cell = trim(line);
    int v = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
      throw DataError(path.string() + ": line " + std::to_string(number) + ": not an integer label: '" +
                      std::string(cell) + "'");
    labels.push_back(v);
  }
  if (labels.empty()) throw DataError(path.string() + ": no labels");
  return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::string out;
  for (int l : labels) out += std::to_string(l) + '\n';
  write_text(path, out);
}

json model_to_json(const AnyModel& model) {
  if (const auto* pw = std::get_if<PiecewiseModel>(&model)) return curve_model_json(*pw);
  if (const auto* rh = std::get_if<RhlpModel>(&model)) return curve_model_json(*rh);
  const auto& clf = std::get<Classifier>(model);
  json classes = json::array();
  for (const auto& c : clf.classes) {
    json inner = std::visit([](const auto& m) { return curve_model_json(m); }, c.model);
    classes.push_back({{"label", c.label}, {"prior", c.prior}, {"model", std::move(inner)}});
  }
  return {{"family", "classifier"}, {"model_family", std::string(family_name(clf.family))}, {"classes", classes}};
}

AnyModel model_from_json(const json& doc) {
  const json& fam = field(doc, "family", "/");
  if (!fam.is_string()) throw DataError("expected a string at /family");
  if (fam.get<std::string>() != "classifier") {
    auto m = curve_model_from_json(doc, "");
    return std::visit([](auto&& v) -> AnyModel { return std::move(v); }, std::move(m));
  }
  const json& mf = field(doc, "model_family", "/");
  if (!mf.is_string()) throw DataError("expected a string at /model_family");
  Classifier clf;
  try {
    clf.family = parse_family(mf.get<std::string>());
  } catch (const DomainError& e) {
    throw DataError(std::string(e.what()) + " at /model_family");
  }
  const json& classes = field(doc, "classes", "/");
  if (!classes.is_array() || classes.empty()) throw DataError("expected a non-empty array at /classes");
  for (std::size_t g = 0; g < classes.size(); ++g) {
    const std::string path = "/classes/" + std::to_string(g);
    const json& lab = field(classes[g], "label", path);
    if (!lab.is_number_integer()) throw DataError("expected an integer at " + path + "/label");
    const double prior = number_at(field(classes[g], "prior", path), path + "/prior");
    auto model = curve_model_from_json(field(classes[g], "model", path), path + "/model");
    clf.classes.push_back({lab.get<int>(), prior, std::visit([](auto&& v) -> ClassConditional { return std::move(v); }, std::move(model))});
  }
  try {
    clf.validate();
  } catch (const DomainError& e) {
    throw DataError(std::string(e.what()) + " at /classes");
  }
  return clf;
}

void write_model(const std::filesystem::path& path, const AnyModel& model) {
  write_text(path, model_to_json(model).dump(2) + "\n");
}

AnyModel read_model(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
  try {
    return model_from_json(doc);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_plot_data(const std::variant<PiecewiseModel, RhlpModel>& model, const CurveSet& curves) {
  const TimeGrid& grid = std::visit([](const auto& m) -> const TimeGrid& { return m.grid; }, model);
  if (!(grid == curves.grid())) throw DomainError("plot data: model grid differs from the curves grid");
  const Eigen::VectorXd mean = curves.mean_curve();
  std::ostringstream out;
  out << "t\tmean\tfit";
  if (const auto* rh = std::get_if<RhlpModel>(&model)) {
    const Eigen::VectorXd fit = rhlp_approximation(*rh);
    const GateMatrix pi = logistic_proportions(rh->gate, rh->grid);
    for (std::size_t k = 1; k <= rh->K(); ++k) out << "\tpi_" << k;
    out << '\n';
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out << format_number(grid[j]) << '\t' << format_number(mean(jj)) << '\t' << format_number(fit(jj));
      for (Eigen::Index k = 0; k < pi.cols(); ++k) out << '\t' << format_number(pi(jj, k));
      out << '\n';
    }
  } else {
    const auto& pw = std::get<PiecewiseModel>(model);
    const Eigen::VectorXd fit = piecewise_approximation(pw);
    const auto labels = segment_labels(pw);
    out << "\tlabel\n";
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out << format_number(grid[j]) << '\t' << format_number(mean(jj)) << '\t' << format_number(fit(jj)) << '\t'
          << labels[j] << '\n';
    }
  }
  return out.str();
}

void emit_plot_data(const std::variant<PiecewiseModel, RhlpModel>& model, const CurveSet& curves,
                    const std::filesystem::path& path) {
  write_text(path, format_plot_data(model, curves));
}

json to_json(const BicReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"K", r.K}, {"p", r.p}, {"loglik", r.loglik}, {"nu", r.nu}, {"bic", r.bic}});
  json failures = json::array();
  for (const auto& f : report.failures) failures.push_back({{"K", f.K}, {"p", f.p}, {"reason", f.reason}});
  return {{"n", report.n},       {"m", report.m},         {"rows", rows}, {"failures", failures},
          {"best", {{"K", report.best_K}, {"p", report.best_p}}}};
}

std::string to_tsv(const BicReport& report) {
  std::string out = "K\tp\tloglik\tnu\tbic\tbest\n";
  for (const auto& r : report.rows) {
    const bool best = r.K == report.best_K && r.p == report.best_p;
    out += std::to_string(r.K) + '\t' + std::to_string(r.p) + '\t' + format_number(r.loglik) + '\t' +
           std::to_string(r.nu) + '\t' + format_number(r.bic) + '\t' + (best ? "1" : "0") + '\n';
  }
  return out;
}

json to_json(const CvReport& report) {
  return {{"k", report.k},
          {"seed", report.seed},
          {"folds", report.folds},
          {"mean_error", report.mean_error},
          {"std_error", report.std_error}};
}

std::string to_tsv(const CvReport& report) {
  std::string out = "fold\terror\n";
  for (std::size_t f = 0; f < report.folds.size(); ++f)
    out += std::to_string(f + 1) + '\t' + format_number(report.folds[f]) + '\n';
  out += "mean\t" + format_number(report.mean_error) + '\n';
  out += "std\t" + format_number(report.std_error) + '\n';
  return out;
}

json to_json(const BenchReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"method", std::string(family_name(r.method))},
                    {"n", r.n},
                    {"m", r.m},
                    {"K", r.K},
                    {"p", r.p},
                    {"seconds", r.seconds},
                    {"repetitions", r.repetitions}});
  return {{"rows", rows}};
}

std::string to_tsv(const BenchReport& report) {
  std::string out = "method\tn\tm\tK\tp\tseconds\trepetitions\n";
  for (const auto& r : report.rows)
    out += std::string(family_name(r.method)) + '\t' + std::to_string(r.n) + '\t' + std::to_string(r.m) + '\t' +
           std::to_string(r.K) + '\t' + std::to_string(r.p) + '\t' + format_number(r.seconds) + '\t' +
           std::to_string(r.repetitions) + '\n';
  return out;
}

std::string format_truth(const SimResult& sim) {
  std::string out = "t\tmean\tz\n";
  const TimeGrid& grid = sim.curves.grid();
  for (std::size_t j = 0; j < grid.size(); ++j)
    out += format_number(grid[j]) + '\t' + format_number(sim.mean(static_cast<Eigen::Index>(j))) + '\t' +
           std::to_string(sim.z[j]) + '\n';
  return out;
}

}  // namespace regimecurve
