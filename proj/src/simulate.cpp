#include "regimecurve/simulate.hpp"

#include <cmath>
#include <random>
#include <string>

#include "regimecurve/rhlp.hpp"

namespace regimecurve {
namespace {

// Independent stream per (seed, tag...) tuple.
template <class... Tags>
std::mt19937_64 stream(std::uint64_t seed, Tags... tags) {
  std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(tags)...};
  return std::mt19937_64(seq);
}

// Samples (n rows) appended into `out` starting at row `offset`.
void append_rows(Eigen::MatrixXd& out, Eigen::Index offset, const CurveSet& block) {
  out.middleRows(offset, static_cast<Eigen::Index>(block.n())) = block.values();
}

}  // namespace

void SimSpec::validate() const {
  if (K < 1) throw DomainError("SimSpec: K must be >= 1");
  if (p < 0) throw DomainError("SimSpec: p must be >= 0");
  if (betas.size() != K) throw DomainError("SimSpec: expected K coefficient vectors");
  for (const auto& b : betas)
    if (b.size() != p + 1) throw DomainError("SimSpec: coefficient vector length must be p+1");
  if (w.rows() != static_cast<Eigen::Index>(K) || w.cols() != 2) throw DomainError("SimSpec: gate must be K x 2");
  if (sigmas.size() != K) throw DomainError("SimSpec: expected K noise levels");
  for (double s : sigmas)
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("SimSpec: noise levels must be finite and >= 0");
  if (n < 1) throw DomainError("SimSpec: n must be >= 1");
  if (m < 2) throw DomainError("SimSpec: m must be >= 2");
  if (!(t_start < t_end)) throw DomainError("SimSpec: t_start must be < t_end");
}

TimeGrid SimSpec::grid() const { return TimeGrid::uniform(t_start, t_end, m); }

SimResult sample_rhlp(const SimSpec& spec) {
  spec.validate();
  const TimeGrid grid = spec.grid();
  const GateWeights gate(spec.w);
  const GateMatrix pi = logistic_proportions(gate, grid);

  Eigen::MatrixXd mu(static_cast<Eigen::Index>(spec.m), static_cast<Eigen::Index>(spec.K));
  for (std::size_t k = 0; k < spec.K; ++k) {
    const PolyRegime reg{spec.betas[k], 1.0};
    for (std::size_t j = 0; j < spec.m; ++j)
      mu(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = reg.mean_at(grid[j]);
  }

  // Hidden process first, shared by every curve.
  std::vector<std::size_t> z(spec.m);
  auto zrng = stream(spec.seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t j = 0; j < spec.m; ++j) {
    const double u = unif(zrng);
    double acc = 0.0;
    std::size_t k = 0;
    for (; k + 1 < spec.K; ++k) {
      acc += pi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
      if (u < acc) break;
    }
    z[j] = k + 1;
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.m));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < spec.n; ++i) {
    auto rng = stream(spec.seed, 1, i);
    for (std::size_t j = 0; j < spec.m; ++j) {
      const std::size_t k = z[j] - 1;
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          mu(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) + spec.sigmas[k] * noise(rng);
    }
  }

  Eigen::VectorXd mean = pi.cwiseProduct(mu).rowwise().sum();
  return {CurveSet(grid, std::move(x)), std::move(mean), std::move(z)};
}

SimSpec smoothness_spec(int level) {
  if (level < 1 || level > 10) throw DomainError("smoothness level must be in 1..10, got " + std::to_string(level));
  const double divisor = kSmoothnessDivisors[static_cast<std::size_t>(level - 1)];
  SimSpec spec;
  spec.K = 3;
  spec.p = 0;
  spec.betas = {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 10.0),
                Eigen::VectorXd::Constant(1, 5.0)};
  spec.w = Eigen::MatrixXd{{3341.33, -1706.96}, {2436.97, -810.07}, {0.0, 0.0}} / divisor;
  spec.sigmas = {2.0, 2.0, 2.0};
  spec.n = 10;
  spec.m = 100;
  spec.t_start = 0.0;
  spec.t_end = 5.0;
  return spec;
}

SimSpec experiment23_spec(std::size_t n, std::size_t m) {
  if (n < 1) throw DomainError("experiment spec needs n >= 1");
  if (m < 2) throw DomainError("experiment spec needs m >= 2");
  SimSpec spec;
  spec.K = 3;
  spec.p = 2;
  spec.betas = {Eigen::Vector3d(23.0, -36.0, 18.0), Eigen::Vector3d(-3.9, 11.08, -2.2),
                Eigen::Vector3d(-337.0, 141.5, -14.0)};
  spec.w = Eigen::MatrixXd{{92.72, -46.72}, {61.16, -15.28}, {0.0, 0.0}};
  spec.sigmas = {1.0, 1.25, 0.75};
  spec.n = n;
  spec.m = m;
  spec.t_start = 0.0;
  spec.t_end = 5.0;
  return spec;
}

double waveform_base(double t) { return std::max(6.0 - std::abs(t - 11.0), 0.0); }

LabeledCurves waveform(std::size_t n_per_class, std::uint64_t seed, bool inclusive_end) {
  if (n_per_class < 1) throw DomainError("waveform needs at least one curve per class");
  const std::size_t m = inclusive_end ? 21 : 20;
  std::vector<double> t(m);
  for (std::size_t j = 0; j < m; ++j) t[j] = static_cast<double>(j);
  auto h1 = [](double s) { return waveform_base(s); };
  auto h2 = [](double s) { return waveform_base(s - 4.0); };
  auto h3 = [](double s) { return waveform_base(s + 4.0); };

  Eigen::MatrixXd x(static_cast<Eigen::Index>(3 * n_per_class), static_cast<Eigen::Index>(m));
  std::vector<int> labels(3 * n_per_class);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int g = 1; g <= 3; ++g) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      auto rng = stream(seed, g, i);
      const double u = unif(rng);
      const auto row = static_cast<Eigen::Index>(static_cast<std::size_t>(g - 1) * n_per_class + i);
      labels[static_cast<std::size_t>(row)] = g;
      for (std::size_t j = 0; j < m; ++j) {
        double first = 0.0;
        double second = 0.0;
        switch (g) {
          case 1: first = h1(t[j]); second = h2(t[j]); break;
          case 2: first = h2(t[j]); second = h3(t[j]); break;
          default: first = h1(t[j]); second = h3(t[j]); break;
        }
        x(row, static_cast<Eigen::Index>(j)) = u * first + (1.0 - u) * second + noise(rng);
      }
    }
  }
  return {CurveSet(TimeGrid(std::move(t)), std::move(x)), std::move(labels)};
}

SimSpec spec_from_model(const RhlpModel& model, std::size_t n, std::uint64_t seed) {
  model.validate();
  SimSpec spec;
  spec.K = model.K();
  spec.p = model.p;
  spec.w = model.gate.matrix();
  for (const auto& r : model.regimes) {
    spec.betas.push_back(r.beta);
    spec.sigmas.push_back(std::sqrt(r.sigma2));
  }
  spec.n = n;
  spec.m = model.grid.size();
  spec.t_start = model.grid.front();
  spec.t_end = model.grid.back();
  spec.seed = seed;
  return spec;
}

std::array<RhlpModel, 3> standin_complex_models(std::size_t m) {
  const SimSpec base = experiment23_spec(1, m);
  std::array<RhlpModel, 3> out{
      RhlpModel{base.grid(), base.p, GateWeights(base.w), {}, 0.0},
      RhlpModel{base.grid(), base.p, GateWeights(base.w), {}, 0.0},
      RhlpModel{base.grid(), base.p, GateWeights(base.w), {}, 0.0},
  };
  const std::array<double, 3> middle_shift = {0.0, 6.0, 12.0};
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t k = 0; k < base.K; ++k) {
      Eigen::VectorXd beta = base.betas[k];
      if (k == 1) beta(0) += middle_shift[g];
      out[g].regimes.push_back({beta, base.sigmas[k] * base.sigmas[k]});
    }
  }
  return out;
}

LabeledCurves complex_classes(const RhlpModel& a, const RhlpModel& b, const RhlpModel& c,
                              std::uint64_t seed) {
  if (!(a.grid == b.grid) || !(b.grid == c.grid)) throw DomainError("complex_classes: models must share a grid");
  const SimResult a1 = sample_rhlp(spec_from_model(a, 15, seed * 4 + 0));
  const SimResult b1 = sample_rhlp(spec_from_model(b, 25, seed * 4 + 1));
  const SimResult b2 = sample_rhlp(spec_from_model(b, 17, seed * 4 + 2));
  const SimResult c2 = sample_rhlp(spec_from_model(c, 20, seed * 4 + 3));
  Eigen::MatrixXd x(77, static_cast<Eigen::Index>(a.grid.size()));
  append_rows(x, 0, a1.curves);
  append_rows(x, 15, b1.curves);
  append_rows(x, 40, b2.curves);
  append_rows(x, 57, c2.curves);
  std::vector<int> labels(77, 1);
  for (std::size_t i = 40; i < 77; ++i) labels[i] = 2;
  return {CurveSet(a.grid, std::move(x)), std::move(labels)};
}

LabeledCurves homogeneous_classes(const RhlpModel& a, const RhlpModel& c, std::uint64_t seed) {
  if (!(a.grid == c.grid)) throw DomainError("homogeneous_classes: models must share a grid");
  const SimResult a1 = sample_rhlp(spec_from_model(a, 40, seed * 4 + 0));
  const SimResult c2 = sample_rhlp(spec_from_model(c, 37, seed * 4 + 3));
  Eigen::MatrixXd x(77, static_cast<Eigen::Index>(a.grid.size()));
  append_rows(x, 0, a1.curves);
  append_rows(x, 40, c2.curves);
  std::vector<int> labels(77, 1);
  for (std::size_t i = 40; i < 77; ++i) labels[i] = 2;
  return {CurveSet(a.grid, std::move(x)), std::move(labels)};
}

}  // namespace regimecurve
