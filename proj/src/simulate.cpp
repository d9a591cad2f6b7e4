#include "gilevel/simulate.hpp"

#include <chrono>
#include <cmath>

#include "gilevel/baselines.hpp"
#include "gilevel/hyperparam.hpp"

namespace gilevel {

namespace {

double beta_draw(double a, double b, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace

SpdMatrix gen_cov(int p, const CovGenParams& params, std::mt19937_64& rng) {
  if (p < 1) throw ParameterError("gen_cov: p must be positive");
  if (!(params.corr_beta_a > 0.0) || !(params.corr_beta_b > 0.0) ||
      !(params.var_gamma_shape > 0.0) || !(params.var_gamma_scale > 0.0)) {
    throw ParameterError("gen_cov: shapes and scales must be positive");
  }
  if (params.sign_prob < 0.0 || params.sign_prob > 1.0) {
    throw ParameterError("gen_cov: sign_prob must lie in [0, 1]");
  }
  std::gamma_distribution<double> gamma(params.var_gamma_shape,
                                        params.var_gamma_scale);
  std::bernoulli_distribution sign(params.sign_prob);

  Eigen::VectorXd sd(p);
  for (int i = 0; i < p; ++i) sd(i) = std::sqrt(gamma(rng));
  if (p == 1) return SpdMatrix(sd.cwiseProduct(sd).asDiagonal().toDenseMatrix());

  Eigen::MatrixXd corr(p, p);
  for (int attempt = 0; attempt <= params.max_rejections; ++attempt) {
    corr.setIdentity();
    for (int j = 0; j < p; ++j) {
      for (int i = j + 1; i < p; ++i) {
        const double rho = beta_draw(params.corr_beta_a, params.corr_beta_b, rng);
        corr(i, j) = corr(j, i) = sign(rng) ? rho : -rho;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() == Eigen::Success) break;
    if (attempt == params.max_rejections) {
      // Repair the last draw and renormalize to unit diagonal.
      const Eigen::MatrixXd fixed = nearest_pd(corr, params.pd_floor).mat();
      const Eigen::VectorXd d = fixed.diagonal().cwiseSqrt().cwiseInverse();
      corr = d.asDiagonal() * fixed * d.asDiagonal();
    }
  }
  const Eigen::MatrixXd sigma =
      sd.asDiagonal() * corr * sd.asDiagonal();
  return SpdMatrix(0.5 * (sigma + sigma.transpose()));
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const SpdMatrix& cov,
                           std::mt19937_64& rng) {
  const int p = cov.dim();
  if (mean.size() != p) throw DimensionError("mvn_sample: dimension mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(p);
  for (int i = 0; i < p; ++i) z(i) = normal(rng);
  return mean + sym_sqrt(cov).mat() * z;
}

Eigen::MatrixXd simulate_llm(const SpdMatrix& sigma, const SpdMatrix& omega,
                             double phi, int n_obs,
                             const Eigen::VectorXd& m_init,
                             std::mt19937_64& rng) {
  const int p = sigma.dim();
  if (omega.dim() != p) throw DimensionError("simulate_llm: dimension mismatch");
  if (n_obs < 1) throw ParameterError("simulate_llm: n_obs must be positive");
  const Eigen::VectorXd m0 =
      m_init.size() == 0 ? Eigen::VectorXd::Zero(p).eval() : m_init;

  Eigen::MatrixXd data(n_obs, p);
  Eigen::VectorXd theta = mvn_sample(m0, omega, rng);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p);
  for (int t = 0; t < n_obs; ++t) {
    theta = phi * theta + mvn_sample(zero, omega, rng);
    data.row(t) = (theta + mvn_sample(zero, sigma, rng)).transpose();
  }
  return data;
}

Eigen::MatrixXd simulate_mould_like(std::uint64_t seed) {
  constexpr int kN = 276;
  constexpr int kP = 5;
  constexpr int kPhase1 = 180;
  std::mt19937_64 rng(seed);

  Eigen::VectorXd base(kP);
  base << 220.0, 218.5, 221.0, 219.0, 220.5;

  // Mildly correlated observation noise around a slowly moving level.
  Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(kP, kP, 0.4);
  corr.diagonal().setOnes();
  Eigen::VectorXd sd = Eigen::VectorXd::Constant(kP, 0.6);
  const SpdMatrix sigma(
      (sd.asDiagonal() * corr * sd.asDiagonal()).eval());
  const SpdMatrix omega(0.01 * sigma.mat());

  Eigen::MatrixXd data(kN, kP);
  Eigen::VectorXd theta = base;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(kP);
  for (int t = 0; t < kN; ++t) {
    theta += mvn_sample(zero, omega, rng);
    Eigen::VectorXd y = theta + mvn_sample(zero, sigma, rng);
    if (t >= kPhase1) {
      // Phase II deterioration: drifting level and inflated noise.
      const double drift = 0.02 * (t - kPhase1 + 1);
      y.array() += drift;
      y += mvn_sample(zero, SpdMatrix(0.5 * sigma.mat()), rng);
    }
    data.row(t) = y.transpose();
  }
  return data;
}

std::string bench_model_name(BenchModel model) {
  switch (model) {
    case BenchModel::kGiw: return "GIW";
    case BenchModel::kIw: return "IW";
    case BenchModel::kEm: return "EM";
    case BenchModel::kKalman: return "Kalman";
  }
  return "?";
}

namespace {

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

double model_msse(BenchModel model, const Eigen::MatrixXd& data,
                  const SpdMatrix& sigma, const SpdMatrix& omega,
                  const BenchConfig& config) {
  const int p = static_cast<int>(data.cols());
  switch (model) {
    case BenchModel::kKalman: {
      const SpdMatrix c0(config.p0 * sigma.mat());
      return mean_of(kalman_run(data, sigma, omega, config.phi,
                                Eigen::VectorXd::Zero(p), c0)
                         .msse);
    }
    case BenchModel::kGiw: {
      ModelConfig mc;
      mc.phi = config.phi;
      mc.n0 = config.n0;
      mc.p0 = config.p0;
      mc.w_spec = WEstimateNR{};
      return mean_of(run_filter_estimated(mc, data, 0).msse);
    }
    case BenchModel::kIw: {
      return mean_of(
          iw_fit(data, config.phi, config.n0, SpdMatrix::Identity(p))
              .output.msse);
    }
    case BenchModel::kEm: {
      EmSettings settings;
      settings.tol = config.em_tol;
      settings.max_iter = config.em_max_iter;
      settings.p0 = config.p0;
      const EmResult em = em_fit(data, config.phi, settings);
      const SpdMatrix c0(config.p0 * em.sigma_hat.mat());
      return mean_of(kalman_run(data, em.sigma_hat, em.omega_hat, config.phi,
                                Eigen::VectorXd::Zero(p), c0)
                         .msse);
    }
  }
  throw ConfigError("run_benchmark: unknown model");
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& config) {
  if (config.replications < 1) {
    throw ParameterError("run_benchmark: replications must be >= 1");
  }
  if (!config.large &&
      (config.p > 20 || config.n_obs > 600 || config.replications > 50)) {
    throw ConfigError(
        "run_benchmark: large grid requested without the large flag");
  }

  BenchReport report;
  report.config = config;
  report.stats.reserve(config.models.size());
  for (const BenchModel model : config.models) {
    BenchModelStats stats;
    stats.model = model;
    report.stats.push_back(stats);
  }

  for (int rep = 0; rep < config.replications; ++rep) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(rep);
    report.seeds.push_back(seed);
    std::mt19937_64 rng(seed);
    const SpdMatrix sigma = gen_cov(config.p, config.cov, rng);
    const SpdMatrix omega = gen_cov(config.p, config.cov, rng);
    const Eigen::MatrixXd data =
        simulate_llm(sigma, omega, config.phi, config.n_obs,
                     Eigen::VectorXd::Zero(config.p), rng);

    for (std::size_t i = 0; i < config.models.size(); ++i) {
      auto& stats = report.stats[i];
      const auto start = std::chrono::steady_clock::now();
      try {
        stats.per_replication.push_back(
            model_msse(config.models[i], data, sigma, omega, config));
      } catch (const std::exception&) {
        ++stats.failures;
      }
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start)
              .count();
      stats.mean_seconds += secs;
      stats.max_seconds = std::max(stats.max_seconds, secs);
    }
  }

  for (auto& stats : report.stats) {
    stats.mean_seconds /= config.replications;
    const auto& xs = stats.per_replication;
    if (xs.empty()) continue;
    double sum = 0.0;
    for (double x : xs) sum += x;
    stats.mean_msse = sum / xs.size();
    double ssq = 0.0;
    for (double x : xs) ssq += (x - stats.mean_msse) * (x - stats.mean_msse);
    stats.se_msse =
        xs.size() > 1 ? std::sqrt(ssq / (xs.size() - 1) / xs.size()) : 0.0;
  }
  return report;
}

namespace {

TrackResult summarize_track(std::vector<double> raw,
                            std::vector<double> normalized) {
  TrackResult out;
  out.raw = std::move(raw);
  out.normalized = std::move(normalized);
  const auto stats = [](const std::vector<double>& xs, double* mean,
                        double* var) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    *mean = sum / xs.size();
    double ssq = 0.0;
    for (double x : xs) ssq += (x - *mean) * (x - *mean);
    *var = xs.size() > 1 ? ssq / (xs.size() - 1) : 0.0;
  };
  stats(out.raw, &out.mean_raw, &out.var_raw);
  stats(out.normalized, &out.mean_normalized, &out.var_normalized);
  return out;
}

}  // namespace

TrackResult frobenius_track(const std::vector<SpdMatrix>& estimates,
                            const SpdMatrix& truth) {
  if (estimates.empty()) throw DataError("frobenius_track: empty path");
  const double scale = truth.mat().norm();
  std::vector<double> raw, normalized;
  raw.reserve(estimates.size());
  normalized.reserve(estimates.size());
  for (const auto& est : estimates) {
    const double d = frobenius(est, truth);
    raw.push_back(d);
    normalized.push_back(scale > 0 ? d / scale : d);
  }
  return summarize_track(std::move(raw), std::move(normalized));
}

TrackResult frobenius_track(const std::vector<SpdMatrix>& estimates,
                            const std::vector<SpdMatrix>& truth_path) {
  if (estimates.size() != truth_path.size()) {
    throw DimensionError("frobenius_track: path length mismatch");
  }
  if (estimates.empty()) throw DataError("frobenius_track: empty path");
  std::vector<double> raw, normalized;
  raw.reserve(estimates.size());
  normalized.reserve(estimates.size());
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    const double d = frobenius(estimates[t], truth_path[t]);
    const double scale = truth_path[t].mat().norm();
    raw.push_back(d);
    normalized.push_back(scale > 0 ? d / scale : d);
  }
  return summarize_track(std::move(raw), std::move(normalized));
}

}  // namespace gilevel
