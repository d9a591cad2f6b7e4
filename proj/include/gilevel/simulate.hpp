#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gilevel/filter.hpp"

namespace gilevel {

// Random covariance scheme: |correlations| ~ Beta(a, b) with Bernoulli(1/2)
// signs, variances ~ Gamma(shape, scale), Sigma = V C V.
struct CovGenParams {
  double corr_beta_a = 2.0;
  double corr_beta_b = 5.0;
  double var_gamma_shape = 2.0;
  double var_gamma_scale = 1.0;
  double sign_prob = 0.5;
  int max_rejections = 100;
  // Eigenvalue floor applied when a drawn correlation matrix needs repair;
  // the scale is that of correlation-matrix eigenvalues.
  double pd_floor = 0.05;
};

SpdMatrix gen_cov(int p, const CovGenParams& params, std::mt19937_64& rng);

// Draw from N_p(mean, cov); cov may be singular (PSD).
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const SpdMatrix& cov,
                           std::mt19937_64& rng);

// Forward simulation of y_t = theta_t + eps_t, theta_t = phi theta_{t-1} +
// omega_t, theta_0 ~ N(m_init, omega). Sigma may be singular (PSD) here.
Eigen::MatrixXd simulate_llm(const SpdMatrix& sigma, const SpdMatrix& omega,
                             double phi, int n_obs,
                             const Eigen::VectorXd& m_init,
                             std::mt19937_64& rng);

// Synthetic 276 x 5 production-style series for the control-chart example:
// stable level over the first 180 points, drift plus variance inflation after.
Eigen::MatrixXd simulate_mould_like(std::uint64_t seed);

enum class BenchModel { kGiw, kIw, kEm, kKalman };

std::string bench_model_name(BenchModel model);

struct BenchConfig {
  int p = 10;
  int n_obs = 500;
  int replications = 20;
  std::vector<BenchModel> models = {BenchModel::kGiw, BenchModel::kIw,
                                    BenchModel::kEm, BenchModel::kKalman};
  std::uint64_t seed = 1;
  CovGenParams cov;
  double phi = 1.0;
  double p0 = 1000.0;
  double n0 = 0.01;
  double em_tol = 1e-3;
  int em_max_iter = 200;
  bool large = false;  // gates p > 20, N > 600 or replications > 50
};

struct BenchModelStats {
  BenchModel model = BenchModel::kGiw;
  double mean_msse = 0.0;
  double se_msse = 0.0;       // standard error across replications
  double mean_seconds = 0.0;
  double max_seconds = 0.0;
  int failures = 0;           // replications dropped for this model
  std::vector<double> per_replication;
};

struct BenchReport {
  BenchConfig config;
  std::vector<std::uint64_t> seeds;  // one per replication
  std::vector<BenchModelStats> stats;
};

BenchReport run_benchmark(const BenchConfig& config);

// Per-step Frobenius distance of a covariance-estimate path from the truth,
// raw and normalized by ||truth||_F.
struct TrackResult {
  std::vector<double> raw;
  std::vector<double> normalized;
  double mean_raw = 0.0;
  double var_raw = 0.0;
  double mean_normalized = 0.0;
  double var_normalized = 0.0;
};

TrackResult frobenius_track(const std::vector<SpdMatrix>& estimates,
                            const SpdMatrix& truth);
TrackResult frobenius_track(const std::vector<SpdMatrix>& estimates,
                            const std::vector<SpdMatrix>& truth_path);

}  // namespace gilevel
