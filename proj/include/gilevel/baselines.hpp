#pragma once

#include <vector>

#include "gilevel/filter.hpp"

namespace gilevel {

// Exact Kalman filter output for model y_t = theta_t + eps, theta_t = phi
// theta_{t-1} + omega with known covariances. Records carry the Gaussian
// one-step forecast (dof = infinity, spread = F_t); standardization is by
// the exact forecast variance diag(F_t).
struct KalmanOutput {
  std::vector<ForecastRecord> records;
  Eigen::VectorXd msse;
  double log_lik = 0.0;
  Eigen::VectorXd final_mean;
  SpdMatrix final_cov;
  std::vector<Eigen::VectorXd> means;  // filtered means m_t, t = 1..N
  std::vector<SpdMatrix> covs;         // filtered covariances C_t
};

KalmanOutput kalman_run(const Eigen::MatrixXd& data, const SpdMatrix& sigma,
                        const SpdMatrix& omega, double phi,
                        const Eigen::VectorXd& m0, const SpdMatrix& c0);

// Fixed-interval smoother with lag-one covariances, indices 0..N for the
// states (entry 0 is the prior-updated theta_0).
struct SmootherOutput {
  std::vector<Eigen::VectorXd> means;        // E(theta_t | y^N), t = 0..N
  std::vector<SpdMatrix> covs;               // Var(theta_t | y^N)
  std::vector<Eigen::MatrixXd> lag_one;      // Cov(theta_t, theta_{t-1} | y^N), t = 1..N
};

SmootherOutput kalman_smoother(const Eigen::MatrixXd& data,
                               const SpdMatrix& sigma, const SpdMatrix& omega,
                               double phi, const Eigen::VectorXd& m0,
                               const SpdMatrix& c0);

struct EmResult {
  SpdMatrix sigma_hat;
  SpdMatrix omega_hat;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  bool repaired = false;  // an M-step produced a non-PD matrix
};

struct EmSettings {
  double tol = 1e-3;
  int max_iter = 200;
  double p0 = 1000.0;
  SpdMatrix sigma_init;  // empty: sample covariance of differences / 2
  SpdMatrix omega_init;
};

EmResult em_fit(const Eigen::MatrixXd& data, double phi,
                const EmSettings& settings = EmSettings{});

// Conjugate inverse Wishart filter with Omega = w Sigma: the W = wI special
// case of the GIW filter. The profile likelihood over w is maximized by
// golden section on log w.
struct IwFitResult {
  FilterOutput output;
  double w_hat = 0.0;
  double log_lik = 0.0;
};

IwFitResult iw_fit(const Eigen::MatrixXd& data, double phi, double n0,
                   const SpdMatrix& s0, double w_lo = 1e-4, double w_hi = 1e2);

}  // namespace gilevel
