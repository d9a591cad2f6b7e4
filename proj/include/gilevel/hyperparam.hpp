#pragma once

#include <vector>

#include "gilevel/filter.hpp"
#include "gilevel/matrix_ops.hpp"

namespace gilevel {

// Newton-Raphson controls for the log|S_N| minimization over P.
struct NrSettings {
  double tol = 1e-3;      // Frobenius distance between successive iterates
  int max_iter = 50;
  double eig_clamp = 1e-4;  // iterate eigenvalues kept in (eps, 1 - eps)
  SpdMatrix init;           // empty means 0.5 I
  bool keep_trace = false;
};

struct NrTraceRow {
  int iter = 0;
  double objective = 0.0;
  double step_norm = 0.0;
};

struct NrResult {
  SpdMatrix p_hat;
  int iterations = 0;
  bool converged = false;
  std::vector<NrTraceRow> trace;
};

// Closed-form log-likelihood of the data under the GIW filter,
//   l = c + (c1 + 1) log|S_0| / 2 - (c1 + N + 1) log|S_N| / 2,
// with c1 = n0 + p - 2 and c the telescoped multivariate-gamma constant.
double loglik_closed(const SpdMatrix& s0, const SpdMatrix& sn, double n0,
                     int n_obs, int p);

// log|S_N| with S_N = S_0 + sum_t e_t e_t', errors from the steady-gain
// level recursion m_t = (I - P) m_{t-1} + P y_t, m_0 = 0 (the phi = 1
// objective evaluated as if Sigma were proportional to the identity).
double logdet_sn(const SpdMatrix& p_mat, const Eigen::MatrixXd& data,
                 const SpdMatrix& s0);

// Analytic derivatives of logdet_sn with respect to the entries of P in the
// symmetric convention: entry (k, l) is the directional derivative along
// u_k u_l' + u_l u_k' (k != l) or u_k u_k' (k = l).
Eigen::MatrixXd grad_logdet_sn(const SpdMatrix& p_mat,
                               const Eigen::MatrixXd& data,
                               const SpdMatrix& s0);

// Full p^2 x p^2 Hessian in vec ordering, entries in the same symmetric
// convention (rows/columns for (k,l) and (l,k) coincide).
Eigen::MatrixXd hess_logdet_sn(const SpdMatrix& p_mat,
                               const Eigen::MatrixXd& data,
                               const SpdMatrix& s0);

// Newton-Raphson minimization of logdet_sn over P with spectral clamping
// and step-halving; falls back to gradient descent when the Hessian solve
// fails. Descent of the objective across accepted iterates is enforced.
NrResult newton_raphson_p(const Eigen::MatrixXd& data, const SpdMatrix& s0,
                          const NrSettings& settings = NrSettings{});

// W = diag(delta_i^{-1} (1 - delta_i)^2). delta = 1 is rejected: it yields a
// zero diagonal entry and the recursions require a positive definite W.
SpdMatrix w_from_discounts(const std::vector<double>& deltas);

// Resolves a WEstimateNR spec against calibration data: returns a copy of
// the config with w_spec replaced by the fixed matrix w_from_p(P_hat, phi).
// When trace_out is given it receives the optimization trace.
ModelConfig estimate_w(const ModelConfig& config,
                       const Eigen::MatrixXd& calib_data,
                       NrResult* trace_out = nullptr);

// Filter run that re-estimates W from the data seen so far every
// `reestimate_every` steps (0 = estimate once on the full series up front).
FilterOutput run_filter_estimated(const ModelConfig& config,
                                  const Eigen::MatrixXd& data,
                                  int reestimate_every,
                                  bool keep_sigma_path = false);

}  // namespace gilevel
