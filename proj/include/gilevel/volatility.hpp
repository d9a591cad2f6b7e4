#pragma once

#include <random>
#include <vector>

#include "gilevel/filter.hpp"

namespace gilevel {

// Constants of the multiplicative precision evolution driven by a discount
// factor delta in (0, 1]:
//   k = {delta(1-p) + p} {delta(2-p) + p - 1}^{-1},
//   m = delta (1-delta)^{-1} + p - 1.
struct VolConstants {
  double delta = 1.0;
  int p = 0;
  double k = 1.0;
  double m = 0.0;          // infinity in the degenerate delta = 1 mode
  bool degenerate = false;  // delta = 1: B_t = I with probability 1
};

VolConstants vol_constants(double delta, int p);

// Draw from the singular multivariate beta B_p(m/2, n/2), constructed as
// B = {U(C)'}^{-1} A_1 {U(C)}^{-1} with A_1 ~ W_p(m, I) (Bartlett),
// A_2 the sum of n standard-normal outer products and C = A_1 + A_2.
// Eigenvalues of B lie in [0, 1]; I - B has rank min(n, p) a.s.
Eigen::MatrixXd sample_singular_beta(double m, int n, int p,
                                     std::mt19937_64& rng);

// Wishart draw W_p(dof, I) via the Bartlett decomposition; dof > p - 1.
Eigen::MatrixXd sample_wishart_identity(double dof, int p,
                                        std::mt19937_64& rng);

// One multiplicative precision step: k * U(prec)' B U(prec).
SpdMatrix evolve_precision(const SpdMatrix& prec_prev,
                           const Eigen::MatrixXd& b, double k);

// Filter step under the time-varying volatility recursions: identical to
// filter_step except that S_t = k^{-1} S_{t-1} + e_t e_t', the forecast
// degrees of freedom stay fixed at delta/(1-delta), and sigma_tilde comes
// from the posterior GIW((1-delta)^{-1} + 2p, Q^{-1}, S_t).
std::pair<FilterState, ForecastRecord> vol_filter_step(
    const FilterState& state, const Eigen::VectorXd& y,
    const VolConstants& consts);

// Simulated covariance path Sigma_1..Sigma_N from iterating the precision
// evolution with fresh B_t ~ B_p(m/2, 1/2) draws. Precisions are kept
// unrepaired inside the recursion; the returned covariances are
// pseudo-inverted and PD-repaired with floor 1e-10 at the output boundary.
std::vector<SpdMatrix> simulate_vol_path(const SpdMatrix& sigma0,
                                         const VolConstants& consts, int n_obs,
                                         std::mt19937_64& rng);

}  // namespace gilevel
