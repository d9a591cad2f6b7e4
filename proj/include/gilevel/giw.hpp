#pragma once

#include <random>

#include "gilevel/matrix_ops.hpp"

namespace gilevel {

// Parameters of the generalized inverse Wishart distribution GIW_p(n, A, S):
// the law of X such that X^{1/2} S^{-1} X^{1/2} is inverse Wishart IW_p(n, A).
// The distribution is symmetric in (A, S).
struct GiwParams {
  double n = 0.0;  // degrees of freedom, n > 2p
  SpdMatrix A;
  SpdMatrix S;

  GiwParams(double n_in, SpdMatrix a, SpdMatrix s);
  int dim() const { return A.dim(); }
};

// Parameters of the generalized Wishart distribution GW_p(dof, Ainv, Sinv),
// the law of X^{-1} when X ~ GIW_p(dof + p + 1, Ainv^{-1}, Sinv^{-1}).
struct GwParams {
  double dof = 0.0;  // = n - p - 1, must exceed p - 1
  SpdMatrix Ainv;
  SpdMatrix Sinv;

  GwParams(double dof_in, SpdMatrix ainv, SpdMatrix sinv);
  static GwParams from_giw(const GiwParams& giw);
  int dim() const { return Ainv.dim(); }
};

// log Gamma_p(a) = p(p-1)/4 log(pi) + sum_i log Gamma(a + (1-i)/2).
double log_multigamma(int p, double a);

// Exact log density of X under GIW_p(n, A, S), normalizing constant included.
double giw_log_density(const SpdMatrix& x, const GiwParams& params);

// Exact log density of Y under GW_p(dof, Ainv, Sinv).
double gw_log_density(const SpdMatrix& y, const GwParams& params);

// Closed-form expectations of the GIW distribution.
struct GiwMoments {
  SpdMatrix e_quad;      // E(X^{1/2} S^{-1} X^{1/2}) = A / (n - 2p - 2)
  SpdMatrix e_inv_quad;  // E(X^{-1/2} S X^{-1/2}) = (n - p - 1) A^{-1}
  double n = 0.0;
  int p = 0;
  double log_det_a = 0.0;
  double log_det_s = 0.0;

  // E|X|^ell for integer 0 < ell < (n - 2p)/2.
  double e_det_pow(int ell) const;
};

GiwMoments giw_moments(const GiwParams& params);

// Mode of the GIW distribution. Commuting (A, S) use the closed form AS/n;
// otherwise the mode equation A X^{-1/2} S + S X^{-1/2} A = 2n X^{1/2} is
// solved numerically (Kronecker-vectorized Newton iteration initialized from
// the least-squares construction and from estimator_tilde). The result is
// validated against the mode-equation residual; failure throws
// NumericalError carrying the residual.
SpdMatrix giw_mode(const GiwParams& params);

// Residual ||A X^{-1/2} S + S X^{-1/2} A - 2n X^{1/2}||_F of a candidate mode.
double giw_mode_residual(const SpdMatrix& x_hat, const GiwParams& params);

// The practical estimator (AS + SA) / (2n), symmetrized and PD-repaired.
// Equals the mode whenever A and S commute.
SpdMatrix estimator_tilde(const GiwParams& params);

// Draw from GIW_1(n, a, s): x = s * a / g with g ~ Gamma((n-2)/2, rate 1/2).
double giw_sample_p1(double n, double a, double s, std::mt19937_64& rng);

}  // namespace gilevel
