#pragma once

#include "gilevel/matrix_ops.hpp"

namespace gilevel {

// Limit quantities of the posterior-scale recursion
// P_t = (phi^2 P_{t-1} + W)(phi^2 P_{t-1} + W + I)^{-1}.
struct SteadyState {
  SpdMatrix P;     // limit of P_t, eigenvalues in (0, 1)
  SpdMatrix Q;     // P + W + I
  SpdMatrix Qinv;
  double phi = 1.0;
  SpdMatrix W;
};

// One Riccati step: (phi^2 P_prev + W)(phi^2 P_prev + W + I)^{-1}.
SpdMatrix p_step(const SpdMatrix& p_prev, double phi, const SpdMatrix& w);

// Closed-form limit of the recursion (iterative fallback when the
// fixed-point residual of the closed form exceeds 1e-8):
//   P = (2 phi^2)^{-1} [ {(W + (1-phi^2)I)^2 + 4 phi^2 W}^{1/2} - W - (1-phi^2)I ]
// for phi != 0, and P = W (W + I)^{-1} for phi = 0.
SpdMatrix p_limit(double phi, const SpdMatrix& w);

// Inversion of p_limit: W = (I - P)^{-1} (phi^2 P^2 + (1 - phi^2) P).
SpdMatrix w_from_p(const SpdMatrix& p, double phi);

SteadyState make_steady_state(double phi, const SpdMatrix& w);

}  // namespace gilevel
