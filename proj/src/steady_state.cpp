#include "gilevel/steady_state.hpp"

namespace gilevel {

SpdMatrix p_step(const SpdMatrix& p_prev, double phi, const SpdMatrix& w) {
  const int p = w.dim();
  if (p_prev.dim() != p) throw DimensionError("p_step: dimension mismatch");
  const Eigen::MatrixXd r = phi * phi * p_prev.mat() + w.mat();
  const Eigen::MatrixXd denom = r + Eigen::MatrixXd::Identity(p, p);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(denom);
  if (!lu.isInvertible()) {
    throw SingularityError("p_step: R_t + I is singular", -1);
  }
  const Eigen::MatrixXd next = r * lu.inverse();
  return SpdMatrix(0.5 * (next + next.transpose()));
}

namespace {

SpdMatrix p_limit_iterative(double phi, const SpdMatrix& w) {
  const int p = w.dim();
  SpdMatrix cur = SpdMatrix(0.5 * Eigen::MatrixXd::Identity(p, p));
  for (int i = 0; i < 10000; ++i) {
    SpdMatrix next = p_step(cur, phi, w);
    const double delta = frobenius(next, cur);
    cur = std::move(next);
    if (delta <= 1e-12) return cur;
  }
  return cur;
}

}  // namespace

SpdMatrix p_limit(double phi, const SpdMatrix& w) {
  const int p = w.dim();
  if (phi == 0.0) {
    const Eigen::MatrixXd denom =
        w.mat() + Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd res = w.mat() * denom.inverse();
    return SpdMatrix(0.5 * (res + res.transpose()));
  }
  const Eigen::MatrixXd shift =
      w.mat() + (1.0 - phi * phi) * Eigen::MatrixXd::Identity(p, p);
  // Completing the square in P^2 + phi^{-2} P (W + (1-phi^2)I) - phi^{-2} W
  // puts 4 phi^2 W under the root; the argument is PD by construction.
  const Eigen::MatrixXd arg = shift * shift + 4.0 * phi * phi * w.mat();
  const SpdMatrix root = sym_sqrt(SpdMatrix(0.5 * (arg + arg.transpose())));
  // Rationalized: R and M = W + (1-phi^2)I commute, so
  // (R - M) / (2 phi^2) = 2W (R + M)^{-1}, which cancels the phi^{-2}
  // blow-up of the difference form at small phi and is continuous at 0.
  const Eigen::MatrixXd closed_raw =
      2.0 * w.mat() * (root.mat() + shift).inverse();
  SpdMatrix closed(0.5 * (closed_raw + closed_raw.transpose()));

  if (frobenius(p_step(closed, phi, w), closed) <= 1e-8) return closed;
  return p_limit_iterative(phi, w);
}

SpdMatrix w_from_p(const SpdMatrix& p_mat, double phi) {
  const int p = p_mat.dim();
  const Eigen::MatrixXd i_minus_p =
      Eigen::MatrixXd::Identity(p, p) - p_mat.mat();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(i_minus_p);
  if (!lu.isInvertible()) {
    throw DimensionError("w_from_p: I - P is singular");
  }
  const double phi2 = phi * phi;
  const Eigen::MatrixXd num =
      phi2 * p_mat.mat() * p_mat.mat() + (1.0 - phi2) * p_mat.mat();
  const Eigen::MatrixXd w = lu.inverse() * num;
  return SpdMatrix(0.5 * (w + w.transpose()));
}

SteadyState make_steady_state(double phi, const SpdMatrix& w) {
  SteadyState out;
  out.phi = phi;
  out.W = w;
  out.P = p_limit(phi, w);
  out.Q = SpdMatrix(out.P.mat() + w.mat() +
                    Eigen::MatrixXd::Identity(w.dim(), w.dim()));
  out.Qinv = inverse_spd(out.Q);
  return out;
}

}  // namespace gilevel
