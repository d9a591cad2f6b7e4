#include "gilevel/giw.hpp"

#include <cmath>
#include <string>

namespace gilevel {

namespace {

constexpr double kLog2 = 0.6931471805599453;
constexpr double kLogPi = 1.1447298858494002;

void require_pd(const SpdMatrix& m, const char* name) {
  Eigen::LLT<Eigen::MatrixXd> llt(m.mat());
  if (llt.info() != Eigen::Success) {
    throw ParameterError(std::string(name) + " must be positive definite");
  }
}

}  // namespace

GiwParams::GiwParams(double n_in, SpdMatrix a, SpdMatrix s)
    : n(n_in), A(std::move(a)), S(std::move(s)) {
  if (A.dim() != S.dim()) {
    throw DimensionError("GiwParams: A and S must have equal dimension");
  }
  if (!(n > 2.0 * A.dim())) {
    throw ParameterError("GiwParams: n must exceed 2p, got n = " +
                         std::to_string(n) + " at p = " +
                         std::to_string(A.dim()));
  }
  require_pd(A, "GiwParams: A");
  require_pd(S, "GiwParams: S");
}

GwParams::GwParams(double dof_in, SpdMatrix ainv, SpdMatrix sinv)
    : dof(dof_in), Ainv(std::move(ainv)), Sinv(std::move(sinv)) {
  if (Ainv.dim() != Sinv.dim()) {
    throw DimensionError("GwParams: Ainv and Sinv must have equal dimension");
  }
  if (!(dof > Ainv.dim() - 1)) {
    throw ParameterError("GwParams: dof must exceed p - 1");
  }
  require_pd(Ainv, "GwParams: Ainv");
  require_pd(Sinv, "GwParams: Sinv");
}

GwParams GwParams::from_giw(const GiwParams& giw) {
  const int p = giw.dim();
  return GwParams(giw.n - p - 1, inverse_spd(giw.A), inverse_spd(giw.S));
}

double log_multigamma(int p, double a) {
  if (!(a > 0.5 * (p - 1))) {
    throw ParameterError("log_multigamma: argument out of range");
  }
  double out = 0.25 * p * (p - 1) * kLogPi;
  for (int i = 1; i <= p; ++i) out += std::lgamma(a + 0.5 * (1 - i));
  return out;
}

double giw_log_density(const SpdMatrix& x, const GiwParams& params) {
  const int p = params.dim();
  if (x.dim() != p) throw DimensionError("giw_log_density: dimension mismatch");
  const double n = params.n;
  const double h = 0.5 * (n - p - 1);

  const SpdMatrix x_inv_half = sym_inv_sqrt(x);
  const double trace =
      (params.A.mat() * x_inv_half.mat() * params.S.mat() * x_inv_half.mat())
          .trace();
  return h * (log_det(params.A) + log_det(params.S)) - p * h * kLog2 -
         log_multigamma(p, h) - 0.5 * n * log_det(x) - 0.5 * trace;
}

double gw_log_density(const SpdMatrix& y, const GwParams& params) {
  const int p = params.dim();
  if (y.dim() != p) throw DimensionError("gw_log_density: dimension mismatch");
  const double n = params.dof + p + 1;
  const double h = 0.5 * (n - p - 1);

  const SpdMatrix a = inverse_spd(params.Ainv);
  const SpdMatrix s = inverse_spd(params.Sinv);
  const SpdMatrix y_half = sym_sqrt(y);
  const double trace =
      (a.mat() * y_half.mat() * s.mat() * y_half.mat()).trace();
  return h * (log_det(a) + log_det(s)) + 0.5 * (n - 2 * p - 2) * log_det(y) -
         p * h * kLog2 - log_multigamma(p, h) - 0.5 * trace;
}

double GiwMoments::e_det_pow(int ell) const {
  if (!(ell > 0 && ell < 0.5 * (n - 2 * p))) {
    throw ParameterError(
        "e_det_pow: requires 0 < ell < (n - 2p)/2, got ell = " +
        std::to_string(ell));
  }
  double log_prod = 0.0;
  for (int i = 1; i <= p; ++i) {
    for (int j = 1; j <= ell; ++j) {
      log_prod += std::log(0.5 * (n - p - i) - j);
    }
  }
  return std::exp(-p * ell * kLog2 - log_prod +
                  ell * (log_det_a + log_det_s));
}

GiwMoments giw_moments(const GiwParams& params) {
  const int p = params.dim();
  const double n = params.n;
  if (!(n > 2 * p + 2)) {
    throw ParameterError(
        "giw_moments: E(X^{1/2} S^{-1} X^{1/2}) requires n > 2p + 2");
  }
  GiwMoments m;
  m.e_quad = SpdMatrix(params.A.mat() / (n - 2 * p - 2));
  m.e_inv_quad = SpdMatrix((n - p - 1) * inverse_spd(params.A).mat());
  m.n = n;
  m.p = p;
  m.log_det_a = log_det(params.A);
  m.log_det_s = log_det(params.S);
  return m;
}

double giw_mode_residual(const SpdMatrix& x_hat, const GiwParams& params) {
  const Eigen::MatrixXd x = sym_sqrt(x_hat).mat();
  const Eigen::MatrixXd x_inv = sym_inv_sqrt(x_hat).mat();
  const Eigen::MatrixXd& a = params.A.mat();
  const Eigen::MatrixXd& s = params.S.mat();
  return (a * x_inv * s + s * x_inv * a - 2.0 * params.n * x).norm();
}

namespace {

// Mode-equation defect at X = x_hat^{1/2}: F(X) = A X^{-1} S + S X^{-1} A - 2nX.
Eigen::MatrixXd mode_defect(const Eigen::MatrixXd& x, const GiwParams& params) {
  const Eigen::MatrixXd x_inv = x.llt().solve(
      Eigen::MatrixXd::Identity(x.rows(), x.cols()));
  const Eigen::MatrixXd& a = params.A.mat();
  const Eigen::MatrixXd& s = params.S.mat();
  return a * x_inv * s + s * x_inv * a - 2.0 * params.n * x;
}

bool is_pd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

// Initial guess from the vectorized least-squares construction: the minimum
// norm solution c of (vec(S)' (x) I(x)A + vec(A)' (x) I(x)S) c = 2n vec(I),
// read back through c * vec(I) ~ vec(x_hat^{-1}). The system is
// underdetermined, so the extraction is only a starting point; the Newton
// refinement below owns the accuracy contract.
bool theorem5_init(const GiwParams& params, Eigen::MatrixXd* x0) {
  const int p = params.dim();
  if (p > 8) return false;  // p^2 x p^4 system gets too large
  const int p2 = p * p;
  const Eigen::VectorXd b = vec(params.S.mat());
  const Eigen::VectorXd d = vec(params.A.mat());
  const Eigen::MatrixXd big_b =
      kron(Eigen::MatrixXd::Identity(p, p), params.A.mat());
  const Eigen::MatrixXd big_d =
      kron(Eigen::MatrixXd::Identity(p, p), params.S.mat());

  Eigen::MatrixXd m = kron(b.transpose(), big_b) + kron(d.transpose(), big_d);
  const Eigen::VectorXd rhs =
      2.0 * params.n * vec(Eigen::MatrixXd::Identity(p, p));
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
  // Full row rank p^2 is assumed of the system; guard it (relative
  // condition threshold 1e-12) before trusting the extraction.
  cod.setThreshold(1e-12);
  if (cod.rank() < p2) return false;
  const Eigen::VectorXd c = cod.solve(rhs);

  const Eigen::MatrixXd c_mat = unvec(c, p2, p2);
  Eigen::MatrixXd v =
      unvec(c_mat * vec(Eigen::MatrixXd::Identity(p, p)), p, p);
  v = 0.5 * (v + v.transpose()).eval();
  if (!v.allFinite() || !is_pd(v)) return false;
  // v approximates x_hat^{-1}; candidate X = x_hat^{1/2}.
  const SpdMatrix x_hat = inverse_spd(SpdMatrix(v));
  *x0 = sym_sqrt(x_hat).mat();
  return true;
}

}  // namespace

SpdMatrix giw_mode(const GiwParams& params) {
  const int p = params.dim();
  const double n = params.n;
  const Eigen::MatrixXd& a = params.A.mat();
  const Eigen::MatrixXd& s = params.S.mat();

  const Eigen::MatrixXd as = a * s;
  const Eigen::MatrixXd sa = s * a;
  if ((as - sa).norm() <= 1e-10 * as.norm()) {
    return SpdMatrix(0.5 * (as + sa) / n);
  }

  // Candidate starting points for X = x_hat^{1/2}.
  Eigen::MatrixXd x = sym_sqrt(estimator_tilde(params)).mat();
  double best = mode_defect(x, params).norm();
  Eigen::MatrixXd x_ls;
  if (theorem5_init(params, &x_ls)) {
    const double r = mode_defect(x_ls, params).norm();
    if (r < best) {
      x = x_ls;
      best = r;
    }
  }

  // Damped Newton on F(X) = A X^{-1} S + S X^{-1} A - 2n X.
  const double target = 1e-10 * n * x.norm() + 1e-14;
  const Eigen::MatrixXd eye2 = Eigen::MatrixXd::Identity(p * p, p * p);
  double res = best;
  for (int iter = 0; iter < 200 && res > target; ++iter) {
    const Eigen::MatrixXd f = mode_defect(x, params);
    const Eigen::MatrixXd x_inv =
        x.llt().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd axi = a * x_inv;
    const Eigen::MatrixXd sxi = s * x_inv;
    const Eigen::MatrixXd jac = kron(sxi, axi) + kron(axi, sxi) + 2.0 * n * eye2;
    Eigen::VectorXd h = jac.partialPivLu().solve(vec(f));
    Eigen::MatrixXd step = unvec(h, p, p);
    step = 0.5 * (step + step.transpose()).eval();

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::MatrixXd cand = x + alpha * step;
      if (is_pd(cand)) {
        const double r = mode_defect(cand, params).norm();
        if (r < res) {
          x = cand;
          res = r;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }

  SpdMatrix x_hat(x * x);
  const double residual = giw_mode_residual(x_hat, params);
  const double bound = 1e-6 * n * sym_sqrt(x_hat).mat().norm();
  if (!(residual <= bound)) {
    throw NumericalError("giw_mode: residual " + std::to_string(residual) +
                             " exceeds bound " + std::to_string(bound),
                         residual);
  }
  return x_hat;
}

SpdMatrix estimator_tilde(const GiwParams& params) {
  const Eigen::MatrixXd m =
      (params.A.mat() * params.S.mat() + params.S.mat() * params.A.mat()) /
      (2.0 * params.n);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  // The anticommutator of PD matrices need not be PD; repair with a floor
  // relative to the spectrum so the result is usable at any data scale.
  const double scale = std::max(1.0, eig_range(sym).second);
  return nearest_pd(sym, 1e-10 * scale);
}

double giw_sample_p1(double n, double a, double s, std::mt19937_64& rng) {
  if (!(n > 2.0)) throw ParameterError("giw_sample_p1: n must exceed 2");
  if (!(a > 0.0) || !(s > 0.0)) {
    throw ParameterError("giw_sample_p1: a and s must be positive");
  }
  std::gamma_distribution<double> gamma(0.5 * (n - 2.0), 2.0);
  return s * a / gamma(rng);
}

}  // namespace gilevel
