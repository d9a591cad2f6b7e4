#include "gilevel/volatility.hpp"

#include <cmath>
#include <limits>

#include "gilevel/giw.hpp"

namespace gilevel {

VolConstants vol_constants(double delta, int p) {
  if (!(delta > 0.0) || delta > 1.0) {
    throw ParameterError("vol_constants: delta must lie in (0, 1]");
  }
  if (p < 1) throw ParameterError("vol_constants: p must be positive");
  VolConstants c;
  c.delta = delta;
  c.p = p;
  if (delta == 1.0) {
    c.k = 1.0;
    c.m = std::numeric_limits<double>::infinity();
    c.degenerate = true;
    return c;
  }
  c.k = (delta * (1.0 - p) + p) / (delta * (2.0 - p) + p - 1.0);
  c.m = delta / (1.0 - delta) + p - 1.0;
  return c;
}

Eigen::MatrixXd sample_wishart_identity(double dof, int p,
                                        std::mt19937_64& rng) {
  if (!(dof > p - 1)) {
    throw ParameterError("sample_wishart_identity: dof must exceed p - 1");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    std::gamma_distribution<double> chi2(0.5 * (dof - i), 2.0);
    t(i, i) = std::sqrt(chi2(rng));
    for (int j = 0; j < i; ++j) t(i, j) = normal(rng);
  }
  return t * t.transpose();
}

Eigen::MatrixXd sample_singular_beta(double m, int n, int p,
                                     std::mt19937_64& rng) {
  if (!(m > p - 1)) {
    throw ParameterError("sample_singular_beta: m must exceed p - 1");
  }
  if (n < 1) throw ParameterError("sample_singular_beta: n must be >= 1");
  const Eigen::MatrixXd a1 = sample_wishart_identity(m, p, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd y(p);
    for (int i = 0; i < p; ++i) y(i) = normal(rng);
    a2.noalias() += y * y.transpose();
  }
  const Eigen::MatrixXd u = chol_upper(SpdMatrix(a1 + a2));
  const Eigen::MatrixXd u_inv =
      u.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd b = u_inv.transpose() * a1 * u_inv;
  return 0.5 * (b + b.transpose());
}

SpdMatrix evolve_precision(const SpdMatrix& prec_prev, const Eigen::MatrixXd& b,
                           double k) {
  const Eigen::MatrixXd u = chol_upper(prec_prev);
  const Eigen::MatrixXd next = k * u.transpose() * b * u;
  return SpdMatrix(0.5 * (next + next.transpose()));
}

std::pair<FilterState, ForecastRecord> vol_filter_step(
    const FilterState& state, const Eigen::VectorXd& y,
    const VolConstants& consts) {
  const int p = state.S.dim();
  if (consts.p != p) throw DimensionError("vol_filter_step: p mismatch");
  if (y.size() != p) throw DimensionError("vol_filter_step: dimension mismatch");
  for (int i = 0; i < p; ++i) {
    if (!std::isfinite(y(i))) {
      throw DataError("vol_filter_step: non-finite observation at index " +
                      std::to_string(i));
    }
  }

  const double phi = state.steady.phi;
  const Eigen::VectorXd location = phi * state.m;
  const Eigen::VectorXd e = y - location;
  const double forecast_dof = consts.degenerate
                                  ? std::numeric_limits<double>::infinity()
                                  : consts.delta / (1.0 - consts.delta);
  const SpdMatrix spread(state.S.mat() / consts.k);

  ForecastRecord rec;
  rec.t = state.t + 1;
  rec.dof = forecast_dof;
  rec.location = location;
  rec.spread = spread;
  rec.error = e;
  rec.log_pred =
      consts.degenerate
          // Infinite degrees of freedom: Gaussian limit through the
          // conditional forecast covariance.
          ? log_gaussian(y, location,
                         SpdMatrix(sym_sqrt(state.sigma_tilde).mat() *
                                   state.steady.Q.mat() *
                                   sym_sqrt(state.sigma_tilde).mat()))
          : log_student_t(y, forecast_dof, location, spread);
  {
    Eigen::VectorXd std_err(p);
    const bool use_spread =
        state.msse_mode == MsseMode::kSpread && std::isfinite(forecast_dof);
    if (use_spread && forecast_dof <= 2.0) {
      std_err.setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      Eigen::VectorXd var(p);
      if (use_spread) {
        var = spread.mat().diagonal() / (forecast_dof - 2.0);
      } else {
        const Eigen::MatrixXd half = sym_sqrt(state.sigma_tilde).mat();
        var = (half * state.steady.Q.mat() * half).diagonal();
      }
      for (int i = 0; i < p; ++i) {
        const double sd = std::sqrt(std::max(var(i), 0.0));
        std_err(i) = sd < 1e-12 ? std::numeric_limits<double>::quiet_NaN()
                                : e(i) / sd;
      }
    }
    rec.std_error = std_err;
  }

  FilterState next = state;
  next.t = state.t + 1;
  next.n = forecast_dof;
  next.S = SpdMatrix(state.S.mat() / consts.k + e * e.transpose());
  // In the degenerate mode the estimator's dof only rescales sigma_tilde,
  // which the similarity gain cancels; any admissible value works.
  const double posterior_dof =
      consts.degenerate ? 2.0 * p + 1.0
                        : 1.0 / (1.0 - consts.delta) + 2.0 * p;
  next.sigma_tilde = estimator_tilde(
      GiwParams(posterior_dof, state.steady.Qinv, next.S));
  next.m = location + filter_gain(next.sigma_tilde, state.steady.P) * e;
  return {std::move(next), std::move(rec)};
}

std::vector<SpdMatrix> simulate_vol_path(const SpdMatrix& sigma0,
                                         const VolConstants& consts, int n_obs,
                                         std::mt19937_64& rng) {
  const int p = sigma0.dim();
  if (consts.p != p) throw DimensionError("simulate_vol_path: p mismatch");
  std::vector<SpdMatrix> path;
  path.reserve(n_obs);
  if (consts.degenerate) {
    path.assign(n_obs, sigma0);
    return path;
  }
  SpdMatrix prec = inverse_spd(sigma0);
  for (int t = 0; t < n_obs; ++t) {
    const Eigen::MatrixXd b = sample_singular_beta(consts.m, 1, p, rng);
    prec = evolve_precision(prec, b, consts.k);
    // Pseudo-inverse at the output boundary; the recursion keeps prec as-is.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prec.mat());
    const double cutoff = 1e-12 * es.eigenvalues().maxCoeff();
    Eigen::VectorXd inv_lam(p);
    for (int i = 0; i < p; ++i) {
      inv_lam(i) =
          es.eigenvalues()(i) > cutoff ? 1.0 / es.eigenvalues()(i) : 0.0;
    }
    const Eigen::MatrixXd sigma = es.eigenvectors() * inv_lam.asDiagonal() *
                                  es.eigenvectors().transpose();
    path.push_back(nearest_pd(0.5 * (sigma + sigma.transpose()), 1e-10));
  }
  return path;
}

}  // namespace gilevel
