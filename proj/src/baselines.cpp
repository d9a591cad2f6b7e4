#include "gilevel/baselines.hpp"

#include <cmath>

namespace gilevel {

KalmanOutput kalman_run(const Eigen::MatrixXd& data, const SpdMatrix& sigma,
                        const SpdMatrix& omega, double phi,
                        const Eigen::VectorXd& m0, const SpdMatrix& c0) {
  const int n_obs = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (sigma.dim() != p || omega.dim() != p || c0.dim() != p ||
      m0.size() != p) {
    throw DimensionError("kalman_run: dimension mismatch");
  }

  KalmanOutput out;
  out.records.reserve(n_obs);
  out.means.reserve(n_obs);
  out.covs.reserve(n_obs);

  Eigen::VectorXd m = m0;
  Eigen::MatrixXd c = c0.mat();
  Eigen::VectorXd ssq = Eigen::VectorXd::Zero(p);

  for (int t = 0; t < n_obs; ++t) {
    const Eigen::VectorXd y = data.row(t).transpose();
    const Eigen::MatrixXd r = phi * phi * c + omega.mat();
    const Eigen::MatrixXd f = r + sigma.mat();
    Eigen::LLT<Eigen::MatrixXd> llt(f);
    if (llt.info() != Eigen::Success) {
      throw SingularityError("kalman_run: singular forecast covariance", -1);
    }
    const Eigen::VectorXd location = phi * m;
    const Eigen::VectorXd e = y - location;
    const Eigen::MatrixXd gain = r * llt.solve(Eigen::MatrixXd::Identity(p, p));

    ForecastRecord rec;
    rec.t = t + 1;
    rec.dof = std::numeric_limits<double>::infinity();
    rec.location = location;
    rec.spread = SpdMatrix(0.5 * (f + f.transpose()));
    rec.error = e;
    rec.std_error = e.cwiseQuotient(f.diagonal().cwiseSqrt());
    rec.log_pred = log_gaussian(y, location, rec.spread);
    out.log_lik += rec.log_pred;
    ssq += rec.std_error.cwiseProduct(rec.std_error);

    m = location + gain * e;
    c = r - gain * r;
    c = 0.5 * (c + c.transpose()).eval();
    out.means.push_back(m);
    out.covs.push_back(SpdMatrix(c));
    out.records.push_back(std::move(rec));
  }
  out.msse = ssq / n_obs;
  out.final_mean = m;
  out.final_cov = SpdMatrix(c);
  return out;
}

SmootherOutput kalman_smoother(const Eigen::MatrixXd& data,
                               const SpdMatrix& sigma, const SpdMatrix& omega,
                               double phi, const Eigen::VectorXd& m0,
                               const SpdMatrix& c0) {
  const int n_obs = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());

  // Forward pass, keeping the t = 0 prior at index 0.
  std::vector<Eigen::VectorXd> m(n_obs + 1);
  std::vector<Eigen::MatrixXd> c(n_obs + 1), r(n_obs + 1);
  m[0] = m0;
  c[0] = c0.mat();
  Eigen::MatrixXd last_gain;
  for (int t = 1; t <= n_obs; ++t) {
    const Eigen::VectorXd y = data.row(t - 1).transpose();
    r[t] = phi * phi * c[t - 1] + omega.mat();
    const Eigen::MatrixXd f = r[t] + sigma.mat();
    Eigen::LLT<Eigen::MatrixXd> llt(f);
    if (llt.info() != Eigen::Success) {
      throw SingularityError("kalman_smoother: singular forecast covariance",
                             -1);
    }
    const Eigen::MatrixXd gain =
        r[t] * llt.solve(Eigen::MatrixXd::Identity(p, p));
    m[t] = phi * m[t - 1] + gain * (y - phi * m[t - 1]);
    c[t] = r[t] - gain * r[t];
    c[t] = 0.5 * (c[t] + c[t].transpose()).eval();
    if (t == n_obs) last_gain = gain;
  }

  SmootherOutput out;
  out.means.resize(n_obs + 1);
  out.covs.resize(n_obs + 1);
  out.lag_one.resize(n_obs);

  std::vector<Eigen::MatrixXd> j(n_obs + 1);
  out.means[n_obs] = m[n_obs];
  out.covs[n_obs] = SpdMatrix(c[n_obs]);
  for (int t = n_obs - 1; t >= 0; --t) {
    j[t] = phi * c[t] * r[t + 1].llt().solve(Eigen::MatrixXd::Identity(p, p));
    out.means[t] = m[t] + j[t] * (out.means[t + 1] - phi * m[t]);
    Eigen::MatrixXd cs =
        c[t] + j[t] * (out.covs[t + 1].mat() - r[t + 1]) * j[t].transpose();
    out.covs[t] = SpdMatrix(0.5 * (cs + cs.transpose()));
  }

  // Lag-one covariance recursion (Shumway-Stoffer), indices t = 1..N where
  // lag_one[t-1] = Cov(theta_t, theta_{t-1} | y^N).
  Eigen::MatrixXd lag =
      (Eigen::MatrixXd::Identity(p, p) - last_gain) * phi * c[n_obs - 1];
  out.lag_one[n_obs - 1] = lag;
  for (int t = n_obs - 1; t >= 1; --t) {
    lag = c[t] * j[t - 1].transpose() +
          j[t] * (lag - phi * c[t]) * j[t - 1].transpose();
    out.lag_one[t - 1] = lag;
  }
  return out;
}

namespace {

SpdMatrix diff_covariance_half(const Eigen::MatrixXd& data) {
  const int n_obs = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (n_obs < 3) return SpdMatrix::Identity(p);
  Eigen::MatrixXd diffs(n_obs - 1, p);
  for (int t = 1; t < n_obs; ++t) diffs.row(t - 1) = data.row(t) - data.row(t - 1);
  const Eigen::RowVectorXd mean = diffs.colwise().mean();
  diffs.rowwise() -= mean;
  const Eigen::MatrixXd cov = diffs.transpose() * diffs / (n_obs - 2);
  // Differences of a local level have covariance 2 Sigma + Omega.
  return nearest_pd(0.5 * cov, 1e-8);
}

}  // namespace

EmResult em_fit(const Eigen::MatrixXd& data, double phi,
                const EmSettings& settings) {
  const int n_obs = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (n_obs < 2) throw ParameterError("em_fit: need at least 2 observations");

  EmResult result;
  SpdMatrix sigma = settings.sigma_init.empty() ? diff_covariance_half(data)
                                                : settings.sigma_init;
  SpdMatrix omega = settings.omega_init.empty() ? diff_covariance_half(data)
                                                : settings.omega_init;
  const Eigen::VectorXd m0 = Eigen::VectorXd::Zero(p);
  const SpdMatrix c0(settings.p0 * Eigen::MatrixXd::Identity(p, p));

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    const double ll =
        kalman_run(data, sigma, omega, phi, m0, c0).log_lik;
    result.loglik_trace.push_back(ll);
    result.iterations = iter;
    if (std::abs(ll - prev_ll) < settings.tol) {
      result.converged = true;
      break;
    }
    prev_ll = ll;

    const SmootherOutput sm = kalman_smoother(data, sigma, omega, phi, m0, c0);
    Eigen::MatrixXd s11 = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd s10 = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd s00 = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(p, p);
    for (int t = 1; t <= n_obs; ++t) {
      s11 += sm.covs[t].mat() + sm.means[t] * sm.means[t].transpose();
      s10 += sm.lag_one[t - 1] + sm.means[t] * sm.means[t - 1].transpose();
      s00 += sm.covs[t - 1].mat() + sm.means[t - 1] * sm.means[t - 1].transpose();
      const Eigen::VectorXd d = data.row(t - 1).transpose() - sm.means[t];
      resid += d * d.transpose() + sm.covs[t].mat();
    }
    const Eigen::MatrixXd omega_new =
        (s11 - phi * s10 - phi * s10.transpose() + phi * phi * s00) / n_obs;
    const Eigen::MatrixXd sigma_new = resid / n_obs;

    const auto update = [&result](const Eigen::MatrixXd& m) {
      const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
      Eigen::LLT<Eigen::MatrixXd> llt(sym);
      if (llt.info() == Eigen::Success) return SpdMatrix(sym);
      result.repaired = true;
      return nearest_pd(sym, 1e-10);
    };
    omega = update(omega_new);
    sigma = update(sigma_new);
  }
  result.sigma_hat = sigma;
  result.omega_hat = omega;
  return result;
}

namespace {

double iw_loglik(const Eigen::MatrixXd& data, double phi, double n0,
                 const SpdMatrix& s0, double w) {
  const int p = static_cast<int>(data.cols());
  ModelConfig config;
  config.phi = phi;
  config.n0 = n0;
  config.S0 = s0;
  config.w_spec = WFixed{SpdMatrix(w * Eigen::MatrixXd::Identity(p, p))};
  return run_filter(config, data).log_lik;
}

}  // namespace

IwFitResult iw_fit(const Eigen::MatrixXd& data, double phi, double n0,
                   const SpdMatrix& s0, double w_lo, double w_hi) {
  if (!(w_lo > 0.0 && w_hi > w_lo)) {
    throw ParameterError("iw_fit: invalid w bracket");
  }
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);

  for (int attempt = 0; attempt < 3; ++attempt) {
    double a = std::log(w_lo);
    double b = std::log(w_hi);
    double x1 = b - golden * (b - a);
    double x2 = a + golden * (b - a);
    double f1 = iw_loglik(data, phi, n0, s0, std::exp(x1));
    double f2 = iw_loglik(data, phi, n0, s0, std::exp(x2));
    for (int it = 0; it < 40 && (b - a) > 1e-3; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + golden * (b - a);
        f2 = iw_loglik(data, phi, n0, s0, std::exp(x2));
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - golden * (b - a);
        f1 = iw_loglik(data, phi, n0, s0, std::exp(x1));
      }
    }
    const double w_best = std::exp(0.5 * (a + b));
    // Interior check: likelihood at the boundary means the bracket missed
    // the maximum; widen and retry.
    const double f_best = iw_loglik(data, phi, n0, s0, w_best);
    const double f_lo = iw_loglik(data, phi, n0, s0, w_lo);
    const double f_hi = iw_loglik(data, phi, n0, s0, w_hi);
    if (f_best >= f_lo && f_best >= f_hi) {
      IwFitResult result;
      result.w_hat = w_best;
      const int p = static_cast<int>(data.cols());
      ModelConfig config;
      config.phi = phi;
      config.n0 = n0;
      config.S0 = s0;
      config.w_spec =
          WFixed{SpdMatrix(w_best * Eigen::MatrixXd::Identity(p, p))};
      result.output = run_filter(config, data);
      result.log_lik = result.output.log_lik;
      return result;
    }
    w_lo /= 100.0;
    w_hi *= 100.0;
  }
  throw EstimationError("iw_fit: likelihood maximum not inside the bracket");
}

}  // namespace gilevel
