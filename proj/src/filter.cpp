#include "gilevel/filter.hpp"

#include <cmath>
#include <string>

#include "gilevel/hyperparam.hpp"

namespace gilevel {

namespace {
constexpr double kLogPi = 1.1447298858494002;
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kSigmaFloor = 1e-12;
}  // namespace

double log_student_t(const Eigen::VectorXd& y, double dof,
                     const Eigen::VectorXd& location,
                     const SpdMatrix& spread) {
  const int p = spread.dim();
  if (y.size() != p || location.size() != p) {
    throw DimensionError("log_student_t: dimension mismatch");
  }
  const Eigen::VectorXd e = y - location;
  Eigen::LLT<Eigen::MatrixXd> llt(spread.mat());
  if (llt.info() != Eigen::Success) {
    throw SingularityError("log_student_t: singular spread matrix", -1);
  }
  const double quad = e.dot(llt.solve(e));
  const double half_logdet =
      Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return log_multigamma(p, 0.5 * (dof + p)) -
         log_multigamma(p, 0.5 * (dof + p - 1)) - 0.5 * p * kLogPi -
         half_logdet - 0.5 * (dof + p) * std::log1p(quad);
}

double log_gaussian(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                    const SpdMatrix& cov) {
  const int p = cov.dim();
  if (y.size() != p || mean.size() != p) {
    throw DimensionError("log_gaussian: dimension mismatch");
  }
  const Eigen::VectorXd e = y - mean;
  Eigen::LLT<Eigen::MatrixXd> llt(cov.mat());
  if (llt.info() != Eigen::Success) {
    throw SingularityError("log_gaussian: singular covariance", -1);
  }
  const double half_logdet =
      Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * p * kLog2Pi - half_logdet - 0.5 * e.dot(llt.solve(e));
}

FilterState filter_init(const ModelConfig& config, int p) {
  if (p < 1) throw ConfigError("filter_init: dimension must be positive");
  if (!(config.n0 > 0.0)) throw ConfigError("filter_init: n0 must be positive");
  if (!(config.p0 > 0.0)) throw ConfigError("filter_init: p0 must be positive");

  FilterState state;
  state.t = 0;
  state.m = config.m0.size() == 0 ? Eigen::VectorXd::Zero(p).eval() : config.m0;
  if (state.m.size() != p) {
    throw ConfigError("filter_init: m0 has wrong dimension");
  }
  state.S = config.S0.empty() ? SpdMatrix::Identity(p) : config.S0;
  if (state.S.dim() != p) {
    throw ConfigError("filter_init: S0 has wrong dimension");
  }
  state.n = config.n0;
  state.msse_mode = config.msse_mode;
  state.exact_p = config.exact_p;

  SpdMatrix w;
  if (const auto* fixed = std::get_if<WFixed>(&config.w_spec)) {
    if (fixed->W.empty()) throw ConfigError("filter_init: W not provided");
    if (fixed->W.dim() != p) throw ConfigError("filter_init: W has wrong dimension");
    w = fixed->W;
  } else if (const auto* disc = std::get_if<WDiscounts>(&config.w_spec)) {
    if (static_cast<int>(disc->deltas.size()) != p &&
        disc->deltas.size() != 1) {
      throw ConfigError("filter_init: need 1 or p discount factors");
    }
    std::vector<double> deltas = disc->deltas;
    if (deltas.size() == 1) deltas.assign(p, deltas[0]);
    w = w_from_discounts(deltas);
  } else {
    throw ConfigError(
        "filter_init: W must be estimated from data first (see estimate_w)");
  }

  state.steady = make_steady_state(config.phi, w);
  state.Pt = SpdMatrix(config.p0 * Eigen::MatrixXd::Identity(p, p));
  state.sigma_tilde =
      estimator_tilde(GiwParams(state.n + 2 * p, state.steady.Qinv, state.S));
  return state;
}

double log_predictive(const FilterState& state, const Eigen::VectorXd& y) {
  return log_student_t(y, state.n, state.steady.phi * state.m, state.S);
}

Eigen::MatrixXd filter_gain(const SpdMatrix& sigma_tilde,
                            const SpdMatrix& steady_p) {
  // A_t = sigma_tilde^{1/2} P sigma_tilde^{-1/2}. The norm of this
  // similarity transform grows like sqrt(cond(sigma_tilde)); when the
  // estimate is numerically rank-deficient (rank-1 dominated S_t early on,
  // or a PD repair that floored the spectrum) the conjugation amplifies
  // errors without bound and destabilizes the level recursion. Past the
  // condition cap the geometry carries no usable information, so the gain
  // falls back to P itself (the Sigma-proportional-to-identity form, with
  // spectrum in (0,1)).
  constexpr double kMaxCondition = 1e9;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_tilde.mat());
  const Eigen::VectorXd& lam = es.eigenvalues();
  if (!(lam.minCoeff() * kMaxCondition > lam.maxCoeff())) {
    return steady_p.mat();
  }
  const Eigen::MatrixXd half = es.eigenvectors() *
                               lam.cwiseSqrt().asDiagonal() *
                               es.eigenvectors().transpose();
  const Eigen::MatrixXd inv_half = es.eigenvectors() *
                                   lam.cwiseSqrt().cwiseInverse().asDiagonal() *
                                   es.eigenvectors().transpose();
  return half * steady_p.mat() * inv_half;
}

namespace {

Eigen::VectorXd standardized_error(const FilterState& state,
                                   const Eigen::VectorXd& e) {
  const int p = static_cast<int>(e.size());
  Eigen::VectorXd out(p);
  Eigen::VectorXd var(p);
  if (state.msse_mode == MsseMode::kSpread) {
    if (state.n <= 2.0) {
      return Eigen::VectorXd::Constant(
          p, std::numeric_limits<double>::quiet_NaN());
    }
    var = state.S.mat().diagonal() / (state.n - 2.0);
  } else {
    const Eigen::MatrixXd half = sym_sqrt(state.sigma_tilde).mat();
    var = (half * state.steady.Q.mat() * half).diagonal();
  }
  for (int i = 0; i < p; ++i) {
    const double sd = std::sqrt(std::max(var(i), 0.0));
    out(i) = sd < kSigmaFloor ? std::numeric_limits<double>::quiet_NaN()
                              : e(i) / sd;
  }
  return out;
}

}  // namespace

std::pair<FilterState, ForecastRecord> filter_step(const FilterState& state,
                                                   const Eigen::VectorXd& y) {
  const int p = state.S.dim();
  if (y.size() != p) throw DimensionError("filter_step: dimension mismatch");
  for (int i = 0; i < p; ++i) {
    if (!std::isfinite(y(i))) {
      throw DataError("filter_step: non-finite observation at index " +
                      std::to_string(i));
    }
  }

  const double phi = state.steady.phi;
  const Eigen::VectorXd location = phi * state.m;
  const Eigen::VectorXd e = y - location;

  ForecastRecord rec;
  rec.t = state.t + 1;
  rec.dof = state.n;
  rec.location = location;
  rec.spread = state.S;
  rec.error = e;
  rec.std_error = standardized_error(state, e);
  rec.log_pred = log_predictive(state, y);

  FilterState next = state;
  next.t = state.t + 1;
  next.n = state.n + 1.0;
  next.S = SpdMatrix(state.S.mat() + e * e.transpose());

  const SpdMatrix* gain_p = &state.steady.P;
  const SpdMatrix* qinv = &state.steady.Qinv;
  SpdMatrix qinv_exact;
  if (state.exact_p) {
    // Diagnostic mode: exact P_t and Q_t = P_{t-1} + W + I instead of limits.
    qinv_exact = inverse_spd(SpdMatrix(
        state.Pt.mat() + state.steady.W.mat() +
        Eigen::MatrixXd::Identity(p, p)));
    qinv = &qinv_exact;
    next.Pt = p_step(state.Pt, phi, state.steady.W);
    gain_p = &next.Pt;
  }

  next.sigma_tilde =
      estimator_tilde(GiwParams(next.n + 2 * p, *qinv, next.S));
  next.m = location + filter_gain(next.sigma_tilde, *gain_p) * e;
  return {std::move(next), std::move(rec)};
}

FilterOutput run_filter(const ModelConfig& config, const Eigen::MatrixXd& data,
                        bool keep_sigma_path) {
  const int n_obs = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (n_obs < 1) throw DataError("run_filter: empty data");

  FilterOutput out;
  out.records.reserve(n_obs);
  FilterState state = filter_init(config, p);
  if (keep_sigma_path) out.sigma_path.reserve(n_obs);

  Eigen::VectorXd ssq = Eigen::VectorXd::Zero(p);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(p);
  for (int t = 0; t < n_obs; ++t) {
    auto [next, rec] = filter_step(state, data.row(t).transpose());
    out.log_lik += rec.log_pred;
    for (int i = 0; i < p; ++i) {
      if (std::isfinite(rec.std_error(i))) {
        ssq(i) += rec.std_error(i) * rec.std_error(i);
        count(i) += 1;
      } else {
        ++out.excluded;
      }
    }
    out.records.push_back(std::move(rec));
    state = std::move(next);
    if (keep_sigma_path) out.sigma_path.push_back(state.sigma_tilde);
  }

  out.msse.resize(p);
  for (int i = 0; i < p; ++i) {
    out.msse(i) = count(i) > 0 ? ssq(i) / count(i)
                               : std::numeric_limits<double>::quiet_NaN();
  }
  out.final = std::move(state);
  return out;
}

}  // namespace gilevel
