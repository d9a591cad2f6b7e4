#include "gilevel/hyperparam.hpp"

#include <cmath>
#include <string>

#include "gilevel/giw.hpp"
#include "gilevel/steady_state.hpp"

namespace gilevel {

namespace {

constexpr double kLogPi = 1.1447298858494002;

// Pairs (k, l), k >= l, enumerated in vech order.
int pair_count(int p) { return p * (p + 1) / 2; }

void pair_of_index(int p, int q, int* k, int* l) {
  int col = 0;
  int run = p;
  while (q >= run) {
    q -= run;
    --run;
    ++col;
  }
  *l = col;
  *k = col + q;
}

// v += E_q * u with E_q = u_k u_l' + u_l u_k' (k != l) or u_k u_k'.
void add_sym_dir(int k, int l, const Eigen::VectorXd& u, Eigen::VectorXd* v) {
  (*v)(k) += u(l);
  if (k != l) (*v)(l) += u(k);
}

int tri_index(int q, int r) {  // q <= r
  return r * (r + 1) / 2 + q;
}

void check_p_domain(const SpdMatrix& p_mat) {
  const auto [lo, hi] = eig_range(p_mat.mat());
  if (!(lo > 0.0 && hi < 1.0)) {
    throw ParameterError("logdet_sn: eigenvalues of P must lie in (0, 1)");
  }
}

struct SensitivityPass {
  Eigen::MatrixXd sn;                 // S_N
  std::vector<Eigen::MatrixXd> d_sn;  // one per pair (k >= l)
  std::vector<Eigen::MatrixXd> d2_sn; // tri-indexed (q <= r)
};

// Single forward pass of the level recursion m_t = (I-P) m_{t-1} + P y_t,
// m_0 = 0, accumulating S_N and its first/second directional derivatives
// with respect to symmetric perturbations of P. The derivative recursions
//   dm_t = (I-P) dm_{t-1} + E_q e_t
//   d2m_t = (I-P) d2m_{t-1} - E_r dm_{t-1}^q - E_q dm_{t-1}^r
// carry the same impulse-response content as the K_i coefficient recursion
// of the expanded objective, at O(N) cost.
SensitivityPass forward_pass(const SpdMatrix& p_mat,
                             const Eigen::MatrixXd& data, const SpdMatrix& s0,
                             int order) {
  const int p = p_mat.dim();
  const int n_obs = static_cast<int>(data.rows());
  if (data.cols() != p) throw DimensionError("logdet_sn: data/P mismatch");
  if (s0.dim() != p) throw DimensionError("logdet_sn: data/S0 mismatch");
  if (n_obs < 1) throw DataError("logdet_sn: empty data");
  check_p_domain(p_mat);

  const int nq = pair_count(p);
  const int nt = nq * (nq + 1) / 2;
  std::vector<int> pk(nq), pl(nq);
  for (int q = 0; q < nq; ++q) pair_of_index(p, q, &pk[q], &pl[q]);

  const Eigen::MatrixXd i_minus_p =
      Eigen::MatrixXd::Identity(p, p) - p_mat.mat();

  SensitivityPass out;
  out.sn = s0.mat();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd dm, d2m;
  if (order >= 1) {
    dm = Eigen::MatrixXd::Zero(p, nq);
    out.d_sn.assign(nq, Eigen::MatrixXd::Zero(p, p));
  }
  if (order >= 2) {
    d2m = Eigen::MatrixXd::Zero(p, nt);
    out.d2_sn.assign(nt, Eigen::MatrixXd::Zero(p, p));
  }

  for (int t = 0; t < n_obs; ++t) {
    const Eigen::VectorXd y = data.row(t).transpose();
    const Eigen::VectorXd e = y - m;
    out.sn.noalias() += e * e.transpose();
    if (order >= 1) {
      for (int q = 0; q < nq; ++q) {
        out.d_sn[q].noalias() -= dm.col(q) * e.transpose();
        out.d_sn[q].noalias() -= e * dm.col(q).transpose();
      }
    }
    if (order >= 2) {
      for (int r = 0; r < nq; ++r) {
        for (int q = 0; q <= r; ++q) {
          Eigen::MatrixXd& acc = out.d2_sn[tri_index(q, r)];
          const auto d2 = d2m.col(tri_index(q, r));
          acc.noalias() -= d2 * e.transpose();
          acc.noalias() -= e * d2.transpose();
          acc.noalias() += dm.col(q) * dm.col(r).transpose();
          acc.noalias() += dm.col(r) * dm.col(q).transpose();
        }
      }
      d2m = (i_minus_p * d2m).eval();
      for (int r = 0; r < nq; ++r) {
        for (int q = 0; q <= r; ++q) {
          Eigen::VectorXd corr = Eigen::VectorXd::Zero(p);
          add_sym_dir(pk[r], pl[r], dm.col(q), &corr);
          add_sym_dir(pk[q], pl[q], dm.col(r), &corr);
          d2m.col(tri_index(q, r)) -= corr;
        }
      }
    }
    if (order >= 1) {
      dm = (i_minus_p * dm).eval();
      for (int q = 0; q < nq; ++q) {
        Eigen::VectorXd corr = Eigen::VectorXd::Zero(p);
        add_sym_dir(pk[q], pl[q], e, &corr);
        dm.col(q) += corr;
      }
    }
    m += p_mat.mat() * e;
  }
  return out;
}

double trace_prod_sym(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.cwiseProduct(b).sum();  // valid when b is symmetric
}

}  // namespace

double loglik_closed(const SpdMatrix& s0, const SpdMatrix& sn, double n0,
                     int n_obs, int p) {
  if (n_obs < 1) throw ParameterError("loglik_closed: empty data");
  if (!(n0 > 0.0)) throw ParameterError("loglik_closed: n0 must be positive");
  double c = -0.5 * n_obs * p * kLogPi;
  for (int t = 1; t <= n_obs; ++t) {
    c += log_multigamma(p, 0.5 * (n0 + p + t - 1)) -
         log_multigamma(p, 0.5 * (n0 + p + t - 2));
  }
  const double c1 = n0 + p - 2;
  return c + 0.5 * (c1 + 1) * log_det(s0) -
         0.5 * (c1 + n_obs + 1) * log_det(sn);
}

double logdet_sn(const SpdMatrix& p_mat, const Eigen::MatrixXd& data,
                 const SpdMatrix& s0) {
  const auto pass = forward_pass(p_mat, data, s0, 0);
  return log_det(SpdMatrix(pass.sn));
}

Eigen::MatrixXd grad_logdet_sn(const SpdMatrix& p_mat,
                               const Eigen::MatrixXd& data,
                               const SpdMatrix& s0) {
  const int p = p_mat.dim();
  const auto pass = forward_pass(p_mat, data, s0, 1);
  const Eigen::MatrixXd sn_inv = inverse_spd(SpdMatrix(pass.sn)).mat();
  Eigen::MatrixXd grad(p, p);
  const int nq = pair_count(p);
  for (int q = 0; q < nq; ++q) {
    int k, l;
    pair_of_index(p, q, &k, &l);
    const double g = trace_prod_sym(sn_inv, pass.d_sn[q]);
    grad(k, l) = g;
    grad(l, k) = g;
  }
  return grad;
}

namespace {

// Gradient and Hessian over the p(p+1)/2 free parameters.
void derivatives_half(const SpdMatrix& p_mat, const Eigen::MatrixXd& data,
                      const SpdMatrix& s0, Eigen::VectorXd* grad,
                      Eigen::MatrixXd* hess, double* objective) {
  const auto pass = forward_pass(p_mat, data, s0, 2);
  const SpdMatrix sn(pass.sn);
  const Eigen::MatrixXd sn_inv = inverse_spd(sn).mat();
  const int nq = static_cast<int>(pass.d_sn.size());

  if (objective != nullptr) *objective = log_det(sn);
  grad->resize(nq);
  std::vector<Eigen::MatrixXd> w(nq);
  for (int q = 0; q < nq; ++q) {
    (*grad)(q) = trace_prod_sym(sn_inv, pass.d_sn[q]);
    w[q] = sn_inv * pass.d_sn[q];
  }
  hess->resize(nq, nq);
  for (int r = 0; r < nq; ++r) {
    for (int q = 0; q <= r; ++q) {
      const double h =
          trace_prod_sym(sn_inv, pass.d2_sn[tri_index(q, r)]) -
          w[q].cwiseProduct(w[r].transpose()).sum();
      (*hess)(q, r) = h;
      (*hess)(r, q) = h;
    }
  }
}

}  // namespace

Eigen::MatrixXd hess_logdet_sn(const SpdMatrix& p_mat,
                               const Eigen::MatrixXd& data,
                               const SpdMatrix& s0) {
  const int p = p_mat.dim();
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess_half;
  derivatives_half(p_mat, data, s0, &grad, &hess_half, nullptr);

  const int nq = pair_count(p);
  std::vector<int> pair_of(p * p);
  for (int q = 0; q < nq; ++q) {
    int k, l;
    pair_of_index(p, q, &k, &l);
    pair_of[l * p + k] = q;
    pair_of[k * p + l] = q;
  }
  Eigen::MatrixXd hess(p * p, p * p);
  for (int a = 0; a < p * p; ++a) {
    for (int b = 0; b < p * p; ++b) {
      hess(a, b) = hess_half(pair_of[a], pair_of[b]);
    }
  }
  return hess;
}

namespace {

SpdMatrix clamp_spectrum(const Eigen::MatrixXd& m, double eps) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd lam =
      es.eigenvalues().cwiseMax(eps).cwiseMin(1.0 - eps);
  return SpdMatrix(es.eigenvectors() * lam.asDiagonal() *
                   es.eigenvectors().transpose());
}

Eigen::MatrixXd scatter_sym(const Eigen::VectorXd& half, int p) {
  Eigen::MatrixXd out(p, p);
  const int nq = pair_count(p);
  for (int q = 0; q < nq; ++q) {
    int k, l;
    pair_of_index(p, q, &k, &l);
    out(k, l) = half(q);
    out(l, k) = half(q);
  }
  return out;
}

}  // namespace

NrResult newton_raphson_p(const Eigen::MatrixXd& data, const SpdMatrix& s0,
                          const NrSettings& settings) {
  const int p = static_cast<int>(data.cols());
  if (data.rows() < 2) throw ParameterError("newton_raphson_p: need N >= 2");
  const double eps = settings.eig_clamp;
  if (!(eps > 0.0 && eps < 0.5)) {
    throw ParameterError("newton_raphson_p: eig_clamp must lie in (0, 0.5)");
  }

  NrResult result;
  SpdMatrix cur = settings.init.empty()
                      ? SpdMatrix(0.5 * Eigen::MatrixXd::Identity(p, p))
                      : clamp_spectrum(settings.init.mat(), eps);
  double obj = logdet_sn(cur, data, s0);
  if (settings.keep_trace) result.trace.push_back({0, obj, 0.0});

  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    derivatives_half(cur, data, s0, &grad, &hess, nullptr);

    Eigen::VectorXd dir;
    bool newton_ok = false;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd step = ldlt.solve(grad);
      if (step.allFinite() && grad.dot(step) > 0.0) {
        dir = -step;  // descent form of the Newton update
        newton_ok = true;
      }
    }
    if (!newton_ok) dir = -grad;

    double alpha = 1.0;
    bool accepted = false;
    SpdMatrix cand;
    double cand_obj = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      cand = clamp_spectrum(
          cur.mat() + alpha * scatter_sym(dir, p), eps);
      cand_obj = logdet_sn(cand, data, s0);
      if (cand_obj <= obj) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    result.iterations = iter;
    if (!accepted) {
      // No descent available: treat the current iterate as the minimizer.
      result.converged = true;
      break;
    }
    const double step_norm = frobenius(cand, cur);
    cur = cand;
    obj = cand_obj;
    if (settings.keep_trace) result.trace.push_back({iter, obj, step_norm});
    if (step_norm <= settings.tol) {
      result.converged = true;
      break;
    }
  }
  result.p_hat = cur;
  return result;
}

SpdMatrix w_from_discounts(const std::vector<double>& deltas) {
  if (deltas.empty()) throw ParameterError("w_from_discounts: empty deltas");
  const int p = static_cast<int>(deltas.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    const double d = deltas[i];
    if (!(d > 0.0) || d > 1.0) {
      throw ParameterError("w_from_discounts: delta must lie in (0, 1]");
    }
    if (d == 1.0) {
      throw ParameterError(
          "w_from_discounts: delta = 1 gives W = 0, which is not positive "
          "definite");
    }
    w(i, i) = (1.0 - d) * (1.0 - d) / d;
  }
  return SpdMatrix(std::move(w));
}

ModelConfig estimate_w(const ModelConfig& config,
                       const Eigen::MatrixXd& calib_data,
                       NrResult* trace_out) {
  const auto* nr = std::get_if<WEstimateNR>(&config.w_spec);
  if (nr == nullptr) return config;
  const int p = static_cast<int>(calib_data.cols());
  NrSettings settings;
  settings.tol = nr->tol;
  settings.max_iter = nr->max_iter;
  settings.keep_trace = trace_out != nullptr;
  const SpdMatrix s0 =
      config.S0.empty() ? SpdMatrix::Identity(p) : config.S0;
  NrResult fit = newton_raphson_p(calib_data, s0, settings);
  ModelConfig resolved = config;
  resolved.w_spec = WFixed{w_from_p(fit.p_hat, config.phi)};
  if (trace_out != nullptr) *trace_out = std::move(fit);
  return resolved;
}

FilterOutput run_filter_estimated(const ModelConfig& config,
                                  const Eigen::MatrixXd& data,
                                  int reestimate_every, bool keep_sigma_path) {
  if (reestimate_every <= 0) {
    return run_filter(estimate_w(config, data), data, keep_sigma_path);
  }
  const int n_obs = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  const int first = std::min(std::max(reestimate_every, 2), n_obs);

  ModelConfig resolved = estimate_w(config, data.topRows(first));
  FilterState state = filter_init(resolved, p);

  FilterOutput out;
  out.records.reserve(n_obs);
  Eigen::VectorXd ssq = Eigen::VectorXd::Zero(p);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(p);
  for (int t = 0; t < n_obs; ++t) {
    if (t > first && t % reestimate_every == 0) {
      ModelConfig update = estimate_w(config, data.topRows(t));
      state.steady =
          make_steady_state(config.phi, std::get<WFixed>(update.w_spec).W);
    }
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
