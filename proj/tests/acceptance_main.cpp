// Acceptance suite: one criterion per check, one PASS/FAIL line each.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gilevel/baselines.hpp"
#include "gilevel/control_chart.hpp"
#include "gilevel/filter.hpp"
#include "gilevel/giw.hpp"
#include "gilevel/hyperparam.hpp"
#include "gilevel/io.hpp"
#include "gilevel/simulate.hpp"
#include "gilevel/steady_state.hpp"
#include "gilevel/volatility.hpp"
#include "oracles.hpp"

using namespace gilevel;

namespace {

struct Checker {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      detail = msg;
    }
  }
};

double iw_log_density_ref(const Eigen::MatrixXd& x, double n,
                          const Eigen::MatrixXd& a) {
  const int p = static_cast<int>(x.rows());
  const double h = 0.5 * (n - p - 1);
  const auto ld = [](const Eigen::MatrixXd& m) {
    return 2.0 *
           Eigen::MatrixXd(m.llt().matrixL()).diagonal().array().log().sum();
  };
  double lgp = 0.25 * p * (p - 1) * std::log(M_PI);
  for (int i = 1; i <= p; ++i) lgp += std::lgamma(h + 0.5 * (1 - i));
  return h * ld(a) - p * h * std::log(2.0) - lgp - 0.5 * n * ld(x) -
         0.5 * x.llt().solve(a).trace();
}

// --------------------------------------------------------------- criteria

// 1. GIW density normalization at p = 1 by quadrature.
bool c01(std::string& detail) {
  Checker c;
  Eigen::MatrixXd one(1, 1);
  for (const auto& [n, a, s] :
       {std::tuple{8.0, 1.0, 1.0}, {12.0, 3.0, 0.5}, {20.0, 2.0, 5.0}}) {
    one(0, 0) = a;
    const SpdMatrix am(one);
    one(0, 0) = s;
    const SpdMatrix sm(one);
    const GiwParams params(n, am, sm);
    const double mass = oracles::integrate_0_inf([&](double x) {
      Eigen::MatrixXd m(1, 1);
      m(0, 0) = x;
      return std::exp(giw_log_density(SpdMatrix(m), params));
    });
    c.require(std::abs(mass - 1.0) <= 1e-6,
              "mass " + std::to_string(mass) + " at n=" + std::to_string(n));
  }
  detail = c.detail;
  return c.ok;
}

// 2. Reduction to the inverse Wishart when S = I or A = I.
bool c02(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(202);
  for (int p : {2, 3}) {
    const SpdMatrix a = oracles::random_pd(p, rng);
    const SpdMatrix s = oracles::random_pd(p, rng);
    const double n = 2 * p + 4.0;
    const GiwParams s_id(n, a, SpdMatrix::Identity(p));
    const GiwParams a_id(n, SpdMatrix::Identity(p), s);
    for (int i = 0; i < 100; ++i) {
      const SpdMatrix x = oracles::random_pd(p, rng);
      c.require(std::abs(giw_log_density(x, s_id) -
                         iw_log_density_ref(x.mat(), n, a.mat())) <= 1e-10,
                "S=I reduction at p=" + std::to_string(p));
      c.require(std::abs(giw_log_density(x, a_id) -
                         iw_log_density_ref(x.mat(), n, s.mat())) <= 1e-10,
                "A=I reduction at p=" + std::to_string(p));
    }
  }
  detail = c.detail;
  return c.ok;
}

// 3. Exchange symmetry in (A, S) and block-diagonal kernel factorization.
bool c03(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(303);
  for (int i = 0; i < 100; ++i) {
    const int p = 2 + (i % 2);
    const SpdMatrix a = oracles::random_pd(p, rng);
    const SpdMatrix s = oracles::random_pd(p, rng);
    const SpdMatrix x = oracles::random_pd(p, rng);
    const double n = 2 * p + 3.0;
    const double d1 = giw_log_density(x, GiwParams(n, a, s));
    const double d2 = giw_log_density(x, GiwParams(n, s, a));
    c.require(std::abs(d1 - d2) <= 1e-10, "exchange symmetry");
  }

  // Block independence: the joint-minus-blocks difference is an
  // X-independent normalization constant.
  const int q1 = 2, q2 = 1, p = 3;
  const double n = 2 * p + 4.0;
  const SpdMatrix a1 = oracles::random_pd(q1, rng);
  const SpdMatrix a2 = oracles::random_pd(q2, rng);
  const SpdMatrix s1 = oracles::random_pd(q1, rng);
  const SpdMatrix s2 = oracles::random_pd(q2, rng);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  a.topLeftCorner(q1, q1) = a1.mat();
  a.bottomRightCorner(q2, q2) = a2.mat();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  s.topLeftCorner(q1, q1) = s1.mat();
  s.bottomRightCorner(q2, q2) = s2.mat();
  const GiwParams joint(n, SpdMatrix(a), SpdMatrix(s));
  const GiwParams b1(n, a1, s1);
  const GiwParams b2(n, a2, s2);
  double reference = 0.0;
  for (int i = 0; i < 100; ++i) {
    const SpdMatrix x1 = oracles::random_pd(q1, rng);
    const SpdMatrix x2 = oracles::random_pd(q2, rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(p, p);
    x.topLeftCorner(q1, q1) = x1.mat();
    x.bottomRightCorner(q2, q2) = x2.mat();
    const double diff = giw_log_density(SpdMatrix(x), joint) -
                        giw_log_density(x1, b1) - giw_log_density(x2, b2);
    if (i == 0) {
      reference = diff;
    } else {
      c.require(std::abs(diff - reference) <= 1e-10, "block independence");
    }
  }
  detail = c.detail;
  return c.ok;
}

// 4. Mode correctness: equation residual and special cases.
bool c04(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(404);
  for (int i = 0; i < 50; ++i) {
    const int p = 2 + (i % 2);
    const double n = 2 * p + 1.5 + 3.0 * (i % 4);
    const GiwParams params(n, oracles::random_pd(p, rng),
                           oracles::random_pd(p, rng));
    const SpdMatrix mode = giw_mode(params);
    const double bound = 1e-6 * n * sym_sqrt(mode).mat().norm();
    c.require(giw_mode_residual(mode, params) <= bound, "random mode residual");
  }

  // S = I: mode A/n.
  const GiwParams id(6.0, oracles::random_pd(2, rng), SpdMatrix::Identity(2));
  c.require(frobenius(giw_mode(id).mat(), id.A.mat() / 6.0) <=
                1e-12 * id.A.mat().norm(),
            "S=I closed form");
  // S = lambda A.
  Eigen::MatrixXd ad(2, 2);
  ad << 2.0, 0.0, 0.0, 3.0;
  const GiwParams prop(10.0, SpdMatrix(ad), SpdMatrix(2.0 * ad));
  c.require(frobenius(giw_mode(prop).mat(), 2.0 * ad * ad / 10.0) <= 1e-12,
            "S=lambda A closed form");
  // Commuting pair.
  const SpdMatrix base = oracles::random_pd(3, rng);
  const SpdMatrix poly(base.mat() * base.mat() +
                       Eigen::MatrixXd::Identity(3, 3));
  const GiwParams comm(2 * 3 + 3.0, base, poly);
  c.require(frobenius(giw_mode(comm).mat(),
                      (base.mat() * poly.mat() + poly.mat() * base.mat()) /
                          (2.0 * comm.n)) <= 1e-10 * poly.mat().norm(),
            "commuting closed form");
  detail = c.detail;
  return c.ok;
}

// 5. Steady state: closed form vs iteration, commutation, round trip.
bool c05(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> phis(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const int p = 1 + (i % 4);
    const double phi = phis(rng);
    const SpdMatrix w = oracles::random_pd(p, rng, 0.01, 100.0);
    const SpdMatrix closed = p_limit(phi, w);

    SpdMatrix iter(Eigen::MatrixXd::Identity(p, p));
    for (int t = 0; t < 20000; ++t) {
      SpdMatrix next = p_step(iter, phi, w);
      const double delta = frobenius(next, iter);
      iter = std::move(next);
      if (delta <= 1e-13) break;
    }
    c.require(frobenius(closed, iter) <= 1e-10, "closed form vs iteration");

    const Eigen::MatrixXd pw = closed.mat() * w.mat();
    const Eigen::MatrixXd wp = w.mat() * closed.mat();
    c.require((pw - wp).norm() <= 1e-8 * pw.norm(), "P-W commutation");
    if (phi > 0.05) {
      c.require(frobenius(w_from_p(closed, phi), w) <= 1e-8 * w.mat().norm(),
                "w_from_p round trip");
    }
  }
  detail = c.detail;
  return c.ok;
}

// 6. Filter reductions: W = I vs the IW filter, p = 1 vs the scalar oracle.
bool c06(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(606);

  {
    const int p = 3, n_obs = 200;
    const SpdMatrix sigma = oracles::random_pd(p, rng);
    const Eigen::MatrixXd data =
        simulate_llm(sigma, sigma, 1.0, n_obs, Eigen::VectorXd::Zero(p), rng);
    ModelConfig config;
    config.phi = 1.0;
    config.n0 = 2.0;
    config.w_spec = WFixed{SpdMatrix::Identity(p)};
    FilterState state = filter_init(config, p);

    const double gain = p_limit(1.0, SpdMatrix::Identity(1))(0, 0);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(p, p);
    for (int t = 0; t < n_obs; ++t) {
      auto [next, rec] = filter_step(state, data.row(t).transpose());
      const Eigen::VectorXd e = data.row(t).transpose() - m;
      s += e * e.transpose();
      m += gain * e;
      c.require((next.m - m).norm() <= 1e-10 * (1.0 + m.norm()),
                "W=I mean trajectory");
      c.require(frobenius(next.S.mat(), s) <= 1e-10 * s.norm(),
                "W=I scale trajectory");
      state = std::move(next);
    }
  }

  {
    const int n_obs = 200;
    std::normal_distribution<double> normal(0.0, 2.0);
    Eigen::MatrixXd data(n_obs, 1);
    for (int t = 0; t < n_obs; ++t) data(t, 0) = normal(rng);
    const double phi = 0.8, w = 0.7;
    ModelConfig config;
    config.phi = phi;
    config.n0 = 1.5;
    Eigen::MatrixXd w1(1, 1);
    w1 << w;
    config.w_spec = WFixed{SpdMatrix(w1)};
    FilterState state = filter_init(config, 1);

    const double shift = 1.0 - phi * phi;
    const double gain =
        (std::sqrt((w + shift) * (w + shift) + 4.0 * phi * phi * w) - w -
         shift) /
        (2.0 * phi * phi);
    double m = 0.0, s = 1.0;
    for (int t = 0; t < n_obs; ++t) {
      auto [next, rec] = filter_step(state, data.row(t).transpose());
      const double e = data(t, 0) - phi * m;
      s += e * e;
      m = phi * m + gain * e;
      c.require(std::abs(next.m(0) - m) <= 1e-12 * (1.0 + std::abs(m)),
                "p=1 mean trajectory");
      c.require(std::abs(next.S(0, 0) - s) <= 1e-12 * s, "p=1 scale");
      state = std::move(next);
    }
  }
  detail = c.detail;
  return c.ok;
}

// 7. Prediction decomposition sums to the closed-form likelihood.
bool c07(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(707);
  for (int p : {1, 3}) {
    const SpdMatrix sigma = oracles::random_pd(p, rng);
    const SpdMatrix omega = oracles::random_pd(p, rng, 0.05, 0.5);
    const Eigen::MatrixXd data =
        simulate_llm(sigma, omega, 1.0, 50, Eigen::VectorXd::Zero(p), rng);
    ModelConfig config;
    config.phi = 1.0;
    config.n0 = 1.2;
    config.w_spec = WFixed{oracles::random_pd(p, rng, 0.2, 1.0)};
    const FilterOutput out = run_filter(config, data);
    const double closed =
        loglik_closed(SpdMatrix::Identity(p), out.final.S, 1.2, 50, p);
    c.require(std::abs(out.log_lik - closed) <= 1e-8,
              "likelihood identity at p=" + std::to_string(p));
  }
  detail = c.detail;
  return c.ok;
}

// 8. Analytic derivatives of log|S_N| against finite differences.
bool c08(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(808);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int p : {2, 3}) {
    Eigen::MatrixXd data(25, p);
    for (int t = 0; t < 25; ++t) {
      for (int i = 0; i < p; ++i) data(t, i) = normal(rng);
    }
    const SpdMatrix s0 = SpdMatrix::Identity(p);
    const SpdMatrix p_mat = oracles::random_pd(p, rng, 0.15, 0.8);

    const Eigen::MatrixXd grad = grad_logdet_sn(p_mat, data, s0);
    Eigen::MatrixXd fd(p, p);
    const double h = 1e-6;
    for (int l = 0; l < p; ++l) {
      for (int k = l; k < p; ++k) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(p, p);
        e(k, l) += 1.0;
        e(l, k) += 1.0;
        if (k == l) e(k, k) = 1.0;
        const double up = logdet_sn(SpdMatrix(p_mat.mat() + h * e), data, s0);
        const double dn = logdet_sn(SpdMatrix(p_mat.mat() - h * e), data, s0);
        fd(k, l) = fd(l, k) = (up - dn) / (2.0 * h);
      }
    }
    c.require((grad - fd).norm() <= 1e-4 * fd.norm(), "gradient vs FD");

    const Eigen::MatrixXd hess = hess_logdet_sn(p_mat, data, s0);
    c.require((hess - hess.transpose()).norm() <= 1e-8 * (1.0 + hess.norm()),
              "Hessian symmetry");
    Eigen::MatrixXd fd_hess(p * p, p * p);
    for (int s = 0; s < p; ++s) {
      for (int r = 0; r < p; ++r) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(p, p);
        e(r, s) += 1.0;
        e(s, r) += 1.0;
        if (r == s) e(r, r) = 1.0;
        const Eigen::MatrixXd up =
            grad_logdet_sn(SpdMatrix(p_mat.mat() + h * e), data, s0);
        const Eigen::MatrixXd dn =
            grad_logdet_sn(SpdMatrix(p_mat.mat() - h * e), data, s0);
        fd_hess.col(s * p + r) = vec((up - dn) / (2.0 * h));
      }
    }
    c.require((hess - fd_hess).norm() <= 1e-3 * fd_hess.norm(),
              "Hessian vs FD");
  }
  detail = c.detail;
  return c.ok;
}

// 9. Newton-Raphson descent and the p = 1 golden-section cross-check.
bool c09(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(909);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const int p = 1 + (i % 3);
    Eigen::MatrixXd data(40, p);
    for (int t = 0; t < 40; ++t) {
      for (int j = 0; j < p; ++j) data(t, j) = normal(rng) * (1.0 + i % 2);
    }
    NrSettings settings;
    settings.keep_trace = true;
    const NrResult res =
        newton_raphson_p(data, SpdMatrix::Identity(p), settings);
    for (std::size_t j = 1; j < res.trace.size(); ++j) {
      c.require(res.trace[j].objective <= res.trace[j - 1].objective + 1e-10,
                "objective descent");
    }
  }

  Eigen::MatrixXd w1(1, 1);
  w1 << 0.8;
  const Eigen::MatrixXd data = simulate_llm(
      SpdMatrix::Identity(1), SpdMatrix(w1), 1.0, 200,
      Eigen::VectorXd::Zero(1), rng);
  const SpdMatrix s0 = SpdMatrix::Identity(1);
  NrSettings settings;
  settings.tol = 1e-7;
  const NrResult res = newton_raphson_p(data, s0, settings);
  const double golden = oracles::golden_minimize(
      [&](double x) {
        Eigen::MatrixXd pm(1, 1);
        pm << x;
        return logdet_sn(SpdMatrix(pm), data, s0);
      },
      1e-4, 1.0 - 1e-4, 1e-10);
  c.require(std::abs(res.p_hat(0, 0) - golden) <= 1e-4,
            "golden-section agreement");
  detail = c.detail;
  return c.ok;
}

// 10. Desk-scale Monte Carlo reproduction of the benchmark calibration.
bool c10(std::string& detail) {
  BenchConfig config;
  config.p = 10;
  config.n_obs = 500;
  config.replications = 20;
  config.seed = 1;
  config.models = {BenchModel::kGiw, BenchModel::kKalman};
  const BenchReport report = run_benchmark(config);
  const double giw = report.stats[0].mean_msse;
  const double kalman = report.stats[1].mean_msse;
  std::ostringstream note;
  note << "GIW " << giw << " (se " << report.stats[0].se_msse << "), Kalman "
       << kalman << " (se " << report.stats[1].se_msse << ")";
  detail = note.str();
  if (report.stats[0].failures > 0 || report.stats[1].failures > 0) {
    detail += " [failures]";
    return false;
  }
  return giw >= 0.95 && giw <= 1.05 && kalman >= 0.97 && kalman <= 1.03;
}

// 11. Volatility properties.
bool c11(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(1111);

  {  // Martingale of the precision evolution.
    const int p = 2;
    const VolConstants consts = vol_constants(0.95, p);
    const SpdMatrix prec = oracles::random_pd(p, rng);
    const int draws = 100000;
    std::vector<std::vector<double>> entries(3);
    for (int i = 0; i < draws; ++i) {
      const Eigen::MatrixXd b = sample_singular_beta(consts.m, 1, p, rng);
      const SpdMatrix next = evolve_precision(prec, b, consts.k);
      entries[0].push_back(next(0, 0));
      entries[1].push_back(next(0, 1));
      entries[2].push_back(next(1, 1));
    }
    const double want[3] = {prec(0, 0), prec(0, 1), prec(1, 1)};
    for (int k = 0; k < 3; ++k) {
      const double got = oracles::mean_of(entries[k]);
      const double se = oracles::standard_error(entries[k]);
      c.require(std::abs(got - want[k]) <= 3.0 * se, "precision martingale");
    }
  }

  {  // Scalar singular beta against Beta(m/2, 1/2).
    const double m = 9.0;
    const int draws = 100000;
    std::vector<double> xs(draws);
    for (int i = 0; i < draws; ++i) {
      xs[i] = sample_singular_beta(m, 1, 1, rng)(0, 0);
    }
    const double d = oracles::ks_statistic(xs, [&](double x) {
      return oracles::beta_cdf(x, 0.5 * m, 0.5);
    });
    c.require(d <= oracles::ks_critical_one(draws), "scalar beta KS");
  }

  {  // Beta-gamma convolution at p = 1.
    const double m = 7.0, a = 1.3, s = 0.6;
    const int draws = 100000;
    std::vector<double> constructed(draws), direct(draws);
    std::gamma_distribution<double> h_dist(0.5 * (m + 1.0), 2.0 * a * s);
    std::gamma_distribution<double> g_dist(0.5 * m, 2.0 * a * s);
    for (int i = 0; i < draws; ++i) {
      const double h = h_dist(rng);
      const double b = sample_singular_beta(m, 1, 1, rng)(0, 0);
      constructed[i] = h * b;
      direct[i] = g_dist(rng);
    }
    c.require(oracles::ks_statistic_two(constructed, direct) <=
                  oracles::ks_critical_two(draws, draws),
              "convolution KS");
  }

  {  // delta = 1 reduction.
    const int p = 2, n_obs = 60;
    const SpdMatrix sigma = oracles::random_pd(p, rng);
    const Eigen::MatrixXd data =
        simulate_llm(sigma, sigma, 1.0, n_obs, Eigen::VectorXd::Zero(p), rng);
    ModelConfig config;
    config.n0 = 1.0;
    config.w_spec = WFixed{oracles::random_pd(p, rng)};
    const VolConstants consts = vol_constants(1.0, p);
    FilterState vol_state = filter_init(config, p);
    FilterState static_state = vol_state;
    for (int t = 0; t < n_obs; ++t) {
      const Eigen::VectorXd y = data.row(t).transpose();
      auto [vn, vr] = vol_filter_step(vol_state, y, consts);
      auto [sn, sr] = filter_step(static_state, y);
      c.require((vn.m - sn.m).norm() <= 1e-12 * (1.0 + sn.m.norm()),
                "delta=1 mean reduction");
      c.require(frobenius(vn.S, sn.S) <= 1e-12 * sn.S.mat().norm(),
                "delta=1 scale reduction");
      vol_state = std::move(vn);
      static_state = std::move(sn);
    }
  }
  detail = c.detail;
  return c.ok;
}

// 12. EM monotonicity and parameter recovery.
bool c12(std::string& detail) {
  Checker c;
  std::mt19937_64 rng(1212);
  Eigen::MatrixXd sm(2, 2), om(2, 2);
  sm << 1.0, 0.4, 0.4, 1.5;
  om << 0.5, -0.1, -0.1, 0.3;
  const SpdMatrix sigma(sm), omega(om);
  for (int run = 0; run < 3; ++run) {
    const Eigen::MatrixXd data =
        simulate_llm(sigma, omega, 1.0, 1000, Eigen::VectorXd::Zero(2), rng);
    const EmResult res = em_fit(data, 1.0);
    for (std::size_t i = 1; i < res.loglik_trace.size(); ++i) {
      c.require(res.loglik_trace[i] >= res.loglik_trace[i - 1] - 1e-8,
                "EM monotonicity");
    }
    c.require(frobenius(res.sigma_hat, sigma) <= 0.2 * sigma.mat().norm(),
              "sigma recovery run " + std::to_string(run));
    c.require(frobenius(res.omega_hat, omega) <= 0.2 * omega.mat().norm(),
              "omega recovery run " + std::to_string(run));
  }
  detail = c.detail;
  return c.ok;
}

// 13. Control chart: false alarms and shift detection over 100 seeded runs.
bool c13(std::string& detail) {
  const int p = 2, n_obs = 160, phase1 = 100, runs = 100;
  std::mt19937_64 rng(1313);
  Eigen::MatrixXd corr(2, 2);
  corr << 1.0, 0.3, 0.3, 1.0;
  const SpdMatrix sigma(corr);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(p, 10.0);

  ChartConfig chart;
  chart.phase1_end = phase1;
  chart.target_mean = mean;
  chart.target_cov = sigma;

  ModelConfig model;
  model.phi = 1.0;
  model.n0 = 1.0;
  model.w_spec = WDiscounts{std::vector<double>(p, 0.9)};

  int false_alarm_runs = 0;
  int detected = 0;
  for (int run = 0; run < runs; ++run) {
    Eigen::MatrixXd data(n_obs, p);
    for (int t = 0; t < n_obs; ++t) {
      data.row(t) = mvn_sample(mean, sigma, rng).transpose();
    }
    const ChartReport clean = chart_run(data, chart, model);
    if (!clean.signal_times.empty()) ++false_alarm_runs;

    Eigen::MatrixXd shifted = data;
    for (int t = phase1; t < n_obs; ++t) {
      for (int i = 0; i < p; ++i) {
        shifted(t, i) += 3.0 * std::sqrt(sigma(i, i));
      }
    }
    const ChartReport alarm = chart_run(shifted, chart, model);
    if (!alarm.signal_times.empty() &&
        alarm.signal_times.front() <= phase1 + 20) {
      ++detected;
    }
  }
  std::ostringstream note;
  note << false_alarm_runs << "/" << runs << " false-alarm runs, " << detected
       << "/" << runs << " detections within 20 steps";
  detail = note.str();
  return false_alarm_runs <= runs / 10 && detected >= (9 * runs) / 10;
}

// 14. Seeded CLI workflows are bit-reproducible.
bool c14(std::string& detail) {
  namespace fs = std::filesystem;
  const std::string cli = GILEVEL_CLI_PATH;
  const fs::path dir =
      fs::temp_directory_path() / ("gilevel_accept_" +
                                   std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto file = [&](const std::string& name) {
    return (dir / name).string();
  };
  const auto shell = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " 2>/dev/null";
    return WEXITSTATUS(std::system(cmd.c_str())) == 0;
  };
  const auto slurp = [](const std::string& path) {
    std::ifstream f(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };

  bool ok = true;
  std::string why;
  const auto twice = [&](const std::string& label, const std::string& args_a,
                         const std::string& out_a, const std::string& args_b,
                         const std::string& out_b) {
    if (!shell(args_a) || !shell(args_b)) {
      ok = false;
      why = label + " failed to run";
      return;
    }
    if (slurp(out_a) != slurp(out_b)) {
      ok = false;
      why = label + " not reproducible";
    }
  };

  twice("simulate", "simulate --p 3 --n 120 --seed 21 --out " + file("s1"),
        file("s1"), "simulate --p 3 --n 120 --seed 21 --out " + file("s2"),
        file("s2"));
  if (ok) {
    twice("fit",
          "fit --data " + file("s1") + " --estimate-w --out " + file("f1"),
          file("f1"),
          "fit --data " + file("s1") + " --estimate-w --out " + file("f2"),
          file("f2"));
  }
  if (ok) {
    twice("bench",
          "bench --p 2 --N 60 --reps 2 --models kalman,iw --seed 9 --quiet "
          "--out " + file("b1"),
          file("b1"),
          "bench --p 2 --N 60 --reps 2 --models kalman,iw --seed 9 --quiet "
          "--out " + file("b2"),
          file("b2"));
  }
  if (ok) {
    twice("chart",
          "chart --data " + file("s1") +
              " --phase1-end 80 --discounts 0.9 --out " + file("c1"),
          file("c1"),
          "chart --data " + file("s1") +
              " --phase1-end 80 --discounts 0.9 --out " + file("c2"),
          file("c2"));
  }
  fs::remove_all(dir);
  detail = why;
  return ok;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "GIW density normalization (p=1 quadrature)", c01},
      {2, "GIW reduction to inverse Wishart (S=I / A=I)", c02},
      {3, "exchange symmetry and block independence", c03},
      {4, "mode equation residual and closed forms", c04},
      {5, "steady state: closed form, commutation, inversion", c05},
      {6, "filter reductions (W=I and p=1 oracles)", c06},
      {7, "prediction decomposition equals closed-form likelihood", c07},
      {8, "analytic gradient and Hessian vs finite differences", c08},
      {9, "Newton-Raphson descent and golden-section agreement", c09},
      {10, "desk-scale Monte Carlo MSSE calibration", c10},
      {11, "volatility: martingale, beta sampler, convolution, delta=1", c11},
      {12, "EM monotonicity and parameter recovery", c12},
      {13, "control chart false alarms and shift detection", c13},
      {14, "seeded CLI workflows bit-reproducible", c14},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string note;
    bool ok = false;
    try {
      ok = criterion.fn(note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%2d] %-58s %s (%.1fs)%s%s\n", criterion.id, criterion.name,
                ok ? "PASS" : "FAIL", secs, note.empty() ? "" : "  -- ",
                note.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
