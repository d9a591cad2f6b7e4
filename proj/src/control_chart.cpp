#include "gilevel/control_chart.hpp"

#include <cmath>

namespace gilevel {

double log_bayes_factor(const FilterState& state, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& target_mean,
                        const SpdMatrix& target_cov) {
  double log_target;
  try {
    log_target = log_gaussian(y, target_mean, target_cov);
  } catch (const SingularityError&) {
    throw ConfigError("log_bayes_factor: singular target covariance");
  }
  return log_predictive(state, y) - log_target;
}

std::vector<double> ewma(const std::vector<double>& series, double lambda,
                         double z0) {
  if (!(lambda > 0.0) || lambda > 1.0) {
    throw ParameterError("ewma: lambda must lie in (0, 1]");
  }
  std::vector<double> z;
  z.reserve(series.size());
  double prev = z0;
  for (double h : series) {
    prev = lambda * h + (1.0 - lambda) * prev;
    z.push_back(prev);
  }
  return z;
}

ChartReport chart_run(const Eigen::MatrixXd& data, const ChartConfig& chart,
                      const ModelConfig& model) {
  const int n_obs = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (chart.phase1_end < 10) {
    throw ConfigError("chart_run: phase1_end must be at least 10");
  }
  if (chart.phase1_end >= n_obs) {
    throw ConfigError("chart_run: phase1_end must precede the end of the data");
  }
  if (chart.target_mean.size() != p || chart.target_cov.dim() != p) {
    throw ConfigError("chart_run: target dimension mismatch");
  }

  // Forward filter pass collecting the log Bayes factor series.
  std::vector<double> h;
  h.reserve(n_obs);
  FilterState state = filter_init(model, p);
  Eigen::VectorXd ssq = Eigen::VectorXd::Zero(p);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(p);
  for (int t = 0; t < n_obs; ++t) {
    const Eigen::VectorXd y = data.row(t).transpose();
    h.push_back(
        log_bayes_factor(state, y, chart.target_mean, chart.target_cov));
    auto [next, rec] = filter_step(state, y);
    for (int i = 0; i < p; ++i) {
      if (std::isfinite(rec.std_error(i))) {
        ssq(i) += rec.std_error(i) * rec.std_error(i);
        count(i) += 1;
      }
    }
    state = std::move(next);
  }

  double phase1_mean = 0.0;
  for (int t = 0; t < chart.phase1_end; ++t) phase1_mean += h[t];
  phase1_mean /= chart.phase1_end;

  const double z0 = chart.sequential_z0 ? h.front() : phase1_mean;
  const std::vector<double> z = ewma(h, chart.lambda, z0);

  double center = 0.0;
  for (int t = 0; t < chart.phase1_end; ++t) center += z[t];
  center /= chart.phase1_end;
  double var = 0.0;
  for (int t = 0; t < chart.phase1_end; ++t) {
    var += (z[t] - center) * (z[t] - center);
  }
  var /= (chart.phase1_end - 1);
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) {
    throw ConfigError("chart_run: degenerate Phase I EWMA variance");
  }

  ChartReport report;
  report.center = center;
  report.lcl = center - chart.limit_multiplier * sd;
  report.ucl = center + chart.limit_multiplier * sd;
  report.phase1_end = chart.phase1_end;
  report.points.reserve(n_obs);
  for (int t = 0; t < n_obs; ++t) {
    ChartPoint pt;
    pt.t = t + 1;
    pt.h = h[t];
    pt.z = z[t];
    const bool outside = z[t] < report.lcl || z[t] > report.ucl;
    const bool in_phase2 = pt.t > chart.phase1_end;
    pt.signal = outside && (in_phase2 || chart.phase1_audit);
    if (pt.signal) report.signal_times.push_back(pt.t);
    report.points.push_back(pt);
  }
  report.msse.resize(p);
  for (int i = 0; i < p; ++i) {
    report.msse(i) = count(i) > 0 ? ssq(i) / count(i)
                                  : std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace gilevel
