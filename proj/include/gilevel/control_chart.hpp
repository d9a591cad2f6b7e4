#pragma once

#include <vector>

#include "gilevel/filter.hpp"

namespace gilevel {

struct ChartConfig {
  double lambda = 0.05;
  Eigen::VectorXd target_mean;
  SpdMatrix target_cov;
  int phase1_end = 0;  // last time index (1-based) belonging to Phase I
  double limit_multiplier = 3.0;
  // z0 = first H value and sequential center estimation instead of the
  // default two-pass Phase I calibration.
  bool sequential_z0 = false;
  bool phase1_audit = false;  // also report Phase I limit crossings
};

struct ChartPoint {
  int t = 0;
  double h = 0.0;  // log Bayes factor
  double z = 0.0;  // EWMA of h
  bool signal = false;
};

struct ChartReport {
  std::vector<ChartPoint> points;
  double center = 0.0;
  double lcl = 0.0;
  double ucl = 0.0;
  int phase1_end = 0;
  std::vector<int> signal_times;  // Phase II signals (plus Phase I in audit mode)
  Eigen::VectorXd msse;           // model-fit diagnostic over the full run
};

// H_t: log one-step predictive density of the fitted model at y minus the
// log density of the Gaussian target.
double log_bayes_factor(const FilterState& state, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& target_mean,
                        const SpdMatrix& target_cov);

// Z_t = lambda H_t + (1 - lambda) Z_{t-1}, Z_0 = z0.
std::vector<double> ewma(const std::vector<double>& series, double lambda,
                         double z0);

// Runs the GIW filter over the data, chart limits calibrated from the
// Phase I sample standard deviation of the EWMA statistic.
ChartReport chart_run(const Eigen::MatrixXd& data, const ChartConfig& chart,
                      const ModelConfig& model);

}  // namespace gilevel
