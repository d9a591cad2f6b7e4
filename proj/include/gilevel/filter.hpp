#pragma once

#include <limits>
#include <variant>
#include <vector>

#include "gilevel/giw.hpp"
#include "gilevel/steady_state.hpp"

namespace gilevel {

// W specification alternatives.
struct WFixed {
  SpdMatrix W;
};
struct WDiscounts {
  std::vector<double> deltas;  // one per component, each in (0, 1)
};
struct WEstimateNR {
  double tol = 1e-3;
  int max_iter = 50;
};
using WSpec = std::variant<WFixed, WDiscounts, WEstimateNR>;

// Standardization used for the squared one-step forecast errors.
enum class MsseMode {
  // Covariance of the Student-t one-step forecast, S_{t-1}/(n_{t-1} - 2);
  // steps with dof <= 2 are excluded and counted.
  kSpread,
  // Model-implied conditional covariance sigma_tilde^{1/2} Q sigma_tilde^{1/2}
  // evaluated at the time t-1 estimate.
  kConditional
};

struct ModelConfig {
  double phi = 1.0;
  Eigen::VectorXd m0;  // empty means the zero vector
  double p0 = 1000.0;
  double n0 = 0.01;
  SpdMatrix S0;  // empty means the identity
  WSpec w_spec = WFixed{};
  MsseMode msse_mode = MsseMode::kSpread;
  bool exact_p = false;  // propagate P_t instead of using the limit P
};

struct FilterState {
  int t = 0;
  Eigen::VectorXd m;
  SpdMatrix S;
  double n = 0.0;
  SpdMatrix sigma_tilde;
  SteadyState steady;
  SpdMatrix Pt;  // running P_t, used when exact_p is set
  MsseMode msse_mode = MsseMode::kSpread;
  bool exact_p = false;
};

// One-step forecast y_t | y^{t-1} ~ t_p(dof, location, spread) plus realized
// error diagnostics. NaN entries of std_error mark excluded components.
struct ForecastRecord {
  int t = 0;
  double dof = 0.0;
  Eigen::VectorXd location;
  SpdMatrix spread;
  Eigen::VectorXd error;
  Eigen::VectorXd std_error;
  double log_pred = 0.0;
};

struct FilterOutput {
  std::vector<ForecastRecord> records;
  FilterState final;
  Eigen::VectorXd msse;  // per-component mean squared standardized error
  double log_lik = 0.0;  // sum of log predictive densities
  int excluded = 0;      // standardized-error terms excluded from the MSSE
  std::vector<SpdMatrix> sigma_path;  // filled when keep_sigma_path is set
};

// Resolves W from the config (Fixed or Discounts) and builds the t = 0 state.
// WEstimateNR must be resolved to a fixed matrix beforehand (see hyperparam).
FilterState filter_init(const ModelConfig& config, int p);

// One observation update per the approximate-conjugate recursions:
//   e_t = y_t - phi m_{t-1},  S_t = S_{t-1} + e_t e_t',  n_t = n_{t-1} + 1,
//   sigma_tilde_t from GIW(n_t + 2p, Q^{-1}, S_t),
//   m_t = phi m_{t-1} + A_t e_t with A_t = sigma_tilde^{1/2} P sigma_tilde^{-1/2}.
std::pair<FilterState, ForecastRecord> filter_step(const FilterState& state,
                                                   const Eigen::VectorXd& y);

// Log density of the one-step forecast t_p(n_{t-1}, phi m_{t-1}, S_{t-1}) at y.
double log_predictive(const FilterState& state, const Eigen::VectorXd& y);

// Log density of t_p(dof, location, spread) at y, in the spread-matrix
// convention: f(y) ~ (1 + e' spread^{-1} e)^{-(dof+p)/2}.
double log_student_t(const Eigen::VectorXd& y, double dof,
                     const Eigen::VectorXd& location, const SpdMatrix& spread);

double log_gaussian(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                    const SpdMatrix& cov);

// A_t = sigma_tilde^{1/2} P sigma_tilde^{-1/2}, falling back to P itself
// when the estimate is too ill-conditioned for the conjugation to carry
// information (condition number beyond 1e9).
Eigen::MatrixXd filter_gain(const SpdMatrix& sigma_tilde,
                            const SpdMatrix& steady_p);

FilterOutput run_filter(const ModelConfig& config, const Eigen::MatrixXd& data,
                        bool keep_sigma_path = false);

}  // namespace gilevel
