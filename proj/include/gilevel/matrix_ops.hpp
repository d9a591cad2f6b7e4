#pragma once

#include <Eigen/Dense>

#include "gilevel/errors.hpp"

namespace gilevel {

enum class Symmetry {
  kSymmetrize,  // average M and M' when the asymmetry is within tolerance
  kStrict       // reject any asymmetry (test mode)
};

// Symmetric positive (semi)definite matrix. Symmetry is enforced on
// construction; definiteness is checked by the operations that need it.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(Eigen::MatrixXd m, Symmetry mode = Symmetry::kSymmetrize);

  static SpdMatrix Identity(int p);
  static SpdMatrix Zero(int p);

  int dim() const { return static_cast<int>(m_.rows()); }
  bool empty() const { return m_.size() == 0; }
  const Eigen::MatrixXd& mat() const { return m_; }
  operator const Eigen::MatrixXd&() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

// Symmetric square root via eigendecomposition, eigenvalues clamped at 0.
SpdMatrix sym_sqrt(const SpdMatrix& m);

// Inverse symmetric square root; eigenvalues floored at `floor` before the
// reciprocal root is taken.
SpdMatrix sym_inv_sqrt(const SpdMatrix& m, double floor = 1e-300);

// Upper triangular U with positive diagonal and U'U = M.
// Throws SingularityError carrying the pivot index when M is not PD.
Eigen::MatrixXd chol_upper(const SpdMatrix& m);

// Eigenvalues below `floor` are replaced by `floor`. Returns the input
// unchanged when its smallest eigenvalue is already >= floor.
SpdMatrix nearest_pd(const Eigen::MatrixXd& symmetric, double floor);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Column-stacking operator.
Eigen::VectorXd vec(const Eigen::MatrixXd& m);
Eigen::MatrixXd unvec(const Eigen::VectorXd& v, int rows, int cols);

// Lower triangle stacked column-major.
Eigen::VectorXd vech(const Eigen::MatrixXd& m);

double frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// log|M| for a PD matrix, via Cholesky.
double log_det(const SpdMatrix& m);

SpdMatrix inverse_spd(const SpdMatrix& m);

// Smallest and largest eigenvalue of a symmetric matrix.
std::pair<double, double> eig_range(const Eigen::MatrixXd& symmetric);

}  // namespace gilevel
