#include "gilevel/matrix_ops.hpp"

#include <cmath>
#include <string>

namespace gilevel {

namespace {
constexpr double kSymTol = 1e-12;
}  // namespace

SpdMatrix::SpdMatrix(Eigen::MatrixXd m, Symmetry mode) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) {
    throw DimensionError("SpdMatrix: matrix must be square and non-empty");
  }
  if (!m_.allFinite()) {
    throw DataError("SpdMatrix: non-finite entries");
  }
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (mode == Symmetry::kStrict) {
    if (asym > 0.0) {
      throw DimensionError("SpdMatrix: asymmetric input in strict mode");
    }
    return;
  }
  const double scale = 1.0 + m_.cwiseAbs().maxCoeff();
  if (asym > kSymTol * scale) {
    throw DimensionError("SpdMatrix: asymmetry " + std::to_string(asym) +
                         " exceeds tolerance");
  }
  m_ = 0.5 * (m_ + m_.transpose()).eval();
}

SpdMatrix SpdMatrix::Identity(int p) {
  return SpdMatrix(Eigen::MatrixXd::Identity(p, p));
}

SpdMatrix SpdMatrix::Zero(int p) {
  return SpdMatrix(Eigen::MatrixXd::Zero(p, p));
}

SpdMatrix sym_sqrt(const SpdMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd r = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                      es.eigenvectors().transpose();
  return SpdMatrix(std::move(r));
}

SpdMatrix sym_inv_sqrt(const SpdMatrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd r = es.eigenvectors() *
                      lam.cwiseSqrt().cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose();
  return SpdMatrix(std::move(r));
}

Eigen::MatrixXd chol_upper(const SpdMatrix& m) {
  const int p = m.dim();
  // Row-by-row lower Cholesky so the failing pivot index is available.
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) {
          throw SingularityError(
              "chol_upper: non-positive pivot at index " + std::to_string(i),
              i);
        }
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l.transpose();
}

SpdMatrix nearest_pd(const Eigen::MatrixXd& symmetric, double floor) {
  SpdMatrix m(symmetric);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  if (es.eigenvalues().minCoeff() >= floor) return m;
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd r = es.eigenvectors() * lam.asDiagonal() *
                      es.eigenvectors().transpose();
  return SpdMatrix(std::move(r));
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw DimensionError("unvec: size mismatch");
  }
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::VectorXd vech(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("vech: square input required");
  const int p = static_cast<int>(m.rows());
  Eigen::VectorXd v(p * (p + 1) / 2);
  int idx = 0;
  for (int j = 0; j < p; ++j) {
    for (int i = j; i < p; ++i) v(idx++) = m(i, j);
  }
  return v;
}

double frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("frobenius: dimension mismatch");
  }
  return (a - b).norm();
}

double log_det(const SpdMatrix& m) {
  const Eigen::MatrixXd u = chol_upper(m);
  return 2.0 * u.diagonal().array().log().sum();
}

SpdMatrix inverse_spd(const SpdMatrix& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m.mat());
  if (llt.info() != Eigen::Success) {
    throw SingularityError("inverse_spd: matrix not positive definite", -1);
  }
  Eigen::MatrixXd inv =
      llt.solve(Eigen::MatrixXd::Identity(m.dim(), m.dim()));
  return SpdMatrix(0.5 * (inv + inv.transpose()));
}

std::pair<double, double> eig_range(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric,
                                                    Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace gilevel
