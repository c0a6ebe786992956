#include "safenet/linalg.hpp"

#include <cstdio>
#include <stdexcept>

namespace safenet {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf);
}

Matrix symmetrize(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("symmetrize: matrix must be square");
  return 0.5 * (m + m.transpose());
}

double min_eigenvalue(const Matrix& sym) {
  if (sym.rows() != sym.cols()) throw std::invalid_argument("min_eigenvalue: matrix must be square");
  if (sym.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("min_eigenvalue: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

bool is_positive_definite(const Matrix& sym, double tol) {
  return min_eigenvalue(sym) > tol;
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const Matrix& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  for (const Matrix& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace safenet
