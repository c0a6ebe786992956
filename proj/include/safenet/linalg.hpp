#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace safenet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// FNV-1a 64-bit hash, used to fingerprint canonical JSON serializations so
// that offline artifacts can be tied to the exact model they were computed
// for.
std::uint64_t fnv1a64(std::string_view data);

// Lower-case hex rendering of a 64-bit hash (16 chars, zero padded).
std::string to_hex(std::uint64_t value);

// Symmetric part (M + M^T)/2.
Matrix symmetrize(const Matrix& m);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& sym);

// True if the symmetric matrix is positive definite up to `tol` on the
// smallest eigenvalue.
bool is_positive_definite(const Matrix& sym, double tol = 0.0);

// Block diagonal concatenation.
Matrix block_diag(const std::vector<Matrix>& blocks);

}  // namespace safenet
