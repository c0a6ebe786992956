#pragma once

#include "safenet/linalg.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace safenet {

// ---------------------------------------------------------------------------
// Affine scalar expression c0 + Σ coef_k · x_{var_k} over the scalar decision
// variables of an SdpProblem.
// ---------------------------------------------------------------------------

struct LinTerm {
  int var = -1;
  double coef = 0.0;
};

struct LinExpr {
  double constant = 0.0;
  std::vector<LinTerm> terms;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
  static LinExpr variable(int var, double coef = 1.0);

  // Sort terms by variable, merge duplicates, drop zero coefficients.
  void canonicalize();
  double evaluate(const Vector& values) const;
  bool is_zero() const { return constant == 0.0 && terms.empty(); }

  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator*=(double s);
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr e);

// ---------------------------------------------------------------------------
// Handle to a matrix-shaped group of scalar variables. Symmetric variables
// store only the upper triangle (column-major), so entry(r,c) == entry(c,r).
// ---------------------------------------------------------------------------

struct MatrixVar {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  int base = -1;  // first scalar variable index

  int scalar_count() const { return symmetric ? rows * (rows + 1) / 2 : rows * cols; }
  int entry(int r, int c) const;
  bool valid() const { return base >= 0; }
};

// ---------------------------------------------------------------------------
// Dense matrix of affine expressions; the workhorse for assembling Schur
// complement blocks out of numeric data and matrix variables.
// ---------------------------------------------------------------------------

class ExprMatrix {
 public:
  ExprMatrix() = default;
  ExprMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

  static ExprMatrix constant(const Matrix& m);
  static ExprMatrix from_var(const MatrixVar& v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  LinExpr& operator()(int r, int c) { return data_[index(r, c)]; }
  const LinExpr& operator()(int r, int c) const { return data_[index(r, c)]; }

  ExprMatrix transpose() const;
  // Adds `sub` into the block with top-left corner (r0, c0).
  void accumulate(int r0, int c0, const ExprMatrix& sub);
  ExprMatrix block(int r0, int c0, int rows, int cols) const;
  Matrix evaluate(const Vector& values) const;

 private:
  std::size_t index(int r, int c) const;
  int rows_ = 0, cols_ = 0;
  std::vector<LinExpr> data_;
};

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator*(const Matrix& lhs, const ExprMatrix& rhs);
ExprMatrix operator*(const ExprMatrix& lhs, const Matrix& rhs);
ExprMatrix operator*(double s, const ExprMatrix& m);

// ---------------------------------------------------------------------------
// Constraint storage. An LmiBlock always means M(x) ⪰ 0 with
//   M(x) = C + Σ coef · x_var  (upper-triangle triplets, r <= c).
// Negative-semidefinite requirements are folded in by negation when built.
// ---------------------------------------------------------------------------

struct ConstEntry {
  int r = 0, c = 0;
  double value = 0.0;
};
struct VarEntry {
  int r = 0, c = 0;
  int var = -1;
  double coef = 0.0;
};

enum class Sense { PositiveSemidefinite, NegativeSemidefinite };

struct LmiBlock {
  std::string label;
  int dim = 0;
  std::vector<ConstEntry> const_upper;
  std::vector<VarEntry> var_upper;

  Matrix evaluate(const Vector& values) const;
  double min_eigenvalue_at(const Vector& values) const;
};

// Builds an LmiBlock from a square expression matrix; entries (r,c)/(c,r) are
// averaged, and Sense::NegativeSemidefinite negates the whole block.
LmiBlock make_lmi_block(std::string label, const ExprMatrix& m, Sense sense = Sense::PositiveSemidefinite);

// constant + Σ coef·x  (>= 0, or == 0 when equality).
struct LinearRow {
  std::string label;
  bool equality = false;
  LinExpr expr;

  double evaluate(const Vector& values) const { return expr.evaluate(values); }
};

// rows[0] >= || (rows[1], ..., rows[k-1]) ||_2.
struct SocBlock {
  std::string label;
  std::vector<LinExpr> rows;

  // head - ||tail||; >= 0 means satisfied.
  double margin(const Vector& values) const;
};

struct ResidualReport {
  double max_psd_violation = 0.0;
  double max_linear_violation = 0.0;  // covers equalities and inequalities
  double max_soc_violation = 0.0;
  std::string worst_label;
  double worst_violation = 0.0;

  bool within(double tol_psd, double tol_linear) const {
    return max_psd_violation <= tol_psd && max_linear_violation <= tol_linear &&
           max_soc_violation <= tol_linear;
  }
};

// ---------------------------------------------------------------------------
// A conic feasibility/optimization problem: minimize cᵀx subject to LMI,
// linear, and second-order-cone constraints.
// ---------------------------------------------------------------------------

class SdpProblem {
 public:
  MatrixVar add_matrix_var(std::string name, int rows, int cols, bool symmetric);
  // Contiguous range of free scalar variables; returns the first index.
  int add_scalar_vars(std::string name, int count);
  int var_count() const { return var_count_; }
  std::string var_name(int var) const;

  void set_objective(std::vector<LinTerm> minimize_terms);
  const std::vector<LinTerm>& objective() const { return objective_; }
  double objective_value(const Vector& values) const;

  void add_lmi(LmiBlock block);
  void add_linear(LinearRow row);
  void add_soc(SocBlock block);

  const std::vector<LmiBlock>& lmis() const { return lmis_; }
  const std::vector<LinearRow>& linear_rows() const { return linear_; }
  const std::vector<SocBlock>& socs() const { return socs_; }

  // Worst constraint violations at a candidate solution, by family.
  ResidualReport residuals(const Vector& values) const;

  // Sparse SDPA-style text dump for offline inspection: equalities expand to
  // paired inequalities, every scalar row joins one diagonal block, and each
  // second-order cone becomes its arrow-shaped LMI.
  void dump_sdpa(std::ostream& os) const;

 private:
  struct ScalarGroup {
    std::string name;
    int base = 0;
    int count = 0;
  };
  int var_count_ = 0;
  std::vector<MatrixVar> matrix_vars_;
  std::vector<ScalarGroup> scalar_groups_;
  std::vector<LinTerm> objective_;
  std::vector<LmiBlock> lmis_;
  std::vector<LinearRow> linear_;
  std::vector<SocBlock> socs_;
};

// Scaled vectorization of a symmetric matrix: upper triangle, column-major,
// off-diagonal entries multiplied by √2 (so svec(A)ᵀ svec(B) = tr(AB)), and
// its inverse.
Vector svec(const Matrix& sym);
Matrix smat(const Vector& packed);

}  // namespace safenet
