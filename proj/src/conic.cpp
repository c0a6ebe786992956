#include "safenet/conic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace safenet {

// --------------------------------- LinExpr --------------------------------

LinExpr LinExpr::variable(int var, double coef) {
  LinExpr e;
  if (var < 0) throw std::invalid_argument("LinExpr::variable: negative index");
  e.terms.push_back({var, coef});
  return e;
}

void LinExpr::canonicalize() {
  std::sort(terms.begin(), terms.end(), [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  std::vector<LinTerm> merged;
  merged.reserve(terms.size());
  for (const LinTerm& t : terms) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(), [](const LinTerm& t) { return t.coef == 0.0; }),
               merged.end());
  terms = std::move(merged);
}

double LinExpr::evaluate(const Vector& values) const {
  double out = constant;
  for (const LinTerm& t : terms) {
    if (t.var >= values.size()) throw std::out_of_range("LinExpr::evaluate: variable index out of range");
    out += t.coef * values[t.var];
  }
  return out;
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  constant += other.constant;
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  constant *= s;
  for (LinTerm& t : terms) t.coef *= s;
  return *this;
}

LinExpr operator+(LinExpr a, const LinExpr& b) {
  a += b;
  return a;
}

LinExpr operator-(LinExpr a, const LinExpr& b) {
  LinExpr nb = b;
  nb *= -1.0;
  a += nb;
  return a;
}

LinExpr operator*(double s, LinExpr e) {
  e *= s;
  return e;
}

// -------------------------------- MatrixVar -------------------------------

int MatrixVar::entry(int r, int c) const {
  if (r < 0 || r >= rows || c < 0 || c >= cols) throw std::out_of_range("MatrixVar::entry: index out of range");
  if (!symmetric) return base + c * rows + r;
  if (r > c) std::swap(r, c);
  return base + c * (c + 1) / 2 + r;
}

// -------------------------------- ExprMatrix ------------------------------

std::size_t ExprMatrix::index(int r, int c) const {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_) throw std::out_of_range("ExprMatrix: index out of range");
  return static_cast<std::size_t>(c) * rows_ + r;
}

ExprMatrix ExprMatrix::constant(const Matrix& m) {
  ExprMatrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int c = 0; c < out.cols(); ++c)
    for (int r = 0; r < out.rows(); ++r) out(r, c) = LinExpr(m(r, c));
  return out;
}

ExprMatrix ExprMatrix::from_var(const MatrixVar& v) {
  if (!v.valid()) throw std::invalid_argument("ExprMatrix::from_var: unbound matrix variable");
  ExprMatrix out(v.rows, v.cols);
  for (int c = 0; c < v.cols; ++c)
    for (int r = 0; r < v.rows; ++r) out(r, c) = LinExpr::variable(v.entry(r, c));
  return out;
}

ExprMatrix ExprMatrix::transpose() const {
  ExprMatrix out(cols_, rows_);
  for (int c = 0; c < cols_; ++c)
    for (int r = 0; r < rows_; ++r) out(c, r) = (*this)(r, c);
  return out;
}

void ExprMatrix::accumulate(int r0, int c0, const ExprMatrix& sub) {
  if (r0 < 0 || c0 < 0 || r0 + sub.rows() > rows_ || c0 + sub.cols() > cols_)
    throw std::out_of_range("ExprMatrix::accumulate: block out of range");
  for (int c = 0; c < sub.cols(); ++c)
    for (int r = 0; r < sub.rows(); ++r) (*this)(r0 + r, c0 + c) += sub(r, c);
}

ExprMatrix ExprMatrix::block(int r0, int c0, int rows, int cols) const {
  if (r0 < 0 || c0 < 0 || r0 + rows > rows_ || c0 + cols > cols_)
    throw std::out_of_range("ExprMatrix::block: block out of range");
  ExprMatrix out(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) out(r, c) = (*this)(r0 + r, c0 + c);
  return out;
}

Matrix ExprMatrix::evaluate(const Vector& values) const {
  Matrix out(rows_, cols_);
  for (int c = 0; c < cols_; ++c)
    for (int r = 0; r < rows_; ++r) out(r, c) = (*this)(r, c).evaluate(values);
  return out;
}

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("ExprMatrix+: shape mismatch");
  ExprMatrix out = a;
  out.accumulate(0, 0, b);
  return out;
}

ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b) { return a + (-1.0 * b); }

ExprMatrix operator*(const Matrix& lhs, const ExprMatrix& rhs) {
  if (static_cast<int>(lhs.cols()) != rhs.rows()) throw std::invalid_argument("ExprMatrix*: shape mismatch");
  ExprMatrix out(static_cast<int>(lhs.rows()), rhs.cols());
  for (int c = 0; c < out.cols(); ++c) {
    for (int r = 0; r < out.rows(); ++r) {
      LinExpr acc;
      for (int k = 0; k < rhs.rows(); ++k) {
        const double w = lhs(r, k);
        if (w != 0.0) acc += w * rhs(k, c);
      }
      acc.canonicalize();
      out(r, c) = std::move(acc);
    }
  }
  return out;
}

ExprMatrix operator*(const ExprMatrix& lhs, const Matrix& rhs) {
  if (lhs.cols() != static_cast<int>(rhs.rows())) throw std::invalid_argument("ExprMatrix*: shape mismatch");
  ExprMatrix out(lhs.rows(), static_cast<int>(rhs.cols()));
  for (int c = 0; c < out.cols(); ++c) {
    for (int r = 0; r < out.rows(); ++r) {
      LinExpr acc;
      for (int k = 0; k < lhs.cols(); ++k) {
        const double w = rhs(k, c);
        if (w != 0.0) acc += w * lhs(r, k);
      }
      acc.canonicalize();
      out(r, c) = std::move(acc);
    }
  }
  return out;
}

ExprMatrix operator*(double s, const ExprMatrix& m) {
  ExprMatrix out = m;
  for (int c = 0; c < out.cols(); ++c)
    for (int r = 0; r < out.rows(); ++r) out(r, c) *= s;
  return out;
}

// -------------------------------- LmiBlock --------------------------------

Matrix LmiBlock::evaluate(const Vector& values) const {
  Matrix m = Matrix::Zero(dim, dim);
  for (const ConstEntry& e : const_upper) {
    m(e.r, e.c) += e.value;
    if (e.r != e.c) m(e.c, e.r) += e.value;
  }
  for (const VarEntry& e : var_upper) {
    if (e.var >= values.size()) throw std::out_of_range("LmiBlock::evaluate: variable index out of range");
    const double v = e.coef * values[e.var];
    m(e.r, e.c) += v;
    if (e.r != e.c) m(e.c, e.r) += v;
  }
  return m;
}

double LmiBlock::min_eigenvalue_at(const Vector& values) const { return min_eigenvalue(evaluate(values)); }

LmiBlock make_lmi_block(std::string label, const ExprMatrix& m, Sense sense) {
  if (m.rows() != m.cols()) throw std::invalid_argument("make_lmi_block: matrix must be square");
  if (m.rows() == 0) throw std::invalid_argument("make_lmi_block: empty block");
  const double sign = sense == Sense::PositiveSemidefinite ? 1.0 : -1.0;
  LmiBlock block;
  block.label = std::move(label);
  block.dim = m.rows();
  for (int c = 0; c < m.cols(); ++c) {
    for (int r = 0; r <= c; ++r) {
      LinExpr e = m(r, c);
      e += m(c, r);
      e *= 0.5 * sign;
      e.canonicalize();
      if (e.constant != 0.0) block.const_upper.push_back({r, c, e.constant});
      for (const LinTerm& t : e.terms) block.var_upper.push_back({r, c, t.var, t.coef});
    }
  }
  return block;
}

double SocBlock::margin(const Vector& values) const {
  if (rows.empty()) throw std::invalid_argument("SocBlock::margin: empty cone");
  double tail = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double v = rows[k].evaluate(values);
    tail += v * v;
  }
  return rows[0].evaluate(values) - std::sqrt(tail);
}

// -------------------------------- SdpProblem ------------------------------

MatrixVar SdpProblem::add_matrix_var(std::string name, int rows, int cols, bool symmetric) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("add_matrix_var: dimensions must be positive");
  if (symmetric && rows != cols) throw std::invalid_argument("add_matrix_var: symmetric variable must be square");
  MatrixVar v;
  v.name = std::move(name);
  v.rows = rows;
  v.cols = cols;
  v.symmetric = symmetric;
  v.base = var_count_;
  var_count_ += v.scalar_count();
  matrix_vars_.push_back(v);
  return v;
}

int SdpProblem::add_scalar_vars(std::string name, int count) {
  if (count <= 0) throw std::invalid_argument("add_scalar_vars: count must be positive");
  const int base = var_count_;
  scalar_groups_.push_back({std::move(name), base, count});
  var_count_ += count;
  return base;
}

std::string SdpProblem::var_name(int var) const {
  for (const MatrixVar& v : matrix_vars_) {
    if (var >= v.base && var < v.base + v.scalar_count()) {
      const int local = var - v.base;
      int r = 0, c = 0;
      if (v.symmetric) {
        c = 0;
        int rem = local;
        while (rem > c) {
          rem -= c + 1;
          ++c;
        }
        r = rem;
      } else {
        c = local / v.rows;
        r = local % v.rows;
      }
      return v.name + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
    }
  }
  for (const ScalarGroup& g : scalar_groups_) {
    if (var >= g.base && var < g.base + g.count) return g.name + "[" + std::to_string(var - g.base) + "]";
  }
  return "x[" + std::to_string(var) + "]";
}

void SdpProblem::set_objective(std::vector<LinTerm> minimize_terms) {
  LinExpr e;
  e.terms = std::move(minimize_terms);
  e.canonicalize();
  for (const LinTerm& t : e.terms) {
    if (t.var < 0 || t.var >= var_count_) throw std::out_of_range("set_objective: variable index out of range");
  }
  objective_ = std::move(e.terms);
}

double SdpProblem::objective_value(const Vector& values) const {
  LinExpr e;
  e.terms = objective_;
  return e.evaluate(values);
}

void SdpProblem::add_lmi(LmiBlock block) {
  for (const VarEntry& e : block.var_upper) {
    if (e.var < 0 || e.var >= var_count_) throw std::out_of_range("add_lmi: variable index out of range");
  }
  lmis_.push_back(std::move(block));
}

void SdpProblem::add_linear(LinearRow row) {
  row.expr.canonicalize();
  for (const LinTerm& t : row.expr.terms) {
    if (t.var < 0 || t.var >= var_count_) throw std::out_of_range("add_linear: variable index out of range");
  }
  linear_.push_back(std::move(row));
}

void SdpProblem::add_soc(SocBlock block) {
  if (block.rows.size() < 2) throw std::invalid_argument("add_soc: cone needs a head and at least one tail row");
  for (LinExpr& e : block.rows) {
    e.canonicalize();
    for (const LinTerm& t : e.terms) {
      if (t.var < 0 || t.var >= var_count_) throw std::out_of_range("add_soc: variable index out of range");
    }
  }
  socs_.push_back(std::move(block));
}

ResidualReport SdpProblem::residuals(const Vector& values) const {
  ResidualReport rep;
  auto consider = [&rep](double violation, const std::string& label) {
    if (violation > rep.worst_violation) {
      rep.worst_violation = violation;
      rep.worst_label = label;
    }
  };
  for (const LmiBlock& b : lmis_) {
    const double violation = std::max(0.0, -b.min_eigenvalue_at(values));
    rep.max_psd_violation = std::max(rep.max_psd_violation, violation);
    consider(violation, b.label);
  }
  for (const LinearRow& row : linear_) {
    const double v = row.evaluate(values);
    const double violation = row.equality ? std::abs(v) : std::max(0.0, -v);
    rep.max_linear_violation = std::max(rep.max_linear_violation, violation);
    consider(violation, row.label);
  }
  for (const SocBlock& b : socs_) {
    const double violation = std::max(0.0, -b.margin(values));
    rep.max_soc_violation = std::max(rep.max_soc_violation, violation);
    consider(violation, b.label);
  }
  return rep;
}

void SdpProblem::dump_sdpa(std::ostream& os) const {
  // Entries of every block in "matno blkno i j value" order, F_0 carrying the
  // negated constants: each block encodes C + Σ x_v F_v ⪰ 0.
  struct Entry {
    int mat, blk, i, j;
    double value;
  };
  std::vector<Entry> entries;
  std::vector<int> block_sizes;

  int blk = 0;
  for (const LmiBlock& b : lmis_) {
    ++blk;
    block_sizes.push_back(b.dim);
    for (const ConstEntry& e : b.const_upper) entries.push_back({0, blk, e.r + 1, e.c + 1, -e.value});
    for (const VarEntry& e : b.var_upper) entries.push_back({e.var + 1, blk, e.r + 1, e.c + 1, e.coef});
  }
  for (const SocBlock& b : socs_) {
    ++blk;
    const int d = static_cast<int>(b.rows.size());
    block_sizes.push_back(d);
    // Arrow form: diagonal carries the head, first row/column the tail.
    auto emit = [&](const LinExpr& e, int r, int c) {
      if (e.constant != 0.0) entries.push_back({0, blk, r, c, -e.constant});
      for (const LinTerm& t : e.terms) entries.push_back({t.var + 1, blk, r, c, t.coef});
    };
    for (int k = 0; k < d; ++k) emit(b.rows[0], k + 1, k + 1);
    for (int k = 1; k < d; ++k) emit(b.rows[static_cast<std::size_t>(k)], 1, k + 1);
  }
  int diag_rows = 0;
  for (const LinearRow& row : linear_) diag_rows += row.equality ? 2 : 1;
  if (diag_rows > 0) {
    ++blk;
    block_sizes.push_back(-diag_rows);
    int r = 0;
    auto emit_row = [&](const LinExpr& e, double sign) {
      ++r;
      if (e.constant != 0.0) entries.push_back({0, blk, r, r, -sign * e.constant});
      for (const LinTerm& t : e.terms) entries.push_back({t.var + 1, blk, r, r, sign * t.coef});
    };
    for (const LinearRow& row : linear_) {
      emit_row(row.expr, 1.0);
      if (row.equality) emit_row(row.expr, -1.0);
    }
  }

  os << "* conic problem dump: " << var_count_ << " vars, " << lmis_.size() << " lmi blocks, "
     << socs_.size() << " soc blocks, " << linear_.size() << " linear rows\n";
  os << var_count_ << " = mDIM\n";
  os << block_sizes.size() << " = nBLOCK\n";
  for (std::size_t k = 0; k < block_sizes.size(); ++k) os << block_sizes[k] << (k + 1 < block_sizes.size() ? " " : "");
  os << " = bLOCKsTRUCT\n";
  Vector c = Vector::Zero(var_count_);
  for (const LinTerm& t : objective_) c[t.var] += t.coef;
  for (int v = 0; v < var_count_; ++v) os << c[v] << (v + 1 < var_count_ ? " " : "");
  os << "\n";
  for (const Entry& e : entries) {
    const int i = std::min(e.i, e.j);
    const int j = std::max(e.i, e.j);
    os << e.mat << " " << e.blk << " " << i << " " << j << " " << e.value << "\n";
  }
}

// ------------------------------- svec / smat ------------------------------

Vector svec(const Matrix& sym) {
  if (sym.rows() != sym.cols()) throw std::invalid_argument("svec: matrix must be square");
  const int d = static_cast<int>(sym.rows());
  Vector out(d * (d + 1) / 2);
  const double root2 = std::sqrt(2.0);
  int k = 0;
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r <= c; ++r) {
      out[k++] = r == c ? sym(r, c) : root2 * 0.5 * (sym(r, c) + sym(c, r));
    }
  }
  return out;
}

Matrix smat(const Vector& packed) {
  const int len = static_cast<int>(packed.size());
  const int d = static_cast<int>((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0 + 0.5);
  if (d * (d + 1) / 2 != len) throw std::invalid_argument("smat: length is not a triangular number");
  Matrix out(d, d);
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r <= c; ++r) {
      const double v = packed[k++];
      if (r == c) {
        out(r, c) = v;
      } else {
        out(r, c) = v * inv_root2;
        out(c, r) = v * inv_root2;
      }
    }
  }
  return out;
}

}  // namespace safenet
