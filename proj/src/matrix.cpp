#include "jetkit/matrix.hpp"

#include <stdexcept>

namespace jetkit {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix size");
  a_.assign(static_cast<size_t>(rows) * cols, Expr());
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = ei(1);
  return m;
}

Matrix Matrix::scalar(Expr e) {
  Matrix m(1, 1);
  m.at(0, 0) = std::move(e);
  return m;
}

Expr& Matrix::at(int i, int j) {
  if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
    throw std::out_of_range("matrix index");
  return a_[static_cast<size_t>(i) * cols_ + j];
}

const Expr& Matrix::at(int i, int j) const {
  if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
    throw std::out_of_range("matrix index");
  return a_[static_cast<size_t>(i) * cols_ + j];
}

Matrix Matrix::col(int j) const {
  Matrix m(rows_, 1);
  for (int i = 0; i < rows_; ++i) m.at(i, 0) = at(i, j);
  return m;
}

bool Matrix::allZero() const {
  for (const Expr& e : a_)
    if (!e.isZero()) return false;
  return true;
}

Matrix Matrix::map(const std::function<Expr(const Expr&)>& f) const {
  Matrix m(rows_, cols_);
  for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = f(a_[k]);
  return m;
}

Matrix Matrix::operator+(const Matrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw std::invalid_argument("matrix shape mismatch");
  Matrix m(rows_, cols_);
  for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] + o.a_[k];
  return m;
}

Matrix Matrix::operator-(const Matrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw std::invalid_argument("matrix shape mismatch");
  Matrix m(rows_, cols_);
  for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] - o.a_[k];
  return m;
}

Matrix Matrix::operator-() const {
  Matrix m(rows_, cols_);
  for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = -a_[k];
  return m;
}

Matrix Matrix::operator*(const Matrix& o) const {
  if (cols_ != o.rows_) throw std::invalid_argument("matrix shape mismatch");
  Matrix m(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < o.cols_; ++j) {
      Expr acc;
      for (int k = 0; k < cols_; ++k) acc += at(i, k) * o.at(k, j);
      m.at(i, j) = acc;
    }
  return m;
}

Matrix Matrix::operator*(const Expr& s) const {
  Matrix m(rows_, cols_);
  for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] * s;
  return m;
}

bool Matrix::operator==(const Matrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) return false;
  for (size_t k = 0; k < a_.size(); ++k)
    if (!(a_[k] == o.a_[k])) return false;
  return true;
}

Matrix Matrix::minorMatrix(int dropRow, int dropCol) const {
  Matrix m(rows_ - 1, cols_ - 1);
  for (int i = 0, mi = 0; i < rows_; ++i) {
    if (i == dropRow) continue;
    for (int j = 0, mj = 0; j < cols_; ++j) {
      if (j == dropCol) continue;
      m.at(mi, mj++) = at(i, j);
    }
    ++mi;
  }
  return m;
}

Expr Matrix::det() const {
  if (rows_ != cols_) throw std::invalid_argument("det of non-square matrix");
  if (rows_ == 0) return ei(1);
  if (rows_ == 1) return a_[0];
  if (rows_ == 2) return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
  Expr acc;
  for (int i = 0; i < rows_; ++i) {
    Expr cof = at(i, 0) * minorMatrix(i, 0).det();
    acc = (i % 2 == 0) ? acc + cof : acc - cof;
  }
  return acc;
}

Matrix Matrix::adjugate() const {
  if (rows_ != cols_)
    throw std::invalid_argument("adjugate of non-square matrix");
  if (rows_ == 1) return identity(1);
  Matrix m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) {
      Expr cof = minorMatrix(i, j).det();
      m.at(j, i) = ((i + j) % 2 == 0) ? cof : -cof;
    }
  return m;
}

Matrix Matrix::inverse() const {
  Expr d = det();
  if (d.isZero()) throw std::runtime_error("matrix is singular");
  return adjugate().map([&](const Expr& e) { return e / d; });
}

Matrix operator*(const Expr& s, const Matrix& m) { return m * s; }

Matrix commutator(const Matrix& x, const Matrix& y) {
  return x * y - y * x;
}

}  // namespace jetkit
