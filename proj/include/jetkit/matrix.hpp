#pragma once

#include <functional>
#include <vector>

#include "jetkit/expr.hpp"

namespace jetkit {

// Dense matrix of expressions. Determinants and adjugates are computed by
// Laplace expansion, which keeps everything exact; intended for small sizes
// (gauge and curvature matrices are at most 4x4).
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);
  static Matrix identity(int n);
  static Matrix scalar(Expr e);  // 1x1

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Expr& at(int i, int j);
  const Expr& at(int i, int j) const;
  Matrix col(int j) const;
  bool allZero() const;

  Matrix map(const std::function<Expr(const Expr&)>& f) const;

  Matrix operator+(const Matrix& o) const;
  Matrix operator-(const Matrix& o) const;
  Matrix operator-() const;
  Matrix operator*(const Matrix& o) const;
  Matrix operator*(const Expr& s) const;
  bool operator==(const Matrix& o) const;
  bool operator!=(const Matrix& o) const { return !(*this == o); }

  Expr det() const;
  Matrix adjugate() const;
  // adjugate / det; throws std::runtime_error on a symbolically zero det.
  Matrix inverse() const;

 private:
  Matrix minorMatrix(int dropRow, int dropCol) const;

  int rows_ = 0, cols_ = 0;
  std::vector<Expr> a_;
};

Matrix operator*(const Expr& s, const Matrix& m);

// XY - YX.
Matrix commutator(const Matrix& x, const Matrix& y);

}  // namespace jetkit
