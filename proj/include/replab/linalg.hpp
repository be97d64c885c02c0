#pragma once

// Small dense linear algebra: the games handled here have at most a few dozen
// strategies, so everything is row-major std::vector storage and O(n^3).

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace replab {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> data() const { return data_; }

  Matrix transpose() const;
  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column j is the unit eigenvector for values[j]
};

// Cyclic Jacobi rotations. The input must be symmetric; only the upper
// triangle is trusted. Off-diagonal mass is driven below 1e-15 relative to
// the Frobenius norm, which gives eigenvalues to ~1e-12 absolute for the
// well-scaled matrices used here.
SymmetricEigen jacobi_eigen(const Matrix& symmetric);

// Gaussian elimination with partial pivoting. Returns nullopt when a pivot
// falls below pivot_tol times the largest absolute entry of the matrix.
std::optional<Vector> solve_linear(Matrix a, Vector b, double pivot_tol = 1e-12);

// LU determinant with partial pivoting.
double determinant(Matrix a);

}  // namespace replab
