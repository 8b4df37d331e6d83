#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace ltcil {

/// Dense row-major matrix of doubles. The only tensor type in the project;
/// row vectors are 1xN matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

  Matrix row(std::size_t r) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a.cols must equal b.rows; summation order is fixed (k ascending).
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& z);

// elementwise helpers
Matrix hadamard(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& a, double s);

bool all_finite(const Matrix& m);

}  // namespace ltcil
