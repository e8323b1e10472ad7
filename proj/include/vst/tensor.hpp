#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace vst {

// Dense row-major array of doubles. The single value type of the math core;
// immutable by convention once handed to the tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v);
  // 2D convenience for tests and hand-built parameters.
  static Tensor row(std::initializer_list<double> v);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2D accessors; rank checked in debug builds only.
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

  int rows() const { return shape_.empty() ? 0 : shape_[0]; }
  int cols() const { return shape_.size() < 2 ? 0 : shape_[1]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  // Throws NumericError naming `what` if any element is NaN/Inf.
  void check_finite(const std::string& what) const;

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace vst
