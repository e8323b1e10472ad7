#include "vst/tensor.hpp"

#include <cmath>
#include <sstream>

#include "vst/errors.hpp"

namespace vst {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimError("non-positive dimension in shape " + shape_to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw DimError("data length " + std::to_string(data_.size()) + " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  for (double& x : t.data_) x = v;
  return t;
}

Tensor Tensor::row(std::initializer_list<double> v) {
  return Tensor({1, static_cast<int>(v.size())}, std::vector<double>(v));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r ? static_cast<int>(rows.begin()->size()) : 0;
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(r) * c);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw DimError("ragged initializer rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::check_finite(const std::string& what) const {
  if (!all_finite()) throw NumericError("non-finite value in " + what);
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

}  // namespace vst
