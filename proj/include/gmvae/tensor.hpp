#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gmvae {

/// Dense row-major array of doubles with shape metadata.
///
/// Rank-2 tensors are the common case (rows x cols); scalars used by the
/// autodiff tape are 1x1. Model weights live here too, but are kept at
/// values exactly representable in 32-bit floats (see round_to_f32).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
  static Tensor scalar(double v) { return Tensor({1, 1}, v); }
  static Tensor row(std::span<const double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Rank-2 accessors. A rank-1 tensor is viewed as a single row.
  std::size_t rows() const {
    if (shape_.size() == 1) return 1;
    if (shape_.size() != 2) throw_not_matrix("Tensor::rows");
    return shape_[0];
  }
  std::size_t cols() const {
    if (shape_.size() == 1) return shape_[0];
    if (shape_.size() != 2) throw_not_matrix("Tensor::cols");
    return shape_[1];
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  void fill(double v);
  Tensor reshaped(std::vector<std::size_t> shape) const;
  Tensor transposed() const;

  /// Row-major column slice [begin, end) of a rank-2 tensor.
  Tensor cols_slice(std::size_t begin, std::size_t end) const;

  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  [[noreturn]] void throw_not_matrix(const char* who) const;
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

double max_abs(const Tensor& t);

/// Round every entry to the nearest 32-bit float.
void round_to_f32(Tensor& t);

}  // namespace gmvae
