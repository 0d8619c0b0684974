#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <vector>

#include "stimpute/errors.hpp"

namespace stimpute {

using Shape = std::vector<std::size_t>;

/// Dense row-major tensor of doubles. Rank is arbitrary but almost all of
/// the pipeline uses rank 1 and 2; rank-3 shows up for quantile fields.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape dims, double fill = 0.0);
  Tensor(Shape dims, std::vector<double> data);

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }

  // 2-D accessors; throw on rank mismatch.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

 private:
  Shape dims_;
  std::vector<double> data_;
};

std::size_t shape_size(const Shape& dims);

// "STI1" container: magic, u8 dtype (0 = f64), u8 rank, rank x u64 little-endian
// dims, row-major f64 payload.
void save_sti(const std::filesystem::path& path, const Tensor& t);
Tensor load_sti(const std::filesystem::path& path);

}  // namespace stimpute
