#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "featsplat/common.hpp"

namespace featsplat {

// Dense row-major tensor of doubles. On disk this is the "GTEN" format:
// magic "GTEN", u32 rank, u32 dims[rank], f32 data, little-endian, row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);

  std::size_t rank() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  // rank-2 access
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * dims_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * dims_[1] + j];
  }

  // rank-3 access
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  // Channel vector at (y, x) of a rank-3 tensor; channels are contiguous.
  Eigen::Map<Eigen::VectorXd> channels(std::size_t y, std::size_t x) {
    return {data_.data() + (y * dims_[1] + x) * dims_[2],
            static_cast<Eigen::Index>(dims_[2])};
  }
  Eigen::Map<const Eigen::VectorXd> channels(std::size_t y, std::size_t x) const {
    return {data_.data() + (y * dims_[1] + x) * dims_[2],
            static_cast<Eigen::Index>(dims_[2])};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

// Binary boolean image; serialized as P5 PGM with values 0/255.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;  // row-major, 0 or 1

  Mask() = default;
  Mask(std::size_t h, std::size_t w) : height(h), width(w), data(h * w, 0) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
  std::size_t count() const;
};

void write_gten(const std::filesystem::path& path, const Tensor& t);
Tensor read_gten(const std::filesystem::path& path);

// color: H x W x 3 in [0,1], written as binary P6. `comment` goes into a
// header comment line when non-empty.
void write_ppm(const std::filesystem::path& path, const Tensor& color,
               const std::string& comment = {});
void write_pgm(const std::filesystem::path& path, const Mask& mask,
               const std::string& comment = {});

}  // namespace featsplat
