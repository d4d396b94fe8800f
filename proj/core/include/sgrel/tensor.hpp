#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace sgrel {

/// Dense row-major tensor. On disk: magic "SGT1", u32 LE ndim, ndim u32 LE
/// dims, then row-major little-endian float32 data. In memory values are kept
/// as double.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t element_count() const;
};

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& t);

Eigen::MatrixXd tensor_to_matrix(const Tensor& t);
Eigen::VectorXd tensor_to_vector(const Tensor& t);
Tensor matrix_to_tensor(const Eigen::MatrixXd& m);
Tensor vector_to_tensor(const Eigen::VectorXd& v);

}  // namespace sgrel
