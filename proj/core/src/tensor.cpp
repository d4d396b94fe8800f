#include "sgrel/tensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "sgrel/errors.hpp"

namespace sgrel {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("tensor file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open tensor file: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad tensor magic in " + path.string());
  }
  const std::uint32_t ndim = get_u32(is);
  if (ndim == 0 || ndim > 8) {
    throw FormatError("unreasonable tensor rank in " + path.string());
  }
  Tensor t;
  t.dims.resize(ndim);
  for (auto& d : t.dims) d = get_u32(is);
  const std::size_t n = t.element_count();
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.data[i] = static_cast<double>(std::bit_cast<float>(get_u32(is)));
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  if (t.data.size() != t.element_count()) {
    throw DimensionMismatch("tensor data length does not match dims");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write tensor file: " + path.string());
  os.write(kMagic, 4);
  put_u32(os, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(os, d);
  for (double v : t.data) {
    put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!os) throw FormatError("short write to tensor file: " + path.string());
}

Eigen::MatrixXd tensor_to_matrix(const Tensor& t) {
  if (t.dims.size() != 2) throw DimensionMismatch("expected a rank-2 tensor");
  const auto rows = static_cast<Eigen::Index>(t.dims[0]);
  const auto cols = static_cast<Eigen::Index>(t.dims[1]);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = t.data[static_cast<std::size_t>(r * cols + c)];
    }
  }
  return m;
}

Eigen::VectorXd tensor_to_vector(const Tensor& t) {
  if (t.dims.size() != 1) throw DimensionMismatch("expected a rank-1 tensor");
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.dims[0]));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = t.data[static_cast<std::size_t>(i)];
  return v;
}

Tensor matrix_to_tensor(const Eigen::MatrixXd& m) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  }
  return t;
}

Tensor vector_to_tensor(const Eigen::VectorXd& v) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

}  // namespace sgrel
