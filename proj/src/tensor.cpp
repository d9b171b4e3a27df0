#include "featsplat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace featsplat {

namespace {

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw IoError(IoError::Kind::TruncatedFile,
                  std::string("truncated file while reading ") + what);
  }
}

void write_u32(std::ofstream& out, std::uint32_t v) { write_bytes(out, &v, 4); }

std::uint32_t read_u32(std::ifstream& in, const char* what) {
  std::uint32_t v = 0;
  read_bytes(in, &v, 4, what);
  return v;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, double fill) : dims_(std::move(dims)) {
  std::size_t n = 1;
  for (std::size_t d : dims_) n *= d;
  data_.assign(n, fill);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

void write_gten(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open for write: " + path.string());
  }
  write_bytes(out, "GTEN", 4);
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.dims()) write_u32(out, static_cast<std::uint32_t>(d));
  std::vector<float> buf(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) buf[i] = static_cast<float>(t[i]);
  write_bytes(out, buf.data(), buf.size() * sizeof(float));
  if (!out) {
    throw IoError(IoError::Kind::WriteFailed, "write failed: " + path.string());
  }
}

Tensor read_gten(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open: " + path.string());
  }
  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, "GTEN", 4) != 0) {
    throw IoError(IoError::Kind::MagicMismatch, "not a GTEN file: " + path.string());
  }
  const std::uint32_t rank = read_u32(in, "rank");
  if (rank == 0 || rank > 8) {
    throw IoError(IoError::Kind::DimensionMismatch,
                  "unreasonable GTEN rank " + std::to_string(rank));
  }
  std::vector<std::size_t> dims(rank);
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    dims[i] = read_u32(in, "dims");
    n *= dims[i];
  }
  Tensor t(dims);
  std::vector<float> buf(n);
  read_bytes(in, buf.data(), n * sizeof(float), "data");
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(buf[i]);
  return t;
}

void write_ppm(const std::filesystem::path& path, const Tensor& color,
               const std::string& comment) {
  if (color.rank() != 3 || color.dim(2) != 3) {
    throw InvalidArgument("write_ppm expects an H x W x 3 tensor");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open for write: " + path.string());
  }
  const std::size_t h = color.dim(0), w = color.dim(1);
  out << "P6\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(color(y, x, c), 0.0, 1.0);
        row[x * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
    write_bytes(out, row.data(), row.size());
  }
  if (!out) {
    throw IoError(IoError::Kind::WriteFailed, "write failed: " + path.string());
  }
}

void write_pgm(const std::filesystem::path& path, const Mask& mask,
               const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open for write: " + path.string());
  }
  out << "P5\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << mask.width << " " << mask.height << "\n255\n";
  std::vector<unsigned char> row(mask.width);
  for (std::size_t y = 0; y < mask.height; ++y) {
    for (std::size_t x = 0; x < mask.width; ++x) {
      row[x] = mask.at(y, x) ? 255 : 0;
    }
    write_bytes(out, row.data(), row.size());
  }
  if (!out) {
    throw IoError(IoError::Kind::WriteFailed, "write failed: " + path.string());
  }
}

}  // namespace featsplat
