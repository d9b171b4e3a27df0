#include "featsplat/scene.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace featsplat {

namespace {

void write_f32(std::ofstream& out, double v) {
  const float f = static_cast<float>(v);
  out.write(reinterpret_cast<const char*>(&f), 4);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void read_exact(std::ifstream& in, void* p, std::size_t n, const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw IoError(IoError::Kind::TruncatedFile,
                  std::string("truncated scene file while reading ") + what);
  }
}

std::uint32_t read_u32(std::ifstream& in, const char* what) {
  std::uint32_t v = 0;
  read_exact(in, &v, 4, what);
  return v;
}

double read_f32(std::ifstream& in, const char* what) {
  float v = 0;
  read_exact(in, &v, 4, what);
  return static_cast<double>(v);
}

}  // namespace

void Gaussian::validate(int latent_dim) const {
  if (!(scale.array() > 0.0).all()) {
    throw InvalidArgument("gaussian scale components must be positive");
  }
  if (std::abs(rotation.norm() - 1.0) > 1e-6) {
    throw InvalidArgument("gaussian quaternion is not unit norm");
  }
  if (opacity < 0.0 || opacity > 1.0) {
    throw InvalidArgument("gaussian opacity outside [0,1]");
  }
  if ((color.array() < 0.0).any() || (color.array() > 1.0).any()) {
    throw InvalidArgument("gaussian color outside [0,1]");
  }
  if (latent.size() != latent_dim) {
    throw InvalidArgument("gaussian latent dimension mismatch");
  }
}

Eigen::Matrix3d covariance_of(const Gaussian& g) {
  const Eigen::Matrix3d r = g.rotation.normalized().toRotationMatrix();
  const Eigen::Matrix3d m = r * g.scale.asDiagonal();
  return m * m.transpose();
}

void Camera::validate() const {
  if (fx <= 0.0 || fy <= 0.0) throw InvalidArgument("camera focal lengths must be positive");
  if (width < 1 || height < 1) throw InvalidArgument("camera image size must be >= 1");
  const Eigen::Matrix3d r = rotation();
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw InvalidArgument("camera rotation block is not orthonormal");
  }
}

nlohmann::json Camera::to_json() const {
  std::vector<double> m(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m[i * 4 + j] = world_to_cam(i, j);
  return {{"fx", fx},       {"fy", fy},     {"cx", cx},
          {"cy", cy},       {"width", width}, {"height", height},
          {"world_to_cam", m}};
}

Camera Camera::from_json(const nlohmann::json& j) {
  Camera c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  const auto m = j.at("world_to_cam").get<std::vector<double>>();
  if (m.size() != 16) throw ConfigError("world_to_cam must have 16 entries");
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) c.world_to_cam(i, k) = m[i * 4 + k];
  c.validate();
  return c;
}

void Scene::validate() const {
  for (const Gaussian& g : gaussians) g.validate(latent_dim);
}

void save_scene(const Scene& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open for write: " + path.string());
  }
  out.write("GSPL", 4);
  write_u32(out, 1);
  write_u32(out, static_cast<std::uint32_t>(s.gaussians.size()));
  write_u32(out, static_cast<std::uint32_t>(s.latent_dim));
  for (const Gaussian& g : s.gaussians) {
    for (int i = 0; i < 3; ++i) write_f32(out, g.mu[i]);
    for (int i = 0; i < 3; ++i) write_f32(out, g.scale[i]);
    write_f32(out, g.rotation.w());
    write_f32(out, g.rotation.x());
    write_f32(out, g.rotation.y());
    write_f32(out, g.rotation.z());
    for (int i = 0; i < 3; ++i) write_f32(out, g.color[i]);
    write_f32(out, g.opacity);
    for (int i = 0; i < s.latent_dim; ++i) write_f32(out, g.latent[i]);
  }
  const std::string meta = s.metadata.dump();
  write_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  if (!out) {
    throw IoError(IoError::Kind::WriteFailed, "write failed: " + path.string());
  }
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open: " + path.string());
  }
  char magic[4];
  read_exact(in, magic, 4, "magic");
  if (std::memcmp(magic, "GSPL", 4) != 0) {
    throw IoError(IoError::Kind::MagicMismatch, "not a GSPL file: " + path.string());
  }
  const std::uint32_t version = read_u32(in, "version");
  if (version != 1) {
    throw IoError(IoError::Kind::BadValue,
                  "unsupported GSPL version " + std::to_string(version));
  }
  const std::uint32_t n = read_u32(in, "count");
  const std::uint32_t d = read_u32(in, "latent_dim");
  if (d > 100000) {
    throw IoError(IoError::Kind::DimensionMismatch,
                  "unreasonable latent dimension " + std::to_string(d));
  }

  Scene s;
  s.latent_dim = static_cast<int>(d);
  s.gaussians.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Gaussian& g = s.gaussians[i];
    for (int k = 0; k < 3; ++k) g.mu[k] = read_f32(in, "mu");
    for (int k = 0; k < 3; ++k) g.scale[k] = read_f32(in, "scale");
    const double qw = read_f32(in, "quat");
    const double qx = read_f32(in, "quat");
    const double qy = read_f32(in, "quat");
    const double qz = read_f32(in, "quat");
    g.rotation = Eigen::Quaterniond(qw, qx, qy, qz);
    const double qn = g.rotation.norm();
    // Float drift is tolerated; anything further off than 1e-3 is corruption.
    if (std::abs(qn - 1.0) > 1e-3) {
      throw IoError(IoError::Kind::BadValue,
                    "quaternion norm " + std::to_string(qn) + " out of tolerance");
    }
    if (std::abs(qn - 1.0) > 1e-6) g.rotation.normalize();
    for (int k = 0; k < 3; ++k) g.color[k] = read_f32(in, "color");
    g.opacity = read_f32(in, "opacity");
    g.latent.resize(d);
    for (std::uint32_t k = 0; k < d; ++k) g.latent[k] = read_f32(in, "latent");
  }
  const std::uint32_t meta_len = read_u32(in, "metadata length");
  std::string meta(meta_len, '\0');
  read_exact(in, meta.data(), meta_len, "metadata");
  try {
    s.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::parse_error&) {
    throw IoError(IoError::Kind::BadValue, "scene metadata is not valid JSON");
  }
  return s;
}

}  // namespace featsplat
