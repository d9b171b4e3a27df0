#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <json.hpp>

#include "featsplat/common.hpp"

namespace featsplat {

// One splat. Covariance is factored as R * diag(scale^2) * R^T; the latent is
// the per-splat feature channel composited by the rasterizer.
struct Gaussian {
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();  // unit
  Eigen::Vector3d color = Eigen::Vector3d::Zero();               // [0,1]
  double opacity = 1.0;                                          // [0,1]
  Eigen::VectorXd latent;                                        // d entries

  void validate(int latent_dim) const;
};

Eigen::Matrix3d covariance_of(const Gaussian& g);

// Pinhole camera: intrinsics in pixels, extrinsics as a rigid world-to-camera
// transform. Pixel (x, y) is sampled at integer coordinates (x, y).
struct Camera {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  int width = 1, height = 1;
  Eigen::Matrix4d world_to_cam = Eigen::Matrix4d::Identity();

  Eigen::Matrix3d rotation() const { return world_to_cam.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return world_to_cam.topRightCorner<3, 1>(); }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_world) const {
    return rotation() * p_world + translation();
  }
  void validate() const;

  nlohmann::json to_json() const;
  static Camera from_json(const nlohmann::json& j);
};

struct Scene {
  std::vector<Gaussian> gaussians;
  int latent_dim = 0;
  nlohmann::json metadata = nlohmann::json::object();  // name, seed, params

  std::size_t size() const { return gaussians.size(); }
  void validate() const;
};

// "GSPL" scene file: binary little-endian. Magic "GSPL", u32 version=1, u32 N,
// u32 d, then per-Gaussian f32 fields (mu 3, scale 3, quat wxyz 4, color 3,
// opacity 1, latent d), then a u32-length-prefixed UTF-8 JSON metadata string.
void save_scene(const Scene& s, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

}  // namespace featsplat
