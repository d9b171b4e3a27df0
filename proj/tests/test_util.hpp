#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "featsplat/raster.hpp"
#include "featsplat/scene.hpp"

namespace featsplat::testutil {

inline Camera make_camera(int width = 64, int height = 64, double focal = 90.0) {
  Camera cam;
  cam.fx = cam.fy = focal;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.width = width;
  cam.height = height;
  cam.world_to_cam.setIdentity();
  return cam;
}

// Random scene in front of an identity-pose camera looking down +z.
// All stored values are f32-representable so file round trips are exact.
inline Scene make_random_scene(int n, int latent_dim, std::uint64_t seed,
                               double xy_spread = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto f32 = [](double v) { return static_cast<double>(static_cast<float>(v)); };

  Scene s;
  s.latent_dim = latent_dim;
  s.metadata = {{"name", "random-test-scene"}, {"seed", seed}};
  for (int i = 0; i < n; ++i) {
    Gaussian g;
    g.mu = {f32((u01(rng) * 2 - 1) * xy_spread), f32((u01(rng) * 2 - 1) * xy_spread),
            f32(2.0 + 6.0 * u01(rng))};
    g.scale = {f32(0.05 + 0.35 * u01(rng)), f32(0.05 + 0.35 * u01(rng)),
               f32(0.05 + 0.35 * u01(rng))};
    Eigen::Vector4d q;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int c = 0; c < 4; ++c) q[c] = gauss(rng);
    q.normalize();
    g.rotation = Eigen::Quaterniond(f32(q[0]), f32(q[1]), f32(q[2]), f32(q[3]));
    g.color = {f32(u01(rng)), f32(u01(rng)), f32(u01(rng))};
    g.opacity = f32(0.05 + 0.9 * u01(rng));
    g.latent.resize(latent_dim);
    for (int c = 0; c < latent_dim; ++c) g.latent[c] = f32(u01(rng) * 2 - 1);
    s.gaussians.push_back(std::move(g));
  }
  return s;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Central finite difference of a scalar function at x along one coordinate.
inline double central_diff(const std::function<double()>& eval, double& x, double h) {
  const double x0 = x;
  x = x0 + h;
  const double fp = eval();
  x = x0 - h;
  const double fm = eval();
  x = x0;
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace featsplat::testutil
