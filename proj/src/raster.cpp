#include "featsplat/raster.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace featsplat {

namespace {

double larger_eigenvalue(const Eigen::Matrix2d& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
  return 0.5 * tr + disc;
}

struct PixelAccum {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  Eigen::VectorXd feature;
  double alpha_sum = 0.0;
};

// Shared per-pixel compositing step. Both renderers walk their candidate
// lists through this exact code so the arithmetic is identical on both paths.
// Returns false once the transmittance stop fires.
inline bool composite_step(const Projected2D& p, const Gaussian& g, double px,
                           double py, double& transmittance, PixelAccum& acc,
                           std::vector<Contribution>& contrib) {
  const double dx = px - p.mean2d[0];
  const double dy = py - p.mean2d[1];
  const double maha = p.inv_cov2d(0, 0) * dx * dx +
                      2.0 * p.inv_cov2d(0, 1) * dx * dy +
                      p.inv_cov2d(1, 1) * dy * dy;
  const double alpha = g.opacity * std::exp(-0.5 * maha);
  if (alpha < kAlphaCutoff) return true;
  const double w = alpha * transmittance;
  acc.color += w * g.color;
  acc.feature += w * g.latent;
  acc.alpha_sum += w;
  contrib.push_back({p.gaussian_index, w});
  transmittance *= (1.0 - alpha);
  return transmittance >= kTransmittanceStop;
}

std::vector<Projected2D> project_all_sorted(const Scene& s, const Camera& cam) {
  std::vector<Projected2D> projected;
  projected.reserve(s.gaussians.size());
  for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
    if (auto p = project(s.gaussians[i], cam, static_cast<std::uint32_t>(i))) {
      projected.push_back(*p);
    }
  }
  std::sort(projected.begin(), projected.end(),
            [](const Projected2D& a, const Projected2D& b) {
              if (a.depth != b.depth) return a.depth < b.depth;
              return a.gaussian_index < b.gaussian_index;
            });
  return projected;
}

RenderOutput make_output(const Scene& s, const Camera& cam) {
  RenderOutput out;
  const auto h = static_cast<std::size_t>(cam.height);
  const auto w = static_cast<std::size_t>(cam.width);
  out.color = Tensor({h, w, 3});
  out.feature = Tensor({h, w, static_cast<std::size_t>(s.latent_dim)});
  out.alpha = Tensor({h, w});
  return out;
}

void store_pixel(RenderOutput& out, std::size_t y, std::size_t x,
                 const PixelAccum& acc) {
  for (std::size_t c = 0; c < 3; ++c) out.color(y, x, c) = acc.color[c];
  out.feature.channels(y, x) = acc.feature;
  out.alpha(y, x) = acc.alpha_sum;
}

void flatten_contribs(RenderOutput& out,
                      const std::vector<std::vector<Contribution>>& per_pixel) {
  out.contrib_offsets.resize(per_pixel.size() + 1);
  out.contrib_offsets[0] = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < per_pixel.size(); ++i) {
    total += per_pixel[i].size();
    out.contrib_offsets[i + 1] = total;
  }
  out.contrib.reserve(total);
  for (const auto& v : per_pixel) {
    out.contrib.insert(out.contrib.end(), v.begin(), v.end());
  }
}

}  // namespace

std::optional<Projected2D> project(const Gaussian& g, const Camera& cam,
                                   std::uint32_t index) {
  const Eigen::Vector3d t = cam.to_camera(g.mu);
  if (t.z() <= kNearPlane) return std::nullopt;

  Projected2D p;
  p.gaussian_index = index;
  p.depth = t.z();
  p.mean2d[0] = cam.fx * t.x() / t.z() + cam.cx;
  p.mean2d[1] = cam.fy * t.y() / t.z() + cam.cy;

  Eigen::Matrix<double, 2, 3> jac;
  const double inv_z = 1.0 / t.z();
  const double inv_z2 = inv_z * inv_z;
  jac << cam.fx * inv_z, 0.0, -cam.fx * t.x() * inv_z2,
      0.0, cam.fy * inv_z, -cam.fy * t.y() * inv_z2;

  const Eigen::Matrix3d cov_cam =
      cam.rotation() * covariance_of(g) * cam.rotation().transpose();
  p.cov2d = jac * cov_cam * jac.transpose();
  p.cov2d(0, 0) += kCovRegularization;
  p.cov2d(1, 1) += kCovRegularization;

  const double det = p.cov2d(0, 0) * p.cov2d(1, 1) - p.cov2d(0, 1) * p.cov2d(1, 0);
  if (!(det > 0.0)) return std::nullopt;  // regularization makes this unreachable
  const double inv_det = 1.0 / det;
  p.inv_cov2d(0, 0) = p.cov2d(1, 1) * inv_det;
  p.inv_cov2d(1, 1) = p.cov2d(0, 0) * inv_det;
  p.inv_cov2d(0, 1) = p.inv_cov2d(1, 0) = -p.cov2d(0, 1) * inv_det;

  // One extra pixel of slack so the footprint strictly covers every pixel
  // that can pass the alpha cutoff.
  p.radius = kFootprintSigma * std::sqrt(larger_eigenvalue(p.cov2d)) + 1.0;
  if (p.mean2d[0] + p.radius < 0.0 ||
      p.mean2d[0] - p.radius > static_cast<double>(cam.width - 1) ||
      p.mean2d[1] + p.radius < 0.0 ||
      p.mean2d[1] - p.radius > static_cast<double>(cam.height - 1)) {
    return std::nullopt;
  }
  return p;
}

RenderOutput render(const Scene& s, const Camera& cam, const RenderOptions& opts) {
  if (s.gaussians.empty()) throw EmptySceneError();
  if (opts.tile_size < 1) throw InvalidArgument("tile_size must be >= 1");
  cam.validate();

  const std::vector<Projected2D> sorted = project_all_sorted(s, cam);
  RenderOutput out = make_output(s, cam);

  const int ts = opts.tile_size;
  const int tiles_x = (cam.width + ts - 1) / ts;
  const int tiles_y = (cam.height + ts - 1) / ts;

  // Bin splats into tiles; iterating the depth-sorted list keeps every tile
  // list in global compositing order.
  std::vector<std::vector<std::uint32_t>> tile_bins(
      static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::uint32_t si = 0; si < sorted.size(); ++si) {
    const Projected2D& p = sorted[si];
    const int x0 = std::clamp(
        static_cast<int>(std::floor((p.mean2d[0] - p.radius) / ts)), 0, tiles_x - 1);
    const int x1 = std::clamp(
        static_cast<int>(std::floor((p.mean2d[0] + p.radius) / ts)), 0, tiles_x - 1);
    const int y0 = std::clamp(
        static_cast<int>(std::floor((p.mean2d[1] - p.radius) / ts)), 0, tiles_y - 1);
    const int y1 = std::clamp(
        static_cast<int>(std::floor((p.mean2d[1] + p.radius) / ts)), 0, tiles_y - 1);
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx)
        tile_bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(si);
  }

  std::vector<std::vector<Contribution>> per_pixel(
      static_cast<std::size_t>(cam.width) * cam.height);

  auto render_tile = [&](int tile_index) {
    const int ty = tile_index / tiles_x;
    const int tx = tile_index % tiles_x;
    const auto& bin = tile_bins[static_cast<std::size_t>(tile_index)];
    const int px0 = tx * ts;
    const int py0 = ty * ts;
    const int px1 = std::min(px0 + ts, cam.width);
    const int py1 = std::min(py0 + ts, cam.height);
    PixelAccum acc;
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        acc.color.setZero();
        acc.feature = Eigen::VectorXd::Zero(s.latent_dim);
        acc.alpha_sum = 0.0;
        auto& contrib = per_pixel[static_cast<std::size_t>(y) * cam.width + x];
        double transmittance = 1.0;
        for (std::uint32_t si : bin) {
          const Projected2D& p = sorted[si];
          if (!composite_step(p, s.gaussians[p.gaussian_index],
                              static_cast<double>(x), static_cast<double>(y),
                              transmittance, acc, contrib)) {
            break;
          }
        }
        store_pixel(out, static_cast<std::size_t>(y), static_cast<std::size_t>(x), acc);
      }
    }
  };

  const int n_tiles = tiles_x * tiles_y;
  const int threads = std::max(1, opts.threads);
  if (threads == 1 || n_tiles == 1) {
    for (int i = 0; i < n_tiles; ++i) render_tile(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < n_tiles; i += threads) render_tile(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  flatten_contribs(out, per_pixel);
  return out;
}

RenderOutput render_bruteforce(const Scene& s, const Camera& cam) {
  if (s.gaussians.empty()) throw EmptySceneError();
  cam.validate();

  const std::vector<Projected2D> sorted = project_all_sorted(s, cam);
  RenderOutput out = make_output(s, cam);
  std::vector<std::vector<Contribution>> per_pixel(
      static_cast<std::size_t>(cam.width) * cam.height);

  PixelAccum acc;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      acc.color.setZero();
      acc.feature = Eigen::VectorXd::Zero(s.latent_dim);
      acc.alpha_sum = 0.0;
      auto& contrib = per_pixel[static_cast<std::size_t>(y) * cam.width + x];
      double transmittance = 1.0;
      for (const Projected2D& p : sorted) {
        if (!composite_step(p, s.gaussians[p.gaussian_index],
                            static_cast<double>(x), static_cast<double>(y),
                            transmittance, acc, contrib)) {
          break;
        }
      }
      store_pixel(out, static_cast<std::size_t>(y), static_cast<std::size_t>(x), acc);
    }
  }

  flatten_contribs(out, per_pixel);
  return out;
}

}  // namespace featsplat
