#include "featsplat/field.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace featsplat {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
               Eigen::MatrixXd& m, Eigen::MatrixXd& v, long t, double lr) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
  v = (kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
}

}  // namespace

namespace {

struct ViewLossParts {
  double l1 = 0.0;
  double cos = 0.0;
};

// Loss parts for one view's targets plus the beta-scaled gradient wrt the
// latent matrix. Shared by the trainer and the standalone objective.
ViewLossParts view_objective(const RenderOutput& weights,
                             const std::vector<const TargetFeatureMap*>& targets,
                             const std::vector<int>& levels, int k,
                             const Eigen::MatrixXd& latents, double gamma,
                             double beta, Eigen::MatrixXd* grad) {
  const std::size_t h = weights.alpha.dim(0), w = weights.alpha.dim(1);
  ViewLossParts parts;
  for (const TargetFeatureMap* target : targets) {
    const auto it = std::find(levels.begin(), levels.end(), target->level);
    const int block = static_cast<int>(it - levels.begin()) * k;

    Tensor rendered({h, w, static_cast<std::size_t>(k)});
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (!target->valid[y * w + x]) continue;
        auto out = rendered.channels(y, x);
        for (const Contribution& c : weights.contributions_at(y, x)) {
          out += c.weight * latents.row(c.gaussian_index).segment(block, k).transpose();
        }
      }
    }

    const LangLossGrad lg = lang_loss(rendered, *target, gamma);
    parts.l1 += lg.l1_part;
    parts.cos += lg.cos_part;
    if (grad) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          if (!target->valid[y * w + x]) continue;
          const auto g = lg.grad.channels(y, x);
          for (const Contribution& c : weights.contributions_at(y, x)) {
            grad->row(c.gaussian_index).segment(block, k) +=
                (beta * c.weight) * g.transpose();
          }
        }
      }
    }
  }
  return parts;
}

std::vector<int> collect_levels(const std::vector<TargetFeatureMap>& targets) {
  std::set<int> level_set;
  for (const TargetFeatureMap& t : targets) level_set.insert(t.level);
  return {level_set.begin(), level_set.end()};
}

}  // namespace

std::size_t TargetFeatureMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; }));
}

std::vector<TargetFeatureMap> build_targets(const std::vector<SupervisedView>& views,
                                            const Autoencoder& ae) {
  if (!ae.frozen()) throw InvalidArgument("build_targets requires a frozen autoencoder");
  std::vector<TargetFeatureMap> targets;
  const auto k = static_cast<std::size_t>(ae.latent_dim());

  for (std::size_t v = 0; v < views.size(); ++v) {
    const SupervisedView& view = views[v];
    const auto h = static_cast<std::size_t>(view.camera.height);
    const auto w = static_cast<std::size_t>(view.camera.width);

    std::set<int> levels;
    for (const MaskRegion& region : view.regions) levels.insert(region.level);

    for (int level : levels) {
      TargetFeatureMap t;
      t.target = Tensor({h, w, k});
      t.valid.assign(h * w, 0);
      t.view_index = static_cast<int>(v);
      t.level = level;

      for (const MaskRegion& region : view.regions) {
        if (region.level != level) continue;
        if (region.embedding.size() != ae.input_dim()) {
          throw InvalidArgument("region embedding dimension does not match encoder input");
        }
        if (region.mask.height != h || region.mask.width != w) {
          throw InvalidArgument("region mask size does not match camera");
        }
        const Eigen::VectorXd code = ae.encode(region.embedding);
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            if (!region.mask.at(y, x)) continue;
            auto& flag = t.valid[y * w + x];
            if (flag) {
              throw InvalidArgument("mask pixels overlap within a hierarchy level");
            }
            flag = 1;
            t.target.channels(y, x) = code;
          }
        }
      }
      targets.push_back(std::move(t));
    }
  }
  return targets;
}

LangLossGrad lang_loss(const Tensor& rendered, const TargetFeatureMap& target,
                       double gamma) {
  if (!rendered.same_shape(target.target)) {
    throw InvalidArgument("lang_loss: rendered/target shape mismatch");
  }
  const std::size_t h = rendered.dim(0), w = rendered.dim(1), k = rendered.dim(2);
  const std::size_t n_valid = target.valid_count();
  if (n_valid == 0) throw EmptySupervisionError();

  LangLossGrad out;
  out.grad = Tensor({h, w, k});
  const double inv_n = 1.0 / static_cast<double>(n_valid);

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!target.valid[y * w + x]) continue;
      const auto z = rendered.channels(y, x);
      const auto hvec = target.target.channels(y, x);
      auto g = out.grad.channels(y, x);

      for (std::size_t c = 0; c < k; ++c) {
        const double d = z[static_cast<Eigen::Index>(c)] - hvec[static_cast<Eigen::Index>(c)];
        out.l1_part += std::abs(d);
        g[static_cast<Eigen::Index>(c)] = sign(d) * inv_n;
      }

      const double nz = z.norm();
      const double nh = hvec.norm();
      if (nz < kNormFloor || nh < kNormFloor) {
        out.cos_part += 1.0;  // cos defined 0; no gradient through this branch
      } else {
        const double cosv = z.dot(hvec) / (nz * nh);
        out.cos_part += 1.0 - cosv;
        g -= (gamma * inv_n) * (hvec / (nz * nh) - (cosv / (nz * nz)) * z);
      }
    }
  }
  out.l1_part *= inv_n;
  out.cos_part *= inv_n;
  out.value = out.l1_part + gamma * out.cos_part;
  return out;
}

FieldTrainResult train_language_field(const Scene& scene,
                                      const std::vector<Camera>& views,
                                      const std::vector<TargetFeatureMap>& targets,
                                      const FieldTrainConfig& cfg) {
  cfg.validate();
  if (targets.empty()) throw EmptySupervisionError();

  // Levels become independent channel blocks of the widened latent.
  const std::vector<int> levels = collect_levels(targets);
  const auto k = static_cast<int>(targets.front().target.dim(2));
  for (const TargetFeatureMap& t : targets) {
    if (static_cast<int>(t.target.dim(2)) != k) {
      throw InvalidArgument("targets disagree on latent dimension");
    }
    if (t.view_index < 0 || t.view_index >= static_cast<int>(views.size())) {
      throw InvalidArgument("target references an unknown view");
    }
    if (t.valid_count() == 0) throw EmptySupervisionError();
  }
  if (scene.latent_dim != k * static_cast<int>(levels.size())) {
    throw InvalidArgument("scene latent_dim must equal levels * target latent dim");
  }

  FieldTrainResult result;
  result.scene = scene;
  if (cfg.iterations == 0) return result;

  const auto n = static_cast<Eigen::Index>(scene.gaussians.size());
  Eigen::MatrixXd latents(n, scene.latent_dim);
  if (cfg.init == LatentInit::Zeros) {
    latents.setZero();
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      latents.row(i) = result.scene.gaussians[static_cast<std::size_t>(i)].latent.transpose();
    }
  }

  // The compositing weights never change while geometry is frozen; render
  // each supervised view once and reuse the contributor lists throughout.
  std::map<int, RenderOutput> weights_by_view;
  std::vector<int> view_cycle;
  for (const TargetFeatureMap& t : targets) {
    if (!weights_by_view.count(t.view_index)) {
      const Camera& cam = views[static_cast<std::size_t>(t.view_index)];
      if (static_cast<std::size_t>(cam.height) != t.target.dim(0) ||
          static_cast<std::size_t>(cam.width) != t.target.dim(1)) {
        throw InvalidArgument("target dimensions do not match camera");
      }
      weights_by_view.emplace(t.view_index, render(scene, cam, cfg.render));
      view_cycle.push_back(t.view_index);
    }
  }
  std::map<int, std::vector<const TargetFeatureMap*>> targets_by_view;
  for (const TargetFeatureMap& t : targets) {
    targets_by_view[t.view_index].push_back(&t);
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, scene.latent_dim);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, scene.latent_dim);
  Eigen::MatrixXd grad(n, scene.latent_dim);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const int view_index = view_cycle[static_cast<std::size_t>(iter) % view_cycle.size()];
    const RenderOutput& weights = weights_by_view.at(view_index);

    grad.setZero();
    const ViewLossParts parts =
        view_objective(weights, targets_by_view.at(view_index), levels, k, latents,
                       cfg.gamma, cfg.beta, &grad);
    const double l1 = parts.l1;
    const double cosv = parts.cos;
    const double total = cfg.beta * (l1 + cfg.gamma * cosv);
    if (!std::isfinite(total)) {
      throw DivergenceError("language-field training diverged at iteration " +
                            std::to_string(iter) + " (non-finite loss)");
    }
    adam_step(latents, grad, m, v, iter + 1, cfg.lr);
    result.curve.push_back({iter, l1, cosv, total});
    ++result.gradient_steps;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    result.scene.gaussians[static_cast<std::size_t>(i)].latent = latents.row(i).transpose();
  }
  return result;
}

std::pair<double, Eigen::MatrixXd> language_field_objective(
    const Scene& scene, const std::vector<Camera>& views,
    const std::vector<TargetFeatureMap>& targets, const Eigen::MatrixXd& latents,
    const FieldTrainConfig& cfg) {
  if (targets.empty()) throw EmptySupervisionError();
  const std::vector<int> levels = collect_levels(targets);
  const auto k = static_cast<int>(targets.front().target.dim(2));
  if (latents.rows() != static_cast<Eigen::Index>(scene.gaussians.size()) ||
      latents.cols() != static_cast<Eigen::Index>(levels.size()) * k) {
    throw InvalidArgument("latent matrix shape does not match scene/targets");
  }

  std::map<int, RenderOutput> weights_by_view;
  std::map<int, std::vector<const TargetFeatureMap*>> targets_by_view;
  for (const TargetFeatureMap& t : targets) {
    if (!weights_by_view.count(t.view_index)) {
      weights_by_view.emplace(
          t.view_index,
          render(scene, views.at(static_cast<std::size_t>(t.view_index)), cfg.render));
    }
    targets_by_view[t.view_index].push_back(&t);
  }

  double total = 0.0;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(latents.rows(), latents.cols());
  for (const auto& [view_index, view_targets] : targets_by_view) {
    const ViewLossParts parts =
        view_objective(weights_by_view.at(view_index), view_targets, levels, k, latents,
                       cfg.gamma, cfg.beta, &grad);
    total += cfg.beta * (parts.l1 + cfg.gamma * parts.cos);
  }
  return {total, std::move(grad)};
}

RgbStageResult rgb_stage(const Scene& scene, const std::vector<Camera>& views,
                         const std::vector<Tensor>& target_images,
                         const RgbStageConfig& cfg) {
  RgbStageResult result;
  result.scene = scene;
  if (cfg.skip || cfg.iterations == 0) return result;
  if (views.empty()) throw InvalidArgument("rgb_stage requires at least one view");
  if (views.size() != target_images.size()) {
    throw InvalidArgument("rgb_stage: one target image per view required");
  }
  if (cfg.lr <= 0.0) throw ConfigError("lr must be > 0");

  const auto n = static_cast<Eigen::Index>(scene.gaussians.size());
  Eigen::MatrixXd colors(n, 3);
  Eigen::MatrixXd opacities(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    colors.row(i) = scene.gaussians[static_cast<std::size_t>(i)].color.transpose();
    opacities(i, 0) = scene.gaussians[static_cast<std::size_t>(i)].opacity;
  }
  Eigen::MatrixXd mc = Eigen::MatrixXd::Zero(n, 3), vc = Eigen::MatrixXd::Zero(n, 3);
  Eigen::MatrixXd mo = Eigen::MatrixXd::Zero(n, 1), vo = Eigen::MatrixXd::Zero(n, 1);
  Eigen::MatrixXd gc(n, 3), go(n, 1);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const std::size_t vi = static_cast<std::size_t>(iter) % views.size();
    const Camera& cam = views[vi];
    const Tensor& image = target_images[vi];
    if (image.rank() != 3 || image.dim(0) != static_cast<std::size_t>(cam.height) ||
        image.dim(1) != static_cast<std::size_t>(cam.width) || image.dim(2) != 3) {
      throw InvalidArgument("rgb_stage: target image does not match camera");
    }

    const RenderOutput out = render(result.scene, cam, cfg.render);
    const double inv_count = 1.0 / static_cast<double>(cam.height * cam.width * 3);

    double loss = 0.0;
    gc.setZero();
    go.setZero();
    std::vector<double> alphas, trans;
    for (std::size_t y = 0; y < static_cast<std::size_t>(cam.height); ++y) {
      for (std::size_t x = 0; x < static_cast<std::size_t>(cam.width); ++x) {
        Eigen::Vector3d dLdC;
        for (std::size_t c = 0; c < 3; ++c) {
          const double d = out.color(y, x, c) - image(y, x, c);
          loss += std::abs(d);
          dLdC[static_cast<Eigen::Index>(c)] = sign(d) * inv_count;
        }
        const auto contribs = out.contributions_at(y, x);
        if (contribs.empty()) continue;

        // Recover per-contribution alpha and incoming transmittance from the
        // recorded weights (w_i = alpha_i * T_i).
        alphas.assign(contribs.size(), 0.0);
        trans.assign(contribs.size(), 0.0);
        double t = 1.0;
        for (std::size_t i = 0; i < contribs.size(); ++i) {
          trans[i] = t;
          alphas[i] = contribs[i].weight / t;
          t *= (1.0 - alphas[i]);
        }

        for (std::size_t i = 0; i < contribs.size(); ++i) {
          const auto gi = contribs[i].gaussian_index;
          gc.row(gi) += contribs[i].weight * dLdC.transpose();
        }
        if (cfg.optimize_opacity) {
          Eigen::Vector3d suffix = Eigen::Vector3d::Zero();
          for (std::size_t i = contribs.size(); i-- > 0;) {
            const auto gi = contribs[i].gaussian_index;
            const Eigen::Vector3d ci = colors.row(gi).transpose();
            Eigen::Vector3d dC_dalpha = ci * trans[i];
            if (1.0 - alphas[i] > 1e-12) {
              dC_dalpha -= suffix / (1.0 - alphas[i]);
            }
            const double dalpha = dLdC.dot(dC_dalpha);
            // alpha = opacity * G(v), so dalpha/dopacity = alpha / opacity.
            go(gi, 0) += dalpha * (alphas[i] / opacities(gi, 0));
            suffix += ci * contribs[i].weight;
          }
        }
      }
    }
    loss *= inv_count;
    if (!std::isfinite(loss)) {
      throw DivergenceError("rgb stage diverged at iteration " + std::to_string(iter) +
                            " (non-finite loss)");
    }

    adam_step(colors, gc, mc, vc, iter + 1, cfg.lr);
    colors = colors.cwiseMax(0.0).cwiseMin(1.0);
    if (cfg.optimize_opacity) {
      adam_step(opacities, go, mo, vo, iter + 1, cfg.lr);
      opacities = opacities.cwiseMax(1e-3).cwiseMin(1.0);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      result.scene.gaussians[static_cast<std::size_t>(i)].color = colors.row(i).transpose();
      result.scene.gaussians[static_cast<std::size_t>(i)].opacity = opacities(i, 0);
    }
    result.curve.push_back(loss);
  }
  return result;
}

}  // namespace featsplat
