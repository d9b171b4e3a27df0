#include "featsplat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace featsplat {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd gaussian_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

Eigen::VectorXd unit_gaussian_direction(int n, std::mt19937_64& rng) {
  Eigen::VectorXd v = gaussian_vector(n, rng);
  const double norm = v.norm();
  if (norm < kNormFloor) return Eigen::VectorXd::Unit(n, 0);
  return v / norm;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

// Keep generated scene parameters exactly representable in f32 so that the
// GSPL round trip is the identity and file-based runs match in-memory runs.
double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Eigen::Vector3d hsv_to_rgb(double h_deg, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h_deg, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

Camera look_at_camera(const Eigen::Vector3d& pos, const Eigen::Vector3d& target,
                      double focal, int width, int height) {
  const Eigen::Vector3d world_up(0.0, 0.0, 1.0);
  const Eigen::Vector3d forward = (target - pos).normalized();
  Eigen::Vector3d right = forward.cross(world_up);
  if (right.norm() < 1e-9) right = Eigen::Vector3d(1.0, 0.0, 0.0);
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);

  Camera cam;
  cam.fx = focal;
  cam.fy = focal;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.width = width;
  cam.height = height;
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  cam.world_to_cam.setIdentity();
  cam.world_to_cam.topLeftCorner<3, 3>() = r;
  cam.world_to_cam.topRightCorner<3, 1>() = -r * pos;
  return cam;
}

nlohmann::json params_to_json(const WorldParams& p) {
  return {{"object_count", p.object_count},
          {"gaussians_per_object", p.gaussians_per_object},
          {"view_count", p.view_count},
          {"image_width", p.image_width},
          {"image_height", p.image_height},
          {"latent_dim", p.latent_dim},
          {"object_radius", p.object_radius},
          {"layout_radius", p.layout_radius},
          {"camera_distance", p.camera_distance},
          {"focal", p.focal},
          {"splat_scale_min", p.splat_scale_min},
          {"splat_scale_max", p.splat_scale_max},
          {"opacity_min", p.opacity_min},
          {"opacity_max", p.opacity_max},
          {"min_mask_pixels", p.min_mask_pixels},
          {"max_retries", p.max_retries}};
}

WorldParams params_from_json(const nlohmann::json& j) {
  WorldParams p;
  p.object_count = j.at("object_count").get<int>();
  p.gaussians_per_object = j.at("gaussians_per_object").get<int>();
  p.view_count = j.at("view_count").get<int>();
  p.image_width = j.at("image_width").get<int>();
  p.image_height = j.at("image_height").get<int>();
  p.latent_dim = j.at("latent_dim").get<int>();
  p.object_radius = j.at("object_radius").get<double>();
  p.layout_radius = j.at("layout_radius").get<double>();
  p.camera_distance = j.at("camera_distance").get<double>();
  p.focal = j.at("focal").get<double>();
  p.splat_scale_min = j.at("splat_scale_min").get<double>();
  p.splat_scale_max = j.at("splat_scale_max").get<double>();
  p.opacity_min = j.at("opacity_min").get<double>();
  p.opacity_max = j.at("opacity_max").get<double>();
  p.min_mask_pixels = j.at("min_mask_pixels").get<int>();
  p.max_retries = j.at("max_retries").get<int>();
  return p;
}

}  // namespace

ConceptDictionary gen_dictionary(int concept_count, int dim, int intrinsic_dim,
                                 double noise, std::uint64_t seed) {
  if (concept_count < 1) throw InvalidArgument("concept_count must be >= 1");
  if (intrinsic_dim < 1 || intrinsic_dim > dim) {
    throw InvalidArgument("intrinsic_dim must satisfy 1 <= r <= D");
  }
  if (noise < 0.0) throw InvalidArgument("noise must be >= 0");

  std::mt19937_64 rng(derive_seed(seed, 0xd1c7));

  // Orthonormal basis of the r-dimensional concept subspace.
  Eigen::MatrixXd raw(dim, intrinsic_dim);
  for (int c = 0; c < intrinsic_dim; ++c) raw.col(c) = gaussian_vector(dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  const Eigen::MatrixXd basis =
      qr.householderQ() * Eigen::MatrixXd::Identity(dim, intrinsic_dim);

  ConceptDictionary dict;
  dict.concepts.resize(concept_count, dim);
  dict.labels.reserve(static_cast<std::size_t>(concept_count));
  dict.intrinsic_dim = intrinsic_dim;
  dict.noise = noise;
  dict.seed = seed;
  for (int c = 0; c < concept_count; ++c) {
    const Eigen::VectorXd weights = gaussian_vector(intrinsic_dim, rng);
    Eigen::VectorXd v = basis * weights;
    const double n = v.norm();
    v = (n < kNormFloor) ? Eigen::VectorXd(basis.col(0)) : Eigen::VectorXd(v / n);
    if (noise > 0.0) {
      v += noise * unit_gaussian_direction(dim, rng);
      v.normalize();
    }
    dict.concepts.row(c) = v.transpose();
    dict.labels.push_back("concept_" + std::to_string(c));
  }
  return dict;
}

EmbeddingCorpus gen_corpus(const ConceptDictionary& dict, int samples_per_concept,
                           double jitter, std::uint64_t seed) {
  if (dict.count() < 1) throw InvalidArgument("dictionary is empty");
  if (samples_per_concept < 1) throw InvalidArgument("samples_per_concept must be >= 1");
  if (jitter < 0.0) throw InvalidArgument("jitter must be >= 0");

  std::mt19937_64 rng(derive_seed(seed, 0xc0a9));
  const std::size_t total =
      static_cast<std::size_t>(dict.count()) * samples_per_concept;

  EmbeddingCorpus corpus;
  corpus.rows.resize(static_cast<Eigen::Index>(total), dict.dim());
  corpus.labels.reserve(total);
  corpus.concept_names = dict.labels;
  char idbuf[32];
  std::snprintf(idbuf, sizeof idbuf, "corpus-%016llx",
                static_cast<unsigned long long>(seed));
  corpus.id = idbuf;

  std::size_t row = 0;
  for (int c = 0; c < dict.count(); ++c) {
    for (int s = 0; s < samples_per_concept; ++s, ++row) {
      if (jitter == 0.0) {
        corpus.rows.row(static_cast<Eigen::Index>(row)) = dict.concepts.row(c);
      } else {
        Eigen::VectorXd v = dict.concepts.row(c).transpose() +
                            jitter * unit_gaussian_direction(dict.dim(), rng);
        v.normalize();
        corpus.rows.row(static_cast<Eigen::Index>(row)) = v.transpose();
      }
      corpus.labels.push_back(c);
    }
  }

  // Deterministic 90/10 split.
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 split_rng(derive_seed(seed, 0x5917));
  std::shuffle(idx.begin(), idx.end(), split_rng);
  corpus.is_val.assign(total, 0);
  const std::size_t n_val = std::min(total - 1, total / 10);
  for (std::size_t i = 0; i < n_val; ++i) corpus.is_val[idx[i]] = 1;
  return corpus;
}

std::vector<Tensor> object_weight_maps(const Scene& scene,
                                       const std::vector<int>& object_of_gaussian,
                                       int object_count, const Camera& cam,
                                       const RenderOptions& opts) {
  const RenderOutput out = render(scene, cam, opts);
  std::vector<Tensor> maps(static_cast<std::size_t>(object_count));
  for (auto& m : maps) {
    m = Tensor({static_cast<std::size_t>(cam.height), static_cast<std::size_t>(cam.width)});
  }
  for (std::size_t y = 0; y < static_cast<std::size_t>(cam.height); ++y) {
    for (std::size_t x = 0; x < static_cast<std::size_t>(cam.width); ++x) {
      for (const Contribution& c : out.contributions_at(y, x)) {
        maps[static_cast<std::size_t>(object_of_gaussian[c.gaussian_index])](y, x) +=
            c.weight;
      }
    }
  }
  return maps;
}

SyntheticWorld gen_world(const WorldParams& params, const ConceptDictionary& dict,
                         std::uint64_t seed) {
  if (dict.count() < 1) throw InvalidArgument("dictionary is empty");
  if (params.object_count < 1) throw InvalidArgument("object_count must be >= 1");
  if (params.object_count > dict.count()) {
    throw InvalidArgument("not enough concepts for the requested object count");
  }
  if (params.view_count < 1) throw InvalidArgument("view_count must be >= 1");

  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, 0x301d + static_cast<std::uint64_t>(attempt)));

    SyntheticWorld world;
    world.seed = seed;
    world.params = params;
    world.concepts = dict.concepts;
    world.concept_labels = dict.labels;

    // Distinct concepts per object, order seeded.
    std::vector<int> concept_ids(static_cast<std::size_t>(dict.count()));
    std::iota(concept_ids.begin(), concept_ids.end(), 0);
    std::shuffle(concept_ids.begin(), concept_ids.end(), rng);
    world.concept_of_object.assign(
        concept_ids.begin(), concept_ids.begin() + params.object_count);

    // Object centers on a jittered ring in the z=0 plane.
    std::vector<Eigen::Vector3d> centers;
    for (int o = 0; o < params.object_count; ++o) {
      const double angle = 2.0 * kPi * o / params.object_count + uniform(rng, -0.15, 0.15);
      const double radius =
          params.object_count == 1 ? 0.0 : params.layout_radius * uniform(rng, 0.95, 1.05);
      centers.emplace_back(radius * std::cos(angle), radius * std::sin(angle),
                           uniform(rng, -0.15, 0.15));
    }
    bool separated = true;
    for (std::size_t a = 0; a < centers.size() && separated; ++a) {
      for (std::size_t b = a + 1; b < centers.size(); ++b) {
        if ((centers[a] - centers[b]).norm() < 2.4 * params.object_radius) {
          separated = false;
          break;
        }
      }
    }
    if (!separated) continue;

    world.scene.latent_dim = params.latent_dim;
    for (int o = 0; o < params.object_count; ++o) {
      const Eigen::Vector3d base_color =
          hsv_to_rgb(360.0 * o / params.object_count + 15.0, 0.65, 0.92);
      for (int g = 0; g < params.gaussians_per_object; ++g) {
        Gaussian splat;
        // Uniform in a ball around the center.
        const Eigen::Vector3d dir = unit_gaussian_direction(3, rng);
        const double rad = params.object_radius * std::cbrt(uniform(rng, 0.0, 1.0));
        const Eigen::Vector3d mu = centers[static_cast<std::size_t>(o)] + rad * dir;
        for (int i = 0; i < 3; ++i) splat.mu[i] = f32(mu[i]);
        for (int i = 0; i < 3; ++i) {
          splat.scale[i] = f32(uniform(rng, params.splat_scale_min, params.splat_scale_max));
        }
        Eigen::Vector4d q;
        for (int i = 0; i < 4; ++i) q[i] = gaussian_vector(1, rng)[0];
        q.normalize();
        splat.rotation = Eigen::Quaterniond(f32(q[0]), f32(q[1]), f32(q[2]), f32(q[3]));
        for (int i = 0; i < 3; ++i) {
          splat.color[i] = f32(std::clamp(base_color[i] + uniform(rng, -0.05, 0.05), 0.0, 1.0));
        }
        splat.opacity = f32(uniform(rng, params.opacity_min, params.opacity_max));
        splat.latent = Eigen::VectorXd::Zero(params.latent_dim);
        world.scene.gaussians.push_back(std::move(splat));
        world.object_of_gaussian.push_back(o);
      }
    }

    // Cameras on a ring, looking at the origin from varied azimuth/elevation.
    for (int v = 0; v < params.view_count; ++v) {
      const double azimuth = 2.0 * kPi * v / params.view_count + uniform(rng, -0.1, 0.1);
      const double elevation = (0.35 + 0.1 * (v % 3)) + uniform(rng, -0.05, 0.05);
      const double d = params.camera_distance * uniform(rng, 0.97, 1.03);
      const Eigen::Vector3d pos(d * std::cos(elevation) * std::cos(azimuth),
                                d * std::cos(elevation) * std::sin(azimuth),
                                d * std::sin(elevation));
      world.cameras.push_back(look_at_camera(pos, Eigen::Vector3d::Zero(), params.focal,
                                             params.image_width, params.image_height));
    }

    // Ground-truth masks and boxes from the renders.
    bool feasible = true;
    for (const Camera& cam : world.cameras) {
      const std::vector<Tensor> weights = object_weight_maps(
          world.scene, world.object_of_gaussian, params.object_count, cam, params.render);
      std::vector<Mask> masks;
      std::vector<GtBox> boxes;
      for (int o = 0; o < params.object_count && feasible; ++o) {
        Mask m(static_cast<std::size_t>(cam.height), static_cast<std::size_t>(cam.width));
        GtBox box{cam.width, cam.height, -1, -1};
        for (int y = 0; y < cam.height; ++y) {
          for (int x = 0; x < cam.width; ++x) {
            if (weights[static_cast<std::size_t>(o)](static_cast<std::size_t>(y),
                                                     static_cast<std::size_t>(x)) > 0.5) {
              m.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1;
              box.x0 = std::min(box.x0, x);
              box.y0 = std::min(box.y0, y);
              box.x1 = std::max(box.x1, x);
              box.y1 = std::max(box.y1, y);
            }
          }
        }
        if (m.count() < static_cast<std::size_t>(params.min_mask_pixels)) {
          feasible = false;
          break;
        }
        masks.push_back(std::move(m));
        boxes.push_back(box);
      }
      if (!feasible) break;
      world.gt_masks.push_back(std::move(masks));
      world.gt_boxes.push_back(std::move(boxes));
    }
    if (!feasible) continue;

    world.scene.metadata = {{"name", "synthetic-world"},
                            {"seed", seed},
                            {"params", params_to_json(params)}};
    return world;
  }
  throw InvalidArgument("could not generate a feasible world layout after " +
                        std::to_string(params.max_retries) + " retries");
}

void save_world(const SyntheticWorld& world, const std::filesystem::path& dir,
                const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  save_scene(world.scene, dir / "scene.gspl");

  Tensor concepts({static_cast<std::size_t>(world.concepts.rows()),
                   static_cast<std::size_t>(world.concepts.cols())});
  for (Eigen::Index i = 0; i < world.concepts.rows(); ++i)
    for (Eigen::Index j = 0; j < world.concepts.cols(); ++j)
      concepts(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          world.concepts(i, j);
  write_gten(dir / "concepts.gten", concepts);

  nlohmann::json manifest;
  manifest["seed"] = world.seed;
  manifest["params"] = params_to_json(world.params);
  manifest["object_of_gaussian"] = world.object_of_gaussian;
  manifest["concept_of_object"] = world.concept_of_object;
  manifest["concept_labels"] = world.concept_labels;
  if (!config_hash.empty()) manifest["config_hash"] = config_hash;
  manifest["cameras"] = nlohmann::json::array();
  for (const Camera& cam : world.cameras) manifest["cameras"].push_back(cam.to_json());
  manifest["gt_boxes"] = nlohmann::json::array();
  for (const auto& per_view : world.gt_boxes) {
    nlohmann::json row = nlohmann::json::array();
    for (const GtBox& b : per_view) row.push_back({b.x0, b.y0, b.x1, b.y1});
    manifest["gt_boxes"].push_back(row);
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) {
    throw IoError(IoError::Kind::OpenFailed,
                  "cannot open for write: " + (dir / "manifest.json").string());
  }
  out << manifest.dump(2) << "\n";

  for (std::size_t v = 0; v < world.gt_masks.size(); ++v) {
    const auto& masks = world.gt_masks[v];
    Tensor t({masks.size(), masks[0].height, masks[0].width});
    for (std::size_t o = 0; o < masks.size(); ++o)
      for (std::size_t y = 0; y < masks[o].height; ++y)
        for (std::size_t x = 0; x < masks[o].width; ++x)
          t(o, y, x) = masks[o].at(y, x) ? 1.0 : 0.0;
    write_gten(dir / ("masks_view" + std::to_string(v) + ".gten"), t);
  }
}

SyntheticWorld load_world(const std::filesystem::path& dir) {
  SyntheticWorld world;
  world.scene = load_scene(dir / "scene.gspl");

  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw IoError(IoError::Kind::OpenFailed,
                  "cannot open: " + (dir / "manifest.json").string());
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::parse_error&) {
    throw IoError(IoError::Kind::BadValue, "world manifest is not valid JSON");
  }
  world.seed = manifest.at("seed").get<std::uint64_t>();
  world.params = params_from_json(manifest.at("params"));
  world.object_of_gaussian = manifest.at("object_of_gaussian").get<std::vector<int>>();
  world.concept_of_object = manifest.at("concept_of_object").get<std::vector<int>>();
  world.concept_labels = manifest.at("concept_labels").get<std::vector<std::string>>();
  for (const auto& jcam : manifest.at("cameras")) {
    world.cameras.push_back(Camera::from_json(jcam));
  }
  for (const auto& row : manifest.at("gt_boxes")) {
    std::vector<GtBox> boxes;
    for (const auto& jb : row) {
      boxes.push_back({jb.at(0).get<int>(), jb.at(1).get<int>(), jb.at(2).get<int>(),
                       jb.at(3).get<int>()});
    }
    world.gt_boxes.push_back(std::move(boxes));
  }

  const Tensor concepts = read_gten(dir / "concepts.gten");
  if (concepts.rank() != 2) {
    throw IoError(IoError::Kind::DimensionMismatch, "concepts tensor must be rank 2");
  }
  world.concepts.resize(static_cast<Eigen::Index>(concepts.dim(0)),
                        static_cast<Eigen::Index>(concepts.dim(1)));
  for (std::size_t i = 0; i < concepts.dim(0); ++i)
    for (std::size_t j = 0; j < concepts.dim(1); ++j)
      world.concepts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          concepts(i, j);

  for (std::size_t v = 0; v < world.cameras.size(); ++v) {
    const Tensor t = read_gten(dir / ("masks_view" + std::to_string(v) + ".gten"));
    if (t.rank() != 3) {
      throw IoError(IoError::Kind::DimensionMismatch, "mask tensor must be rank 3");
    }
    std::vector<Mask> masks;
    for (std::size_t o = 0; o < t.dim(0); ++o) {
      Mask m(t.dim(1), t.dim(2));
      for (std::size_t y = 0; y < t.dim(1); ++y)
        for (std::size_t x = 0; x < t.dim(2); ++x)
          m.at(y, x) = t(o, y, x) > 0.5 ? 1 : 0;
      masks.push_back(std::move(m));
    }
    world.gt_masks.push_back(std::move(masks));
  }
  return world;
}

}  // namespace featsplat
