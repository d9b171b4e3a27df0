#include "featsplat/scene.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace featsplat;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("featsplat_scene_" + name);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Gaussian basic_gaussian(int d = 4) {
  Gaussian g;
  g.mu = {0.5, -0.25, 3.0};
  g.scale = {1.0, 1.0, 1.0};
  g.rotation = Eigen::Quaterniond::Identity();
  g.color = {0.2, 0.4, 0.6};
  g.opacity = 0.75;
  g.latent = Eigen::VectorXd::LinSpaced(d, -1.0, 1.0);
  return g;
}

}  // namespace

TEST(Covariance, IdentityQuaternionUnitScale) {
  Gaussian g = basic_gaussian();
  const Eigen::Matrix3d cov = covariance_of(g);
  EXPECT_LT((cov - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Covariance, AxisAlignedScaling) {
  Gaussian g = basic_gaussian();
  g.scale = {2.0, 1.0, 1.0};
  const Eigen::Matrix3d cov = covariance_of(g);
  Eigen::Matrix3d expected = Eigen::Vector3d(4.0, 1.0, 1.0).asDiagonal();
  EXPECT_LT((cov - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Covariance, NinetyDegreeZRotation) {
  Gaussian g = basic_gaussian();
  g.scale = {2.0, 1.0, 1.0};
  const double s = std::sqrt(0.5);
  g.rotation = Eigen::Quaterniond(s, 0.0, 0.0, s);  // 90 degrees about z

  // Oracle: explicit R * S * S^T * R^T with the rotation matrix built by hand.
  Eigen::Matrix3d r;
  r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d ss = Eigen::Vector3d(4.0, 1.0, 1.0).asDiagonal();
  const Eigen::Matrix3d expected = r * ss * r.transpose();

  const Eigen::Matrix3d cov = covariance_of(g);
  EXPECT_LT((cov - expected).cwiseAbs().maxCoeff(), 1e-9);
  // Rotating the x scale onto y: diag becomes (1, 4, 1).
  EXPECT_NEAR(cov(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(cov(1, 1), 4.0, 1e-9);
  EXPECT_NEAR(cov(2, 2), 1.0, 1e-9);
}

TEST(Covariance, SymmetricAndPositiveDefinite) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    Gaussian g = basic_gaussian();
    Eigen::Vector4d q;
    for (int i = 0; i < 4; ++i) q[i] = gauss(rng);
    q.normalize();
    g.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    g.scale = {u(rng), u(rng), u(rng)};

    const Eigen::Matrix3d cov = covariance_of(g);
    EXPECT_LT((cov - cov.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    Eigen::LLT<Eigen::Matrix3d> llt(cov);
    EXPECT_EQ(llt.info(), Eigen::Success);
  }
}

// Eigenvalues of the covariance must be the squared scales, any rotation.
TEST(Covariance, EigenvaluesAreSquaredScales) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 2.5);
  for (int trial = 0; trial < 50; ++trial) {
    Gaussian g = basic_gaussian();
    Eigen::Vector4d q;
    for (int i = 0; i < 4; ++i) q[i] = gauss(rng);
    q.normalize();
    g.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    g.scale = {u(rng), u(rng), u(rng)};

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance_of(g));
    Eigen::Vector3d eig = solver.eigenvalues();
    Eigen::Vector3d expected = g.scale.array().square();
    std::sort(eig.data(), eig.data() + 3);
    std::sort(expected.data(), expected.data() + 3);
    EXPECT_LT((eig - expected).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SceneIo, SingleGaussianRoundTripIsByteIdentical) {
  Scene s;
  s.latent_dim = 4;
  s.gaussians.push_back(basic_gaussian());
  s.metadata = {{"name", "single"}, {"seed", 1}};

  const fs::path p1 = temp_file("roundtrip1.gspl");
  const fs::path p2 = temp_file("roundtrip2.gspl");
  save_scene(s, p1);
  const Scene loaded = load_scene(p1);
  save_scene(loaded, p2);
  EXPECT_EQ(read_bytes(p1), read_bytes(p2));
  EXPECT_EQ(loaded.latent_dim, 4);
  EXPECT_EQ(loaded.gaussians.size(), 1u);
}

TEST(SceneIo, RoundTripIsIdentityOnRandomScenes) {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    const Scene s = testutil::make_random_scene(50, 8, seed);
    const fs::path p = temp_file("random.gspl");
    save_scene(s, p);
    const Scene loaded = load_scene(p);

    ASSERT_EQ(loaded.gaussians.size(), s.gaussians.size());
    ASSERT_EQ(loaded.latent_dim, s.latent_dim);
    for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
      const Gaussian& a = s.gaussians[i];
      const Gaussian& b = loaded.gaussians[i];
      EXPECT_EQ(a.mu, b.mu);
      EXPECT_EQ(a.scale, b.scale);
      EXPECT_EQ(a.color, b.color);
      EXPECT_EQ(a.opacity, b.opacity);
      EXPECT_EQ(a.rotation.coeffs(), b.rotation.coeffs());
      EXPECT_EQ(a.latent, b.latent);
    }
    EXPECT_EQ(loaded.metadata, s.metadata);
  }
}

TEST(SceneIo, FileSizeMatchesFormat) {
  const int n = 1000, d = 16;
  const Scene s = testutil::make_random_scene(n, d, 99);
  const fs::path p = temp_file("size.gspl");
  save_scene(s, p);

  const std::size_t metadata_len = s.metadata.dump().size();
  const std::size_t expected = 16                        // magic + version + N + d
                               + n * (10 + 3 + 1 + d) * 4  // per-gaussian f32 block
                               + 4 + metadata_len;         // length-prefixed JSON
  EXPECT_EQ(fs::file_size(p), expected);
}

TEST(SceneIo, WrongMagicIsRejected) {
  const fs::path p = temp_file("magic.bin");
  std::ofstream out(p, std::ios::binary);
  out << "NOPE";
  out.write("\0\0\0\0\0\0\0\0\0\0\0\0", 12);
  out.close();
  try {
    load_scene(p);
    FAIL() << "expected MagicMismatch";
  } catch (const IoError& e) {
    EXPECT_EQ(e.kind(), IoError::Kind::MagicMismatch);
  }
}

TEST(SceneIo, TruncatedFileIsRejected) {
  Scene s;
  s.latent_dim = 4;
  s.gaussians.push_back(basic_gaussian());
  const fs::path p = temp_file("trunc.gspl");
  save_scene(s, p);

  const std::string bytes = read_bytes(p);
  const fs::path p2 = temp_file("trunc_cut.gspl");
  std::ofstream out(p2, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  out.close();
  try {
    load_scene(p2);
    FAIL() << "expected TruncatedFile";
  } catch (const IoError& e) {
    EXPECT_EQ(e.kind(), IoError::Kind::TruncatedFile);
  }
}

TEST(SceneIo, AbsurdLatentDimensionIsRejected) {
  const fs::path p = temp_file("dim.gspl");
  std::ofstream out(p, std::ios::binary);
  out << "GSPL";
  const std::uint32_t version = 1, n = 1, d = 200000;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.close();
  try {
    load_scene(p);
    FAIL() << "expected DimensionMismatch";
  } catch (const IoError& e) {
    EXPECT_EQ(e.kind(), IoError::Kind::DimensionMismatch);
  }
}

TEST(SceneIo, SlightlyDriftedQuaternionIsRenormalized) {
  Scene s;
  s.latent_dim = 1;
  Gaussian g = basic_gaussian(1);
  g.rotation = Eigen::Quaterniond(1.0004, 0.0, 0.0, 0.0);  // within 1e-3
  s.gaussians.push_back(g);
  const fs::path p = temp_file("quat_drift.gspl");
  save_scene(s, p);
  const Scene loaded = load_scene(p);
  EXPECT_NEAR(loaded.gaussians[0].rotation.norm(), 1.0, 1e-9);
}

TEST(SceneIo, CorruptQuaternionIsRejected) {
  Scene s;
  s.latent_dim = 1;
  Gaussian g = basic_gaussian(1);
  g.rotation = Eigen::Quaterniond(1.02, 0.0, 0.0, 0.0);  // beyond 1e-3
  s.gaussians.push_back(g);
  const fs::path p = temp_file("quat_bad.gspl");
  save_scene(s, p);
  try {
    load_scene(p);
    FAIL() << "expected BadValue";
  } catch (const IoError& e) {
    EXPECT_EQ(e.kind(), IoError::Kind::BadValue);
  }
}

TEST(SceneValidate, RejectsInvalidFields) {
  Gaussian g = basic_gaussian();
  g.scale = {0.0, 1.0, 1.0};
  EXPECT_THROW(g.validate(4), InvalidArgument);
  g = basic_gaussian();
  g.opacity = 1.5;
  EXPECT_THROW(g.validate(4), InvalidArgument);
  g = basic_gaussian();
  g.rotation = Eigen::Quaterniond(2.0, 0.0, 0.0, 0.0);
  EXPECT_THROW(g.validate(4), InvalidArgument);
  g = basic_gaussian();
  EXPECT_THROW(g.validate(5), InvalidArgument);
  EXPECT_NO_THROW(basic_gaussian().validate(4));
}

TEST(CameraValidate, RejectsBadIntrinsicsAndRotation) {
  Camera cam = testutil::make_camera();
  EXPECT_NO_THROW(cam.validate());
  cam.fx = -1.0;
  EXPECT_THROW(cam.validate(), InvalidArgument);
  cam = testutil::make_camera();
  cam.world_to_cam(0, 0) = 2.0;
  EXPECT_THROW(cam.validate(), InvalidArgument);
}
