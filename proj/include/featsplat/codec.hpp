#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "featsplat/common.hpp"

namespace featsplat {

enum class Activation : std::uint32_t { Linear = 0, Relu = 1 };

struct Dense {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::Linear;
};

enum class LossMode { L1Cos, MseCos };

struct TrainConfig {
  LossMode loss_mode = LossMode::L1Cos;
  double lambda = 0.5;  // cosine-term weight
  double lr = 1e-3;
  int batch_size = 256;
  int epochs = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (lr <= 0.0) throw ConfigError("lr must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
  }
};

// MLP encoder/decoder pair. Once frozen the parameters are immutable: every
// mutable accessor throws and training a frozen instance is rejected.
class Autoencoder {
 public:
  Autoencoder(std::vector<Dense> encoder, std::vector<Dense> decoder);

  // Default architecture: input -> 256 -> 128 -> k and mirrored decoder,
  // ReLU hidden activations, linear output layers, Glorot-uniform init.
  static Autoencoder mlp(int input_dim, int latent_dim, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int latent_dim() const { return latent_dim_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  Eigen::VectorXd encode(const Eigen::Ref<const Eigen::VectorXd>& f) const;
  Eigen::VectorXd decode(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  // Columns are samples.
  Eigen::MatrixXd encode_batch(const Eigen::Ref<const Eigen::MatrixXd>& f) const;
  Eigen::MatrixXd decode_batch(const Eigen::Ref<const Eigen::MatrixXd>& z) const;

  const std::vector<Dense>& encoder_layers() const { return encoder_; }
  const std::vector<Dense>& decoder_layers() const { return decoder_; }
  // Throw InvalidArgument when frozen.
  std::vector<Dense>& mutable_encoder_layers();
  std::vector<Dense>& mutable_decoder_layers();

 private:
  std::vector<Dense> encoder_;
  std::vector<Dense> decoder_;
  int input_dim_ = 0;
  int latent_dim_ = 0;
  bool frozen_ = false;
};

struct EmbeddingCorpus {
  Eigen::MatrixXd rows;             // M x D, unit-norm rows
  std::vector<int> labels;          // concept id per row
  std::vector<std::uint8_t> is_val; // split tag per row
  std::vector<std::string> concept_names;
  std::string id;

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> val_indices() const;
  void validate() const;
};

struct LossGrad {
  double value = 0.0;
  Eigen::VectorXd grad_f_hat;
};

// Reconstruction + cosine loss for one sample, with the exact gradient wrt
// f_hat. MSE mode uses the raw sum of squares; the per-dimension convention
// applies to fidelity reports only.
LossGrad ae_loss(const Eigen::Ref<const Eigen::VectorXd>& f,
                 const Eigen::Ref<const Eigen::VectorXd>& f_hat,
                 const TrainConfig& cfg);

// Mean batch loss plus gradients for every trainable parameter; the training
// loop applies exactly these through Adam.
struct ParamGrads {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> enc_w, dec_w;
  std::vector<Eigen::VectorXd> enc_b, dec_b;
};

// Columns of x are samples reconstructed against themselves.
ParamGrads parameter_gradients(const Autoencoder& ae,
                               const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const TrainConfig& cfg);

struct TrainCurvePoint {
  int epoch;
  double train_loss;
  double val_mse;
  double val_cosine;
};

struct TrainResult {
  Autoencoder ae;
  std::vector<TrainCurvePoint> curve;
  double val_mse = 0.0;
  double val_cosine = 0.0;
  long gradient_steps = 0;
  double train_seconds = 0.0;
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over shuffled mini-batches; the
// returned autoencoder is frozen. Non-finite loss aborts with a diagnostic.
TrainResult train(Autoencoder ae, const EmbeddingCorpus& corpus, const TrainConfig& cfg);

// Default-architecture convenience: build, train, freeze.
TrainResult train_autoencoder(const EmbeddingCorpus& corpus, int latent_dim,
                              const TrainConfig& cfg);

struct FidelityReport {
  std::vector<double> row_mse;     // ||f - f_hat||^2 / D
  std::vector<double> row_cosine;
  double mean_mse = 0.0;
  double mean_cosine = 0.0;
  // Stated in every emitted report so the scale is unambiguous.
  static constexpr const char* kMseConvention = "sum of squares / D (per-dimension mean)";
};

FidelityReport fidelity_report(const Autoencoder& ae, const EmbeddingCorpus& corpus);

// "GAEW" weight file: magic, u32 version=1, u32 D, u32 k, u32 encoder layer
// count, u32 decoder layer count, then per layer (u32 in, u32 out, u32
// activation tag, f32 weights row-major, f32 bias). Loaded instances are
// frozen.
void save_autoencoder(const Autoencoder& ae, const std::filesystem::path& path);
Autoencoder load_autoencoder(const std::filesystem::path& path);

void save_corpus(const EmbeddingCorpus& corpus, const std::filesystem::path& tensor_path,
                 const std::filesystem::path& labels_path);
EmbeddingCorpus load_corpus(const std::filesystem::path& tensor_path,
                            const std::filesystem::path& labels_path);

}  // namespace featsplat
