#include "featsplat/codec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "featsplat/tensor.hpp"

namespace featsplat {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

Eigen::MatrixXd apply_activation(Activation act, Eigen::MatrixXd z) {
  if (act == Activation::Relu) z = z.cwiseMax(0.0);
  return z;
}

void check_chain(const std::vector<Dense>& layers, const char* what) {
  if (layers.empty()) throw InvalidArgument(std::string(what) + " has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Dense& l = layers[i];
    if (l.bias.size() != l.weight.rows()) {
      throw InvalidArgument(std::string(what) + " bias/weight row mismatch");
    }
    if (i > 0 && layers[i - 1].weight.rows() != l.weight.cols()) {
      throw InvalidArgument(std::string(what) + " layer shapes do not chain");
    }
  }
}

Dense glorot_dense(int in, int out, Activation act, std::mt19937_64& rng) {
  const double lim = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-lim, lim);
  Dense d;
  d.weight.resize(out, in);
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) d.weight(r, c) = dist(rng);
  d.bias = Eigen::VectorXd::Zero(out);
  d.activation = act;
  return d;
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // activations[0] = input
  std::vector<Eigen::MatrixXd> pre;          // pre-activation per layer
};

Eigen::MatrixXd forward_layers(const std::vector<Dense>& layers,
                               const Eigen::Ref<const Eigen::MatrixXd>& x,
                               ForwardCache* cache) {
  Eigen::MatrixXd a = x;
  if (cache) cache->activations.push_back(a);
  for (const Dense& l : layers) {
    Eigen::MatrixXd z = (l.weight * a).colwise() + l.bias;
    if (cache) cache->pre.push_back(z);
    a = apply_activation(l.activation, std::move(z));
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long t = 0;

  explicit AdamState(const std::vector<Dense>& layers) {
    for (const Dense& l : layers) {
      m_w.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      v_w.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      m_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
      v_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
  }
};

template <class Mat>
void adam_update(Mat& param, const Mat& grad, Mat& m, Mat& v, long t, double lr) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
  v = (kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  param.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
}

// Gradients of one dense stack given dL/d(output); returns dL/d(input).
struct LayerGrads {
  std::vector<Eigen::MatrixXd> d_w;
  std::vector<Eigen::VectorXd> d_b;
};

Eigen::MatrixXd backward_layers(const std::vector<Dense>& layers,
                                const ForwardCache& cache,
                                Eigen::MatrixXd d_out, LayerGrads& grads) {
  grads.d_w.resize(layers.size());
  grads.d_b.resize(layers.size());
  for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
    const Dense& l = layers[static_cast<std::size_t>(i)];
    Eigen::MatrixXd dz = std::move(d_out);
    if (l.activation == Activation::Relu) {
      dz = (cache.pre[static_cast<std::size_t>(i)].array() > 0.0)
               .select(dz, Eigen::MatrixXd::Zero(dz.rows(), dz.cols()));
    }
    grads.d_w[static_cast<std::size_t>(i)] =
        dz * cache.activations[static_cast<std::size_t>(i)].transpose();
    grads.d_b[static_cast<std::size_t>(i)] = dz.rowwise().sum();
    d_out = l.weight.transpose() * dz;
  }
  return d_out;
}

double batch_gradients(const std::vector<Dense>& enc, const std::vector<Dense>& dec,
                       const Eigen::Ref<const Eigen::MatrixXd>& x,
                       const TrainConfig& cfg, LayerGrads& enc_grads,
                       LayerGrads& dec_grads) {
  ForwardCache enc_cache, dec_cache;
  const Eigen::MatrixXd z = forward_layers(enc, x, &enc_cache);
  const Eigen::MatrixXd rec = forward_layers(dec, z, &dec_cache);

  double loss = 0.0;
  Eigen::MatrixXd d_rec(rec.rows(), rec.cols());
  for (Eigen::Index c = 0; c < rec.cols(); ++c) {
    const LossGrad lg = ae_loss(x.col(c), rec.col(c), cfg);
    loss += lg.value;
    d_rec.col(c) = lg.grad_f_hat;
  }
  const double inv_b = 1.0 / static_cast<double>(x.cols());
  loss *= inv_b;
  d_rec *= inv_b;

  const Eigen::MatrixXd d_z = backward_layers(dec, dec_cache, std::move(d_rec), dec_grads);
  backward_layers(enc, enc_cache, d_z, enc_grads);
  return loss;
}

}  // namespace

ParamGrads parameter_gradients(const Autoencoder& ae,
                               const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const TrainConfig& cfg) {
  if (x.rows() != ae.input_dim()) {
    throw InvalidArgument("parameter_gradients: dimension mismatch");
  }
  LayerGrads enc_grads, dec_grads;
  ParamGrads out;
  out.loss = batch_gradients(ae.encoder_layers(), ae.decoder_layers(), x, cfg,
                             enc_grads, dec_grads);
  out.enc_w = std::move(enc_grads.d_w);
  out.enc_b = std::move(enc_grads.d_b);
  out.dec_w = std::move(dec_grads.d_w);
  out.dec_b = std::move(dec_grads.d_b);
  return out;
}

Autoencoder::Autoencoder(std::vector<Dense> encoder, std::vector<Dense> decoder)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
  check_chain(encoder_, "encoder");
  check_chain(decoder_, "decoder");
  input_dim_ = static_cast<int>(encoder_.front().weight.cols());
  latent_dim_ = static_cast<int>(encoder_.back().weight.rows());
  if (decoder_.front().weight.cols() != latent_dim_) {
    throw InvalidArgument("decoder input does not match latent dimension");
  }
  if (decoder_.back().weight.rows() != input_dim_) {
    throw InvalidArgument("decoder output does not match input dimension");
  }
}

Autoencoder Autoencoder::mlp(int input_dim, int latent_dim, std::uint64_t seed) {
  if (input_dim < 1 || latent_dim < 1) {
    throw InvalidArgument("autoencoder dimensions must be positive");
  }
  std::mt19937_64 rng(derive_seed(seed, 0xae0));
  std::vector<Dense> enc;
  enc.push_back(glorot_dense(input_dim, 256, Activation::Relu, rng));
  enc.push_back(glorot_dense(256, 128, Activation::Relu, rng));
  enc.push_back(glorot_dense(128, latent_dim, Activation::Linear, rng));
  std::vector<Dense> dec;
  dec.push_back(glorot_dense(latent_dim, 128, Activation::Relu, rng));
  dec.push_back(glorot_dense(128, 256, Activation::Relu, rng));
  dec.push_back(glorot_dense(256, input_dim, Activation::Linear, rng));
  return Autoencoder(std::move(enc), std::move(dec));
}

Eigen::VectorXd Autoencoder::encode(const Eigen::Ref<const Eigen::VectorXd>& f) const {
  if (f.size() != input_dim_) throw InvalidArgument("encode: dimension mismatch");
  return forward_layers(encoder_, f, nullptr);
}

Eigen::VectorXd Autoencoder::decode(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != latent_dim_) throw InvalidArgument("decode: dimension mismatch");
  return forward_layers(decoder_, z, nullptr);
}

Eigen::MatrixXd Autoencoder::encode_batch(const Eigen::Ref<const Eigen::MatrixXd>& f) const {
  if (f.rows() != input_dim_) throw InvalidArgument("encode_batch: dimension mismatch");
  return forward_layers(encoder_, f, nullptr);
}

Eigen::MatrixXd Autoencoder::decode_batch(const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  if (z.rows() != latent_dim_) throw InvalidArgument("decode_batch: dimension mismatch");
  return forward_layers(decoder_, z, nullptr);
}

std::vector<Dense>& Autoencoder::mutable_encoder_layers() {
  if (frozen_) throw InvalidArgument("autoencoder is frozen");
  return encoder_;
}

std::vector<Dense>& Autoencoder::mutable_decoder_layers() {
  if (frozen_) throw InvalidArgument("autoencoder is frozen");
  return decoder_;
}

std::vector<std::size_t> EmbeddingCorpus::train_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < size(); ++i) {
    if (i >= is_val.size() || !is_val[i]) idx.push_back(i);
  }
  return idx;
}

std::vector<std::size_t> EmbeddingCorpus::val_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < size() && i < is_val.size(); ++i) {
    if (is_val[i]) idx.push_back(i);
  }
  return idx;
}

void EmbeddingCorpus::validate() const {
  if (rows.rows() < 1) throw InvalidArgument("corpus must have at least one row");
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (std::abs(rows.row(i).norm() - 1.0) > 1e-5) {
      throw InvalidArgument("corpus row " + std::to_string(i) + " is not unit norm");
    }
  }
}

LossGrad ae_loss(const Eigen::Ref<const Eigen::VectorXd>& f,
                 const Eigen::Ref<const Eigen::VectorXd>& f_hat,
                 const TrainConfig& cfg) {
  if (f.size() != f_hat.size()) throw InvalidArgument("ae_loss: dimension mismatch");
  LossGrad out;
  Eigen::VectorXd diff = f_hat - f;
  if (cfg.loss_mode == LossMode::MseCos) {
    out.value = diff.squaredNorm();
    out.grad_f_hat = 2.0 * diff;
  } else {
    out.value = diff.lpNorm<1>();
    out.grad_f_hat = diff.array().sign().matrix();
  }
  const double nf = f.norm();
  const double nh = f_hat.norm();
  if (nf < kNormFloor || nh < kNormFloor) {
    // Degenerate branch: cosine defined 0, no gradient.
    out.value += cfg.lambda;
    return out;
  }
  const double cosv = f.dot(f_hat) / (nf * nh);
  out.value += cfg.lambda * (1.0 - cosv);
  out.grad_f_hat -= cfg.lambda * (f / (nf * nh) - (cosv / (nh * nh)) * f_hat);
  return out;
}

TrainResult train(Autoencoder ae, const EmbeddingCorpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (ae.frozen()) throw InvalidArgument("cannot train a frozen autoencoder");
  if (corpus.dim() != ae.input_dim()) {
    throw InvalidArgument("corpus dimension does not match autoencoder input");
  }
  const std::vector<std::size_t> train_idx = corpus.train_indices();
  if (train_idx.empty()) throw InvalidArgument("corpus has no train split");
  std::vector<std::size_t> val_idx = corpus.val_indices();
  if (val_idx.empty()) val_idx = train_idx;

  const int input_dim = ae.input_dim();
  std::mt19937_64 rng(derive_seed(cfg.seed, 0xae1));

  Eigen::MatrixXd val_x(input_dim, static_cast<Eigen::Index>(val_idx.size()));
  for (std::size_t i = 0; i < val_idx.size(); ++i) {
    val_x.col(static_cast<Eigen::Index>(i)) =
        corpus.rows.row(static_cast<Eigen::Index>(val_idx[i])).transpose();
  }

  auto validate_now = [&](const Autoencoder& model) {
    const Eigen::MatrixXd rec = model.decode_batch(model.encode_batch(val_x));
    double mse = 0.0, cosine = 0.0;
    for (Eigen::Index c = 0; c < val_x.cols(); ++c) {
      mse += (rec.col(c) - val_x.col(c)).squaredNorm() / input_dim;
      cosine += safe_cosine(val_x.col(c), rec.col(c));
    }
    const double n = static_cast<double>(val_x.cols());
    return std::pair<double, double>(mse / n, cosine / n);
  };

  TrainResult result{std::move(ae), {}, 0.0, 0.0, 0, 0.0};
  std::vector<Dense>& enc = result.ae.mutable_encoder_layers();
  std::vector<Dense>& dec = result.ae.mutable_decoder_layers();
  AdamState enc_state(enc), dec_state(dec);
  std::vector<std::size_t> order = train_idx;

  const auto t_begin = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz =
          std::min<std::size_t>(cfg.batch_size, order.size() - start);
      Eigen::MatrixXd x(input_dim, static_cast<Eigen::Index>(bsz));
      for (std::size_t i = 0; i < bsz; ++i) {
        x.col(static_cast<Eigen::Index>(i)) =
            corpus.rows.row(static_cast<Eigen::Index>(order[start + i])).transpose();
      }

      LayerGrads enc_grads, dec_grads;
      const double batch_loss = batch_gradients(enc, dec, x, cfg, enc_grads, dec_grads);
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("autoencoder training diverged at epoch " +
                              std::to_string(epoch) + ", step " +
                              std::to_string(result.gradient_steps) +
                              " (non-finite loss)");
      }

      ++enc_state.t;
      ++dec_state.t;
      for (std::size_t l = 0; l < enc.size(); ++l) {
        adam_update(enc[l].weight, enc_grads.d_w[l], enc_state.m_w[l],
                    enc_state.v_w[l], enc_state.t, cfg.lr);
        adam_update(enc[l].bias, enc_grads.d_b[l], enc_state.m_b[l],
                    enc_state.v_b[l], enc_state.t, cfg.lr);
      }
      for (std::size_t l = 0; l < dec.size(); ++l) {
        adam_update(dec[l].weight, dec_grads.d_w[l], dec_state.m_w[l],
                    dec_state.v_w[l], dec_state.t, cfg.lr);
        adam_update(dec[l].bias, dec_grads.d_b[l], dec_state.m_b[l],
                    dec_state.v_b[l], dec_state.t, cfg.lr);
      }

      epoch_loss += batch_loss * static_cast<double>(bsz);
      seen += bsz;
      ++result.gradient_steps;
    }
    const auto [vmse, vcos] = validate_now(result.ae);
    result.curve.push_back(
        {epoch, epoch_loss / static_cast<double>(seen), vmse, vcos});
  }
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();

  const auto [vmse, vcos] = validate_now(result.ae);
  result.val_mse = vmse;
  result.val_cosine = vcos;
  result.ae.freeze();
  return result;
}

TrainResult train_autoencoder(const EmbeddingCorpus& corpus, int latent_dim,
                              const TrainConfig& cfg) {
  return train(Autoencoder::mlp(corpus.dim(), latent_dim, cfg.seed), corpus, cfg);
}

FidelityReport fidelity_report(const Autoencoder& ae, const EmbeddingCorpus& corpus) {
  if (corpus.size() == 0) throw InvalidArgument("fidelity_report: empty corpus");
  if (corpus.dim() != ae.input_dim()) {
    throw InvalidArgument("fidelity_report: corpus dimension mismatch");
  }
  FidelityReport report;
  report.row_mse.reserve(corpus.size());
  report.row_cosine.reserve(corpus.size());
  const Eigen::MatrixXd x = corpus.rows.transpose();
  const Eigen::MatrixXd rec = ae.decode_batch(ae.encode_batch(x));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    report.row_mse.push_back((rec.col(c) - x.col(c)).squaredNorm() / ae.input_dim());
    report.row_cosine.push_back(safe_cosine(x.col(c), rec.col(c)));
  }
  report.mean_mse =
      std::accumulate(report.row_mse.begin(), report.row_mse.end(), 0.0) /
      static_cast<double>(report.row_mse.size());
  report.mean_cosine =
      std::accumulate(report.row_cosine.begin(), report.row_cosine.end(), 0.0) /
      static_cast<double>(report.row_cosine.size());
  return report;
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& in, const char* what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (in.gcount() != 4) {
    throw IoError(IoError::Kind::TruncatedFile,
                  std::string("truncated GAEW file at ") + what);
  }
  return v;
}

void write_layer(std::ofstream& out, const Dense& l) {
  write_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
  write_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
  write_u32(out, static_cast<std::uint32_t>(l.activation));
  std::vector<float> buf;
  buf.reserve(static_cast<std::size_t>(l.weight.size() + l.bias.size()));
  for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
      buf.push_back(static_cast<float>(l.weight(r, c)));
  for (Eigen::Index i = 0; i < l.bias.size(); ++i)
    buf.push_back(static_cast<float>(l.bias(i)));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

Dense read_layer(std::ifstream& in) {
  Dense l;
  const std::uint32_t in_dim = read_u32(in, "layer in");
  const std::uint32_t out_dim = read_u32(in, "layer out");
  const std::uint32_t act = read_u32(in, "activation");
  if (act > 1) throw IoError(IoError::Kind::BadValue, "unknown activation tag");
  l.activation = static_cast<Activation>(act);
  l.weight.resize(out_dim, in_dim);
  l.bias.resize(out_dim);
  std::vector<float> buf(static_cast<std::size_t>(out_dim) * in_dim + out_dim);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float)) {
    throw IoError(IoError::Kind::TruncatedFile, "truncated GAEW layer data");
  }
  std::size_t k = 0;
  for (std::uint32_t r = 0; r < out_dim; ++r)
    for (std::uint32_t c = 0; c < in_dim; ++c) l.weight(r, c) = buf[k++];
  for (std::uint32_t i = 0; i < out_dim; ++i) l.bias(i) = buf[k++];
  return l;
}

}  // namespace

void save_autoencoder(const Autoencoder& ae, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open for write: " + path.string());
  }
  out.write("GAEW", 4);
  write_u32(out, 1);
  write_u32(out, static_cast<std::uint32_t>(ae.input_dim()));
  write_u32(out, static_cast<std::uint32_t>(ae.latent_dim()));
  write_u32(out, static_cast<std::uint32_t>(ae.encoder_layers().size()));
  write_u32(out, static_cast<std::uint32_t>(ae.decoder_layers().size()));
  for (const Dense& l : ae.encoder_layers()) write_layer(out, l);
  for (const Dense& l : ae.decoder_layers()) write_layer(out, l);
  if (!out) {
    throw IoError(IoError::Kind::WriteFailed, "write failed: " + path.string());
  }
}

Autoencoder load_autoencoder(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open: " + path.string());
  }
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "GAEW", 4) != 0) {
    throw IoError(IoError::Kind::MagicMismatch, "not a GAEW file: " + path.string());
  }
  const std::uint32_t version = read_u32(in, "version");
  if (version != 1) throw IoError(IoError::Kind::BadValue, "unsupported GAEW version");
  const std::uint32_t d = read_u32(in, "input dim");
  const std::uint32_t k = read_u32(in, "latent dim");
  const std::uint32_t n_enc = read_u32(in, "encoder layer count");
  const std::uint32_t n_dec = read_u32(in, "decoder layer count");
  if (n_enc == 0 || n_dec == 0 || n_enc > 64 || n_dec > 64) {
    throw IoError(IoError::Kind::BadValue, "unreasonable GAEW layer count");
  }
  std::vector<Dense> enc, dec;
  for (std::uint32_t i = 0; i < n_enc; ++i) enc.push_back(read_layer(in));
  for (std::uint32_t i = 0; i < n_dec; ++i) dec.push_back(read_layer(in));
  Autoencoder ae(std::move(enc), std::move(dec));
  if (ae.input_dim() != static_cast<int>(d) || ae.latent_dim() != static_cast<int>(k)) {
    throw IoError(IoError::Kind::DimensionMismatch,
                  "GAEW header dims disagree with layer shapes");
  }
  ae.freeze();
  return ae;
}

void save_corpus(const EmbeddingCorpus& corpus, const std::filesystem::path& tensor_path,
                 const std::filesystem::path& labels_path) {
  Tensor t({corpus.size(), static_cast<std::size_t>(corpus.dim())});
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (int j = 0; j < corpus.dim(); ++j)
      t(i, j) = corpus.rows(static_cast<Eigen::Index>(i), j);
  write_gten(tensor_path, t);

  nlohmann::json j;
  j["id"] = corpus.id;
  j["labels"] = corpus.labels;
  j["is_val"] = std::vector<int>(corpus.is_val.begin(), corpus.is_val.end());
  j["concept_names"] = corpus.concept_names;
  std::ofstream out(labels_path);
  if (!out) {
    throw IoError(IoError::Kind::OpenFailed,
                  "cannot open for write: " + labels_path.string());
  }
  out << j.dump(2) << "\n";
}

EmbeddingCorpus load_corpus(const std::filesystem::path& tensor_path,
                            const std::filesystem::path& labels_path) {
  const Tensor t = read_gten(tensor_path);
  if (t.rank() != 2) {
    throw IoError(IoError::Kind::DimensionMismatch, "corpus tensor must be rank 2");
  }
  EmbeddingCorpus corpus;
  corpus.rows.resize(static_cast<Eigen::Index>(t.dim(0)),
                     static_cast<Eigen::Index>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j)
      corpus.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t(i, j);

  std::ifstream in(labels_path);
  if (!in) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open: " + labels_path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error&) {
    throw IoError(IoError::Kind::BadValue, "corpus labels file is not valid JSON");
  }
  corpus.id = j.value("id", "");
  corpus.labels = j.at("labels").get<std::vector<int>>();
  const auto val = j.at("is_val").get<std::vector<int>>();
  corpus.is_val.assign(val.begin(), val.end());
  corpus.concept_names = j.value("concept_names", std::vector<std::string>{});
  if (corpus.labels.size() != corpus.size() || corpus.is_val.size() != corpus.size()) {
    throw IoError(IoError::Kind::DimensionMismatch,
                  "corpus labels do not match row count");
  }
  return corpus;
}

}  // namespace featsplat
