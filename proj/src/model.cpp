#include "afe/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "afe/errors.hpp"
#include "afe/parallel.hpp"
#include "afe/rng.hpp"

namespace afe {

std::string ModelConfig::canonical() const {
  std::ostringstream s;
  s << "D=" << latent_channels << ";T=" << latent_frames << ";K=" << num_classes << ";L=" << feature_max_level
    << ";Ta=" << feature_frames << ";H=" << hidden << ";N=" << blocks << ";E=" << time_embed_dim
    << ";ks=" << conv_kernel << ";sm=" << sync_hidden_mult << ";sync_mod=" << (sync_modulation ? 1 : 0)
    << ";fscale=" << feature_scale;
  return s.str();
}

std::uint64_t ModelConfig::arch_hash() const { return fnv1a64(canonical()); }

void ModelConfig::validate() const {
  if (latent_channels < 1 || latent_frames < 1 || num_classes < 1 || feature_max_level < 0 || feature_frames < 1 ||
      hidden < 1 || blocks < 0 || time_embed_dim < 2 || time_embed_dim % 2 != 0 || conv_kernel < 1 ||
      conv_kernel % 2 == 0 || sync_hidden_mult < 1) {
    throw InvalidInput("invalid model configuration: " + canonical());
  }
}

namespace {

template <typename M>
M silu(const M& x) {
  return (x.array() / (1 + (-x.array()).exp())).matrix();
}

// d silu / dx evaluated at x, multiplied into upstream.
template <typename M>
M silu_backward(const M& x, const M& upstream) {
  const auto sig = (1 / (1 + (-x.array()).exp())).eval();
  return (upstream.array() * sig * (1 + x.array() * (1 - sig))).matrix();
}

}  // namespace

template <typename S>
struct VelocityNet<S>::Cache {
  Vec temb_in, z1, s1, ctrl_mean;
  int prompt_col = 0;
  Mat sync, feats, q1, qs, c, sc, x_in;
  struct BlockCache {
    Mat h_in, n, st, m, d, u1, us;
    Vec inv_std;
  };
  std::vector<BlockCache> blocks;
  Mat nf, stf, mf;
  Vec inv_std_f;
};

template <typename S>
std::size_t VelocityNet<S>::add_block(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                      ParamGroup group) {
  ParamBlock b;
  b.name = name;
  b.rows = rows;
  b.cols = cols;
  b.group = group;
  b.offset = layout_.empty() ? 0 : layout_.back().offset + layout_.back().size();
  layout_.push_back(b);
  return layout_.size() - 1;
}

template <typename S>
VelocityNet<S>::VelocityNet(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  const Eigen::Index H = cfg.hidden, D = cfg.latent_channels, K = cfg.num_classes, E = cfg.time_embed_dim;
  const Eigen::Index Ca = cfg.feature_channels(), Hs = cfg.sync_hidden_mult * cfg.hidden;
  using G = ParamGroup;

  time_w1_ = add_block("time_w1", H, E, G::Trunk);
  time_b1_ = add_block("time_b1", H, 1, G::Trunk);
  time_w2_ = add_block("time_w2", H, H, G::Trunk);
  time_b2_ = add_block("time_b2", H, 1, G::Trunk);
  prompt_table_ = add_block("prompt_table", H, K + 1, G::Trunk);
  ctrl_w_ = add_block("ctrl_w", H, K, G::Trunk);
  sync_w_ = add_block("sync_w", H, K, G::Trunk);
  padd_w_ = add_block("padd_w", D, Ca, G::Modulation);
  padd_b_ = add_block("padd_b", D, 1, G::Modulation);
  psync_w1_ = add_block("psync_w1", Hs, Ca, G::Modulation);
  psync_b1_ = add_block("psync_b1", Hs, 1, G::Modulation);
  psync_w2_ = add_block("psync_w2", H, Hs, G::Modulation);
  psync_b2_ = add_block("psync_b2", H, 1, G::Modulation);
  in_w_ = add_block("in_w", H, D, G::Trunk);
  in_b_ = add_block("in_b", H, 1, G::Trunk);
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    BlockIdx bi;
    bi.mod_w = add_block(p + "mod_w", 2 * H, H, G::Trunk);
    bi.mod_b = add_block(p + "mod_b", 2 * H, 1, G::Trunk);
    bi.conv_k = add_block(p + "conv_k", H, cfg.conv_kernel, G::Trunk);
    bi.conv_b = add_block(p + "conv_b", H, 1, G::Trunk);
    bi.mlp_w1 = add_block(p + "mlp_w1", 2 * H, H, G::Trunk);
    bi.mlp_b1 = add_block(p + "mlp_b1", 2 * H, 1, G::Trunk);
    bi.mlp_w2 = add_block(p + "mlp_w2", H, 2 * H, G::Trunk);
    bi.mlp_b2 = add_block(p + "mlp_b2", H, 1, G::Trunk);
    blocks_.push_back(bi);
  }
  final_mod_w_ = add_block("final_mod_w", 2 * H, H, G::Trunk);
  final_mod_b_ = add_block("final_mod_b", 2 * H, 1, G::Trunk);
  out_w_ = add_block("out_w", D, H, G::Trunk);
  out_b_ = add_block("out_b", D, 1, G::Trunk);
  latent_mean_ = add_block("latent_mean", D, 1, G::Buffer);
  latent_std_ = add_block("latent_std", D, 1, G::Buffer);

  params_.assign(layout_.back().offset + layout_.back().size(), S(0));

  Rng rng(derive_seed(init_seed, "init"));
  auto fill = [&](std::size_t idx, double stddev) {
    const auto& b = layout_[idx];
    for (std::size_t i = 0; i < b.size(); ++i) params_[b.offset + i] = static_cast<S>(stddev * rng.normal());
  };
  auto fan_in = [&](std::size_t idx, double gain = 1.0) {
    fill(idx, gain / std::sqrt(static_cast<double>(layout_[idx].cols)));
  };
  fan_in(time_w1_);
  fan_in(time_w2_);
  fill(prompt_table_, 0.5);
  fan_in(ctrl_w_);
  fan_in(sync_w_);
  // padd_* and psync_w2/psync_b2 stay zero: the acoustic paths start as identity.
  fan_in(psync_w1_);
  fan_in(in_w_);
  for (const auto& bi : blocks_) {
    fan_in(bi.mod_w, 0.1);
    fill(bi.conv_k, 1.0 / std::sqrt(static_cast<double>(cfg.conv_kernel)));
    fan_in(bi.mlp_w1);
    fan_in(bi.mlp_w2, 0.5);
  }
  fan_in(final_mod_w_, 0.1);
  fan_in(out_w_, 0.1);
  set_latent_stats(LatentStats{Eigen::VectorXd::Zero(D), Eigen::VectorXd::Ones(D)});
}

template <typename S>
std::size_t VelocityNet<S>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& b : layout_) {
    if (b.group != ParamGroup::Buffer) n += b.size();
  }
  return n;
}

template <typename S>
Eigen::Map<typename VelocityNet<S>::Mat> VelocityNet<S>::block(const std::string& name) {
  for (const auto& b : layout_) {
    if (b.name == name) return Eigen::Map<Mat>(params_.data() + b.offset, b.rows, b.cols);
  }
  throw InvalidInput("unknown parameter block " + name);
}

template <typename S>
Eigen::Map<const typename VelocityNet<S>::Mat> VelocityNet<S>::block(const std::string& name) const {
  for (const auto& b : layout_) {
    if (b.name == name) return Eigen::Map<const Mat>(params_.data() + b.offset, b.rows, b.cols);
  }
  throw InvalidInput("unknown parameter block " + name);
}

template <typename S>
std::vector<S> VelocityNet<S>::group_values(ParamGroup group) const {
  std::vector<S> out;
  for (const auto& b : layout_) {
    if (b.group == group) out.insert(out.end(), params_.begin() + b.offset, params_.begin() + b.offset + b.size());
  }
  return out;
}

template <typename S>
LatentStats VelocityNet<S>::latent_stats() const {
  LatentStats s;
  s.mean = P(latent_mean_).col(0).template cast<double>();
  s.stddev = P(latent_std_).col(0).template cast<double>();
  return s;
}

template <typename S>
void VelocityNet<S>::set_latent_stats(const LatentStats& stats) {
  if (stats.mean.size() != cfg_.latent_channels || stats.stddev.size() != cfg_.latent_channels) {
    throw InvalidInput("latent stats size mismatch");
  }
  Eigen::Map<Mat>(params_.data() + layout_[latent_mean_].offset, cfg_.latent_channels, 1) =
      stats.mean.template cast<S>();
  Eigen::Map<Mat>(params_.data() + layout_[latent_std_].offset, cfg_.latent_channels, 1) =
      stats.stddev.template cast<S>();
}

template <typename S>
Eigen::Map<const typename VelocityNet<S>::Mat> VelocityNet<S>::P(std::size_t idx) const {
  const auto& b = layout_[idx];
  return Eigen::Map<const Mat>(params_.data() + b.offset, b.rows, b.cols);
}

template <typename S>
Eigen::Map<typename VelocityNet<S>::Mat> VelocityNet<S>::G(std::span<S> grad, std::size_t idx) const {
  const auto& b = layout_[idx];
  return Eigen::Map<Mat>(grad.data() + b.offset, b.rows, b.cols);
}

namespace {

template <typename Mat, typename Vec>
Mat layer_norm(const Mat& x, Vec& inv_std) {
  using S = typename Mat::Scalar;
  const S n = static_cast<S>(x.rows());
  const auto mean = (x.colwise().sum() / n).eval();
  Mat centered = x.rowwise() - mean;
  const auto var = (centered.array().square().colwise().sum() / n).eval();
  inv_std = (var + S(1e-5)).rsqrt().transpose();
  for (Eigen::Index c = 0; c < x.cols(); ++c) centered.col(c) *= inv_std(c);
  return centered;
}

template <typename Mat, typename Vec>
Mat layer_norm_backward(const Mat& xhat, const Vec& inv_std, const Mat& dxhat) {
  using S = typename Mat::Scalar;
  const S n = static_cast<S>(xhat.rows());
  const auto mean_d = (dxhat.colwise().sum() / n).eval();
  const auto mean_dx = ((dxhat.array() * xhat.array()).colwise().sum() / n).eval();
  Mat out(xhat.rows(), xhat.cols());
  for (Eigen::Index c = 0; c < xhat.cols(); ++c) {
    out.col(c) = inv_std(c) * (dxhat.col(c).array() - mean_d(c) - xhat.col(c).array() * mean_dx(c)).matrix();
  }
  return out;
}

template <typename Mat, typename KMat>
Mat depthwise_conv(const Mat& m, const KMat& k) {
  const Eigen::Index T = m.cols();
  const Eigen::Index ks = k.cols();
  Mat d = Mat::Zero(m.rows(), T);
  for (Eigen::Index j = 0; j < ks; ++j) {
    const Eigen::Index o = j - ks / 2;
    const Eigen::Index len = T - std::abs(o);
    if (len <= 0) continue;
    if (o >= 0) {
      d.leftCols(len).array() += m.rightCols(len).array().colwise() * k.col(j).array();
    } else {
      d.rightCols(len).array() += m.leftCols(len).array().colwise() * k.col(j).array();
    }
  }
  return d;
}

}  // namespace

template <typename S>
typename VelocityNet<S>::Mat VelocityNet<S>::forward(const Mat& x, double t, const ConditionBundle& c,
                                                     const AcousticFeatures& a, Cache* cache) const {
  const Eigen::Index T = cfg_.latent_frames, H = cfg_.hidden, E = cfg_.time_embed_dim;
  if (x.rows() != cfg_.latent_channels || x.cols() != T) throw InvalidInput("latent shape mismatch");
  if (c.sync.rows() != cfg_.num_classes || c.sync.cols() != T) throw InvalidInput("sync track shape mismatch");
  if (c.control.frames.rows() != cfg_.num_classes || c.control.frames.cols() < 1) {
    throw InvalidInput("control track shape mismatch");
  }
  if (a.channels.rows() != cfg_.feature_channels() || a.channels.cols() < 1) {
    throw InvalidInput("acoustic feature shape mismatch");
  }
  if (!c.prompt.is_null() && (c.prompt.class_id < 0 || c.prompt.class_id >= cfg_.num_classes)) {
    throw InvalidInput("prompt class out of range");
  }

  Cache local;
  Cache& k = cache ? *cache : local;

  // Global condition: time embedding + prompt + pooled control.
  k.temb_in.resize(E);
  const Eigen::Index half = E / 2;
  for (Eigen::Index i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    const double arg = 1000.0 * t * freq;
    k.temb_in(i) = static_cast<S>(std::sin(arg));
    k.temb_in(half + i) = static_cast<S>(std::cos(arg));
  }
  k.z1 = P(time_w1_) * k.temb_in + P(time_b1_);
  k.s1 = silu(k.z1);
  Vec g = P(time_w2_) * k.s1 + P(time_b2_);
  k.prompt_col = c.prompt.is_null() ? cfg_.num_classes : c.prompt.class_id;
  g += P(prompt_table_).col(k.prompt_col);
  k.ctrl_mean = c.control.frames.rowwise().mean().template cast<S>();
  g.noalias() += P(ctrl_w_) * k.ctrl_mean;

  // Frame-wise condition: sync track, optionally modulated by the features.
  k.sync = c.sync.template cast<S>();
  k.feats = (resample_time(a.channels, T) * cfg_.feature_scale).template cast<S>();
  Mat sync_mod = P(sync_w_) * k.sync;
  if (cfg_.sync_modulation) {
    k.q1 = (P(psync_w1_) * k.feats).colwise() + P(psync_b1_).col(0);
    k.qs = silu(k.q1);
    sync_mod.noalias() += P(psync_w2_) * k.qs;
    sync_mod.colwise() += P(psync_b2_).col(0);
  }
  k.c = sync_mod.colwise() + g;
  k.sc = silu(k.c);

  // Additive acoustic input on the noisy latent.
  k.x_in = x + P(padd_w_) * k.feats;
  k.x_in.colwise() += P(padd_b_).col(0);
  Mat h = (P(in_w_) * k.x_in).colwise() + P(in_b_).col(0);

  k.blocks.resize(blocks_.size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& bi = blocks_[b];
    auto& bc = k.blocks[b];
    bc.h_in = h;
    bc.n = layer_norm(h, bc.inv_std);
    bc.st = (P(bi.mod_w) * k.sc).colwise() + P(bi.mod_b).col(0);
    bc.m = (bc.n.array() * (1 + bc.st.topRows(H).array()) + bc.st.bottomRows(H).array()).matrix();
    bc.d = depthwise_conv(bc.m, P(bi.conv_k));
    bc.d.colwise() += P(bi.conv_b).col(0);
    bc.u1 = (P(bi.mlp_w1) * bc.d).colwise() + P(bi.mlp_b1).col(0);
    bc.us = silu(bc.u1);
    h.noalias() += P(bi.mlp_w2) * bc.us;
    h.colwise() += P(bi.mlp_b2).col(0);
  }

  k.nf = layer_norm(h, k.inv_std_f);
  k.stf = (P(final_mod_w_) * k.sc).colwise() + P(final_mod_b_).col(0);
  k.mf = (k.nf.array() * (1 + k.stf.topRows(H).array()) + k.stf.bottomRows(H).array()).matrix();
  Mat out = (P(out_w_) * k.mf).colwise() + P(out_b_).col(0);
  return out;
}

template <typename S>
void VelocityNet<S>::backward(const Cache& k, const Mat& dout, std::span<S> grad) const {
  const Eigen::Index H = cfg_.hidden;

  G(grad, out_w_).noalias() += dout * k.mf.transpose();
  G(grad, out_b_) += dout.rowwise().sum();
  const Mat dmf = P(out_w_).transpose() * dout;

  Mat dstf(2 * H, dout.cols());
  dstf.topRows(H) = (dmf.array() * k.nf.array()).matrix();
  dstf.bottomRows(H) = dmf;
  G(grad, final_mod_w_).noalias() += dstf * k.sc.transpose();
  G(grad, final_mod_b_) += dstf.rowwise().sum();
  Mat dsc = P(final_mod_w_).transpose() * dstf;
  const Mat dnf = (dmf.array() * (1 + k.stf.topRows(H).array())).matrix();
  Mat dh = layer_norm_backward(k.nf, k.inv_std_f, dnf);

  for (std::size_t bb = blocks_.size(); bb-- > 0;) {
    const auto& bi = blocks_[bb];
    const auto& bc = k.blocks[bb];
    // h_out = h_in + mlp(conv(mod(LN(h_in))))
    G(grad, bi.mlp_w2).noalias() += dh * bc.us.transpose();
    G(grad, bi.mlp_b2) += dh.rowwise().sum();
    const Mat du1 = silu_backward<Mat>(bc.u1, P(bi.mlp_w2).transpose() * dh);
    G(grad, bi.mlp_w1).noalias() += du1 * bc.d.transpose();
    G(grad, bi.mlp_b1) += du1.rowwise().sum();
    const Mat dd = P(bi.mlp_w1).transpose() * du1;

    G(grad, bi.conv_b) += dd.rowwise().sum();
    const auto kern = P(bi.conv_k);
    auto dk = G(grad, bi.conv_k);
    const Eigen::Index T = dd.cols(), ks = kern.cols();
    Mat dm = Mat::Zero(H, T);
    for (Eigen::Index j = 0; j < ks; ++j) {
      const Eigen::Index o = j - ks / 2;
      const Eigen::Index len = T - std::abs(o);
      if (len <= 0) continue;
      if (o >= 0) {
        dk.col(j) += (dd.leftCols(len).array() * bc.m.rightCols(len).array()).rowwise().sum().matrix();
        dm.rightCols(len).array() += dd.leftCols(len).array().colwise() * kern.col(j).array();
      } else {
        dk.col(j) += (dd.rightCols(len).array() * bc.m.leftCols(len).array()).rowwise().sum().matrix();
        dm.leftCols(len).array() += dd.rightCols(len).array().colwise() * kern.col(j).array();
      }
    }

    Mat dst(2 * H, T);
    dst.topRows(H) = (dm.array() * bc.n.array()).matrix();
    dst.bottomRows(H) = dm;
    G(grad, bi.mod_w).noalias() += dst * k.sc.transpose();
    G(grad, bi.mod_b) += dst.rowwise().sum();
    dsc.noalias() += P(bi.mod_w).transpose() * dst;
    const Mat dn = (dm.array() * (1 + bc.st.topRows(H).array())).matrix();
    dh += layer_norm_backward(bc.n, bc.inv_std, dn);
  }

  G(grad, in_w_).noalias() += dh * k.x_in.transpose();
  G(grad, in_b_) += dh.rowwise().sum();
  const Mat dx_in = P(in_w_).transpose() * dh;
  G(grad, padd_w_).noalias() += dx_in * k.feats.transpose();
  G(grad, padd_b_) += dx_in.rowwise().sum();

  const Mat dc = silu_backward<Mat>(k.c, dsc);
  const Vec dg = dc.rowwise().sum();
  G(grad, sync_w_).noalias() += dc * k.sync.transpose();
  if (cfg_.sync_modulation) {
    G(grad, psync_w2_).noalias() += dc * k.qs.transpose();
    G(grad, psync_b2_) += dg;
    const Mat dq1 = silu_backward<Mat>(k.q1, P(psync_w2_).transpose() * dc);
    G(grad, psync_w1_).noalias() += dq1 * k.feats.transpose();
    G(grad, psync_b1_) += dq1.rowwise().sum();
  }

  G(grad, ctrl_w_).noalias() += dg * k.ctrl_mean.transpose();
  G(grad, prompt_table_).col(k.prompt_col) += dg;
  G(grad, time_w2_).noalias() += dg * k.s1.transpose();
  G(grad, time_b2_) += dg;
  const Vec dz1 = silu_backward<Vec>(k.z1, P(time_w2_).transpose() * dg);
  G(grad, time_w1_).noalias() += dz1 * k.temb_in.transpose();
  G(grad, time_b1_) += dz1;
}

template <typename S>
LatentClip VelocityNet<S>::velocity(const LatentClip& x, double t, const ConditionBundle& c,
                                    const AcousticFeatures& a) const {
  const Mat out = forward(x.values.template cast<S>(), t, c, a, nullptr);
  LatentClip r;
  r.frame_rate = x.frame_rate;
  r.values = out.template cast<double>();
  return r;
}

template <typename S>
double VelocityNet<S>::accumulate_gradient(const FlowExample& ex, const FlowDraw& draw, double normalizer,
                                           std::span<S> grad) const {
  if (grad.size() != params_.size()) throw InvalidInput("gradient buffer size mismatch");
  Cache cache;
  const LatentClip xt = path_point(draw.noise, ex.x1, draw.t);
  const Mat out = forward(xt.values.template cast<S>(), draw.t, ex.cond, ex.feats, &cache);
  const Eigen::MatrixXd diff = out.template cast<double>() - path_velocity(draw.noise, ex.x1).values;
  const double sq = diff.squaredNorm();
  if (!std::isfinite(sq)) throw DivergenceError("non-finite model output during training");
  const Mat dout = ((2.0 / normalizer) * diff).template cast<S>();
  backward(cache, dout, grad);
  return sq;
}

template <typename S>
double VelocityNet<S>::loss_and_gradient(std::span<const FlowExample> batch, std::span<const FlowDraw> draws,
                                         Buffer& grad, int jobs) const {
  if (batch.empty() || batch.size() != draws.size()) throw InvalidInput("batch and draws differ in size");
  const std::size_t B = batch.size(), P = params_.size();
  double normalizer = 0.0;
  for (const auto& ex : batch) normalizer += static_cast<double>(ex.x1.values.size());

  std::vector<Buffer> per_example(B, Buffer(P, S(0)));
  std::vector<double> sq(B, 0.0);
  parallel_for(B, jobs, [&](std::size_t i) { sq[i] = accumulate_gradient(batch[i], draws[i], normalizer, per_example[i]); });

  grad.assign(P, S(0));
  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t p = 0; p < P; ++p) grad[p] += per_example[i][p];
    total += sq[i];
  }
  return total / normalizer;
}

template class VelocityNet<float>;
template class VelocityNet<double>;

namespace {
constexpr char kMagic[8] = {'A', 'F', 'E', 'C', 'K', 'P', 'T', '1'};
}  // namespace

void save_checkpoint(const VelocityModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t hash = model.config().arch_hash();
  const std::uint64_t count = model.param_count();
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&hash), sizeof hash);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(model.params().data()),
            static_cast<std::streamsize>(count * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

VelocityModel load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t hash = 0, count = 0;
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint: " + path.string());
  }
  if (!in.read(reinterpret_cast<char*>(&version), sizeof version) ||
      !in.read(reinterpret_cast<char*>(&hash), sizeof hash) ||
      !in.read(reinterpret_cast<char*>(&count), sizeof count)) {
    throw FormatError("truncated checkpoint header");
  }
  if (version != kCheckpointVersion) throw IncompatibleCheckpoint("unsupported checkpoint version");
  if (hash != expected.arch_hash()) {
    throw IncompatibleCheckpoint("architecture hash mismatch (checkpoint was trained with a different model config)");
  }
  VelocityModel model(expected);
  if (count != model.param_count()) throw IncompatibleCheckpoint("parameter count mismatch");
  if (!in.read(reinterpret_cast<char*>(model.params().data()), static_cast<std::streamsize>(count * sizeof(float)))) {
    throw FormatError("truncated checkpoint data");
  }
  return model;
}

}  // namespace afe
