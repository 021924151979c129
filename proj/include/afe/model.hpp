#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "afe/flow.hpp"

namespace afe {

struct ModelConfig {
  int latent_channels = kLatentChannels;
  int latent_frames = kLatentFrames;
  int num_classes = kNumClasses;
  int feature_max_level = kDefaultMaxLevel;
  int feature_frames = 2 * kLatentFrames;
  int hidden = 64;
  int blocks = 4;
  int time_embed_dim = 32;
  int conv_kernel = 5;
  int sync_hidden_mult = 4;
  bool sync_modulation = true;
  // Fixed input scaling of the dB-valued feature channels.
  double feature_scale = 0.02;

  int feature_channels() const { return static_cast<int>(AcousticFeatures::channel_count(feature_max_level)); }
  std::string canonical() const;
  std::uint64_t arch_hash() const;
  void validate() const;
};

// Parameters live in one flat buffer; blocks are column-major matrices.
enum class ParamGroup { Trunk, Modulation, Buffer };

struct ParamBlock {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  ParamGroup group = ParamGroup::Trunk;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

// Conditional velocity network: time/prompt/control embeddings form a
// global condition; the sync track (plus the acoustic sync modulator) adds a
// frame-wise term. Residual blocks of LayerNorm -> adaptive scale-shift ->
// depthwise temporal conv -> frame-wise MLP. Acoustic features also enter
// additively on the noisy latent. Both acoustic paths start at exactly zero.
template <typename S>
class VelocityNet : public VelocityField {
public:
  using Scalar = S;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  // Aligned storage keeps vectorized kernels on the same code path for every
  // buffer, which makes results bit-reproducible across allocations.
  using Buffer = std::vector<S, Eigen::aligned_allocator<S>>;

  explicit VelocityNet(const ModelConfig& cfg, std::uint64_t init_seed = 0);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<ParamBlock>& layout() const { return layout_; }
  Buffer& params() { return params_; }
  const Buffer& params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  std::size_t trainable_count() const;

  Eigen::Map<Mat> block(const std::string& name);
  Eigen::Map<const Mat> block(const std::string& name) const;
  std::vector<S> group_values(ParamGroup group) const;

  LatentStats latent_stats() const;
  void set_latent_stats(const LatentStats& stats);

  LatentClip velocity(const LatentClip& x, double t, const ConditionBundle& c,
                      const AcousticFeatures& a) const override;
  Eigen::Index latent_channels() const override { return cfg_.latent_channels; }
  Eigen::Index latent_frames() const override { return cfg_.latent_frames; }
  int feature_max_level() const override { return cfg_.feature_max_level; }
  Eigen::Index feature_frames() const override { return cfg_.feature_frames; }

  // Adds d(loss)/d(params) to grad, where this example contributes
  // ||u - v||^2 / normalizer to the loss. Returns ||u - v||^2.
  double accumulate_gradient(const FlowExample& ex, const FlowDraw& draw, double normalizer,
                             std::span<S> grad) const;

  // Batch flow-matching loss and its gradient (resized to param_count()).
  // Per-example gradients are summed in batch order, so the result does
  // not depend on the worker count.
  double loss_and_gradient(std::span<const FlowExample> batch, std::span<const FlowDraw> draws,
                           Buffer& grad, int jobs = 1) const;

private:
  struct Cache;

  Mat forward(const Mat& x, double t, const ConditionBundle& c, const AcousticFeatures& a, Cache* cache) const;
  void backward(const Cache& cache, const Mat& dout, std::span<S> grad) const;
  std::size_t add_block(const std::string& name, Eigen::Index rows, Eigen::Index cols, ParamGroup group);
  Eigen::Map<const Mat> P(std::size_t idx) const;
  Eigen::Map<Mat> G(std::span<S> grad, std::size_t idx) const;

  ModelConfig cfg_;
  std::vector<ParamBlock> layout_;
  Buffer params_;

  // Indices into layout_.
  std::size_t time_w1_, time_b1_, time_w2_, time_b2_, prompt_table_, ctrl_w_, sync_w_;
  std::size_t padd_w_, padd_b_, psync_w1_, psync_b1_, psync_w2_, psync_b2_;
  std::size_t in_w_, in_b_;
  struct BlockIdx {
    std::size_t mod_w, mod_b, conv_k, conv_b, mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  };
  std::vector<BlockIdx> blocks_;
  std::size_t final_mod_w_, final_mod_b_, out_w_, out_b_, latent_mean_, latent_std_;
};

extern template class VelocityNet<float>;
extern template class VelocityNet<double>;

using VelocityModel = VelocityNet<float>;

// Little-endian: magic "AFECKPT1", uint32 version, uint64 architecture hash,
// uint64 parameter count, then float32 parameter blocks in layout order.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const VelocityModel& model, const std::filesystem::path& path);
VelocityModel load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace afe
