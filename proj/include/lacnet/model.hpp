#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lacnet/autograd.hpp"
#include "lacnet/bitmap.hpp"
#include "lacnet/preprocess.hpp"
#include "lacnet/scene.hpp"
#include "lacnet/tensor.hpp"

namespace lacnet {

enum class FusionStrategy { linear, conv1x1, stacked6ch };
enum class BlockType { basic, bottleneck };
enum class Stream { rgb, depth, stacked };

const char* fusion_name(FusionStrategy f);
FusionStrategy parse_fusion(const std::string& s);

/// Encoder stages always sit at strides 4, 8, 16 and 32 of the input.
inline constexpr std::array<int, 4> kStageStrides{4, 8, 16, 32};

struct ModelConfig {
  int input_size = 64;
  int stem_channels = 16;
  std::array<int, 4> channels{16, 32, 64, 128};
  std::array<int, 4> blocks_per_stage{2, 2, 2, 2};
  BlockType block = BlockType::basic;
  FusionStrategy fusion = FusionStrategy::linear;
  std::array<int, 4> decoder_channels{64, 32, 32, 16};
  /// Stacked-input ablation: repeat depth three times (6 input channels) instead of once (4).
  bool depth_as_3ch = false;
  std::uint64_t seed = 0;

  /// Smallest configuration used for finite-difference gradient checks.
  static ModelConfig tiny();
  /// Two-stream bottleneck encoder with the ResNet-50 stage layout, 256-pixel input.
  static ModelConfig resnet50();

  int stacked_channels() const { return depth_as_3ch ? 6 : 4; }
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Ordered named parameter arrays.
template <typename T>
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Tensor<T>> tensors;

  std::size_t add(std::string name, Tensor<T> t);
  std::size_t index_of(const std::string& name) const;
  std::size_t total_size() const;
  std::size_t size() const { return tensors.size(); }
};

/// Four feature maps at strides 4/8/16/32.
using FeaturePyramid = std::array<Var, 4>;

/// Per-pixel logits at input resolution.
struct HeadOutputs {
  Var amodal_logits;
  Var visible_logits;
};

/// One training or inference batch, all (N, ·, S, S).
template <typename T>
struct Batch {
  Tensor<T> rgb;    // 3 channels in [0,1]
  Tensor<T> depth;  // 1 channel in [0,1]
  Tensor<T> mask;   // visible prior, {0,1}
  Tensor<T> target_amodal;
  Tensor<T> target_visible;
};

template <typename T>
class LacNet {
 public:
  /// Parameters drawn deterministically from config.seed.
  explicit LacNet(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  template <typename U>
  LacNet<U> cast() const;

  /// Registers every parameter on the tape; the result indexes like params().
  std::vector<Var> bind(Tape<T>& tape) const;

  FeaturePyramid encode(Tape<T>& tape, const std::vector<Var>& bound, Var patch, Stream stream) const;
  /// For stacked6ch the rgb pyramid is returned unchanged and `depth` is ignored.
  FeaturePyramid fuse(Tape<T>& tape, const std::vector<Var>& bound, const FeaturePyramid& rgb,
                      const FeaturePyramid& depth) const;
  /// Softmax attention over the stride-32 fused stage; `mask_patch` is (N,1,S,S).
  Var attention_map(Tape<T>& tape, const FeaturePyramid& fused, const Tensor<T>& mask_patch) const;
  HeadOutputs complete(Tape<T>& tape, const std::vector<Var>& bound, const FeaturePyramid& fused,
                       const Tensor<T>& mask_patch, Var attention) const;

  /// encode → fuse → attention → complete.
  HeadOutputs forward(Tape<T>& tape, const std::vector<Var>& bound, const Batch<T>& batch) const;

  /// BCE(amodal) + BCE(visible), each averaged over pixels.
  Var loss(Tape<T>& tape, const HeadOutputs& out, const Tensor<T>& target_amodal,
           const Tensor<T>& target_visible) const;

 private:
  struct Conv {
    std::size_t weight = npos, bias = npos;
    int stride = 1, pad = 0;
  };
  struct Norm {
    std::size_t gamma = npos, beta = npos;
    int groups = 1;
  };
  struct Block {
    std::vector<std::pair<Conv, Norm>> layers;  // ReLU between layers, none after the last
    bool has_projection = false;
    Conv proj;
    Norm proj_norm;
  };
  struct Encoder {
    std::array<std::pair<Conv, Norm>, 2> stem;
    std::array<std::vector<Block>, 4> stages;
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Conv make_conv(const std::string& name, int in, int out, int k, int stride, bool bias);
  Norm make_norm(const std::string& name, int channels);
  Encoder make_encoder(const std::string& prefix, int in_channels);
  Var apply(Tape<T>& tape, const std::vector<Var>& bound, const Conv& c, Var x) const;
  Var apply(Tape<T>& tape, const std::vector<Var>& bound, const Norm& n, Var x) const;
  FeaturePyramid run_encoder(Tape<T>& tape, const std::vector<Var>& bound, const Encoder& e, Var x) const;

  template <typename U>
  friend class LacNet;
  LacNet() = default;

  ModelConfig config_;
  ParamStore<T> params_;
  std::vector<Encoder> encoders_;  // [rgb, depth] or [stacked]
  std::array<Conv, 4> fuse_proj_;
  std::array<Norm, 4> fuse_norm_;
  std::array<std::pair<Conv, Norm>, 4> decoder_;
  Conv head_visible_, head_amodal_;
};

/// GroupNorm group count used for a layer with `channels` channels.
int norm_groups(int channels);

/// Network inputs for one instance, cropped around the expanded visible-mask box.
struct CropSample {
  BBox box;
  Image<float> rgb;    // normalized, 3 channels
  Image<float> depth;  // normalized, 1 channel
  Bitmap mask;         // visible prior at input_size
  Bitmap target_amodal, target_visible;  // empty when no annotation is given
};

CropSample make_crop(const RgbdScene& scene, const Bitmap& visible_prior, int input_size,
                     double expansion_factor = 2.0, const InstanceAnnotation* targets = nullptr);

template <typename T>
Batch<T> collate(const std::vector<CropSample>& samples);

struct Prediction {
  ProbMap amodal_prob, visible_prob;
  Bitmap amodal_mask, visible_mask;  // prob >= 0.5
};

struct InstancePrediction {
  BBox box;            // expanded crop box in image coordinates
  Prediction crop;     // at input_size
  Prediction image;    // pasted back at scene size
};

/// Full inference for one visible prior. Throws DataError for an empty mask.
InstancePrediction predict_amodal(const LacNet<float>& model, const RgbdScene& scene, const Bitmap& visible_mask);
/// Batched form; results line up with `visible_masks`.
std::vector<InstancePrediction> predict_amodal_batch(const LacNet<float>& model, const RgbdScene& scene,
                                                     const std::vector<Bitmap>& visible_masks,
                                                     int max_batch = 32);

}  // namespace lacnet
