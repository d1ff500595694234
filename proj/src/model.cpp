#include "lacnet/model.hpp"

#include <cmath>
#include <stdexcept>

#include "lacnet/errors.hpp"
#include "lacnet/rng.hpp"

namespace lacnet {

const char* fusion_name(FusionStrategy f) {
  switch (f) {
    case FusionStrategy::linear: return "linear";
    case FusionStrategy::conv1x1: return "conv1x1";
    case FusionStrategy::stacked6ch: return "stacked6ch";
  }
  return "unknown";
}

FusionStrategy parse_fusion(const std::string& s) {
  for (auto f : {FusionStrategy::linear, FusionStrategy::conv1x1, FusionStrategy::stacked6ch})
    if (s == fusion_name(f)) return f;
  throw ConfigError("unknown fusion strategy '" + s + "'");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.input_size = 64;
  c.stem_channels = 4;
  c.channels = {4, 8, 16, 32};
  c.blocks_per_stage = {1, 1, 1, 1};
  c.decoder_channels = {8, 8, 8, 4};
  return c;
}

ModelConfig ModelConfig::resnet50() {
  ModelConfig c;
  c.input_size = 256;
  c.stem_channels = 64;
  c.channels = {256, 512, 1024, 2048};
  c.blocks_per_stage = {3, 4, 6, 3};
  c.block = BlockType::bottleneck;
  c.decoder_channels = {256, 128, 64, 32};
  return c;
}

void ModelConfig::validate() const {
  if (input_size <= 0 || input_size % 32 != 0) throw ConfigError("input_size must be a positive multiple of 32");
  if (stem_channels <= 0) throw ConfigError("stem_channels must be positive");
  for (int i = 0; i < 4; ++i) {
    if (channels[static_cast<std::size_t>(i)] <= 0) throw ConfigError("channels must be positive");
    if (blocks_per_stage[static_cast<std::size_t>(i)] <= 0) throw ConfigError("blocks_per_stage must be positive");
    if (decoder_channels[static_cast<std::size_t>(i)] <= 0) throw ConfigError("decoder_channels must be positive");
  }
  if (block == BlockType::bottleneck)
    for (int c : channels)
      if (c % 4 != 0) throw ConfigError("bottleneck channels must be divisible by 4");
}

nlohmann::json to_json(const ModelConfig& c) {
  return nlohmann::json{{"input_size", c.input_size},
                        {"stem_channels", c.stem_channels},
                        {"channels", c.channels},
                        {"blocks_per_stage", c.blocks_per_stage},
                        {"block", c.block == BlockType::basic ? "basic" : "bottleneck"},
                        {"fusion", fusion_name(c.fusion)},
                        {"decoder_channels", c.decoder_channels},
                        {"depth_as_3ch", c.depth_as_3ch},
                        {"seed", c.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.input_size = j.at("input_size").get<int>();
    c.stem_channels = j.at("stem_channels").get<int>();
    c.channels = j.at("channels").get<std::array<int, 4>>();
    c.blocks_per_stage = j.at("blocks_per_stage").get<std::array<int, 4>>();
    const auto block = j.at("block").get<std::string>();
    if (block != "basic" && block != "bottleneck") throw ConfigError("unknown block type '" + block + "'");
    c.block = block == "basic" ? BlockType::basic : BlockType::bottleneck;
    c.fusion = parse_fusion(j.at("fusion").get<std::string>());
    c.decoder_channels = j.at("decoder_channels").get<std::array<int, 4>>();
    c.depth_as_3ch = j.at("depth_as_3ch").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename T>
std::size_t ParamStore<T>::add(std::string name, Tensor<T> t) {
  names.push_back(std::move(name));
  tensors.push_back(std::move(t));
  return tensors.size() - 1;
}

template <typename T>
std::size_t ParamStore<T>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw std::out_of_range("no parameter named " + name);
}

template <typename T>
std::size_t ParamStore<T>::total_size() const {
  std::size_t s = 0;
  for (const auto& t : tensors) s += t.size();
  return s;
}

int norm_groups(int channels) { return std::max(1, channels / 8); }

template <typename T>
typename LacNet<T>::Conv LacNet<T>::make_conv(const std::string& name, int in, int out, int k, int stride,
                                              bool bias) {
  Conv c;
  c.stride = stride;
  c.pad = k / 2;
  Tensor<T> w(out, in, k, k);
  Rng rng(derive_seed(config_.seed, params_.size()));
  const double std_dev = std::sqrt(2.0 / (static_cast<double>(in) * k * k));
  for (auto& v : w.data) v = static_cast<T>(std_dev * rng.normal());
  c.weight = params_.add(name + ".weight", std::move(w));
  if (bias) c.bias = params_.add(name + ".bias", Tensor<T>(1, out, 1, 1));
  return c;
}

template <typename T>
typename LacNet<T>::Norm LacNet<T>::make_norm(const std::string& name, int channels) {
  Norm n;
  n.groups = norm_groups(channels);
  n.gamma = params_.add(name + ".gamma", Tensor<T>(1, channels, 1, 1, T{1}));
  n.beta = params_.add(name + ".beta", Tensor<T>(1, channels, 1, 1));
  return n;
}

template <typename T>
typename LacNet<T>::Encoder LacNet<T>::make_encoder(const std::string& prefix, int in_channels) {
  Encoder e;
  const int sc = config_.stem_channels;
  e.stem[0] = {make_conv(prefix + ".stem1", in_channels, sc, 3, 2, false), make_norm(prefix + ".stem1.norm", sc)};
  e.stem[1] = {make_conv(prefix + ".stem2", sc, sc, 3, 2, false), make_norm(prefix + ".stem2.norm", sc)};
  int in = sc;
  for (int s = 0; s < 4; ++s) {
    const int out = config_.channels[static_cast<std::size_t>(s)];
    for (int b = 0; b < config_.blocks_per_stage[static_cast<std::size_t>(s)]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      const std::string name = prefix + ".layer" + std::to_string(s + 1) + "." + std::to_string(b);
      Block blk;
      if (config_.block == BlockType::basic) {
        blk.layers.push_back({make_conv(name + ".conv1", in, out, 3, stride, false), make_norm(name + ".norm1", out)});
        blk.layers.push_back({make_conv(name + ".conv2", out, out, 3, 1, false), make_norm(name + ".norm2", out)});
      } else {
        const int mid = out / 4;
        blk.layers.push_back({make_conv(name + ".conv1", in, mid, 1, 1, false), make_norm(name + ".norm1", mid)});
        blk.layers.push_back({make_conv(name + ".conv2", mid, mid, 3, stride, false), make_norm(name + ".norm2", mid)});
        blk.layers.push_back({make_conv(name + ".conv3", mid, out, 1, 1, false), make_norm(name + ".norm3", out)});
      }
      if (stride != 1 || in != out) {
        blk.has_projection = true;
        blk.proj = make_conv(name + ".proj", in, out, 1, stride, false);
        blk.proj_norm = make_norm(name + ".proj.norm", out);
      }
      e.stages[static_cast<std::size_t>(s)].push_back(std::move(blk));
      in = out;
    }
  }
  return e;
}

template <typename T>
LacNet<T>::LacNet(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.fusion == FusionStrategy::stacked6ch) {
    encoders_.push_back(make_encoder("stacked", config_.stacked_channels()));
  } else {
    encoders_.push_back(make_encoder("rgb", 3));
    encoders_.push_back(make_encoder("depth", 1));
    for (int s = 0; s < 4; ++s) {
      const int c = config_.channels[static_cast<std::size_t>(s)];
      const std::string name = "fuse.stage" + std::to_string(s + 1);
      if (config_.fusion == FusionStrategy::linear) {
        // Starts as the mean of the two streams: W = [0.5 I | 0.5 I], b = 0.
        Conv conv;
        Tensor<T> w(c, 2 * c, 1, 1);
        for (int i = 0; i < c; ++i) {
          w.at(i, i, 0, 0) = T(0.5);
          w.at(i, c + i, 0, 0) = T(0.5);
        }
        conv.weight = params_.add(name + ".weight", std::move(w));
        conv.bias = params_.add(name + ".bias", Tensor<T>(1, c, 1, 1));
        fuse_proj_[static_cast<std::size_t>(s)] = conv;
      } else {
        fuse_proj_[static_cast<std::size_t>(s)] = make_conv(name, 2 * c, c, 1, 1, false);
        fuse_norm_[static_cast<std::size_t>(s)] = make_norm(name + ".norm", c);
      }
    }
  }
  int prev = 0;
  for (int i = 0; i < 4; ++i) {
    const int skip = config_.channels[static_cast<std::size_t>(3 - i)];
    const int out = config_.decoder_channels[static_cast<std::size_t>(i)];
    const std::string name = "decoder.step" + std::to_string(i + 1);
    decoder_[static_cast<std::size_t>(i)] = {make_conv(name, prev + skip + 2, out, 3, 1, false),
                                             make_norm(name + ".norm", out)};
    prev = out;
  }
  head_visible_ = make_conv("head.visible", prev, 1, 1, 1, true);
  head_amodal_ = make_conv("head.amodal", prev, 1, 1, 1, true);
}

template <typename T>
template <typename U>
LacNet<U> LacNet<T>::cast() const {
  LacNet<U> out(config_);
  for (std::size_t i = 0; i < params_.size(); ++i) out.params_.tensors[i] = params_.tensors[i].template cast<U>();
  return out;
}

template <typename T>
std::vector<Var> LacNet<T>::bind(Tape<T>& tape) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& t : params_.tensors) vars.push_back(tape.parameter(t));
  return vars;
}

template <typename T>
Var LacNet<T>::apply(Tape<T>& tape, const std::vector<Var>& bound, const Conv& c, Var x) const {
  return ops::conv2d(tape, x, bound[c.weight], c.bias == npos ? Var{} : bound[c.bias], {c.stride, c.pad});
}

template <typename T>
Var LacNet<T>::apply(Tape<T>& tape, const std::vector<Var>& bound, const Norm& n, Var x) const {
  return ops::group_norm(tape, x, bound[n.gamma], bound[n.beta], n.groups);
}

template <typename T>
FeaturePyramid LacNet<T>::run_encoder(Tape<T>& tape, const std::vector<Var>& bound, const Encoder& e, Var x) const {
  for (const auto& [conv, norm] : e.stem) x = ops::relu(tape, apply(tape, bound, norm, apply(tape, bound, conv, x)));
  FeaturePyramid out;
  for (std::size_t s = 0; s < 4; ++s) {
    for (const Block& blk : e.stages[s]) {
      Var h = x;
      for (std::size_t l = 0; l < blk.layers.size(); ++l) {
        h = apply(tape, bound, blk.layers[l].second, apply(tape, bound, blk.layers[l].first, h));
        if (l + 1 < blk.layers.size()) h = ops::relu(tape, h);
      }
      Var shortcut = blk.has_projection ? apply(tape, bound, blk.proj_norm, apply(tape, bound, blk.proj, x)) : x;
      x = ops::relu(tape, ops::add(tape, h, shortcut));
    }
    out[s] = x;
  }
  return out;
}

template <typename T>
FeaturePyramid LacNet<T>::encode(Tape<T>& tape, const std::vector<Var>& bound, Var patch, Stream stream) const {
  const int channels = tape.value(patch).c;
  const bool stacked = config_.fusion == FusionStrategy::stacked6ch;
  int expected = 0;
  const Encoder* enc = nullptr;
  switch (stream) {
    case Stream::rgb:
      expected = 3;
      enc = stacked ? nullptr : &encoders_[0];
      break;
    case Stream::depth:
      expected = 1;
      enc = stacked ? nullptr : &encoders_[1];
      break;
    case Stream::stacked:
      expected = config_.stacked_channels();
      enc = stacked ? &encoders_[0] : nullptr;
      break;
  }
  if (!enc) throw ConfigError("encode: stream not available for fusion strategy " + std::string(fusion_name(config_.fusion)));
  if (channels != expected)
    throw ConfigError("encode: stream expects " + std::to_string(expected) + " channels, got " +
                      std::to_string(channels));
  const Tensor<T>& v = tape.value(patch);
  if (v.h != config_.input_size || v.w != config_.input_size)
    throw ConfigError("encode: patch size does not match input_size");
  return run_encoder(tape, bound, *enc, patch);
}

template <typename T>
FeaturePyramid LacNet<T>::fuse(Tape<T>& tape, const std::vector<Var>& bound, const FeaturePyramid& rgb,
                               const FeaturePyramid& depth) const {
  if (config_.fusion == FusionStrategy::stacked6ch) return rgb;
  FeaturePyramid out;
  for (std::size_t s = 0; s < 4; ++s) {
    const auto& a = tape.value(rgb[s]);
    if (!a.same_shape(tape.value(depth[s])))
      throw std::invalid_argument("fuse: pyramid shapes differ at stage " + std::to_string(s + 1));
    Var cat = ops::concat_channels(tape, {rgb[s], depth[s]});
    Var y = apply(tape, bound, fuse_proj_[s], cat);
    if (config_.fusion == FusionStrategy::conv1x1) y = ops::relu(tape, apply(tape, bound, fuse_norm_[s], y));
    out[s] = y;
  }
  return out;
}

template <typename T>
Var LacNet<T>::attention_map(Tape<T>& tape, const FeaturePyramid& fused, const Tensor<T>& mask_patch) const {
  const Tensor<T>& top = tape.value(fused[3]);
  const int factor = mask_patch.h / top.h;
  return ops::mask_attention(tape, fused[3], kernels::area_downsample(mask_patch, factor));
}

template <typename T>
HeadOutputs LacNet<T>::complete(Tape<T>& tape, const std::vector<Var>& bound, const FeaturePyramid& fused,
                                const Tensor<T>& mask_patch, Var attention) const {
  Var x{};
  for (std::size_t i = 0; i < 4; ++i) {
    Var skip = fused[3 - i];
    const Tensor<T>& sv = tape.value(skip);
    std::vector<Var> parts;
    if (x.valid()) parts.push_back(ops::resize_bilinear(tape, x, sv.h, sv.w));
    parts.push_back(skip);
    parts.push_back(tape.constant(kernels::area_downsample(mask_patch, mask_patch.h / sv.h)));
    parts.push_back(ops::resize_bilinear(tape, attention, sv.h, sv.w));
    Var cat = ops::concat_channels(tape, parts);
    x = ops::relu(tape, apply(tape, bound, decoder_[i].second, apply(tape, bound, decoder_[i].first, cat)));
  }
  const int s = config_.input_size;
  HeadOutputs out;
  out.visible_logits = ops::resize_bilinear(tape, apply(tape, bound, head_visible_, x), s, s);
  out.amodal_logits = ops::resize_bilinear(tape, apply(tape, bound, head_amodal_, x), s, s);
  return out;
}

template <typename T>
HeadOutputs LacNet<T>::forward(Tape<T>& tape, const std::vector<Var>& bound, const Batch<T>& batch) const {
  FeaturePyramid fused;
  if (config_.fusion == FusionStrategy::stacked6ch) {
    std::vector<Var> parts{tape.constant(batch.rgb), tape.constant(batch.depth)};
    if (config_.depth_as_3ch) {
      parts.push_back(parts[1]);
      parts.push_back(parts[1]);
    }
    Var stacked = ops::concat_channels(tape, parts);
    fused = encode(tape, bound, stacked, Stream::stacked);
  } else {
    const FeaturePyramid rgb = encode(tape, bound, tape.constant(batch.rgb), Stream::rgb);
    const FeaturePyramid depth = encode(tape, bound, tape.constant(batch.depth), Stream::depth);
    fused = fuse(tape, bound, rgb, depth);
  }
  Var att = attention_map(tape, fused, batch.mask);
  return complete(tape, bound, fused, batch.mask, att);
}

template <typename T>
Var LacNet<T>::loss(Tape<T>& tape, const HeadOutputs& out, const Tensor<T>& target_amodal,
                    const Tensor<T>& target_visible) const {
  return ops::add(tape, ops::bce_with_logits(tape, out.amodal_logits, target_amodal),
                  ops::bce_with_logits(tape, out.visible_logits, target_visible));
}

template struct ParamStore<float>;
template struct ParamStore<double>;
template class LacNet<float>;
template class LacNet<double>;
template LacNet<double> LacNet<float>::cast<double>() const;
template LacNet<float> LacNet<double>::cast<float>() const;
template LacNet<float> LacNet<float>::cast<float>() const;

CropSample make_crop(const RgbdScene& scene, const Bitmap& visible_prior, int input_size, double expansion_factor,
                     const InstanceAnnotation* targets) {
  CropSample s;
  s.box = expand_bbox(bbox_of_mask(visible_prior), expansion_factor);
  auto rgb = crop_and_resize(to_float(scene.rgb), s.box, input_size, Interp::bilinear);
  auto depth = crop_and_resize(scene.depth, s.box, input_size, Interp::bilinear);
  auto norm = normalize_inputs(rgb, depth);
  s.rgb = std::move(norm.rgb);
  s.depth = std::move(norm.depth);
  s.mask = crop_and_resize(visible_prior, s.box, input_size);
  if (targets) {
    s.target_amodal = crop_and_resize(targets->amodal_mask, s.box, input_size);
    s.target_visible = crop_and_resize(targets->visible_mask, s.box, input_size);
  }
  return s;
}

template <typename T>
Batch<T> collate(const std::vector<CropSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("collate: empty batch");
  const int n = static_cast<int>(samples.size()), s = samples.front().rgb.width;
  Batch<T> b{Tensor<T>(n, 3, s, s), Tensor<T>(n, 1, s, s), Tensor<T>(n, 1, s, s), Tensor<T>(n, 1, s, s),
             Tensor<T>(n, 1, s, s)};
  const bool with_targets = !samples.front().target_amodal.data.empty();
  if (!with_targets) {
    b.target_amodal = {};
    b.target_visible = {};
  }
  for (int i = 0; i < n; ++i) {
    const auto& smp = samples[static_cast<std::size_t>(i)];
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) {
        for (int c = 0; c < 3; ++c) b.rgb.at(i, c, y, x) = static_cast<T>(smp.rgb.at(x, y, c));
        b.depth.at(i, 0, y, x) = static_cast<T>(smp.depth.at(x, y));
        b.mask.at(i, 0, y, x) = smp.mask.get(x, y) ? T{1} : T{0};
        if (with_targets) {
          b.target_amodal.at(i, 0, y, x) = smp.target_amodal.get(x, y) ? T{1} : T{0};
          b.target_visible.at(i, 0, y, x) = smp.target_visible.get(x, y) ? T{1} : T{0};
        }
      }
  }
  return b;
}

template Batch<float> collate(const std::vector<CropSample>&);
template Batch<double> collate(const std::vector<CropSample>&);

namespace {

float sigmoid(float z) { return z >= 0 ? 1.0f / (1.0f + std::exp(-z)) : std::exp(z) / (1.0f + std::exp(z)); }

Prediction crop_prediction(const Tensor<float>& amodal_logits, const Tensor<float>& visible_logits, int n) {
  const int s = amodal_logits.h;
  Prediction p{ProbMap(s, s, 1), ProbMap(s, s, 1), Bitmap(s, s), Bitmap(s, s)};
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      p.amodal_prob.at(x, y) = sigmoid(amodal_logits.at(n, 0, y, x));
      p.visible_prob.at(x, y) = sigmoid(visible_logits.at(n, 0, y, x));
      p.amodal_mask.set(x, y, p.amodal_prob.at(x, y) >= 0.5f);
      p.visible_mask.set(x, y, p.visible_prob.at(x, y) >= 0.5f);
    }
  return p;
}

}  // namespace

std::vector<InstancePrediction> predict_amodal_batch(const LacNet<float>& model, const RgbdScene& scene,
                                                     const std::vector<Bitmap>& visible_masks, int max_batch) {
  std::vector<InstancePrediction> out;
  out.reserve(visible_masks.size());
  const int s = model.config().input_size;
  for (std::size_t start = 0; start < visible_masks.size(); start += static_cast<std::size_t>(max_batch)) {
    const std::size_t end = std::min(visible_masks.size(), start + static_cast<std::size_t>(max_batch));
    std::vector<CropSample> crops;
    for (std::size_t i = start; i < end; ++i) crops.push_back(make_crop(scene, visible_masks[i], s));
    Batch<float> batch = collate<float>(crops);
    Tape<float> tape(false);
    const auto bound = model.bind(tape);
    const HeadOutputs heads = model.forward(tape, bound, batch);
    for (std::size_t i = start; i < end; ++i) {
      InstancePrediction ip;
      ip.box = crops[i - start].box;
      ip.crop = crop_prediction(tape.value(heads.amodal_logits), tape.value(heads.visible_logits),
                                static_cast<int>(i - start));
      ip.image.amodal_prob = paste_back_prob(ip.crop.amodal_prob, ip.box, scene.width(), scene.height());
      ip.image.visible_prob = paste_back_prob(ip.crop.visible_prob, ip.box, scene.width(), scene.height());
      ip.image.amodal_mask = paste_back(ip.crop.amodal_prob, ip.box, scene.width(), scene.height());
      ip.image.visible_mask = paste_back(ip.crop.visible_prob, ip.box, scene.width(), scene.height());
      out.push_back(std::move(ip));
    }
  }
  return out;
}

InstancePrediction predict_amodal(const LacNet<float>& model, const RgbdScene& scene, const Bitmap& visible_mask) {
  return predict_amodal_batch(model, scene, {visible_mask}).front();
}

}  // namespace lacnet
