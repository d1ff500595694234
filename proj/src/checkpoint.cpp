#include "lacnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lacnet/errors.hpp"

namespace lacnet {
namespace {

constexpr char kMagic[8] = {'L', 'A', 'C', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename U>
U take(std::istream& is, const std::filesystem::path& path) {
  U v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(path.string() + ": truncated checkpoint");
  return v;
}

nlohmann::json shape_of(const Tensor<float>& t) { return {t.n, t.c, t.h, t.w}; }

void write_floats(std::ostream& os, const Tensor<float>& t) {
  os.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
}

Tensor<float> read_floats(std::istream& is, const nlohmann::json& shape, const std::filesystem::path& path) {
  Tensor<float> t(shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>(), shape.at(3).get<int>());
  if (!is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.size() * sizeof(float))))
    throw DataError(path.string() + ": truncated checkpoint");
  return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json header;
  header["model_config"] = to_json(ckpt.model_config);
  header["train_config"] = ckpt.train_config;
  header["step"] = ckpt.step;
  header["best_score"] = ckpt.best_score;
  header["dtype"] = "float32-le";
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < ckpt.params.size(); ++i)
    params.push_back({{"name", ckpt.params.names[i]}, {"shape", shape_of(ckpt.params.tensors[i])}});
  header["params"] = params;
  header["optimizer"] = ckpt.optimizer ? nlohmann::json{{"step", ckpt.optimizer->step}} : nlohmann::json(nullptr);
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError(tmp.string() + ": cannot open for writing");
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, kVersion);
    put<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : ckpt.params.tensors) write_floats(os, t);
    if (ckpt.optimizer) {
      for (const auto& t : ckpt.optimizer->m) write_floats(os, t);
      for (const auto& t : ckpt.optimizer->v) write_floats(os, t);
    }
    if (!os) throw DataError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path.string() + ": cannot open checkpoint");
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw DataError(path.string() + ": not a checkpoint file");
  const auto version = take<std::uint32_t>(is, path);
  if (version != kVersion) throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto len = take<std::uint64_t>(is, path);
  if (len > (1ull << 30)) throw DataError(path.string() + ": corrupt header length");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw DataError(path.string() + ": truncated checkpoint");

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.model_config = model_config_from_json(header.at("model_config"));
    ckpt.train_config = header.at("train_config");
    ckpt.step = header.at("step").get<std::int64_t>();
    ckpt.best_score = header.at("best_score").get<double>();
    for (const auto& p : header.at("params"))
      ckpt.params.add(p.at("name").get<std::string>(), read_floats(is, p.at("shape"), path));
    if (!header.at("optimizer").is_null()) {
      AdamWState st;
      st.step = header.at("optimizer").at("step").get<std::int64_t>();
      for (const auto& p : header.at("params")) st.m.push_back(read_floats(is, p.at("shape"), path));
      for (const auto& p : header.at("params")) st.v.push_back(read_floats(is, p.at("shape"), path));
      ckpt.optimizer = std::move(st);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad checkpoint header: " + e.what());
  }
  if (is.peek() != std::char_traits<char>::eof()) throw DataError(path.string() + ": trailing bytes in checkpoint");
  return ckpt;
}

LacNet<float> model_from_checkpoint(const Checkpoint& ckpt) {
  LacNet<float> model(ckpt.model_config);
  auto& p = model.params();
  if (p.size() != ckpt.params.size()) throw DataError("checkpoint parameter count does not match its model config");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.names[i] != ckpt.params.names[i] || !p.tensors[i].same_shape(ckpt.params.tensors[i]))
      throw DataError("checkpoint parameter '" + ckpt.params.names[i] + "' does not match the model");
    p.tensors[i] = ckpt.params.tensors[i];
  }
  return model;
}

}  // namespace lacnet
