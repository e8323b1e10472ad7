#include "vst/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vst/errors.hpp"

namespace vst {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  if (name.size() > 0xFFFF) throw DataError("tensor name too long: " + name);
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  out.put(static_cast<char>(t.rank()));
  for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t i = 0; i < t.numel(); ++i) {
    const float f = static_cast<float>(t[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

struct Reader {
  std::ifstream in;
  std::string path;
  std::size_t offset = 0;

  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw DataError("cannot open checkpoint " + p);
  }

  void read(void* dst, std::size_t n, const char* what) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw FormatError(path + ": truncated while reading " + what, offset);
    }
    offset += n;
  }

  std::uint16_t u16(const char* what) {
    unsigned char b[2];
    read(b, 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    read(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::pair<std::string, Tensor> tensor() {
    const std::uint16_t name_len = u16("tensor name length");
    std::string name(name_len, '\0');
    read(name.data(), name_len, "tensor name");
    unsigned char rank;
    read(&rank, 1, "tensor rank");
    std::vector<int> shape(rank);
    for (int i = 0; i < rank; ++i) shape[static_cast<std::size_t>(i)] = static_cast<int>(u32("tensor dim"));
    Tensor t(shape);
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const std::uint32_t bits = u32("tensor data");
      float f;
      std::memcpy(&f, &bits, 4);
      t[i] = static_cast<double>(f);
    }
    return {std::move(name), std::move(t)};
  }
};

nlohmann::json model_config_json(const ModelConfig& c) {
  return {{"feature_dim", c.feature_dim}, {"embed_dim", c.embed_dim},   {"img_hidden", c.img_hidden},
          {"sent_hidden", c.sent_hidden}, {"dec_hidden", c.dec_hidden}, {"img_layers", c.img_layers},
          {"dec_layers", c.dec_layers},   {"vocab_size", c.vocab_size}, {"max_sentence_len", c.max_sentence_len},
          {"window", c.window},           {"dropout_in", c.dropout_in}, {"dropout_pre_softmax", c.dropout_pre_softmax}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.feature_dim = j.at("feature_dim").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.img_hidden = j.at("img_hidden").get<int>();
  c.sent_hidden = j.at("sent_hidden").get<int>();
  c.dec_hidden = j.at("dec_hidden").get<int>();
  c.img_layers = j.at("img_layers").get<int>();
  c.dec_layers = j.at("dec_layers").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_sentence_len = j.at("max_sentence_len").get<int>();
  c.window = j.at("window").get<int>();
  c.dropout_in = j.at("dropout_in").get<double>();
  c.dropout_pre_softmax = j.at("dropout_pre_softmax").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const ModelParameters& params, const AdamState& adam, const Vocabulary& vocab,
                     const TrainConfig& train_cfg, const std::string& path) {
  if (vocab.size() != params.cfg.vocab_size) {
    throw ConfigError("checkpoint: vocabulary size " + std::to_string(vocab.size()) +
                      " does not match model vocab_size " + std::to_string(params.cfg.vocab_size));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);

  const auto named = params.named_tensors();
  const std::uint32_t count = static_cast<std::uint32_t>(named.size() + adam.m.size() + adam.v.size());
  out.write("VSCK", 4);
  put_u32(out, kVersion);
  put_u32(out, count);
  for (const auto& [name, tensor] : named) put_tensor(out, name, *tensor);
  for (const auto& [name, tensor] : adam.m) put_tensor(out, "adam.m." + name, tensor);
  for (const auto& [name, tensor] : adam.v) put_tensor(out, "adam.v." + name, tensor);

  nlohmann::json j;
  j["model"] = model_config_json(params.cfg);
  j["train"] = {{"learning_rate", train_cfg.learning_rate}, {"adam_beta1", train_cfg.adam_beta1},
                {"adam_beta2", train_cfg.adam_beta2},       {"adam_eps", train_cfg.adam_eps},
                {"batch_size", train_cfg.batch_size},       {"epochs", train_cfg.epochs},
                {"seed", train_cfg.seed},                   {"checkpoint_every", train_cfg.checkpoint_every}};
  j["adam_t"] = adam.t;
  j["vocab"] = vocab.tokens();
  j["embedding_trainable"] = params.embedding.trainable;
  const std::string text = j.dump();
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, "VSCK", 4) != 0) throw FormatError(path + ": bad magic, expected VSCK", 0);
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) throw FormatError(path + ": unsupported version " + std::to_string(version), 4);
  const std::uint32_t count = r.u32("tensor count");

  NamedTensors tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = r.tensor();
    if (!tensors.emplace(std::move(name), std::move(t)).second) {
      throw FormatError(path + ": duplicate tensor name", r.offset);
    }
  }

  const std::uint32_t json_len = r.u32("config length");
  std::string text(json_len, '\0');
  r.read(text.data(), json_len, "config JSON");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": invalid config JSON: " + std::string(e.what()), r.offset);
  }

  Checkpoint ck;
  const ModelConfig cfg = model_config_from_json(j.at("model"));
  ck.vocab = Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  if (ck.vocab.size() != cfg.vocab_size) {
    throw ConfigError(path + ": vocabulary has " + std::to_string(ck.vocab.size()) + " tokens but model expects " +
                      std::to_string(cfg.vocab_size));
  }
  Rng rng(0);
  ck.params = ModelParameters::init(cfg, rng);
  ck.params.embedding.trainable = j.value("embedding_trainable", true);
  for (auto& [name, tensor] : ck.params.named_tensors()) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ConfigError(path + ": missing tensor " + name);
    if (!it->second.same_shape(*tensor)) {
      throw ConfigError(path + ": tensor " + name + " has shape " + it->second.shape_str() + ", expected " +
                        tensor->shape_str());
    }
    *tensor = std::move(it->second);
  }

  ck.adam = AdamState::for_params(ck.params);
  ck.adam.t = j.at("adam_t").get<long>();
  for (auto& [name, tensor] : ck.adam.m) {
    auto it = tensors.find("adam.m." + name);
    if (it == tensors.end()) throw ConfigError(path + ": missing tensor adam.m." + name);
    tensor = std::move(it->second);
  }
  for (auto& [name, tensor] : ck.adam.v) {
    auto it = tensors.find("adam.v." + name);
    if (it == tensors.end()) throw ConfigError(path + ": missing tensor adam.v." + name);
    tensor = std::move(it->second);
  }

  const auto& tj = j.at("train");
  ck.train_cfg.learning_rate = tj.at("learning_rate").get<double>();
  ck.train_cfg.adam_beta1 = tj.at("adam_beta1").get<double>();
  ck.train_cfg.adam_beta2 = tj.at("adam_beta2").get<double>();
  ck.train_cfg.adam_eps = tj.at("adam_eps").get<double>();
  ck.train_cfg.batch_size = tj.at("batch_size").get<int>();
  ck.train_cfg.epochs = tj.at("epochs").get<int>();
  ck.train_cfg.seed = tj.at("seed").get<std::uint64_t>();
  ck.train_cfg.checkpoint_every = tj.at("checkpoint_every").get<int>();
  return ck;
}

}  // namespace vst
