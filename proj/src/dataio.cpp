#include "vst/dataio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vst/errors.hpp"

namespace vst {

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  std::ifstream in;
  std::string path;
  std::size_t offset = 0;

  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw DataError("cannot open file " + p);
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

  float f32(const char* what) {
    std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

}  // namespace

std::vector<StorySample> read_stories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stories file " + path);
  std::vector<StorySample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what(), 0);
    }
    StorySample s;
    try {
      s.story_id = j.at("story_id").get<std::string>();
      s.image_ids = j.at("image_ids").get<std::vector<std::string>>();
      s.sentences = j.at("sentences").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad story object: " + e.what(), 0);
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

void write_stories(const std::string& path, const std::vector<StorySample>& samples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write stories file " + path);
  for (const StorySample& s : samples) {
    nlohmann::json j;
    j["story_id"] = s.story_id;
    j["image_ids"] = s.image_ids;
    j["sentences"] = s.sentences;
    out << j.dump() << "\n";
  }
}

FeatureSet read_features(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, "VSF1", 4) != 0) throw FormatError(path + ": bad magic, expected VSF1", 0);
  const std::uint32_t count = r.u32("record count");
  const std::uint32_t dim = r.u32("feature dim");
  if (dim == 0) throw FormatError(path + ": zero feature dim", 8);
  FeatureSet fs;
  fs.dim = static_cast<int>(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t id_len = r.u16("id length");
    std::string id(id_len, '\0');
    r.read(id.data(), id_len, "id bytes");
    std::vector<float> values(dim);
    for (std::uint32_t j = 0; j < dim; ++j) values[j] = r.f32("feature value");
    fs.add(std::move(id), std::move(values));
  }
  return fs;
}

void write_features(const std::string& path, const FeatureSet& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature file " + path);
  out.write("VSF1", 4);
  put_u32(out, static_cast<std::uint32_t>(features.records.size()));
  put_u32(out, static_cast<std::uint32_t>(features.dim));
  for (const auto& [id, values] : features.records) {
    if (id.size() > 0xFFFF) throw DataError("feature id too long: " + id);
    put_u16(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float v : values) put_f32(out, v);
  }
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, int embed_dim, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path);

  EmbeddingTable table = EmbeddingTable::init(vocab.size(), embed_dim, rng);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string token;
    is >> token;
    const int id = vocab.contains(token) ? vocab.lookup(token) : -1;
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(embed_dim));
    double v;
    while (is >> v) row.push_back(v);
    if (static_cast<int>(row.size()) != embed_dim) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": embedding row for " + token + " has dim " +
                        std::to_string(row.size()) + ", expected " + std::to_string(embed_dim));
    }
    if (id >= Vocabulary::kReservedCount) {
      for (int j = 0; j < embed_dim; ++j) table.weights.at(id, j) = row[static_cast<std::size_t>(j)];
    }
  }
  return table;
}

FeatureSet synth_features(std::uint64_t seed, const std::vector<std::string>& ids, int dim) {
  if (dim < 1) throw ConfigError("synth_features: dim must be >= 1");
  FeatureSet fs;
  fs.dim = dim;
  for (const std::string& id : ids) {
    Rng rng(seed ^ fnv1a(id));
    std::vector<float> v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double x = rng.uniform(-1.0, 1.0);
      v[static_cast<std::size_t>(j)] = static_cast<float>(x);
      norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (int j = 0; j < dim; ++j) {
      v[static_cast<std::size_t>(j)] = static_cast<float>(static_cast<double>(v[static_cast<std::size_t>(j)]) * inv);
    }
    fs.add(id, std::move(v));
  }
  return fs;
}

}  // namespace vst
