#include "vst/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "vst/errors.hpp"

namespace vst {

std::vector<std::string> split_tokens(const std::string& sentence) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && sentence[i] == ' ') ++i;
    std::size_t j = i;
    while (j < sentence.size() && sentence[j] != ' ') ++j;
    if (j > i) out.push_back(sentence.substr(i, j - i));
    i = j;
  }
  return out;
}

const char* Vocabulary::reserved_token(int idx) {
  switch (idx) {
    case kNull: return "<NULL>";
    case kStart: return "<START>";
    case kEnd: return "<END>";
    case kUnk: return "<UNK>";
    default: throw IndexError("no reserved token at index " + std::to_string(idx));
  }
}

void Vocabulary::reindex() {
  index_.clear();
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) index_[tokens_[static_cast<std::size_t>(i)]] = i;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& sentences, int min_freq) {
  if (sentences.empty()) throw ConfigError("build_vocab: empty corpus");
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be >= 1");
  // std::map keeps tie handling independent of hash order.
  std::map<std::string, long> counts;
  for (const std::string& s : sentences) {
    for (const std::string& tok : split_tokens(s)) ++counts[tok];
  }
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_freq) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (int i = 0; i < kReservedCount; ++i) v.tokens_.emplace_back(reserved_token(i));
  for (const auto& [tok, n] : kept) v.tokens_.push_back(tok);
  v.reindex();
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kReservedCount) throw ConfigError("vocabulary must start with the four control tokens");
  for (int i = 0; i < kReservedCount; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != reserved_token(i)) {
      throw ConfigError("vocabulary slot " + std::to_string(i) + " must be " + reserved_token(i) + ", found " +
                        tokens[static_cast<std::size_t>(i)]);
    }
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.reindex();
  if (v.index_.size() != v.tokens_.size()) throw ConfigError("vocabulary contains duplicate tokens");
  return v;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw IndexError("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& sentence, int max_len) const {
  std::vector<std::string> words = split_tokens(sentence);
  if (static_cast<int>(words.size()) > max_len) words.resize(static_cast<std::size_t>(max_len));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(max_len) + 2);
  out.push_back(kStart);
  for (const std::string& w : words) out.push_back(lookup(w));
  out.push_back(kEnd);
  out.resize(static_cast<std::size_t>(max_len) + 2, kNull);
  return out;
}

std::string Vocabulary::decode_words(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kStart || id == kNull) continue;
    if (id == kEnd) break;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  nlohmann::json j;
  j["tokens"] = tokens_;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file " + path);
  out << j.dump() << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("vocabulary file " + path + " is not valid JSON: " + e.what(), 0);
  }
  if (!j.contains("tokens") || !j["tokens"].is_array()) {
    throw FormatError("vocabulary file " + path + " missing \"tokens\" array", 0);
  }
  return from_tokens(j["tokens"].get<std::vector<std::string>>());
}

std::vector<int> encode_ids(const std::vector<int>& word_ids, int max_len) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(max_len) + 2);
  out.push_back(Vocabulary::kStart);
  for (std::size_t i = 0; i < word_ids.size() && i < static_cast<std::size_t>(max_len); ++i) {
    out.push_back(word_ids[i]);
  }
  out.push_back(Vocabulary::kEnd);
  out.resize(static_cast<std::size_t>(max_len) + 2, Vocabulary::kNull);
  return out;
}

}  // namespace vst
