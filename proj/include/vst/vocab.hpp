#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace vst {

std::vector<std::string> split_tokens(const std::string& sentence);

// Token↔index map with four reserved control tokens at fixed indices.
class Vocabulary {
 public:
  static constexpr int kNull = 0;
  static constexpr int kStart = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReservedCount = 4;
  static const char* reserved_token(int idx);  // "<NULL>", "<START>", "<END>", "<UNK>"

  // Counts over the given (training-split) sentences; keeps tokens seen at
  // least min_freq times, ordered by count descending then token ascending.
  static Vocabulary build(const std::vector<std::string>& sentences, int min_freq);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const;
  int lookup(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  // START, up to max_len tokens (OOV → UNK), END, NULL padding; always
  // exactly max_len+2 slots.
  std::vector<int> encode(const std::string& sentence, int max_len) const;
  // Space-joined words for the given ids, skipping control tokens.
  std::string decode_words(const std::vector<int>& ids) const;

  void save(const std::string& path) const;  // {"tokens": [...]}
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  void reindex();
};

// Same 22-slot layout as Vocabulary::encode, applied to already-generated
// word ids (greedy decoding feedback).
std::vector<int> encode_ids(const std::vector<int>& word_ids, int max_len);

}  // namespace vst
