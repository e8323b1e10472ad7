#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vst/tensor.hpp"
#include "vst/vocab.hpp"

namespace vst {

struct StorySample {
  std::string story_id;
  std::vector<std::string> image_ids;  // exactly 5
  std::vector<std::string> sentences;  // exactly 5, space-tokenized
  void validate() const;
};

inline constexpr int kStoryLength = 5;

// Image-id → feature vector source. Values stay in 32-bit storage precision;
// record order is preserved so file round-trips are bit-exact.
struct FeatureSet {
  int dim = 0;
  std::vector<std::pair<std::string, std::vector<float>>> records;
  std::unordered_map<std::string, std::size_t> index;

  void add(std::string id, std::vector<float> values);
  const std::vector<float>& get(const std::string& id) const;  // DataError naming the id
  bool contains(const std::string& id) const { return index.count(id) > 0; }
};

struct TrainingInstance {
  Tensor window_features;        // [T_w × feature_dim]
  std::vector<int> prev_ids;     // slots
  std::vector<int> curr_ids;     // slots
  std::vector<double> loss_mask; // slots−1; 1 through the END prediction
  int window_len() const { return window_features.dim(0); }
};

// Image indices feeding sentence t: [max(0, t−window+1) .. t].
std::vector<std::vector<int>> make_windows(int n_images, int window);

// Loss mask for an encoded sentence: 1 for each word prediction and the END
// prediction, 0 for padding; Σmask = (#words)+1.
std::vector<double> loss_mask_for(const std::vector<int>& curr_ids);

// One instance per sentence position; prev of sentence 0 is the
// empty-sentence encoding [START, END, NULL...].
std::vector<TrainingInstance> build_instances(const StorySample& sample, const Vocabulary& vocab,
                                              const FeatureSet& features, int window, int max_len);

struct DatasetSplit {
  std::vector<StorySample> train, val, test;
};

// Deterministic shuffle by seed, then story-level partition.
DatasetSplit split_dataset(std::vector<StorySample> samples, double train_ratio, double val_ratio, double test_ratio,
                           std::uint64_t seed);

}  // namespace vst
