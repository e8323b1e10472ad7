#include "vst/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "vst/errors.hpp"
#include "vst/rng.hpp"

namespace vst {

void StorySample::validate() const {
  if (static_cast<int>(image_ids.size()) != kStoryLength || static_cast<int>(sentences.size()) != kStoryLength) {
    throw DataError("story " + story_id + " must have exactly " + std::to_string(kStoryLength) +
                    " image/sentence pairs");
  }
}

void FeatureSet::add(std::string id, std::vector<float> values) {
  if (dim == 0) dim = static_cast<int>(values.size());
  if (static_cast<int>(values.size()) != dim) {
    throw ConfigError("feature vector for " + id + " has dim " + std::to_string(values.size()) + ", expected " +
                      std::to_string(dim));
  }
  if (index.count(id)) throw DataError("duplicate feature id " + id);
  index[id] = records.size();
  records.emplace_back(std::move(id), std::move(values));
}

const std::vector<float>& FeatureSet::get(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) throw DataError("no feature vector for image id " + id);
  return records[it->second].second;
}

std::vector<std::vector<int>> make_windows(int n_images, int window) {
  if (window < 1) throw ConfigError("window must be >= 1");
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(n_images));
  for (int t = 0; t < n_images; ++t) {
    std::vector<int> w;
    for (int i = std::max(0, t - window + 1); i <= t; ++i) w.push_back(i);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> loss_mask_for(const std::vector<int>& curr_ids) {
  const int steps = static_cast<int>(curr_ids.size()) - 1;
  std::vector<double> mask(static_cast<std::size_t>(steps), 0.0);
  // Step t predicts curr_ids[t+1]; real predictions run through the END slot.
  for (int t = 0; t < steps; ++t) {
    mask[static_cast<std::size_t>(t)] = 1.0;
    if (curr_ids[static_cast<std::size_t>(t) + 1] == Vocabulary::kEnd) break;
  }
  return mask;
}

std::vector<TrainingInstance> build_instances(const StorySample& sample, const Vocabulary& vocab,
                                              const FeatureSet& features, int window, int max_len) {
  sample.validate();
  const auto windows = make_windows(kStoryLength, window);
  std::vector<TrainingInstance> out;
  out.reserve(kStoryLength);
  const std::vector<int> empty_prev = vocab.encode("", max_len);
  for (int t = 0; t < kStoryLength; ++t) {
    TrainingInstance inst;
    const auto& idx = windows[static_cast<std::size_t>(t)];
    inst.window_features = Tensor({static_cast<int>(idx.size()), features.dim});
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& vec = features.get(sample.image_ids[static_cast<std::size_t>(idx[k])]);
      for (int j = 0; j < features.dim; ++j) {
        inst.window_features.at(static_cast<int>(k), j) = static_cast<double>(vec[static_cast<std::size_t>(j)]);
      }
    }
    inst.curr_ids = vocab.encode(sample.sentences[static_cast<std::size_t>(t)], max_len);
    inst.prev_ids = t == 0 ? empty_prev : vocab.encode(sample.sentences[static_cast<std::size_t>(t) - 1], max_len);
    inst.loss_mask = loss_mask_for(inst.curr_ids);
    out.push_back(std::move(inst));
  }
  return out;
}

DatasetSplit split_dataset(std::vector<StorySample> samples, double train_ratio, double val_ratio, double test_ratio,
                           std::uint64_t seed) {
  if (std::fabs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  const std::size_t n = samples.size();
  const std::size_t parts = (train_ratio > 0) + (val_ratio > 0) + (test_ratio > 0);
  if (n < parts) throw ConfigError("fewer samples than requested partitions");

  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {  // Fisher–Yates
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(samples[i - 1], samples[j]);
  }

  const std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_ratio));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_ratio));
  DatasetSplit split;
  split.train.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(samples.begin() + static_cast<std::ptrdiff_t>(n_train),
                   samples.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(samples.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), samples.end());
  return split;
}

}  // namespace vst
