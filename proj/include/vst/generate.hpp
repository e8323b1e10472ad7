#pragma once

#include <string>
#include <vector>

#include "vst/dataset.hpp"
#include "vst/model.hpp"
#include "vst/vocab.hpp"

namespace vst {

struct GenerateOptions {
  bool allow_unk = true;  // when false, takes the next-best token instead
};

// Greedy decoding of one sentence, inference mode. window_features is
// [T_w×feature_dim]; prev_ids is a full 22-slot encoded sentence. Feeds
// START, emits the argmax token each step (ties to the lowest index; NULL
// and START are never emitted), stops on END or after max_sentence_len
// words. Returns the sentence re-encoded to the 22-slot layout.
std::vector<int> generate_sentence(const ModelParameters& params, const Tensor& window_features,
                                   const std::vector<int>& prev_ids, const GenerateOptions& opt = {});

// Full story loop: sentence t sees the window of make_windows()[t] images
// and the re-encoded sentence t−1 (the empty-sentence encoding at t=0).
// features holds one [feature_dim] row per image, exactly kStoryLength.
std::vector<std::vector<int>> generate_story(const ModelParameters& params, const std::vector<Tensor>& features,
                                             const GenerateOptions& opt = {});

struct GeneratedStory {
  std::string story_id;
  std::vector<std::string> sentences;   // decoded words
  std::vector<std::string> references;  // source sentences, kept for scoring
};

// Generation across stories; `jobs` > 1 distributes stories over threads,
// output order fixed by input order (results are identical to serial).
std::vector<GeneratedStory> generate_stories(const ModelParameters& params, const Vocabulary& vocab,
                                             const std::vector<StorySample>& stories, const FeatureSet& features,
                                             int jobs = 1, const GenerateOptions& opt = {});

// Output JSON Lines: {"story_id", "generated": [5], "reference": [5]?}.
void write_generated(const std::string& path, const std::vector<GeneratedStory>& stories, bool include_references);
// Accepts the "generated" key or, for reference files, "sentences".
std::vector<GeneratedStory> read_generated(const std::string& path);

}  // namespace vst
