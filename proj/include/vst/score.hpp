#pragma once

#include <array>
#include <string>
#include <vector>

#include "vst/bleu.hpp"

namespace vst {

struct StoryText {
  std::string story_id;
  std::vector<std::string> sentences;
};

// All values stored in [0,1]; the JSON report is printed on the 0–100 scale.
struct ScoreReport {
  std::array<double, 4> bleu{};
  std::array<double, 4> precisions{};
  double meteor = 0.0;
  long sentences = 0;
};

// Pairs sentences by position within story_id-aligned stories. BLEU is
// corpus-level over all sentence pairs; METEOR is averaged per sentence.
ScoreReport score_corpus(const std::vector<StoryText>& generated, const std::vector<StoryText>& reference);

// {"bleu": [..4], "precisions": [..4], "meteor": x, "sentences": n} ×100.
std::string score_report_json(const ScoreReport& report);

}  // namespace vst
