#pragma once

#include <array>
#include <string>
#include <vector>

namespace vst {

struct BleuResult {
  std::array<double, 4> cumulative{};  // BLEU-1..4, in [0,1]
  std::array<double, 4> precisions{};  // modified n-gram precisions p1..p4
  double brevity_penalty = 1.0;
  long candidate_len = 0;
  long reference_len = 0;
};

// Corpus-level BLEU with one reference per candidate: clipped n-gram counts
// summed over the corpus, BP = min(1, e^(1−r/c)), cumulative BLEU-n =
// BP·exp(mean log p₁..p_n) with BLEU-n = 0 whenever some p_k, k ≤ n, is 0.
// An order with no candidate n-grams at all scores a vacuous 1.
BleuResult corpus_bleu(const std::vector<std::vector<std::string>>& candidates,
                       const std::vector<std::vector<std::string>>& references);

}  // namespace vst
