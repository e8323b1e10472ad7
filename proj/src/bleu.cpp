#include "vst/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vst/errors.hpp"

namespace vst {

namespace {
using NgramCounts = std::map<std::vector<std::string>, long>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  const int limit = static_cast<int>(tokens.size()) - n + 1;
  for (int i = 0; i < limit; ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}
}  // namespace

BleuResult corpus_bleu(const std::vector<std::vector<std::string>>& candidates,
                       const std::vector<std::vector<std::string>>& references) {
  if (candidates.empty()) throw ConfigError("bleu: empty corpus");
  if (candidates.size() != references.size()) {
    throw ConfigError("bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                      std::to_string(references.size()) + " references");
  }

  BleuResult res;
  std::array<long, 4> clipped{};
  std::array<long, 4> total{};
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto& cand = candidates[s];
    const auto& ref = references[s];
    res.candidate_len += static_cast<long>(cand.size());
    res.reference_len += static_cast<long>(ref.size());
    for (int n = 1; n <= 4; ++n) {
      const NgramCounts cc = count_ngrams(cand, n);
      const NgramCounts rc = count_ngrams(ref, n);
      for (const auto& [gram, count] : cc) {
        auto it = rc.find(gram);
        const long ref_count = it == rc.end() ? 0 : it->second;
        clipped[static_cast<std::size_t>(n - 1)] += std::min(count, ref_count);
        total[static_cast<std::size_t>(n - 1)] += count;
      }
    }
  }

  for (int n = 0; n < 4; ++n) {
    res.precisions[static_cast<std::size_t>(n)] =
        total[static_cast<std::size_t>(n)] == 0
            ? 1.0
            : static_cast<double>(clipped[static_cast<std::size_t>(n)]) / static_cast<double>(total[static_cast<std::size_t>(n)]);
  }

  if (res.candidate_len == 0) {
    res.brevity_penalty = 0.0;
  } else if (res.candidate_len > res.reference_len) {
    res.brevity_penalty = 1.0;
  } else {
    res.brevity_penalty = std::exp(1.0 - static_cast<double>(res.reference_len) / static_cast<double>(res.candidate_len));
  }

  for (int n = 1; n <= 4; ++n) {
    double log_sum = 0.0;
    bool zero = false;
    for (int k = 0; k < n; ++k) {
      const double p = res.precisions[static_cast<std::size_t>(k)];
      if (p <= 0.0) {
        zero = true;
        break;
      }
      log_sum += std::log(p);
    }
    res.cumulative[static_cast<std::size_t>(n - 1)] =
        zero ? 0.0 : res.brevity_penalty * std::exp(log_sum / static_cast<double>(n));
  }
  return res;
}

}  // namespace vst
