#pragma once

#include <string>
#include <vector>

namespace vst {

struct MeteorAlignment {
  int matches = 0;
  int chunks = 0;
};

// Word alignment between a generated and a reference sentence. Candidate
// pairs match exactly or by Porter stem; each word is used at most once.
// Exhaustive (memoized) search maximizes matches, then minimizes chunks —
// maximal runs that are contiguous and identically ordered in both
// sentences.
MeteorAlignment meteor_align(const std::vector<std::string>& generated, const std::vector<std::string>& reference);

// P = m/|gen|, R = m/|ref|, F = 10PR/(R+9P), penalty = 0.5·(chunks/m)³,
// score = F·(1−penalty). Zero when there are no matches or either side is
// empty.
double meteor_lite(const std::vector<std::string>& generated, const std::vector<std::string>& reference);

}  // namespace vst
