#include "vst/meteor.hpp"

#include <cstdint>
#include <unordered_map>

#include "vst/errors.hpp"
#include "vst/stemmer.hpp"

namespace vst {

namespace {

constexpr int kNoPrev = 63;  // sentinel ref position: previous gen word unmatched

struct Key {
  std::uint64_t mask;
  std::uint32_t ij;  // (gen position << 6) | prev ref position
  bool operator==(const Key& o) const { return mask == o.mask && ij == o.ij; }
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::uint64_t h = k.mask ^ (static_cast<std::uint64_t>(k.ij) * 0x9E3779B97F4A7C15ULL);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

struct Result {
  int matches;
  int chunks;
};

bool better(const Result& a, const Result& b) {
  if (a.matches != b.matches) return a.matches > b.matches;
  return a.chunks < b.chunks;
}

struct Aligner {
  std::vector<std::vector<int>> candidates;  // per gen position: matchable ref positions
  std::unordered_map<Key, Result, KeyHash> memo;
  int n = 0;

  Result solve(int i, std::uint64_t mask, int j_prev) {
    if (i == n) return {0, 0};
    const Key key{mask, static_cast<std::uint32_t>((i << 6) | j_prev)};
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;

    Result best = solve(i + 1, mask, kNoPrev);  // leave gen word i unmatched
    for (int j : candidates[static_cast<std::size_t>(i)]) {
      if (mask & (1ULL << j)) continue;
      const bool continues = j_prev != kNoPrev && j == j_prev + 1;
      Result sub = solve(i + 1, mask | (1ULL << j), j);
      sub.matches += 1;
      sub.chunks += continues ? 0 : 1;
      if (better(sub, best)) best = sub;
    }
    memo.emplace(key, best);
    return best;
  }
};

}  // namespace

MeteorAlignment meteor_align(const std::vector<std::string>& generated, const std::vector<std::string>& reference) {
  if (reference.size() >= kNoPrev) {
    throw ConfigError("meteor: reference longer than " + std::to_string(kNoPrev - 1) + " tokens is unsupported");
  }
  Aligner a;
  a.n = static_cast<int>(generated.size());
  a.candidates.resize(generated.size());

  std::vector<std::string> ref_stems;
  ref_stems.reserve(reference.size());
  for (const auto& w : reference) ref_stems.push_back(porter_stem(w));

  for (std::size_t i = 0; i < generated.size(); ++i) {
    const std::string stem = porter_stem(generated[i]);
    for (std::size_t j = 0; j < reference.size(); ++j) {
      if (generated[i] == reference[j] || stem == ref_stems[j]) {
        a.candidates[i].push_back(static_cast<int>(j));
      }
    }
  }

  const Result r = a.solve(0, 0, kNoPrev);
  return {r.matches, r.chunks};
}

double meteor_lite(const std::vector<std::string>& generated, const std::vector<std::string>& reference) {
  if (generated.empty() || reference.empty()) return 0.0;
  const MeteorAlignment al = meteor_align(generated, reference);
  if (al.matches == 0) return 0.0;
  const double m = static_cast<double>(al.matches);
  const double precision = m / static_cast<double>(generated.size());
  const double recall = m / static_cast<double>(reference.size());
  const double f = 10.0 * precision * recall / (recall + 9.0 * precision);
  const double frag = static_cast<double>(al.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return f * (1.0 - penalty);
}

}  // namespace vst
