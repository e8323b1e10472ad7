#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vst/dataset.hpp"
#include "vst/gru.hpp"
#include "vst/vocab.hpp"

namespace vst {

// Stories file: JSON Lines, one object per story with "story_id",
// "image_ids" (5 strings) and "sentences" (5 strings).
std::vector<StorySample> read_stories(const std::string& path);
void write_stories(const std::string& path, const std::vector<StorySample>& samples);

// Feature file, binary little-endian:
//   magic "VSF1" | u32 count | u32 dim
//   per record: u16 id length | id bytes | dim × f32
FeatureSet read_features(const std::string& path);
void write_features(const std::string& path, const FeatureSet& features);

// Pretrained embedding text: token followed by embed_dim reals per line.
// Rows for vocabulary tokens found in the file are copied; control tokens
// and words absent from the file are drawn from rng in ±0.05.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, int embed_dim, Rng& rng);

// Deterministic unit-norm pseudo-random vectors, one per id; the id and the
// seed fully determine each vector.
FeatureSet synth_features(std::uint64_t seed, const std::vector<std::string>& ids, int dim);

}  // namespace vst
