#include "vst/generate.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vst/errors.hpp"

namespace vst {

namespace {
int argmax_token(const Tensor& probs, bool allow_unk) {
  // NULL and START are control tokens, never emitted; END terminates.
  int best = -1;
  double best_p = -1.0;
  for (int v = 0; v < probs.dim(1); ++v) {
    if (v == Vocabulary::kNull || v == Vocabulary::kStart) continue;
    if (!allow_unk && v == Vocabulary::kUnk) continue;
    const double p = probs.at(0, v);
    if (p > best_p) {  // strict: ties keep the lowest index
      best_p = p;
      best = v;
    }
  }
  return best;
}
}  // namespace

std::vector<int> generate_sentence(const ModelParameters& params, const Tensor& window_features,
                                   const std::vector<int>& prev_ids, const GenerateOptions& opt) {
  const ModelConfig& cfg = params.cfg;
  if (window_features.rank() != 2 || window_features.dim(1) != cfg.feature_dim) {
    throw DimError("generate_sentence: window features must be [T_w×" + std::to_string(cfg.feature_dim) + "], got " +
                   window_features.shape_str());
  }
  Tape tape;
  BoundModel bound = bind_model(tape, params, /*for_training=*/false);
  Rng no_dropout(0);

  Tensor feats({1, window_features.dim(0), cfg.feature_dim}, window_features.vec());
  Var fvar = tape.leaf(std::move(feats));
  std::vector<Var> img_states = encode_images(tape, bound, cfg, fvar, /*training=*/false, no_dropout);
  Var sent_state = encode_prev_sentence(tape, bound, cfg, prev_ids, 1, /*training=*/false, no_dropout);
  std::vector<Var> states = init_decoder_state(tape, cfg, img_states, sent_state);

  std::vector<int> words;
  int token = Vocabulary::kStart;
  for (int step = 0; step < cfg.max_sentence_len; ++step) {
    Var e = tape.embed(bound.embedding, {token}, 1, 1);
    Var h = tape.slice_time(e, 0);
    for (std::size_t layer = 0; layer < states.size(); ++layer) {
      h = gru_step(tape, bound.decoder[layer], h, states[layer]);
      states[layer] = h;
    }
    Var probs = tape.softmax_rows(tape.add(tape.matmul(h, bound.w_out), bound.b_out));
    const int next = argmax_token(tape.val(probs), opt.allow_unk);
    if (next == Vocabulary::kEnd) break;
    words.push_back(next);
    token = next;
  }
  return encode_ids(words, cfg.max_sentence_len);
}

std::vector<std::vector<int>> generate_story(const ModelParameters& params, const std::vector<Tensor>& features,
                                             const GenerateOptions& opt) {
  const ModelConfig& cfg = params.cfg;
  if (static_cast<int>(features.size()) != kStoryLength) {
    throw DataError("generate_story: expected " + std::to_string(kStoryLength) + " feature vectors, got " +
                    std::to_string(features.size()));
  }
  for (const Tensor& f : features) {
    if (f.rank() != 1 || f.dim(0) != cfg.feature_dim) {
      throw DimError("generate_story: each feature vector must be [" + std::to_string(cfg.feature_dim) + "], got " +
                     f.shape_str());
    }
  }
  const auto windows = make_windows(kStoryLength, cfg.window);
  std::vector<std::vector<int>> sentences;
  std::vector<int> prev = encode_ids({}, cfg.max_sentence_len);
  for (int t = 0; t < kStoryLength; ++t) {
    const auto& idx = windows[static_cast<std::size_t>(t)];
    Tensor window({static_cast<int>(idx.size()), cfg.feature_dim});
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::memcpy(window.data() + k * static_cast<std::size_t>(cfg.feature_dim),
                  features[static_cast<std::size_t>(idx[k])].data(),
                  sizeof(double) * static_cast<std::size_t>(cfg.feature_dim));
    }
    std::vector<int> encoded = generate_sentence(params, window, prev, opt);
    prev = encoded;
    sentences.push_back(std::move(encoded));
  }
  return sentences;
}

std::vector<GeneratedStory> generate_stories(const ModelParameters& params, const Vocabulary& vocab,
                                             const std::vector<StorySample>& stories, const FeatureSet& features,
                                             int jobs, const GenerateOptions& opt) {
  const int n = static_cast<int>(stories.size());
  std::vector<GeneratedStory> out(static_cast<std::size_t>(n));
  if (jobs < 1) jobs = 1;

#pragma omp parallel for schedule(static) num_threads(jobs) if (jobs > 1)
  for (int i = 0; i < n; ++i) {
    const StorySample& s = stories[static_cast<std::size_t>(i)];
    s.validate();
    std::vector<Tensor> feats;
    feats.reserve(kStoryLength);
    for (const std::string& id : s.image_ids) {
      const std::vector<float>& v = features.get(id);
      Tensor f({static_cast<int>(v.size())});
      for (std::size_t j = 0; j < v.size(); ++j) f[j] = static_cast<double>(v[j]);
      feats.push_back(std::move(f));
    }
    GeneratedStory g;
    g.story_id = s.story_id;
    for (const auto& encoded : generate_story(params, feats, opt)) {
      g.sentences.push_back(vocab.decode_words(encoded));
    }
    g.references = s.sentences;
    out[static_cast<std::size_t>(i)] = std::move(g);
  }
  return out;
}

void write_generated(const std::string& path, const std::vector<GeneratedStory>& stories, bool include_references) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write generated stories to " + path);
  for (const GeneratedStory& g : stories) {
    nlohmann::json j;
    j["story_id"] = g.story_id;
    j["generated"] = g.sentences;
    if (include_references && !g.references.empty()) j["reference"] = g.references;
    out << j.dump() << "\n";
  }
}

std::vector<GeneratedStory> read_generated(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open generated stories file " + path);
  std::vector<GeneratedStory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what(), 0);
    }
    GeneratedStory g;
    try {
      g.story_id = j.at("story_id").get<std::string>();
      if (j.contains("generated")) {
        g.sentences = j.at("generated").get<std::vector<std::string>>();
      } else {
        g.sentences = j.at("sentences").get<std::vector<std::string>>();
      }
      if (j.contains("reference")) g.references = j.at("reference").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad story object: " + e.what(), 0);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace vst
