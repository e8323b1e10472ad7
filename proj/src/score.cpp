#include "vst/score.hpp"

#include <unordered_map>

#include <json.hpp>

#include "vst/errors.hpp"
#include "vst/meteor.hpp"
#include "vst/vocab.hpp"

namespace vst {

ScoreReport score_corpus(const std::vector<StoryText>& generated, const std::vector<StoryText>& reference) {
  if (generated.empty()) throw ConfigError("score: empty generated corpus");
  std::unordered_map<std::string, std::size_t> ref_index;
  for (std::size_t i = 0; i < reference.size(); ++i) ref_index[reference[i].story_id] = i;

  std::vector<std::vector<std::string>> gen_tokens;
  std::vector<std::vector<std::string>> ref_tokens;
  for (const StoryText& g : generated) {
    auto it = ref_index.find(g.story_id);
    if (it == ref_index.end()) throw DataError("score: no reference for story_id " + g.story_id);
    const StoryText& r = reference[it->second];
    if (g.sentences.size() != r.sentences.size()) {
      throw DataError("score: story " + g.story_id + " has " + std::to_string(g.sentences.size()) +
                      " generated but " + std::to_string(r.sentences.size()) + " reference sentences");
    }
    for (std::size_t s = 0; s < g.sentences.size(); ++s) {
      gen_tokens.push_back(split_tokens(g.sentences[s]));
      ref_tokens.push_back(split_tokens(r.sentences[s]));
    }
  }

  ScoreReport rep;
  rep.sentences = static_cast<long>(gen_tokens.size());
  const BleuResult bleu = corpus_bleu(gen_tokens, ref_tokens);
  rep.bleu = bleu.cumulative;
  rep.precisions = bleu.precisions;
  double meteor_sum = 0.0;
  for (std::size_t i = 0; i < gen_tokens.size(); ++i) {
    meteor_sum += meteor_lite(gen_tokens[i], ref_tokens[i]);
  }
  rep.meteor = meteor_sum / static_cast<double>(gen_tokens.size());
  return rep;
}

std::string score_report_json(const ScoreReport& report) {
  nlohmann::json j;
  j["bleu"] = {report.bleu[0] * 100.0, report.bleu[1] * 100.0, report.bleu[2] * 100.0, report.bleu[3] * 100.0};
  j["precisions"] = {report.precisions[0] * 100.0, report.precisions[1] * 100.0, report.precisions[2] * 100.0,
                     report.precisions[3] * 100.0};
  j["meteor"] = report.meteor * 100.0;
  j["sentences"] = report.sentences;
  return j.dump();
}

}  // namespace vst
