#include "fidkit/toy_model.hpp"

#include <cmath>
#include <cstdio>

#include "fidkit/errors.hpp"
#include "fidkit/rng.hpp"
#include "fidkit/tokenizer.hpp"

namespace fidkit {

namespace {

// Per-tensor scales keep activations O(1) through the stack and give the LM
// head a logit spread wide enough that softmax confidences cover (0, 1).
float init_scale(const std::string& name, const ModelConfig& cfg) {
  if (name == "shared.embedding") return 2.5f;
  if (name.ends_with(".norm") || name.ends_with("final_norm")) return 0.05f;
  if (name.ends_with(".rel_bias")) return 0.5f;
  // Wide logit spread so softmax confidences cover (0, 1).
  if (name == "lm_head") return 4.0f / std::sqrt(static_cast<float>(cfg.d_model));
  if (name.ends_with(".wo")) return 1.0f / std::sqrt(static_cast<float>(cfg.d_ff));
  if (name.ends_with(".o")) {
    return 1.0f / std::sqrt(static_cast<float>(cfg.n_heads * cfg.d_kv));
  }
  return 1.0f / std::sqrt(static_cast<float>(cfg.d_model));
}

bool is_norm(const std::string& name) {
  return name.ends_with(".norm") || name.ends_with("final_norm");
}

}  // namespace

TensorMap make_toy_tensors(const ModelConfig& config, std::uint64_t seed, bool untied_head) {
  config.validate();
  Rng rng(seed);
  TensorMap tensors;

  std::vector<TensorSpec> specs = required_tensors(config);
  if (untied_head) specs.push_back(lm_head_spec(config));

  for (const TensorSpec& spec : specs) {
    Tensor t(spec.shape);
    const float scale = init_scale(spec.name, config);
    const float base = is_norm(spec.name) ? 1.0f : 0.0f;
    for (float& v : t.data) {
      v = base + scale * static_cast<float>(rng.next_normal());
    }
    if (spec.name == "shared.embedding") {
      // A zero pad/start embedding: with a tied head a nonzero start vector
      // feeds itself back through the residual stream and collapses toy
      // generations onto the pad token.
      std::fill_n(t.data.begin(), config.d_model, 0.0f);
    }
    tensors.emplace(spec.name, std::move(t));
  }
  return tensors;
}

void write_toy_model(const ModelConfig& config, std::uint64_t seed, const std::string& path,
                     bool untied_head) {
  save_container(path, make_toy_tensors(config, seed, untied_head));
}

std::vector<std::string> toy_vocab(int vocab_size) {
  if (vocab_size < 4) throw_usage("vocab size must be at least 4");
  static const char* kWords[] = {
      "question:", "title:", "context:", "the", "a", "an", "of", "and", "to", "in", "is", "was",
      "it", "for", "on", "as", "with", "by", "at", "from", "that", "this", "are", "be", "or",
      "not", "what", "who", "when", "where", "why", "how", "which", "did", "does", "do", "can",
      "its", "into", "about", "first", "city", "river", "mountain", "country", "capital",
      "ocean", "island", "bridge", "tower", "museum", "library", "castle", "harbor", "valley",
      "forest", "desert", "glacier", "volcano", "lake", "coast", "plain", "plateau", "canyon",
      "reef", "lighthouse", "built", "founded", "named", "located", "opened", "between",
      "north", "south", "east", "west", "largest", "smallest", "longest", "oldest", "known",
      "famous", "ancient", "modern", "stone", "iron", "copper", "silver", "water", "fire",
      "wind", "light", "engine", "train", "ship", "plane", "road", "market", "festival",
      "winter", "summer", "spring", "autumn", "year", "years", "century", "people", "king",
      "queen", "emperor", "explorer", "painter", "poet", "scientist", "inventor", "astronomer",
      "historian", "architect", "composer", "sailor", "merchant", "farmer", "miner", "works",
      "history", "region", "border", "trade", "route", "empire", "kingdom", "republic",
      "village", "town", "port", "station", "garden", "park", "temple", "palace", "wall",
      "gate", "square", "street", "answer", "passage", "document", "text", "story", "legend",
      "record", "source", "note", "early", "late", "during", "after", "before", "under",
      "over", "near", "far", "high", "low", "deep", "wide", "long", "short", "old", "new",
      "red", "blue", "green", "white", "black", "golden", "grey", "northern", "southern",
      "eastern", "western", "central", "upper", "lower", "great", "little", "famous", "rare",
      "common", "local", "royal", "national", "worth", "made", "used", "found", "grown",
      "carried", "crossed", "reached", "discovered", "measured", "recorded", "described",
      "visited", "painted", "composed", "designed", "invented", "observed", "charted",
      "mapped", "sailed", "climbed", "flows", "rises", "stands", "spans", "holds", "covers",
      "borders", "contains", "produces", "exports", "celebrates", "hosts", "attracts",
      "stretches", "connects", "divides", "surrounds", "overlooks", "guards",
  };
  constexpr int kWordCount = static_cast<int>(sizeof(kWords) / sizeof(kWords[0]));

  std::vector<std::string> vocab = {"<pad>", "</s>", "<unk>"};
  vocab.reserve(static_cast<std::size_t>(vocab_size));

  // Byte tokens only when the full fallback set fits alongside some words.
  if (vocab_size >= 3 + 256 + 16) {
    for (unsigned b = 0; b < 256; ++b) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "<0x%02X>", b);
      vocab.emplace_back(buf);
    }
  }
  for (int w = 0; w < kWordCount && static_cast<int>(vocab.size()) < vocab_size; ++w) {
    vocab.emplace_back(kWords[w]);
  }
  for (int i = 0; static_cast<int>(vocab.size()) < vocab_size; ++i) {
    vocab.push_back("tok" + std::to_string(i));
  }
  vocab.resize(static_cast<std::size_t>(vocab_size));
  return vocab;
}

void write_toy_vocab(int vocab_size, const std::string& path) {
  Tokenizer::from_tokens(toy_vocab(vocab_size)).save(path);
}

}  // namespace fidkit
