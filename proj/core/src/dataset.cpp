#include "fidkit/dataset.hpp"

#include <fstream>

#include "fidkit/errors.hpp"
#include "json.hpp"

namespace fidkit {

using nlohmann::json;

std::vector<FidInput> load_dataset(const std::string& path, bool gold_first) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open dataset '" + path + "'");

  std::vector<FidInput> inputs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw_data(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    FidInput input;
    try {
      input.question = j.at("question").get<std::string>();
      for (const json& p : j.at("passages")) {
        Passage passage;
        passage.title = p.value("title", "");
        passage.context = p.at("text").get<std::string>();
        passage.is_gold = p.value("is_gold", false);
        input.passages.push_back(std::move(passage));
      }
      if (j.contains("answer") && !j.at("answer").is_null()) {
        input.reference_answer = j.at("answer").get<std::string>();
      }
    } catch (const json::exception& e) {
      throw_data(path + ":" + std::to_string(line_no) + ": missing field: " + e.what());
    }
    int gold_count = 0;
    for (const Passage& p : input.passages) gold_count += p.is_gold ? 1 : 0;
    if (gold_count > 1) {
      throw_data(path + ":" + std::to_string(line_no) + ": more than one gold passage");
    }
    if (gold_first && gold_count == 1) {
      std::stable_sort(input.passages.begin(), input.passages.end(),
                       [](const Passage& a, const Passage& b) { return a.is_gold > b.is_gold; });
    }
    inputs.push_back(std::move(input));
  }
  return inputs;
}

std::string generation_result_to_json(const GenerationResult& result) {
  json j = {
      {"token_ids", result.token_ids},
      {"text", result.text},
      {"encoder_seconds", result.encoder_seconds},
      {"per_token_decoder_seconds", result.per_token_decoder_seconds},
      {"exit_layer_per_token", result.exit_layer_per_token},
      {"beams_used", result.beams_used},
  };
  if (result.surviving_token_indices) {
    j["surviving_token_indices"] = *result.surviving_token_indices;
  } else {
    j["surviving_token_indices"] = nullptr;
  }
  // Byte-fallback output is not guaranteed to be valid UTF-8.
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void append_jsonl(const std::string& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw_io("cannot append to '" + path + "'");
  out << line << "\n";
  out.flush();
  if (!out) throw_io("short write to '" + path + "'");
}

}  // namespace fidkit
