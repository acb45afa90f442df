#pragma once

#include <string>
#include <vector>

#include "fidkit/runtime.hpp"

namespace fidkit {

// JSON-lines ingestion, one object per query:
//   {"question": str, "passages": [{"title": str, "text": str, "is_gold": bool}],
//    "answer": str}
// With gold_first set, the gold passage (at most one) is moved to rank 1.
std::vector<FidInput> load_dataset(const std::string& path, bool gold_first = false);

std::string generation_result_to_json(const GenerationResult& result);

void append_jsonl(const std::string& path, const std::string& line);

}  // namespace fidkit
