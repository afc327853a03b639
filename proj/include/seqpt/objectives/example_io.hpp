#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqpt/objectives/objectives.hpp"

namespace seqpt::objectives {

nlohmann::json to_json(const PretrainExample& ex);
PretrainExample example_from_json(const nlohmann::json& j);

void write_examples_jsonl(std::ostream& out, const std::vector<PretrainExample>& examples);
/// Throws MalformedRecord with the offending line number.
std::vector<PretrainExample> read_examples_jsonl(std::istream& in);
std::vector<PretrainExample> read_examples_jsonl(const std::string& path);

}  // namespace seqpt::objectives
