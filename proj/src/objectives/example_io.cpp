#include "seqpt/objectives/example_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "seqpt/error.hpp"

namespace seqpt::objectives {

using nlohmann::json;

namespace {

struct MetaToJson {
  json operator()(const ReorderMeta& m) const { return {{"order", m.order}}; }
  json operator()(const NextSegmentMeta& m) const { return {{"split", m.split}}; }
  json operator()(const MaskMeta& m) const {
    std::string actions;
    for (auto a : m.actions) actions.push_back(static_cast<char>(a));
    return {{"start", m.start}, {"length", m.length}, {"actions", actions}};
  }
};

}  // namespace

json to_json(const PretrainExample& ex) {
  return {{"id", ex.id},
          {"objective", to_string(ex.objective)},
          {"input_ids", ex.input},
          {"target_ids", ex.target},
          {"meta", std::visit(MetaToJson{}, ex.meta)}};
}

PretrainExample example_from_json(const json& j) {
  PretrainExample ex;
  ex.id = j.at("id").get<std::string>();
  ex.objective = parse_objective(j.at("objective").get<std::string>());
  ex.input = j.at("input_ids").get<TokenSeq>();
  ex.target = j.at("target_ids").get<TokenSeq>();
  const auto& meta = j.at("meta");
  switch (ex.objective) {
    case Objective::kSentenceReorder:
      ex.meta = ReorderMeta{meta.at("order").get<std::vector<std::size_t>>()};
      break;
    case Objective::kNextSegment:
      ex.meta = NextSegmentMeta{meta.at("split").get<std::size_t>()};
      break;
    case Objective::kMaskedDocument: {
      MaskMeta m{meta.at("start").get<std::size_t>(), meta.at("length").get<std::size_t>(), {}};
      for (char c : meta.at("actions").get<std::string>()) {
        if (c != 'M' && c != 'R' && c != 'K') throw FormatError("bad mask action");
        m.actions.push_back(static_cast<MaskAction>(c));
      }
      ex.meta = std::move(m);
      break;
    }
  }
  if (ex.input.empty() || ex.target.empty()) throw FormatError("empty input or target");
  return ex;
}

void write_examples_jsonl(std::ostream& out, const std::vector<PretrainExample>& examples) {
  for (const auto& ex : examples) out << to_json(ex).dump() << '\n';
}

std::vector<PretrainExample> read_examples_jsonl(std::istream& in) {
  std::vector<PretrainExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return out;
}

std::vector<PretrainExample> read_examples_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_examples_jsonl(in);
}

}  // namespace seqpt::objectives
