#include "seqpt/text/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "seqpt/error.hpp"

namespace seqpt::text {

using nlohmann::json;

std::vector<RawDocument> read_corpus_jsonl(std::istream& in) {
  std::vector<RawDocument> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedRecord(line_no, e.what());
    }
    if (!record.is_object()) throw MalformedRecord(line_no, "expected a JSON object");
    for (const char* key : {"id", "text"}) {
      if (!record.contains(key) || !record[key].is_string()) {
        throw MalformedRecord(line_no, std::string("missing string field \"") + key + "\"");
      }
    }
    RawDocument doc{record["id"].get<std::string>(), record["text"].get<std::string>()};
    if (doc.id.empty()) throw MalformedRecord(line_no, "empty id");
    if (!seen.insert(doc.id).second) throw MalformedRecord(line_no, "duplicate id " + doc.id);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawDocument> read_corpus_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_corpus_jsonl(in);
}

void write_corpus_jsonl(std::ostream& out, const std::vector<RawDocument>& docs) {
  for (const auto& d : docs) out << json{{"id", d.id}, {"text", d.text}}.dump() << '\n';
}

void write_corpus_jsonl(const std::string& path, const std::vector<RawDocument>& docs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_corpus_jsonl(out, docs);
}

}  // namespace seqpt::text
