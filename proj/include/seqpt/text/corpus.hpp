#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqpt::text {

struct RawDocument {
  std::string id;
  std::string text;
};

/// Reads `{"id": ..., "text": ...}` lines. Blank lines are skipped; a record
/// with a missing field, a non-string field, an empty id or a repeated id
/// raises MalformedRecord with its line number.
std::vector<RawDocument> read_corpus_jsonl(std::istream& in);
std::vector<RawDocument> read_corpus_jsonl(const std::string& path);

void write_corpus_jsonl(std::ostream& out, const std::vector<RawDocument>& docs);
void write_corpus_jsonl(const std::string& path, const std::vector<RawDocument>& docs);

}  // namespace seqpt::text
