#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqpt/text/corpus.hpp"

namespace seqpt::pipeline {

struct CorpusStats {
  std::size_t n_docs = 0;
  std::size_t n_tokens = 0;  // whitespace-delimited words
  std::map<std::size_t, std::size_t> sentence_histogram;  // sentences per doc -> docs
};

struct IngestResult {
  std::vector<text::RawDocument> docs;
  CorpusStats stats;
  std::vector<std::string> warnings;
};

/// Reads {"id","text"} JSONL and normalizes whitespace. Throws MalformedRecord.
IngestResult ingest_jsonl(std::istream& in);
IngestResult ingest_jsonl(const std::string& path);

/// One document per plain-text file; the id is the file stem.
IngestResult ingest_text_files(const std::vector<std::string>& paths);

CorpusStats corpus_stats(const std::vector<text::RawDocument>& docs);
nlohmann::json stats_json(const CorpusStats& stats);

}  // namespace seqpt::pipeline
