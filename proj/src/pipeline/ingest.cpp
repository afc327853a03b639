#include "seqpt/pipeline/ingest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "seqpt/error.hpp"
#include "seqpt/rouge/rouge.hpp"
#include "seqpt/text/segment.hpp"

namespace seqpt::pipeline {

namespace {

IngestResult finish(std::vector<text::RawDocument> docs) {
  IngestResult result;
  for (auto& d : docs) d.text = text::normalize_whitespace(d.text);
  result.docs = std::move(docs);
  result.stats = corpus_stats(result.docs);
  if (result.docs.empty()) result.warnings.push_back("input contained no records");
  for (const auto& d : result.docs) {
    if (d.text.empty()) result.warnings.push_back("document " + d.id + " has no text");
  }
  return result;
}

}  // namespace

IngestResult ingest_jsonl(std::istream& in) { return finish(text::read_corpus_jsonl(in)); }

IngestResult ingest_jsonl(const std::string& path) { return finish(text::read_corpus_jsonl(path)); }

IngestResult ingest_text_files(const std::vector<std::string>& paths) {
  std::vector<text::RawDocument> docs;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw Error("cannot open " + p);
    std::ostringstream buf;
    buf << in.rdbuf();
    docs.push_back({std::filesystem::path(p).stem().string(), buf.str()});
  }
  return finish(std::move(docs));
}

CorpusStats corpus_stats(const std::vector<text::RawDocument>& docs) {
  CorpusStats stats;
  stats.n_docs = docs.size();
  for (const auto& d : docs) {
    stats.n_tokens += rouge::count_words(d.text);
    ++stats.sentence_histogram[text::segment_sentences(d.text).size()];
  }
  return stats;
}

nlohmann::json stats_json(const CorpusStats& stats) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : stats.sentence_histogram) hist[std::to_string(k)] = v;
  return {{"n_docs", stats.n_docs}, {"n_tokens", stats.n_tokens}, {"sentence_histogram", hist}};
}

}  // namespace seqpt::pipeline
