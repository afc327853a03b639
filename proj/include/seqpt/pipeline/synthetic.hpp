#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqpt/pipeline/data.hpp"
#include "seqpt/text/corpus.hpp"

namespace seqpt::pipeline {

struct SyntheticSpec {
  std::size_t n_docs = 100;
  std::size_t min_sentences = 5;
  std::size_t max_sentences = 8;
  /// Sentence templates in use, 1..3.
  std::size_t templates = 3;
  /// Summary = the first k sentences (reversed for reordered pairs).
  std::size_t summary_sentences = 3;
  /// Exactly round(f * n_docs) pairs get a reversed summary.
  double reorder_fraction = 0.0;
  std::string id_prefix = "doc";

  void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SyntheticSpec, n_docs, min_sentences,
                                                max_sentences, templates, summary_sentences,
                                                reorder_fraction, id_prefix)

/// Deterministic in (spec, seed). Sentences within a document are distinct.
std::vector<text::RawDocument> gen_corpus(const SyntheticSpec& spec, std::uint64_t seed);

/// Same documents as gen_corpus plus summaries.
std::vector<DocPair> gen_pairs(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace seqpt::pipeline
