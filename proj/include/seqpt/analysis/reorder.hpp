#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqpt/text/segment.hpp"

namespace seqpt::analysis {

enum class AlignScore {
  kRouge2F1,       // default
  kBigramOverlap,  // raw clipped bigram count
};

/// Entry j is the document sentence (0-based) matched to summary sentence j.
struct AlignmentMap {
  std::vector<std::size_t> assignments;
  std::vector<double> scores;
};

struct ReorderReport {
  std::size_t n_pairs = 0;
  std::size_t n_reordered = 0;
  double fraction = 0.0;
};

/// Maps every summary sentence to its best-scoring document sentence,
/// independently (many-to-one allowed); ties go to the smallest index.
AlignmentMap align_summary_sentences(const text::SentenceSplit& doc,
                                     const text::SentenceSplit& summary,
                                     AlignScore score = AlignScore::kRouge2F1);

/// True iff the assignments are not non-decreasing.
bool detect_reordering(const AlignmentMap& alignment);

struct DocSummary {
  std::string document;
  std::string summary;
};

ReorderReport corpus_reorder_stat(std::span<const DocSummary> pairs,
                                  AlignScore score = AlignScore::kRouge2F1);

/// First min(3, m) sentences joined by single spaces.
std::string lead3(const text::SentenceSplit& doc);

}  // namespace seqpt::analysis
