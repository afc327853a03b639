#include "seqpt/analysis/reorder.hpp"

#include <algorithm>

#include "seqpt/error.hpp"
#include "seqpt/rouge/rouge.hpp"

namespace seqpt::analysis {

AlignmentMap align_summary_sentences(const text::SentenceSplit& doc,
                                     const text::SentenceSplit& summary, AlignScore score) {
  if (doc.empty() || summary.empty()) throw EmptySide("alignment needs sentences on both sides");
  std::vector<rouge::Words> doc_words;
  doc_words.reserve(doc.size());
  for (const auto& s : doc.sentences) doc_words.push_back(rouge::tokenize(s));

  AlignmentMap map;
  for (const auto& sentence : summary.sentences) {
    const auto words = rouge::tokenize(sentence);
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < doc_words.size(); ++i) {
      const double s = score == AlignScore::kRouge2F1
                           ? rouge::rouge_n(words, doc_words[i], 2).f1
                           : static_cast<double>(rouge::ngram_overlap(words, doc_words[i], 2));
      if (s > best_score) {
        best = i;
        best_score = s;
      }
    }
    map.assignments.push_back(best);
    map.scores.push_back(best_score);
  }
  return map;
}

bool detect_reordering(const AlignmentMap& alignment) {
  return !std::is_sorted(alignment.assignments.begin(), alignment.assignments.end());
}

ReorderReport corpus_reorder_stat(std::span<const DocSummary> pairs, AlignScore score) {
  if (pairs.empty()) throw EmptyCorpus("no document-summary pairs");
  ReorderReport report;
  report.n_pairs = pairs.size();
  for (const auto& p : pairs) {
    const auto alignment = align_summary_sentences(text::segment_sentences(p.document),
                                                   text::segment_sentences(p.summary), score);
    if (detect_reordering(alignment)) ++report.n_reordered;
  }
  report.fraction =
      static_cast<double>(report.n_reordered) / static_cast<double>(report.n_pairs);
  return report;
}

std::string lead3(const text::SentenceSplit& doc) {
  if (doc.empty()) throw EmptyDocument("lead3 needs at least one sentence");
  text::SentenceSplit head;
  const auto n = std::min<std::size_t>(3, doc.size());
  head.sentences.assign(doc.sentences.begin(), doc.sentences.begin() + static_cast<std::ptrdiff_t>(n));
  return head.joined();
}

}  // namespace seqpt::analysis
