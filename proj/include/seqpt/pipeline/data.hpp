#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "seqpt/decoding/tuning.hpp"
#include "seqpt/model/batch.hpp"
#include "seqpt/objectives/objectives.hpp"
#include "seqpt/text/bpe.hpp"
#include "seqpt/text/corpus.hpp"

namespace seqpt::pipeline {

using text::TokenSeq;

struct DocPair {
  std::string id;
  std::string document;
  std::string summary;
};

/// Accepts {"id","document","summary"} or the CNN/DailyMail field names
/// {"article","highlights"}; a missing id becomes the line number.
std::vector<DocPair> read_pairs_jsonl(std::istream& in);
std::vector<DocPair> read_pairs_jsonl(const std::string& path);
void write_pairs_jsonl(std::ostream& out, const std::vector<DocPair>& pairs);
void write_pairs_jsonl(const std::string& path, const std::vector<DocPair>& pairs);

/// {"id","summary","log_prob"} per line. Byte sequences that are not valid
/// UTF-8 are written as U+FFFD.
void write_decodes_jsonl(std::ostream& out, const std::vector<std::string>& ids,
                         const std::vector<decoding::Decoded>& decoded);

/// Sentences encoded one by one, each with a leading space, so that the
/// concatenation is the encoding of the space-joined document.
std::vector<TokenSeq> tokenize_sentences(const text::Vocabulary& vocab, std::string_view text);
TokenSeq tokenize_text(const text::Vocabulary& vocab, std::string_view text);

/// Cuts the document into pieces of exactly `piece_len` tokens. Each piece
/// keeps the sentence fragments it covers and up to `following_len` tokens
/// that come after it.
std::vector<objectives::PieceContext> make_pieces(const std::string& doc_id,
                                                  const std::vector<TokenSeq>& sentences,
                                                  std::size_t piece_len,
                                                  std::size_t following_len);

/// nullopt selects the 1/3-each mixture.
using ObjectiveChoice = std::optional<objectives::Objective>;
ObjectiveChoice parse_objective_choice(const std::string& name);
std::string to_string(const ObjectiveChoice& choice);

/// One example per piece; each piece draws from its own seed derived from
/// `seed` and the piece id.
std::vector<objectives::PretrainExample> make_pretrain_data(
    const std::vector<text::RawDocument>& docs, const text::Vocabulary& vocab,
    const ObjectiveChoice& choice, const objectives::ObjectiveConfig& cfg, std::uint64_t seed,
    std::size_t piece_len);

/// Document truncated to `max_source`, summary to `max_target` tokens.
std::vector<model::SeqPair> make_finetune_data(const std::vector<DocPair>& pairs,
                                               const text::Vocabulary& vocab,
                                               std::size_t max_source = text::kMaxSourceLen,
                                               std::size_t max_target = text::kMaxTargetLen);

std::vector<decoding::EvalItem> make_eval_items(const std::vector<DocPair>& pairs,
                                                const text::Vocabulary& vocab,
                                                std::size_t max_source = text::kMaxSourceLen);

}  // namespace seqpt::pipeline
