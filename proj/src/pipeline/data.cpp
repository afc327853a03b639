#include "seqpt/pipeline/data.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "seqpt/error.hpp"
#include "seqpt/objectives/rng.hpp"
#include "seqpt/text/pieces.hpp"
#include "seqpt/text/segment.hpp"

namespace seqpt::pipeline {

using nlohmann::json;

namespace {

std::string string_field(const json& record, std::initializer_list<const char*> keys,
                         std::size_t line_no) {
  for (const char* key : keys) {
    auto it = record.find(key);
    if (it == record.end()) continue;
    if (!it->is_string()) throw MalformedRecord(line_no, std::string("field ") + key + " is not a string");
    return it->get<std::string>();
  }
  throw MalformedRecord(line_no, std::string("missing field \"") + *keys.begin() + "\"");
}

}  // namespace

std::vector<DocPair> read_pairs_jsonl(std::istream& in) {
  std::vector<DocPair> pairs;
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
    DocPair p;
    p.id = record.contains("id") ? string_field(record, {"id"}, line_no) : std::to_string(line_no);
    p.document = text::normalize_whitespace(string_field(record, {"document", "article"}, line_no));
    p.summary = text::normalize_whitespace(string_field(record, {"summary", "highlights"}, line_no));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<DocPair> read_pairs_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_pairs_jsonl(in);
}

void write_pairs_jsonl(std::ostream& out, const std::vector<DocPair>& pairs) {
  for (const auto& p : pairs) {
    out << json{{"id", p.id}, {"document", p.document}, {"summary", p.summary}}.dump() << '\n';
  }
}

void write_pairs_jsonl(const std::string& path, const std::vector<DocPair>& pairs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_pairs_jsonl(out, pairs);
}

void write_decodes_jsonl(std::ostream& out, const std::vector<std::string>& ids,
                         const std::vector<decoding::Decoded>& decoded) {
  if (ids.size() != decoded.size()) throw InvalidArgument("ids and decodes differ in length");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << json{{"id", ids[i]}, {"summary", decoded[i].text}, {"log_prob", decoded[i].log_prob}}
               .dump(-1, ' ', false, json::error_handler_t::replace)
        << '\n';
  }
}

std::vector<TokenSeq> tokenize_sentences(const text::Vocabulary& vocab, std::string_view text) {
  std::vector<TokenSeq> out;
  for (const auto& s : text::segment_sentences(text).sentences) {
    out.push_back(vocab.encode(" " + s));
  }
  return out;
}

TokenSeq tokenize_text(const text::Vocabulary& vocab, std::string_view text) {
  TokenSeq out;
  for (const auto& s : tokenize_sentences(vocab, text)) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::vector<objectives::PieceContext> make_pieces(const std::string& doc_id,
                                                  const std::vector<TokenSeq>& sentences,
                                                  std::size_t piece_len,
                                                  std::size_t following_len) {
  if (piece_len == 0) throw InvalidArgument("piece_len must be positive");
  TokenSeq flat;
  std::vector<std::size_t> starts;  // sentence start offsets into `flat`
  for (const auto& s : sentences) {
    starts.push_back(flat.size());
    flat.insert(flat.end(), s.begin(), s.end());
  }
  std::vector<objectives::PieceContext> pieces;
  for (std::size_t begin = 0; begin + piece_len <= flat.size(); begin += piece_len) {
    const std::size_t end = begin + piece_len;
    objectives::PieceContext piece;
    piece.id = doc_id + "#" + std::to_string(pieces.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      const std::size_t s0 = std::max(starts[i], begin);
      const std::size_t s1 = std::min(starts[i] + sentences[i].size(), end);
      if (s0 < s1) piece.sentences.emplace_back(flat.begin() + s0, flat.begin() + s1);
    }
    const std::size_t f_end = std::min(flat.size(), end + following_len);
    piece.following.assign(flat.begin() + end, flat.begin() + f_end);
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

ObjectiveChoice parse_objective_choice(const std::string& name) {
  if (name == "all") return std::nullopt;
  return objectives::parse_objective(name);
}

std::string to_string(const ObjectiveChoice& choice) {
  return choice ? std::string(objectives::to_string(*choice)) : "all";
}

std::vector<objectives::PretrainExample> make_pretrain_data(
    const std::vector<text::RawDocument>& docs, const text::Vocabulary& vocab,
    const ObjectiveChoice& choice, const objectives::ObjectiveConfig& cfg, std::uint64_t seed,
    std::size_t piece_len) {
  std::vector<objectives::PretrainExample> out;
  for (const auto& doc : docs) {
    const auto sentences = tokenize_sentences(vocab, doc.text);
    for (const auto& piece : make_pieces(doc.id, sentences, piece_len, cfg.target_len)) {
      Rng rng(derive_seed(seed, piece.id));
      if (!choice) {
        out.push_back(objectives::mix_all(piece, rng, vocab, cfg));
      } else if (objectives::feasible(*choice, piece, cfg)) {
        out.push_back(objectives::apply_objective(*choice, piece, rng, vocab, cfg));
      }
    }
  }
  return out;
}

std::vector<model::SeqPair> make_finetune_data(const std::vector<DocPair>& pairs,
                                               const text::Vocabulary& vocab,
                                               std::size_t max_source, std::size_t max_target) {
  std::vector<model::SeqPair> out;
  for (const auto& p : pairs) {
    auto source = text::truncate(tokenize_text(vocab, p.document), max_source);
    auto target = text::truncate(tokenize_text(vocab, p.summary), max_target);
    if (source.empty() || target.empty()) continue;
    out.push_back({std::move(source), std::move(target)});
  }
  return out;
}

std::vector<decoding::EvalItem> make_eval_items(const std::vector<DocPair>& pairs,
                                                const text::Vocabulary& vocab,
                                                std::size_t max_source) {
  std::vector<decoding::EvalItem> out;
  for (const auto& p : pairs) {
    auto source = text::truncate(tokenize_text(vocab, p.document), max_source);
    if (source.empty()) continue;
    out.push_back({std::move(source), p.summary});
  }
  return out;
}

}  // namespace seqpt::pipeline
