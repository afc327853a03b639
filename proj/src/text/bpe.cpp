#include "seqpt/text/bpe.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "seqpt/error.hpp"
#include "seqpt/text/segment.hpp"

namespace seqpt::text {
namespace {

constexpr std::array<const char*, special::kCount> kSpecialNames = {"<pad>", "<s>", "</s>",
                                                                   "<mask>", "<unk>"};

std::uint64_t pair_key(TokenId left, TokenId right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}

enum class CharClass { kSpace, kAlpha, kDigit, kPunct };

CharClass classify(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (is_space(c)) return CharClass::kSpace;
  if (u >= 0x80 || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z')) return CharClass::kAlpha;
  if (u >= '0' && u <= '9') return CharClass::kDigit;
  return CharClass::kPunct;
}

// Printable stand-ins for raw bytes in the vocabulary file, so merge tokens
// never contain spaces or newlines.
struct ByteCodec {
  std::array<char32_t, 256> to_code{};
  std::map<char32_t, unsigned char> from_code;

  ByteCodec() {
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) {
      const bool printable = (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174);
      to_code[b] = printable ? static_cast<char32_t>(b) : next++;
      from_code[to_code[b]] = static_cast<unsigned char>(b);
    }
  }
};

const ByteCodec& codec() {
  static const ByteCodec instance;
  return instance;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string escape_token(const std::string& raw) {
  std::string out;
  for (unsigned char b : raw) append_utf8(out, codec().to_code[b]);
  return out;
}

std::string unescape_token(std::string_view printable) {
  std::string raw;
  std::size_t i = 0;
  while (i < printable.size()) {
    const auto lead = static_cast<unsigned char>(printable[i]);
    char32_t cp = 0;
    std::size_t len = 1;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else {
      throw FormatError("bad token encoding in vocabulary file");
    }
    if (i + len > printable.size()) throw FormatError("truncated token in vocabulary file");
    for (std::size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(printable[i + k]) & 0x3F);
    }
    auto it = codec().from_code.find(cp);
    if (it == codec().from_code.end()) throw FormatError("unknown byte symbol in vocabulary file");
    raw.push_back(static_cast<char>(it->second));
    i += len;
  }
  return raw;
}

void merge_pair(std::vector<TokenId>& symbols, TokenId left, TokenId right, TokenId result) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      symbols[out++] = result;
      ++i;
    } else {
      symbols[out++] = symbols[i];
    }
  }
  symbols.resize(out);
}

std::vector<TokenId> byte_symbols(std::string_view chunk) {
  std::vector<TokenId> symbols;
  symbols.reserve(chunk.size());
  for (unsigned char b : chunk) symbols.push_back(kByteBase + b);
  return symbols;
}

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const std::size_t start = i;
    if (text[i] == ' ' && i + 1 < n && !is_space(text[i + 1])) ++i;
    const CharClass cls = classify(text[i]);
    while (i < n && classify(text[i]) == cls) ++i;
    // A whitespace run gives up its final space to the following word.
    if (cls == CharClass::kSpace && i < n && i - start > 1 && text[i - 1] == ' ') --i;
    chunks.push_back(text.substr(start, i - start));
  }
  return chunks;
}

Vocabulary::Vocabulary() {
  id_to_token_.reserve(kBaseVocabSize);
  for (const char* name : kSpecialNames) id_to_token_.emplace_back(name);
  for (int b = 0; b < 256; ++b) id_to_token_.emplace_back(1, static_cast<char>(b));
  // Specials are symbolic names, not byte strings, so they stay out of the
  // lookup table and can never be produced by encoding.
  for (TokenId id = kByteBase; id < static_cast<TokenId>(id_to_token_.size()); ++id) {
    token_to_id_.emplace(id_to_token_[id], id);
  }
}

bool Vocabulary::add_merge(TokenId left, TokenId right) {
  std::string merged = id_to_token_.at(left) + id_to_token_.at(right);
  if (token_to_id_.count(merged) != 0) return false;
  const auto result = static_cast<TokenId>(id_to_token_.size());
  merge_rank_.emplace(pair_key(left, right), merges_.size());
  merges_.push_back({left, right, result});
  token_to_id_.emplace(merged, result);
  id_to_token_.push_back(std::move(merged));
  return true;
}

Vocabulary Vocabulary::from_merges(
    const std::vector<std::pair<std::string, std::string>>& merges) {
  Vocabulary vocab;
  for (const auto& [left, right] : merges) {
    auto l = vocab.find(left);
    auto r = vocab.find(right);
    if (!l || !r) throw FormatError("merge refers to unknown token");
    if (!vocab.add_merge(*l, *r)) throw FormatError("merge duplicates an existing token");
  }
  return vocab;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!valid(id)) throw InvalidId("token id " + std::to_string(id) + " out of range");
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::apply_merges(std::vector<TokenId>& symbols) const {
  while (symbols.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = merge_rank_.find(pair_key(symbols[i], symbols[i + 1]));
      if (it != merge_rank_.end()) best_rank = std::min(best_rank, it->second);
    }
    if (best_rank == merges_.size()) break;
    const auto& rule = merges_[best_rank];
    merge_pair(symbols, rule.left, rule.right, rule.result);
  }
}

TokenSeq Vocabulary::encode(std::string_view text) const {
  TokenSeq out;
  for (auto chunk : pretokenize(text)) {
    auto symbols = byte_symbols(chunk);
    apply_merges(symbols);
    out.insert(out.end(), symbols.begin(), symbols.end());
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (!valid(id)) throw InvalidId("token id " + std::to_string(id) + " out of range");
    if (is_special(id)) continue;
    out += id_to_token_[static_cast<std::size_t>(id)];
  }
  return out;
}

void Vocabulary::save(std::ostream& out) const {
  out << "STEPBPE v1 " << size() << '\n';
  for (const auto& m : merges_) {
    out << escape_token(id_to_token_[m.left]) << ' ' << escape_token(id_to_token_[m.right])
        << '\n';
  }
  for (TokenId id = 0; id < special::kCount; ++id) {
    out << kSpecialNames[id] << ' ' << id << '\n';
  }
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  save(out);
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty vocabulary file");
  std::istringstream header(line);
  std::string magic, version;
  std::size_t size = 0;
  if (!(header >> magic >> version >> size) || magic != "STEPBPE" || version != "v1") {
    throw FormatError("bad vocabulary header: " + line);
  }
  if (size < kBaseVocabSize) throw FormatError("vocabulary size below byte-level minimum");
  std::vector<std::pair<std::string, std::string>> merges;
  for (std::size_t i = kBaseVocabSize; i < size; ++i) {
    if (!std::getline(in, line)) throw FormatError("truncated merge list");
    const auto sep = line.find(' ');
    if (sep == std::string::npos || line.find(' ', sep + 1) != std::string::npos) {
      throw FormatError("bad merge line: " + line);
    }
    merges.emplace_back(unescape_token(line.substr(0, sep)), unescape_token(line.substr(sep + 1)));
  }
  for (TokenId id = 0; id < special::kCount; ++id) {
    if (!std::getline(in, line)) throw FormatError("missing special-token assignment");
    if (line != std::string(kSpecialNames[id]) + ' ' + std::to_string(id)) {
      throw FormatError("unexpected special-token assignment: " + line);
    }
  }
  return from_merges(merges);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return load(in);
}

Vocabulary train_bpe(std::span<const RawDocument> corpus, std::size_t target_size) {
  if (target_size < kBaseVocabSize) {
    throw InvalidArgument("target_size must be >= " + std::to_string(kBaseVocabSize));
  }
  // Ordered map keeps the word table independent of hash seeds.
  std::map<std::string, std::size_t> word_counts;
  bool any_text = false;
  for (const auto& doc : corpus) {
    if (doc.text.empty()) continue;
    any_text = true;
    for (auto chunk : pretokenize(doc.text)) ++word_counts[std::string(chunk)];
  }
  if (!any_text) throw EmptyCorpus("no non-empty document to train on");

  struct Word {
    std::vector<TokenId> symbols;
    std::size_t count;
  };
  std::vector<Word> words;
  words.reserve(word_counts.size());
  for (const auto& [chunk, count] : word_counts) words.push_back({byte_symbols(chunk), count});

  Vocabulary vocab;
  std::unordered_map<std::uint64_t, bool> rejected;
  while (vocab.size() < target_size) {
    std::unordered_map<std::uint64_t, std::size_t> pair_counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_counts[pair_key(w.symbols[i], w.symbols[i + 1])] += w.count;
      }
    }
    std::uint64_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [key, count] : pair_counts) {
      if (rejected.count(key) != 0) continue;
      bool better = count > best_count;
      if (!better && count == best_count && best_count > 0) {
        const auto l = static_cast<TokenId>(key >> 32), r = static_cast<TokenId>(key & 0xffffffffu);
        const auto bl = static_cast<TokenId>(best >> 32), br = static_cast<TokenId>(best & 0xffffffffu);
        const auto& ls = vocab.id_to_token_[l];
        const auto& bls = vocab.id_to_token_[bl];
        better = ls < bls || (ls == bls && vocab.id_to_token_[r] < vocab.id_to_token_[br]);
      }
      if (better) {
        best = key;
        best_count = count;
      }
    }
    if (best_count == 0) break;
    const auto left = static_cast<TokenId>(best >> 32);
    const auto right = static_cast<TokenId>(best & 0xffffffffu);
    if (!vocab.add_merge(left, right)) {
      rejected[best] = true;
      continue;
    }
    const TokenId result = vocab.merges_.back().result;
    for (auto& w : words) merge_pair(w.symbols, left, right, result);
  }
  return vocab;
}

}  // namespace seqpt::text
