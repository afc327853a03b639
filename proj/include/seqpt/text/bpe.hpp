#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqpt/text/corpus.hpp"

namespace seqpt::text {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

/// Reserved ids. Specials take the lowest ids, raw bytes follow.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kMask = 3;
inline constexpr TokenId kUnk = 4;
inline constexpr TokenId kCount = 5;
}  // namespace special

inline constexpr TokenId kByteBase = special::kCount;
inline constexpr std::size_t kBaseVocabSize = 256 + special::kCount;

struct MergeRule {
  TokenId left;
  TokenId right;
  TokenId result;
  bool operator==(const MergeRule&) const = default;
};

/// Byte-level BPE vocabulary. Immutable once built; safe to share.
class Vocabulary {
 public:
  /// Specials plus the 256 byte tokens, no merges.
  Vocabulary();

  /// Rebuilds a vocabulary by replaying merges given as (left, right) raw
  /// byte strings in learned order.
  static Vocabulary from_merges(
      const std::vector<std::pair<std::string, std::string>>& merges);

  std::size_t size() const noexcept { return id_to_token_.size(); }
  const std::vector<MergeRule>& merges() const noexcept { return merges_; }

  /// Raw bytes of a token; specials return their symbolic name.
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  static bool is_special(TokenId id) noexcept { return id >= 0 && id < special::kCount; }
  bool valid(TokenId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < size();
  }

  TokenSeq encode(std::string_view text) const;
  /// Specials are dropped. Throws InvalidId for out-of-range ids. The result may not be
  /// valid UTF-8 when byte tokens split a multi-byte character.
  std::string decode(std::span<const TokenId> ids) const;

  /// Text format: "STEPBPE v1 <size>", one merge per line, then specials.
  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static Vocabulary load(std::istream& in);
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_ && merges_ == other.merges_;
  }

 private:
  friend Vocabulary train_bpe(std::span<const RawDocument>, std::size_t);

  /// Returns false (and adds nothing) if the merged string already names a token.
  bool add_merge(TokenId left, TokenId right);
  void apply_merges(std::vector<TokenId>& symbols) const;

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<MergeRule> merges_;
  std::unordered_map<std::uint64_t, std::size_t> merge_rank_;
};

/// Greedy byte-pair merge learning. Repeatedly merges the most frequent
/// adjacent pair (ties: lexicographically smallest pair by byte order) until
/// `target_size` token types exist or no adjacent pair remains. Pairs never
/// cross pre-tokenization chunk boundaries (see pretokenize).
Vocabulary train_bpe(std::span<const RawDocument> corpus, std::size_t target_size);

/// Lossless split of text into merge domains: whitespace runs, and words
/// (letters and non-ASCII bytes, digits, or punctuation runs) each carrying
/// at most one leading space.
std::vector<std::string_view> pretokenize(std::string_view text);

}  // namespace seqpt::text
