#include "seqpt/rouge/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "seqpt/error.hpp"

namespace seqpt::rouge {
namespace {

RougeScore from_counts(std::size_t matches, std::size_t cand_total, std::size_t ref_total) {
  if (cand_total == 0 || ref_total == 0 || matches == 0) return {};
  const auto m = static_cast<double>(matches);
  return {m / static_cast<double>(cand_total), m / static_cast<double>(ref_total),
          2.0 * m / static_cast<double>(cand_total + ref_total)};
}

std::map<std::vector<std::string>, std::size_t> count_ngrams(std::span<const std::string> words,
                                                             std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    ++counts[std::vector<std::string>(words.begin() + i, words.begin() + i + n)];
  }
  return counts;
}

std::size_t ngram_total(std::size_t len, std::size_t n) { return len >= n ? len - n + 1 : 0; }

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kRouge1: return "r1";
    case Variant::kRouge2: return "r2";
    case Variant::kRougeL: return "rl";
  }
  return "?";
}

std::string_view to_string(Protocol p) {
  return p == Protocol::kFullLengthF1 ? "f1" : "limited-recall";
}

Variant parse_variant(std::string_view name) {
  if (name == "r1") return Variant::kRouge1;
  if (name == "r2") return Variant::kRouge2;
  if (name == "rl") return Variant::kRougeL;
  throw InvalidArgument("unknown ROUGE variant: " + std::string(name));
}

Protocol parse_protocol(std::string_view name) {
  if (name == "f1") return Protocol::kFullLengthF1;
  if (name == "limited-recall") return Protocol::kLimitedLengthRecall;
  throw InvalidArgument("unknown ROUGE protocol: " + std::string(name));
}

Words tokenize(std::string_view text) {
  Words words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      flush();
    } else if (u < 0x80 && std::ispunct(u)) {
      flush();
      words.emplace_back(1, c);
    } else {
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
  }
  flush();
  return words;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::string truncate_words(std::string_view text, std::size_t n) {
  std::string out;
  std::size_t taken = 0;
  std::size_t i = 0;
  while (taken < n) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (!out.empty()) out.push_back(' ');
    out.append(text.substr(start, i - start));
    ++taken;
  }
  return out;
}

std::size_t ngram_overlap(std::span<const std::string> candidate,
                          std::span<const std::string> reference, std::size_t n) {
  if (n == 0) throw InvalidArgument("n-gram order must be >= 1");
  const auto cand = count_ngrams(candidate, n);
  const auto ref = count_ngrams(reference, n);
  std::size_t matches = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) matches += std::min(count, it->second);
  }
  return matches;
}

RougeScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference,
                   std::size_t n) {
  return from_counts(ngram_overlap(candidate, reference, n), ngram_total(candidate.size(), n),
                     ngram_total(reference.size(), n));
}

RougeScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
  return from_counts(lcs_length<std::string>(candidate, reference), candidate.size(), reference.size());
}

RougeScore score(Variant variant, std::span<const std::string> candidate,
                 std::span<const std::string> reference) {
  switch (variant) {
    case Variant::kRouge1: return rouge_n(candidate, reference, 1);
    case Variant::kRouge2: return rouge_n(candidate, reference, 2);
    case Variant::kRougeL: return rouge_l(candidate, reference);
  }
  return {};
}

RougeScore score_text(Variant variant, std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  return score(variant, c, r);
}

RougeScore score_corpus(std::span<const TextPair> pairs, Variant variant, Protocol protocol) {
  if (pairs.empty()) throw EmptyCorpus("no pairs to score");
  RougeScore total;
  for (const auto& pair : pairs) {
    const std::string candidate = protocol == Protocol::kLimitedLengthRecall
                                      ? truncate_words(pair.candidate, count_words(pair.reference))
                                      : pair.candidate;
    const auto s = score_text(variant, candidate, pair.reference);
    total.precision += s.precision;
    total.recall += s.recall;
    total.f1 += s.f1;
  }
  const auto n = static_cast<double>(pairs.size());
  return {total.precision / n, total.recall / n, total.f1 / n};
}

double headline(const RougeScore& s, Protocol protocol) {
  return protocol == Protocol::kFullLengthF1 ? s.f1 : s.recall;
}

}  // namespace seqpt::rouge
