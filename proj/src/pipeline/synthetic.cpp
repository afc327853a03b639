#include "seqpt/pipeline/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "seqpt/error.hpp"
#include "seqpt/objectives/rng.hpp"

namespace seqpt::pipeline {

namespace {

constexpr std::array kAdjectives = {"quiet", "bright", "old",   "young", "tall",  "clever",
                                    "busy",  "small",  "brave", "calm",  "proud", "gentle"};
constexpr std::array kNouns = {"farmer", "doctor", "teacher", "pilot",  "baker",  "sailor",
                               "barber", "miner",  "lawyer",  "singer", "driver", "writer",
                               "nurse",  "hunter", "tailor",  "judge"};
constexpr std::array kVerbs = {"visited", "helped", "followed", "greeted", "painted", "called",
                               "watched", "trusted", "praised", "warned",  "thanked", "met"};
constexpr std::array kPlaces = {"market", "harbor", "station", "library", "castle",
                                "garden", "bridge", "village", "temple",  "factory"};
constexpr std::array kTimes = {"Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Sunday"};

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[static_cast<std::size_t>(rng.uniform_int(0, N - 1))];
}

std::string sentence(Rng& rng, std::size_t templates) {
  const auto t = static_cast<std::size_t>(rng.uniform_int(0, templates - 1));
  std::string s;
  switch (t) {
    case 0:
      s = std::string("The ") + pick(rng, kAdjectives) + " " + pick(rng, kNouns) + " " +
          pick(rng, kVerbs) + " the " + pick(rng, kNouns) + " near the " + pick(rng, kPlaces) +
          ".";
      break;
    case 1:
      s = std::string("On ") + pick(rng, kTimes) + " a " + pick(rng, kNouns) + " " +
          pick(rng, kVerbs) + " the " + pick(rng, kAdjectives) + " " + pick(rng, kNouns) + ".";
      break;
    default:
      s = std::string("Near the ") + pick(rng, kPlaces) + ", the " + pick(rng, kNouns) + " " +
          pick(rng, kVerbs) + " a " + pick(rng, kAdjectives) + " " + pick(rng, kNouns) + "!";
      break;
  }
  return s;
}

std::vector<std::string> document_sentences(const SyntheticSpec& spec, std::uint64_t seed,
                                            std::size_t index) {
  Rng rng(derive_seed(seed, index));
  const auto m = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(spec.min_sentences), static_cast<std::int64_t>(spec.max_sentences)));
  std::vector<std::string> out;
  std::set<std::string> seen;
  while (out.size() < m) {
    auto s = sentence(rng, spec.templates);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

std::string join(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::string doc_id(const SyntheticSpec& spec, std::size_t i) {
  return spec.id_prefix + "-" + std::to_string(i);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_docs < 1) throw InvalidArgument("n_docs must be >= 1");
  if (min_sentences < 1 || min_sentences > max_sentences) {
    throw InvalidArgument("need 1 <= min_sentences <= max_sentences");
  }
  if (templates < 1 || templates > 3) throw InvalidArgument("templates must be in 1..3");
  if (summary_sentences < 1 || summary_sentences > min_sentences) {
    throw InvalidArgument("need 1 <= summary_sentences <= min_sentences");
  }
  if (!(reorder_fraction >= 0.0 && reorder_fraction <= 1.0)) {
    throw InvalidArgument("reorder_fraction must be in [0, 1]");
  }
  if (reorder_fraction > 0.0 && summary_sentences < 2) {
    throw InvalidArgument("reordered summaries need at least 2 sentences");
  }
}

std::vector<text::RawDocument> gen_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<text::RawDocument> docs;
  docs.reserve(spec.n_docs);
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    docs.push_back({doc_id(spec, i), join(document_sentences(spec, seed, i))});
  }
  return docs;
}

std::vector<DocPair> gen_pairs(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto n_reordered =
      static_cast<std::size_t>(std::llround(spec.reorder_fraction * static_cast<double>(spec.n_docs)));
  std::vector<std::size_t> order(spec.n_docs);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "reorder"));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> reordered(spec.n_docs, false);
  for (std::size_t i = 0; i < n_reordered; ++i) reordered[order[i]] = true;

  std::vector<DocPair> pairs;
  pairs.reserve(spec.n_docs);
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    const auto sentences = document_sentences(spec, seed, i);
    std::vector<std::string> lead(sentences.begin(),
                                  sentences.begin() + static_cast<std::ptrdiff_t>(spec.summary_sentences));
    if (reordered[i]) std::reverse(lead.begin(), lead.end());
    pairs.push_back({doc_id(spec, i), join(sentences), join(lead)});
  }
  return pairs;
}

}  // namespace seqpt::pipeline
