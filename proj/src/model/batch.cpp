#include "seqpt/model/batch.hpp"

#include <algorithm>

#include "seqpt/error.hpp"

namespace seqpt::model {

std::size_t Batch::live_source(std::size_t b) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < source_len; ++t) n += source_mask[b * source_len + t];
  return n;
}

std::size_t Batch::live_target(std::size_t b) const {
  for (std::size_t t = target_len; t > 0; --t) {
    if (label_mask[b * target_len + t - 1]) return t;
  }
  return 0;
}

std::size_t Batch::live_labels() const {
  return static_cast<std::size_t>(std::count(label_mask.begin(), label_mask.end(), 1));
}

Batch make_batch(std::span<const SeqPair> pairs) {
  Batch batch;
  batch.size = pairs.size();
  for (const auto& p : pairs) {
    if (p.source.empty()) throw ShapeMismatch("empty source sequence");
    batch.source_len = std::max(batch.source_len, p.source.size());
    batch.target_len = std::max(batch.target_len, p.target.size() + 1);
  }
  batch.source.assign(batch.size * batch.source_len, text::special::kPad);
  batch.source_mask.assign(batch.size * batch.source_len, 0);
  batch.decoder_input.assign(batch.size * batch.target_len, text::special::kPad);
  batch.labels.assign(batch.size * batch.target_len, text::special::kPad);
  batch.label_mask.assign(batch.size * batch.target_len, 0);
  for (std::size_t b = 0; b < batch.size; ++b) {
    const auto& p = pairs[b];
    for (std::size_t t = 0; t < p.source.size(); ++t) {
      batch.source[b * batch.source_len + t] = p.source[t];
      batch.source_mask[b * batch.source_len + t] = 1;
    }
    const std::size_t row = b * batch.target_len;
    batch.decoder_input[row] = text::special::kBos;
    for (std::size_t t = 0; t < p.target.size(); ++t) {
      batch.decoder_input[row + t + 1] = p.target[t];
      batch.labels[row + t] = p.target[t];
      batch.label_mask[row + t] = 1;
    }
    batch.labels[row + p.target.size()] = text::special::kEos;
    batch.label_mask[row + p.target.size()] = 1;
  }
  return batch;
}

Batch make_batch(std::span<const objectives::PretrainExample> examples) {
  std::vector<SeqPair> pairs;
  pairs.reserve(examples.size());
  for (const auto& ex : examples) pairs.push_back({ex.input, ex.target});
  return make_batch(pairs);
}

void validate_batch(const Batch& batch, std::size_t vocab_size, std::size_t max_positions) {
  if (batch.size == 0) throw ShapeMismatch("empty batch");
  if (batch.source.size() != batch.size * batch.source_len ||
      batch.source_mask.size() != batch.source.size() ||
      batch.decoder_input.size() != batch.size * batch.target_len ||
      batch.labels.size() != batch.decoder_input.size() ||
      batch.label_mask.size() != batch.labels.size()) {
    throw ShapeMismatch("batch buffers disagree with declared shape");
  }
  if (batch.source_len > max_positions || batch.target_len > max_positions) {
    throw ShapeMismatch("sequence longer than max_positions");
  }
  auto in_range = [&](TokenId id) { return id >= 0 && static_cast<std::size_t>(id) < vocab_size; };
  if (!std::all_of(batch.source.begin(), batch.source.end(), in_range) ||
      !std::all_of(batch.decoder_input.begin(), batch.decoder_input.end(), in_range) ||
      !std::all_of(batch.labels.begin(), batch.labels.end(), in_range)) {
    throw ShapeMismatch("token id outside the model vocabulary");
  }
  for (std::size_t b = 0; b < batch.size; ++b) {
    if (batch.live_source(b) == 0) throw ShapeMismatch("example with no source tokens");
  }
}

}  // namespace seqpt::model
