#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqpt {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SEQPT_DECLARE_ERROR(Name)        \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

SEQPT_DECLARE_ERROR(EmptyCorpus);
SEQPT_DECLARE_ERROR(InvalidId);
SEQPT_DECLARE_ERROR(InvalidArgument);
SEQPT_DECLARE_ERROR(FormatError);
SEQPT_DECLARE_ERROR(EmptyDocument);
SEQPT_DECLARE_ERROR(TooShort);
SEQPT_DECLARE_ERROR(NoFeasibleObjective);
SEQPT_DECLARE_ERROR(EmptySide);
SEQPT_DECLARE_ERROR(ShapeMismatch);
SEQPT_DECLARE_ERROR(AllPadded);
SEQPT_DECLARE_ERROR(NonFiniteLoss);
SEQPT_DECLARE_ERROR(EmptyDataset);

#undef SEQPT_DECLARE_ERROR

/// Raised while reading JSONL input; carries the 1-based line number.
class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace seqpt
