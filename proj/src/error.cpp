#include "seqpt/error.hpp"

namespace seqpt {

MalformedRecord::MalformedRecord(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace seqpt
