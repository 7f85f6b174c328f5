#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace trainforge {

// Structured failure raised by every module. `code` is a stable machine code
// (e.g. "sequence-gap", "empty-cohort"); the optional fields pin the offending
// event or byte when one exists.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

  std::optional<std::uint64_t> seq;
  std::optional<std::uint64_t> byte_offset;
  std::optional<std::string> field;

  Error&& at_seq(std::uint64_t s) && {
    seq = s;
    return std::move(*this);
  }
  Error&& at_offset(std::uint64_t o) && {
    byte_offset = o;
    return std::move(*this);
  }
  Error&& at_field(std::string f) && {
    field = std::move(f);
    return std::move(*this);
  }

private:
  std::string code_;
};

}  // namespace trainforge
