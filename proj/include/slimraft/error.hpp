#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slimraft {

// Every failure raised by the core carries one of these codes. The C API
// maps them one-to-one onto slimraft_status values.
enum class Errc {
  InvalidArgument = 1,
  Io,
  Parse,
  InvalidLength,
  NonDigit,
  ChapterOutOfRange,
  DuplicateCode,
  MissingAncestor,
  UnknownCode,
  EmptyTable,
  UnknownPlaceholder,
  DuplicateTemplateId,
  EmptyTemplateSet,
  DuplicateVariant,
  InconsistentVariations,
  ResidualPlaceholder,
  InvalidRecord,
  HoldoutTooLarge,
  BudgetExhausted,
  Client,
  UnparsableVerdict,
  NonCanonicalOutput,
  EmptyVerdictSet,
  AllItemsFailed,
  VersionMismatch,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace slimraft
