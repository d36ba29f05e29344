#include "slimraft/error.hpp"

namespace slimraft {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::Parse: return "ParseError";
    case Errc::InvalidLength: return "InvalidLength";
    case Errc::NonDigit: return "NonDigit";
    case Errc::ChapterOutOfRange: return "ChapterOutOfRange";
    case Errc::DuplicateCode: return "DuplicateCode";
    case Errc::MissingAncestor: return "MissingAncestor";
    case Errc::UnknownCode: return "UnknownCode";
    case Errc::EmptyTable: return "EmptyTable";
    case Errc::UnknownPlaceholder: return "UnknownPlaceholder";
    case Errc::DuplicateTemplateId: return "DuplicateTemplateId";
    case Errc::EmptyTemplateSet: return "EmptyTemplateSet";
    case Errc::DuplicateVariant: return "DuplicateVariant";
    case Errc::InconsistentVariations: return "InconsistentVariations";
    case Errc::ResidualPlaceholder: return "ResidualPlaceholder";
    case Errc::InvalidRecord: return "InvalidRecord";
    case Errc::HoldoutTooLarge: return "HoldoutTooLarge";
    case Errc::BudgetExhausted: return "BudgetExhausted";
    case Errc::Client: return "ClientError";
    case Errc::UnparsableVerdict: return "UnparsableVerdict";
    case Errc::NonCanonicalOutput: return "NonCanonicalOutput";
    case Errc::EmptyVerdictSet: return "EmptyVerdictSet";
    case Errc::AllItemsFailed: return "AllItemsFailed";
    case Errc::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

}  // namespace slimraft
