#pragma once

#include <span>
#include <string>
#include <string_view>

namespace slimraft {

// Portuguese instruction sentence placed between the context block and the
// question.
inline constexpr std::string_view kDefaultInstruction =
    "responda a seguinte pergunta usando informações do contexto anterior:";

// Single-line canonical form: newlines become spaces, runs of spaces
// collapse, ends trimmed.
std::string canonical_line(std::string_view s);

// User-message layout shared by training records and inference prompts:
//
//   [context 1],
//   [context 2],
//
//   <instruction> <question>
//
// With no contexts the block and the blank line are omitted. Every piece is
// passed through canonical_line().
std::string render_user_message(std::span<const std::string> contexts,
                                std::string_view instruction,
                                std::string_view question);

}  // namespace slimraft
