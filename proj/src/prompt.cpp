#include "slimraft/prompt.hpp"

#include "slimraft/text.hpp"

namespace slimraft {

std::string canonical_line(std::string_view s) {
  std::string flat(s);
  for (char& c : flat)
    if (c == '\n' || c == '\r') c = ' ';
  return text::collapse_spaces(flat);
}

std::string render_user_message(std::span<const std::string> contexts,
                                std::string_view instruction,
                                std::string_view question) {
  std::string out;
  for (const auto& ctx : contexts) {
    out += '[';
    out += canonical_line(ctx);
    out += "],\n";
  }
  if (!contexts.empty()) out += '\n';
  const auto instr = canonical_line(instruction);
  out += instr;
  if (!instr.empty()) out += ' ';
  out += canonical_line(question);
  return out;
}

}  // namespace slimraft
