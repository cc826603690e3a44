#pragma once

#include <string>
#include <string_view>

#include "enerlyze/lang/ast.hpp"

namespace enerlyze::lang {

/// Parses `.esrc` source text. Throws SyntaxError with line/column on
/// malformed input and on duplicate record, global or method names.
Program parse_source(std::string_view text);

/// Renders a program in canonical form; `parse_source` of the result yields a
/// structurally identical program.
std::string pretty_print(const Program& program);
std::string pretty_print(const Expr& expr);
std::string pretty_print(const std::vector<Stmt>& stmts, int indent = 0);

}  // namespace enerlyze::lang
