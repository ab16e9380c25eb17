#pragma once

#include <stdexcept>
#include <string>

#include "owgp/goal_ast.h"

namespace owgp {

struct ParseError : std::runtime_error {
  int line = 1, column = 1;
  ParseError(int ln, int col, const std::string& msg)
      : std::runtime_error(std::to_string(ln) + ":" + std::to_string(col) +
                           ": " + msg),
        line(ln),
        column(col) {}
};

// Grammar (keywords case-insensitive):
//   goal   := ["exists" var ("," var)* "."] fluent ("&" fluent)*
//   fluent := "B(" phi "," prob ")" | "KRD(" term ")"
//           | "BContents(" name "," prob ")"
//           | "B(ExistsIn(" expr "," name ")," prob ")"
//   phi    := "den(" expr "," term ")" | rel "(" term ("," term)* ")"
//   expr   := "lambda" var "." body
//   body   := rel "(" var ")" | "and(" body "," body ")"
//           | "or(" body "," body ")" | "exists(" var "," body ")"
//
// Relation names are checked against the domain vocabulary; all expressions
// must be closed. Definite descriptions ("the ...") are rejected explicitly.
GoalFormula parse_goal(const std::string& text, const DomainConfig& domain);
ExprPtr parse_expr(const std::string& text, const DomainConfig& domain);

}  // namespace owgp
