#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ivla/expr.hpp"

namespace ivla {

// Dimension bindings, e.g. {"n": 128, "p": 8}. Integer literals used as
// dimensions in source need no binding.
using DimBindings = std::map<std::string, std::size_t>;

struct InputDecl {
  std::string name;
  std::string rows;  // dimension symbol or integer literal
  std::string cols;
};

struct Statement {
  std::string target;
  Expr expr;
};

// A straight-line linear-algebra program in single static assignment form.
struct Program {
  std::vector<InputDecl> inputs;
  std::vector<Statement> statements;
  std::vector<std::string> outputs;

  bool is_input(const std::string& name) const;
  const InputDecl* find_input(const std::string& name) const;
  const Statement* find_statement(const std::string& target) const;
  std::vector<std::string> input_names() const;
};

// Parses the `.ivla` grammar:
//
//   input A : n x n ;          declaration, dimensions are symbols or literals
//   B := A * A ;               statement
//   output B, C ;              outputs
//
// Expressions use `+ - *`, postfix `'` (transpose), `inv(e)`, parentheses and
// numeric literals as scalar factors (`0.5 * A`). `#` starts a line comment.
// Throws ParseError (syntax, use-before-def, reassignment) or ShapeError.
Program parse_program(std::string_view text);
Program load_program(const std::string& path);

std::string to_string(const Program& p);
bool structurally_equal(const Program& a, const Program& b);

// Symbolic shapes of every input and statement target.
SymbolicShapeMap symbolic_shapes(const Program& p);

// Resolves a dimension symbol or literal. Throws ConfigError("unbound
// dimension ...") when a symbol has no binding.
std::size_t resolve_dim(const std::string& dim, const DimBindings& dims);

// Numeric shapes of every input and statement target.
ShapeMap shape_check(const Program& p, const DimBindings& dims);

}  // namespace ivla
