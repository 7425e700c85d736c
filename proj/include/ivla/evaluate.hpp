#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ivla/expr.hpp"
#include "ivla/ledger.hpp"
#include "ivla/matrix.hpp"
#include "ivla/program.hpp"

namespace ivla {

using MatrixMap = std::map<std::string, Matrix>;
// Returns nullptr for unknown names.
using MatrixLookup = std::function<const Matrix*(const std::string&)>;

MatrixLookup lookup_in(const MatrixMap& m);

// Evaluates `e` exactly as parenthesized (no reassociation), charging every
// kernel to `ledger`. A product whose left operand is a transposed name uses
// the transposed-multiply kernel instead of materializing the transpose.
Matrix evaluate(const Expr& e, const MatrixLookup& lookup, CostLedger& ledger);
Matrix evaluate(const Expr& e, const MatrixMap& env, CostLedger& ledger);

// Evaluates every statement of `p` in order; returns inputs plus all targets.
// Charges are labeled with the statement target.
MatrixMap evaluate_program(const Program& p, const MatrixMap& inputs,
                           CostLedger& ledger);

// Matrix-chain ordering for dimensions d[0] x d[1], d[1] x d[2], ...
struct ChainOrder {
  std::uint64_t cost = 0;
  // split[i][j]: last split point k for the product of factors i..j.
  std::vector<std::vector<std::size_t>> split;
};
ChainOrder matrix_chain_order(const std::vector<std::size_t>& dims);

// Mul-chain flattening and optimal reassociation of every product in `e`,
// recursively. Ties resolve to the leftmost split, so the result is a fixed
// point: reassociate(reassociate(e)) == reassociate(e).
Expr reassociate(const Expr& e, const ShapeMap& shapes);

// Ledger charges of evaluating `e` as parenthesized.
OpCounts evaluation_counts(const Expr& e, const ShapeMap& shapes);
std::uint64_t evaluation_cost(const Expr& e, const ShapeMap& shapes);

}  // namespace ivla
