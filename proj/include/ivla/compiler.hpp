#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ivla/delta.hpp"
#include "ivla/evaluate.hpp"
#include "ivla/program.hpp"

namespace ivla {

// target := [b1 | b2 | ...]. A dense temporary is a single unstacked block.
struct BlockAssign {
  std::string target;
  std::vector<Expr> blocks;
  bool stacked = true;
};

// (left_out, right_out) := low-rank correction of `inverse_view` for the
// argument delta left_in * right_in', one column pair at a time.
struct ShermanMorrisonAssign {
  std::string left_out;
  std::string right_out;
  std::string inverse_view;
  std::string left_in;
  std::string right_in;
};

using TriggerStep = std::variant<BlockAssign, ShermanMorrisonAssign>;

// target += left * right', or target += left when right is empty.
struct TriggerUpdate {
  std::string target;
  std::string left;
  std::string right;
  bool dense() const { return right.empty(); }
};

struct TriggerProgram {
  std::string trigger_on;
  std::string param_u;
  std::string param_v;
  std::size_t rank = 1;
  std::vector<TriggerStep> assigns;
  std::vector<TriggerUpdate> updates;
  // Every name the trigger reads or writes, including params and temporaries.
  ShapeMap shapes;
  // Statements whose delta is kept as a single dense matrix.
  std::set<std::string> hybrid;
  // Inverse statements recomputed from scratch.
  std::set<std::string> recomputed;
};

struct TriggerSet {
  Program source;
  // `source` with nested inverses hoisted into auxiliary views (_aux1, ...).
  Program program;
  std::vector<std::string> aux_views;
  DimBindings dims;
  ShapeMap shapes;
  std::vector<TriggerProgram> triggers;

  const TriggerProgram* find(const std::string& input) const;
};

struct CompileOptions {
  std::size_t rank = 1;
  // A statement falls back to a dense delta when twice its factored width
  // exceeds its smallest dimension.
  bool width_fallback = true;
};

// Derive + factor. Returns an empty FactoredDelta when `e` is unaffected.
FactoredDelta compute_delta(const Expr& e, const DeltaEnv& env,
                            const std::string& owner = {});

TriggerSet compile(const Program& p, const std::set<std::string>& dynamic_inputs,
                   const DimBindings& dims, const CompileOptions& options = {});

// Normalization, matrix-chain reassociation, common subexpression sharing and
// single-use inlining, iterated to a fixed point.
TriggerSet optimize(const TriggerSet& ts);

// Materializes every input, auxiliary view and statement target.
MatrixMap initialize_state(const TriggerSet& ts, const MatrixMap& inputs,
                           CostLedger& ledger);

// Runs one trigger for dInput = u * v'. On any error `state` is unchanged.
void apply_trigger(const TriggerProgram& t, MatrixMap& state, const Matrix& u,
                   const Matrix& v, CostLedger& ledger);

// Ledger charges apply_trigger will make, computed from shapes alone.
OpCounts trigger_cost(const TriggerProgram& t);

std::string dump(const TriggerProgram& t);
std::string dump(const TriggerSet& ts);

}  // namespace ivla
