#pragma once

#include <string>
#include <vector>

#include "ivla/analytics.hpp"
#include "ivla/compiler.hpp"
#include "ivla/program.hpp"
#include "ivla/random.hpp"

namespace ivla::testkit {

// Random shape-valid program over A : n x n, X : m x n, B : n x p. Inverses
// only wrap A (diagonally dominant) or X'X with m >= 2n, so they stay safe
// under small updates.
struct RandomProgram {
  std::string source;
  DimBindings dims;
};

class ProgramGenerator {
 public:
  explicit ProgramGenerator(Rng& rng) : rng_(rng) {}

  RandomProgram next() {
    RandomProgram out;
    const std::size_t n = 2 + rng_.below(11);
    out.dims = {{"n", n}, {"m", 2 * n + rng_.below(33 - 2 * n)},
                {"p", 1 + rng_.below(6)}};
    vars_ = {{"A", "n", "n"}, {"X", "m", "n"}, {"B", "n", "p"}};
    std::string src = "input A : n x n;\ninput X : m x n;\ninput B : n x p;\n";
    const std::size_t count = 1 + rng_.below(4);
    std::vector<std::string> targets;
    static const char* kShapes[][2] = {{"n", "n"}, {"n", "p"}, {"m", "n"},
                                       {"p", "p"}, {"n", "m"}};
    for (std::size_t i = 0; i < count; ++i) {
      const auto& sh = kShapes[rng_.below(5)];
      const std::string t = "T" + std::to_string(i + 1);
      src += t + " := " + gen(sh[0], sh[1], 3) + ";\n";
      vars_.push_back({t, sh[0], sh[1]});
      targets.push_back(t);
    }
    src += "output ";
    for (std::size_t i = 0; i < targets.size(); ++i)
      src += (i ? ", " : "") + targets[i];
    src += ";\n";
    out.source = src;
    return out;
  }

 private:
  struct V {
    std::string name, rows, cols;
  };

  std::string leaf(const std::string& r, const std::string& c) {
    std::vector<std::string> options;
    for (const auto& v : vars_) {
      if (v.rows == r && v.cols == c) options.push_back(v.name);
      if (v.rows == c && v.cols == r) options.push_back(v.name + "'");
    }
    if (options.empty()) return {};
    return options[rng_.below(options.size())];
  }

  std::string gen(const std::string& r, const std::string& c, int depth) {
    std::string l = leaf(r, c);
    if (depth == 0 && !l.empty()) return l;
    const auto pick = rng_.below(10);
    if (depth == 0 || (pick < 3 && !l.empty())) {
      if (!l.empty()) return l;
      return gen(r, "n", 0) + " * " + gen("n", c, 0);
    }
    if (pick < 5) {
      const char* mids[] = {"n", "m", "p"};
      std::string mid = mids[rng_.below(3)];
      if (leaf(r, mid).empty() && depth == 1) mid = "n";
      return "(" + gen(r, mid, depth - 1) + ") * (" + gen(mid, c, depth - 1) +
             ")";
    }
    if (pick < 7)
      return "(" + gen(r, c, depth - 1) + (pick == 5 ? " + " : " - ") +
             gen(r, c, depth - 1) + ")";
    if (pick < 8) return "0.5 * (" + gen(r, c, depth - 1) + ")";
    if (r == "n" && c == "n") {
      static const char* kSafe[] = {"inv(A)", "inv(X' * X)", "inv(A')"};
      return kSafe[rng_.below(3)];
    }
    return gen(r, c, depth - 1);
  }

  Rng& rng_;
  std::vector<V> vars_;
};

// Inputs for a ProgramGenerator program.
inline MatrixMap random_inputs(const DimBindings& d, Rng& rng) {
  const std::size_t n = d.at("n"), m = d.at("m"), p = d.at("p");
  return {{"A", random_well_conditioned(n, rng)},
          {"X", random_matrix(m, n, rng)},
          {"B", random_matrix(n, p, rng)}};
}

// Runs every update incrementally and against full re-evaluation; returns
// the worst relative Frobenius error over all statement targets.
inline double max_trigger_error(const TriggerSet& ts, MatrixMap inputs,
                                const std::vector<RankKUpdate>& updates) {
  CostLedger ledger;
  MatrixMap state = initialize_state(ts, inputs, ledger);
  double worst = 0;
  for (const auto& up : updates) {
    const TriggerProgram* t = ts.find(up.target);
    apply_trigger(*t, state, up.u, up.v, ledger);
    mat_mul_nt_accumulate(inputs.at(up.target), up.u, up.v, ledger);
    MatrixMap oracle = evaluate_program(ts.source, inputs, ledger);
    for (const auto& s : ts.source.statements)
      worst = std::max(worst,
                       relative_error(state.at(s.target), oracle.at(s.target)));
  }
  return worst;
}

}  // namespace ivla::testkit
