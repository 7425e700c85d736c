#include "ivla/compiler.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "ivla/error.hpp"

namespace ivla {

const TriggerProgram* TriggerSet::find(const std::string& input) const {
  for (const auto& t : triggers) {
    if (t.trigger_on == input) return &t;
  }
  return nullptr;
}

FactoredDelta compute_delta(const Expr& e, const DeltaEnv& env,
                            const std::string& owner) {
  Expr d = derive_delta(e, env);
  if (!d) {
    FactoredDelta empty;
    empty.owner = owner;
    return empty;
  }
  return factor_delta(d, env, owner);
}

namespace {

class NameSource {
 public:
  explicit NameSource(std::set<std::string> used) : used_(std::move(used)) {}

  std::string fresh(const std::string& base) {
    std::string name = base;
    for (int i = 2; used_.contains(name); ++i) {
      name = base + "_" + std::to_string(i);
    }
    used_.insert(name);
    return name;
  }
  bool used(const std::string& name) const { return used_.contains(name); }

 private:
  std::set<std::string> used_;
};

std::set<std::string> program_names(const Program& p) {
  std::set<std::string> names;
  for (const auto& in : p.inputs) names.insert(in.name);
  for (const auto& s : p.statements) names.insert(s.target);
  return names;
}

std::pair<Program, std::vector<std::string>> hoist_inverses(const Program& p) {
  Program out;
  out.inputs = p.inputs;
  out.outputs = p.outputs;
  std::vector<std::string> aux;
  std::map<std::string, std::string> by_key;
  std::set<std::string> used = program_names(p);
  int counter = 0;

  auto hoist = [&](const Expr& e) {
    return rewrite(e, [&](const Expr& node) -> Expr {
      if (node->kind != ExprKind::Inverse) return nullptr;
      const std::string key = to_string(node);
      auto it = by_key.find(key);
      if (it != by_key.end()) return var(it->second);
      std::string name;
      do {
        name = "_aux" + std::to_string(++counter);
      } while (used.contains(name));
      used.insert(name);
      by_key[key] = name;
      aux.push_back(name);
      out.statements.push_back({name, node});
      return var(name);
    });
  };

  for (const auto& s : p.statements) {
    Expr e = s.expr->kind == ExprKind::Inverse ? inverse(hoist(s.expr->lhs))
                                               : hoist(s.expr);
    out.statements.push_back({s.target, e});
  }
  return {std::move(out), std::move(aux)};
}

TriggerProgram compile_trigger(const TriggerSet& ts, const std::string& input,
                               const CompileOptions& options) {
  TriggerProgram t;
  t.trigger_on = input;
  t.rank = options.rank;
  t.shapes = ts.shapes;
  NameSource names(program_names(ts.program));

  if (!names.used("u") && !names.used("v")) {
    t.param_u = names.fresh("u");
    t.param_v = names.fresh("v");
  } else {
    t.param_u = names.fresh("u_" + input);
    t.param_v = names.fresh("v_" + input);
  }
  const Shape in_shape = ts.shapes.at(input);
  t.shapes[t.param_u] = {in_shape.rows, options.rank};
  t.shapes[t.param_v] = {in_shape.cols, options.rank};

  DeltaEnv env;
  env.entries.push_back(
      DeltaEntry::low_rank(input, t.param_u, t.param_v, options.rank));
  t.updates.push_back({input, t.param_u, t.param_v});

  auto fits = [&](std::size_t width, const Shape& s) {
    return !options.width_fallback ||
           2 * width <= std::min(s.rows, s.cols);
  };
  auto emit_low_rank = [&](const std::string& target, FactoredDelta fd,
                           const Shape& s) {
    const std::string u = names.fresh("U_" + target);
    const std::string v = names.fresh("V_" + target);
    t.assigns.push_back(BlockAssign{u, fd.u_blocks, true});
    t.assigns.push_back(BlockAssign{v, fd.v_blocks, true});
    t.shapes[u] = {s.rows, fd.width()};
    t.shapes[v] = {s.cols, fd.width()};
    env.entries.push_back(DeltaEntry::low_rank(target, u, v, fd.width()));
    t.updates.push_back({target, u, v});
  };
  auto emit_dense = [&](const std::string& target, Expr d, const Shape& s) {
    const std::string name = names.fresh("D_" + target);
    t.assigns.push_back(BlockAssign{name, {std::move(d)}, false});
    t.shapes[name] = s;
    env.entries.push_back(DeltaEntry::dense(target, name));
    t.updates.push_back({target, name, ""});
  };

  for (const auto& s : ts.program.statements) {
    if (!env.affects(s.expr)) continue;
    const Shape shape = ts.shapes.at(s.target);

    if (s.expr->kind == ExprKind::Inverse) {
      const Expr& arg = s.expr->lhs;
      Expr darg = derive_delta(arg, env);
      if (is_factorable(darg, env)) {
        FactoredDelta fd = factor_delta(darg, env, s.target);
        if (fits(fd.width(), shape)) {
          const std::string p = names.fresh("P_" + s.target);
          const std::string q = names.fresh("Q_" + s.target);
          const std::string u = names.fresh("U_" + s.target);
          const std::string v = names.fresh("V_" + s.target);
          t.assigns.push_back(BlockAssign{p, fd.u_blocks, true});
          t.assigns.push_back(BlockAssign{q, fd.v_blocks, true});
          t.assigns.push_back(ShermanMorrisonAssign{u, v, s.target, p, q});
          for (const auto& name : {p, q, u, v}) {
            t.shapes[name] = {shape.rows, fd.width()};
          }
          env.entries.push_back(
              DeltaEntry::low_rank(s.target, u, v, fd.width()));
          t.updates.push_back({s.target, u, v});
          continue;
        }
      }
      t.recomputed.insert(s.target);
      emit_dense(s.target, sub(inverse(add(arg, darg)), var(s.target)), shape);
      continue;
    }

    Expr d = derive_delta(s.expr, env);
    if (is_factorable(d, env)) {
      FactoredDelta fd = factor_delta(d, env, s.target);
      if (fits(fd.width(), shape)) {
        emit_low_rank(s.target, std::move(fd), shape);
        continue;
      }
    }
    t.hybrid.insert(s.target);
    emit_dense(s.target, std::move(d), shape);
  }
  return t;
}

// ---- optimizer passes ------------------------------------------------------

bool cse_candidate(const Expr& e) {
  if (e->kind == ExprKind::Var) return false;
  if (e->kind == ExprKind::Transpose && e->lhs->kind == ExprKind::Var) {
    return false;
  }
  return true;
}

void visit(const Expr& e, const std::function<void(const Expr&)>& fn) {
  if (!e) return;
  fn(e);
  visit(e->lhs, fn);
  visit(e->rhs, fn);
}

std::set<std::string> trigger_names(const TriggerProgram& t) {
  std::set<std::string> names;
  for (const auto& [name, shape] : t.shapes) names.insert(name);
  return names;
}

void reassociate_pass(TriggerProgram& t) {
  for (auto& step : t.assigns) {
    if (auto* b = std::get_if<BlockAssign>(&step)) {
      for (auto& e : b->blocks) e = reassociate(normalize(e), t.shapes);
    }
  }
}

bool cse_once(TriggerProgram& t) {
  struct Seen {
    std::size_t count = 0;
    std::size_t first_assign = 0;
    std::size_t order = 0;
    Expr expr;
  };
  std::map<std::string, Seen> seen;
  std::size_t order = 0;
  for (std::size_t a = 0; a < t.assigns.size(); ++a) {
    const auto* b = std::get_if<BlockAssign>(&t.assigns[a]);
    if (!b) continue;
    for (const auto& block : b->blocks) {
      visit(block, [&](const Expr& node) {
        if (!cse_candidate(node)) return;
        auto [it, inserted] = seen.try_emplace(to_string(node));
        if (inserted) {
          it->second.first_assign = a;
          it->second.order = order++;
          it->second.expr = node;
        }
        ++it->second.count;
      });
    }
  }
  const Seen* best = nullptr;
  std::string best_key;
  for (const auto& [key, s] : seen) {
    if (s.count < 2) continue;
    if (!best || expr_size(s.expr) > expr_size(best->expr) ||
        (expr_size(s.expr) == expr_size(best->expr) && s.order < best->order)) {
      best = &s;
      best_key = key;
    }
  }
  if (!best) return false;

  NameSource names(trigger_names(t));
  std::string name;
  for (int k = 1;; ++k) {
    name = "_cse" + std::to_string(k);
    if (!names.used(name)) break;
  }
  const Expr def = best->expr;
  const std::size_t at = best->first_assign;
  for (auto& step : t.assigns) {
    if (auto* b = std::get_if<BlockAssign>(&step)) {
      for (auto& e : b->blocks) {
        e = rewrite(e, [&](const Expr& node) -> Expr {
          return cse_candidate(node) && to_string(node) == best_key ? var(name)
                                                                     : nullptr;
        });
      }
    }
  }
  t.shapes[name] = infer_shape(def, t.shapes);
  t.assigns.insert(t.assigns.begin() + static_cast<long>(at),
                   BlockAssign{name, {def}, false});
  return true;
}

std::size_t count_var(const Expr& e, const std::string& name) {
  std::size_t n = 0;
  visit(e, [&](const Expr& node) {
    if (is_var(node, name)) ++n;
  });
  return n;
}

bool inline_once(TriggerProgram& t) {
  for (std::size_t a = 0; a < t.assigns.size(); ++a) {
    const auto* def = std::get_if<BlockAssign>(&t.assigns[a]);
    if (!def || def->blocks.size() != 1 || def->stacked) continue;
    const std::string& name = def->target;
    bool pinned = false;
    for (const auto& u : t.updates) {
      pinned |= u.target == name || u.left == name || u.right == name;
    }
    std::size_t uses = 0;
    std::size_t user = 0;
    for (std::size_t b = 0; b < t.assigns.size(); ++b) {
      if (const auto* ba = std::get_if<BlockAssign>(&t.assigns[b])) {
        for (const auto& e : ba->blocks) {
          const std::size_t c = count_var(e, name);
          if (c) user = b;
          uses += c;
        }
      } else {
        const auto& sm = std::get<ShermanMorrisonAssign>(t.assigns[b]);
        pinned |= sm.inverse_view == name || sm.left_in == name ||
                  sm.right_in == name;
      }
    }
    if (pinned || uses != 1) continue;
    const Expr body = def->blocks.front();
    auto& target = std::get<BlockAssign>(t.assigns[user]);
    for (auto& e : target.blocks) e = substitute(e, {{name, body}});
    t.shapes.erase(name);
    t.assigns.erase(t.assigns.begin() + static_cast<long>(a));
    return true;
  }
  return false;
}

std::string join_blocks(const std::vector<Expr>& blocks) {
  std::string s = "[ ";
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) s += " | ";
    s += to_string(blocks[i]);
  }
  return s + " ]";
}

}  // namespace

TriggerSet compile(const Program& p, const std::set<std::string>& dynamic_inputs,
                   const DimBindings& dims, const CompileOptions& options) {
  if (options.rank == 0) throw ConfigError("update rank must be at least 1");
  for (const auto& name : dynamic_inputs) {
    if (!p.is_input(name)) {
      throw ConfigError("'" + name + "' is not a declared input");
    }
  }
  TriggerSet ts;
  ts.source = p;
  std::tie(ts.program, ts.aux_views) = hoist_inverses(p);
  ts.dims = dims;
  ts.shapes = shape_check(ts.program, dims);
  for (const auto& in : p.inputs) {
    if (dynamic_inputs.contains(in.name)) {
      ts.triggers.push_back(compile_trigger(ts, in.name, options));
    }
  }
  return ts;
}

TriggerSet optimize(const TriggerSet& ts) {
  TriggerSet out = ts;
  for (auto& t : out.triggers) {
    for (int round = 0; round < 10; ++round) {
      const std::string before = dump(t);
      reassociate_pass(t);
      while (cse_once(t)) {
      }
      while (inline_once(t)) {
      }
      if (dump(t) == before) break;
    }
  }
  return out;
}

MatrixMap initialize_state(const TriggerSet& ts, const MatrixMap& inputs,
                           CostLedger& ledger) {
  return evaluate_program(ts.program, inputs, ledger);
}

void apply_trigger(const TriggerProgram& t, MatrixMap& state, const Matrix& u,
                   const Matrix& v, CostLedger& ledger) {
  auto it = state.find(t.trigger_on);
  if (it == state.end()) {
    throw DataError("state has no matrix '" + t.trigger_on + "'");
  }
  const Matrix& input = it->second;
  if (u.rows() != input.rows() || v.rows() != input.cols() ||
      u.cols() != v.cols()) {
    throw DataError("update factors " + u.shape_string() + " and " +
                    v.shape_string() + " do not fit " + t.trigger_on + " " +
                    input.shape_string());
  }

  MatrixMap temps;
  temps[t.param_u] = u;
  temps[t.param_v] = v;
  auto lookup = [&](const std::string& name) -> const Matrix* {
    if (auto i = temps.find(name); i != temps.end()) return &i->second;
    if (auto i = state.find(name); i != state.end()) return &i->second;
    return nullptr;
  };
  auto need = [&](const std::string& name) -> const Matrix& {
    const Matrix* m = lookup(name);
    if (!m) throw DataError("state has no matrix '" + name + "'");
    return *m;
  };

  for (const auto& step : t.assigns) {
    if (const auto* b = std::get_if<BlockAssign>(&step)) {
      LedgerLabel label(ledger, b->target);
      std::vector<Matrix> blocks;
      blocks.reserve(b->blocks.size());
      for (const auto& e : b->blocks) blocks.push_back(evaluate(e, lookup, ledger));
      temps[b->target] =
          blocks.size() == 1 ? std::move(blocks.front()) : hcat(blocks);
    } else {
      const auto& sm = std::get<ShermanMorrisonAssign>(step);
      LedgerLabel label(ledger, sm.left_out);
      LowRankValue lr = apply_sequential_sm(need(sm.inverse_view),
                                            need(sm.left_in),
                                            need(sm.right_in), ledger);
      temps[sm.left_out] = std::move(lr.left);
      temps[sm.right_out] = std::move(lr.right);
    }
  }

  std::vector<std::pair<std::string, Matrix>> next;
  next.reserve(t.updates.size());
  for (const auto& up : t.updates) {
    LedgerLabel label(ledger, up.target + " +=");
    Matrix m = need(up.target);
    if (up.dense()) {
      mat_add_inplace(m, need(up.left), ledger);
    } else {
      mat_mul_nt_accumulate(m, need(up.left), need(up.right), ledger);
    }
    next.emplace_back(up.target, std::move(m));
  }
  for (auto& [name, m] : next) state[name] = std::move(m);
}

OpCounts trigger_cost(const TriggerProgram& t) {
  OpCounts c;
  for (const auto& step : t.assigns) {
    if (const auto* b = std::get_if<BlockAssign>(&step)) {
      for (const auto& e : b->blocks) c += evaluation_counts(e, t.shapes);
    } else {
      const auto& sm = std::get<ShermanMorrisonAssign>(step);
      const std::size_t n = t.shapes.at(sm.inverse_view).rows;
      const std::size_t k = t.shapes.at(sm.left_in).cols;
      for (std::size_t j = 0; j < k; ++j) {
        c.mul_adds += 2 * n * n + 2 * n;
        if (j > 0) {
          c.mul_adds += 4 * n * j;
          c.adds += 2 * n;
        }
      }
    }
  }
  for (const auto& up : t.updates) {
    const Shape s = t.shapes.at(up.target);
    if (up.dense()) {
      c.adds += s.rows * s.cols;
    } else {
      c.mul_adds += s.rows * t.shapes.at(up.left).cols * s.cols;
    }
  }
  return c;
}

std::string dump(const TriggerProgram& t) {
  std::string out = "ON UPDATE " + t.trigger_on + " BY (" + t.param_u + "," +
                    t.param_v + "):\n";
  for (const auto& step : t.assigns) {
    out += "    ";
    if (const auto* b = std::get_if<BlockAssign>(&step)) {
      out += b->target + " := ";
      out += b->stacked ? join_blocks(b->blocks) : to_string(b->blocks.front());
    } else {
      const auto& sm = std::get<ShermanMorrisonAssign>(step);
      out += "(" + sm.left_out + ", " + sm.right_out + ") := sherman_morrison(" +
             sm.inverse_view + ", " + sm.left_in + ", " + sm.right_in + ")";
    }
    out += ";\n";
  }
  for (const auto& up : t.updates) {
    out += "    " + up.target + " += ";
    out += up.dense() ? up.left : up.left + "*" + up.right + "'";
    out += ";\n";
  }
  return out;
}

std::string dump(const TriggerSet& ts) {
  std::string out;
  for (const auto& name : ts.aux_views) {
    out += "VIEW " + name + " := " + to_string(ts.program.find_statement(name)->expr) +
           ";\n";
  }
  for (const auto& t : ts.triggers) {
    if (!out.empty()) out += "\n";
    out += dump(t);
  }
  return out;
}

}  // namespace ivla
