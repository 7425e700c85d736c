// ivla: compile linear-algebra programs into update triggers, run update
// streams against them, benchmark strategies and predict costs.
//
// Exit codes: 0 ok, 1 internal, 2 config/parse, 3 data, 4 singularity.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ivla/analytics.hpp"
#include "ivla/compiler.hpp"
#include "ivla/error.hpp"
#include "ivla/stream.hpp"

using namespace ivla;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSingular = 4;

std::string fmt(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, end);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("IVLA_SEED")) {
    std::uint64_t seed = 0;
    const std::string s = env;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || end != s.data() + s.size()) {
      throw ConfigError("IVLA_SEED must be an unsigned integer");
    }
    return seed;
  }
  return kDefaultSeed;
}

std::size_t to_size(const std::string& text, const std::string& what) {
  std::size_t x = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(what + " must be a non-negative integer, got '" + text + "'");
  }
  return x;
}

double to_double(const std::string& text, const std::string& what) {
  double x = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(what + " must be a number, got '" + text + "'");
  }
  return x;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

IterativeModel parse_model(const std::string& name, std::size_t s) {
  if (name == "lin") return IterativeModel::linear();
  if (name == "exp") return IterativeModel::exponential();
  if (name == "skip") return IterativeModel::skip(s);
  throw ConfigError("unknown model '" + name + "' (lin, exp, skip)");
}

Strategy parse_strategy(const std::string& name) {
  if (name == "reeval" || name == "reevaluation") return Strategy::Reevaluation;
  if (name == "incr" || name == "incremental") return Strategy::Incremental;
  if (name == "hybrid") return Strategy::Hybrid;
  throw ConfigError("unknown strategy '" + name + "' (reeval, incr, hybrid)");
}

Workload parse_workload(const std::string& name) {
  if (name == "powers") return Workload::Powers;
  if (name == "sums") return Workload::Sums;
  if (name == "general") return Workload::General;
  if (name == "ols") return Workload::Ols;
  throw ConfigError("unknown workload '" + name + "' (powers, sums, general, ols)");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SingularityError*>(&e) ||
      dynamic_cast<const NumericalError*>(&e)) {
    return kExitSingular;
  }
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e)) {
    return kExitConfig;
  }
  return kExitInternal;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// ---- runners -----------------------------------------------------------------

struct RunSettings {
  std::string workload = "powers";
  std::string program;
  std::string dims_text;
  std::size_t k = 16;
  std::size_t s = 4;
  std::string model = "exp";
  std::string strategy = "incr";
  std::string dynamic;
  std::optional<std::uint64_t> seed;
};

class Runner {
 public:
  virtual ~Runner() = default;
  virtual void initialize(CostLedger& ledger) = 0;
  virtual void apply(const RankKUpdate& up, CostLedger& ledger) = 0;
  virtual double oracle_error() = 0;
  // Updatable matrices and their shapes.
  virtual ShapeMap updatable() const = 0;
  virtual bool row_updates() const { return false; }
  virtual MatrixMap finals() const = 0;
  std::string workload, model = "-", strategy;
  std::size_t n = 0, p = 0, k = 0, s = 0;
};

Matrix square_input(std::size_t n, Rng& rng) {
  return scale_to_frobenius(random_well_conditioned(n, rng), 1.0);
}

class IterativeRunner : public Runner {
 public:
  IterativeRunner(Workload w, IterativeModel model, Strategy strategy,
                  std::size_t n, std::size_t p, std::size_t k, Rng& rng)
      : w_(w), k_(k) {
    Matrix a = random_matrix(n, n, rng);
    if (w == Workload::General) {
      a = scale_to_spectral_radius(a, 0.9);
      b_ = random_matrix(n, p, rng);
      t0_ = random_matrix(n, p, rng);
    } else {
      a = scale_to_frobenius(a, 1.0);
      p = n;
    }
    view_ = std::make_unique<IterativeView>(w, model, strategy, k, std::move(a),
                                            b_, t0_);
    workload = to_string(w);
    this->model = model.name();
    this->strategy = to_string(strategy);
    this->n = n;
    this->p = w == Workload::General ? p : 0;
    this->k = k;
    this->s = model.kind == ModelKind::Skip ? model.s : 0;
  }
  void initialize(CostLedger& ledger) override { view_->initialize(ledger); }
  void apply(const RankKUpdate& up, CostLedger& ledger) override {
    if (up.target != "A") throw DataError("workload updates only A, not '" + up.target + "'");
    view_->apply(up.u, up.v, ledger);
  }
  double oracle_error() override {
    return max_abs_diff(view_->result(), reference_view(w_, view_->a(), k_, b_, t0_));
  }
  ShapeMap updatable() const override {
    return {{"A", {view_->a().rows(), view_->a().cols()}}};
  }
  MatrixMap finals() const override {
    return {{"A", view_->a()}, {"result", view_->result()}};
  }

 private:
  Workload w_;
  std::size_t k_;
  Matrix b_, t0_;
  std::unique_ptr<IterativeView> view_;
};

class OlsRunner : public Runner {
 public:
  OlsRunner(Strategy strategy, std::size_t m, std::size_t n, std::size_t p,
            std::size_t rank, Rng& rng)
      : m_(m), n_(n) {
    Matrix x = random_matrix(m, n, rng), y = random_matrix(m, p, rng);
    view_ = std::make_unique<OlsView>(strategy, std::move(x), std::move(y), rank);
    workload = "ols";
    this->strategy = to_string(strategy);
    this->n = n;
    this->p = p;
  }
  void initialize(CostLedger& ledger) override { view_->initialize(ledger); }
  void apply(const RankKUpdate& up, CostLedger& ledger) override {
    if (up.target != "X") throw DataError("OLS updates only X, not '" + up.target + "'");
    view_->apply(up.u, up.v, ledger);
  }
  double oracle_error() override {
    CostLedger scratch;
    MatrixMap direct = evaluate_program(
        view_->triggers().source, {{"X", view_->x()}, {"Y", view_->y()}}, scratch);
    return max_abs_diff(view_->beta(), direct.at("beta"));
  }
  ShapeMap updatable() const override { return {{"X", {m_, n_}}}; }
  bool row_updates() const override { return true; }
  MatrixMap finals() const override {
    return {{"X", view_->x()}, {"beta", view_->beta()}};
  }

 private:
  std::size_t m_, n_;
  std::unique_ptr<OlsView> view_;
};

class ProgramRunner : public Runner {
 public:
  ProgramRunner(const std::string& path, const DimBindings& dims,
                const std::set<std::string>& dynamic, Strategy strategy,
                std::size_t rank, Rng& rng)
      : strategy_(strategy) {
    if (strategy == Strategy::Hybrid) {
      throw ConfigError("programs run with reeval or incr");
    }
    Program prog = load_program(path);
    std::set<std::string> dyn = dynamic;
    if (dyn.empty()) {
      for (const auto& in : prog.inputs) dyn.insert(in.name);
    }
    CompileOptions options;
    options.rank = rank;
    ts_ = optimize(compile(prog, dyn, dims, options));
    for (const auto& in : prog.inputs) {
      const Shape s = ts_.shapes.at(in.name);
      inputs_[in.name] = s.rows == s.cols ? square_input(s.rows, rng)
                                          : random_matrix(s.rows, s.cols, rng);
    }
    workload = std::filesystem::path(path).stem().string();
    this->strategy = to_string(strategy);
    if (dims.contains("n")) n = dims.at("n");
    if (dims.contains("p")) p = dims.at("p");
  }
  void initialize(CostLedger& ledger) override {
    state_ = initialize_state(ts_, inputs_, ledger);
  }
  void apply(const RankKUpdate& up, CostLedger& ledger) override {
    const TriggerProgram* t = ts_.find(up.target);
    if (!t) throw DataError("'" + up.target + "' is not a dynamic input");
    if (strategy_ == Strategy::Incremental) {
      apply_trigger(*t, state_, up.u, up.v, ledger);
    } else {
      MatrixMap next = inputs_;
      {
        LedgerLabel label(ledger, up.target + " +=");
        mat_mul_nt_accumulate(next.at(up.target), up.u, up.v, ledger);
      }
      state_ = evaluate_program(ts_.program, next, ledger);
    }
    inputs_.at(up.target) = state_.at(up.target);
  }
  double oracle_error() override {
    CostLedger scratch;
    MatrixMap direct = evaluate_program(ts_.source, inputs_, scratch);
    double err = 0;
    for (const auto& out : ts_.source.outputs) {
      err = std::max(err, max_abs_diff(state_.at(out), direct.at(out)));
    }
    return err;
  }
  ShapeMap updatable() const override {
    ShapeMap out;
    for (const auto& t : ts_.triggers) out[t.trigger_on] = ts_.shapes.at(t.trigger_on);
    return out;
  }
  MatrixMap finals() const override {
    MatrixMap out;
    for (const auto& name : ts_.source.outputs) out[name] = state_.at(name);
    return out;
  }

 private:
  Strategy strategy_;
  TriggerSet ts_;
  MatrixMap inputs_, state_;
};

std::unique_ptr<Runner> make_runner(const RunSettings& rs, std::size_t rank,
                                    Rng& rng) {
  DimBindings dims = parse_dims(rs.dims_text);
  const Strategy strategy = parse_strategy(rs.strategy);
  if (!rs.program.empty()) {
    std::set<std::string> dyn;
    for (const auto& d : split_list(rs.dynamic)) dyn.insert(d);
    return std::make_unique<ProgramRunner>(rs.program, dims, dyn, strategy, rank, rng);
  }
  const Workload w = parse_workload(rs.workload);
  const std::size_t n = dims.contains("n") ? dims.at("n") : 64;
  if (w == Workload::Ols) {
    const std::size_t m = dims.contains("m") ? dims.at("m") : 2 * n;
    const std::size_t p = dims.contains("p") ? dims.at("p") : 1;
    return std::make_unique<OlsRunner>(strategy, m, n, p, rank, rng);
  }
  const std::size_t p = dims.contains("p") ? dims.at("p") : 8;
  return std::make_unique<IterativeRunner>(w, parse_model(rs.model, rs.s),
                                           strategy, n, p, rs.k, rng);
}

struct GenSpec {
  std::size_t count = 10;
  std::size_t rank = 1;
  std::optional<double> zipf;
  std::optional<std::size_t> batch;
  std::optional<std::uint64_t> seed;
  double scale = 0.1;
};

GenSpec parse_gen(const std::string& text) {
  GenSpec g;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "count") {
      g.count = to_size(value, "count");
    } else if (key == "rank") {
      g.rank = to_size(value, "rank");
      if (g.rank == 0) throw ConfigError("rank must be at least 1");
    } else if (key == "zipf") {
      g.zipf = to_double(value, "zipf");
    } else if (key == "batch") {
      g.batch = to_size(value, "batch");
    } else if (key == "seed") {
      g.seed = to_size(value, "seed");
    } else if (key == "scale") {
      g.scale = to_double(value, "scale");
    } else {
      throw ConfigError("unknown --gen key '" + key + "'");
    }
  }
  return g;
}

std::vector<RankKUpdate> generate(const GenSpec& g, const Runner& runner,
                                  std::uint64_t seed) {
  const ShapeMap shapes = runner.updatable();
  std::vector<RankKUpdate> out;
  if (g.zipf || runner.row_updates()) {
    const auto& [name, shape] = *shapes.begin();
    ZipfBatchStream stream(shape.rows, shape.cols, g.batch.value_or(g.rank),
                           g.zipf.value_or(0.0), seed, g.scale);
    for (std::size_t i = 0; i < g.count; ++i) out.push_back(stream.next(name));
    return out;
  }
  Rng rng(seed);
  std::size_t i = 0;
  while (out.size() < g.count) {
    auto it = shapes.begin();
    std::advance(it, static_cast<long>(i++ % shapes.size()));
    auto one = random_updates(it->second.rows, it->second.cols, g.rank, 1, rng,
                              g.scale, it->first);
    out.push_back(std::move(one.front()));
  }
  return out;
}

// ---- subcommands -------------------------------------------------------------

int cmd_compile(const std::string& path, const std::string& dynamic,
                const std::string& dims_text, std::size_t rank, bool raw,
                bool deltas, const std::string& out_path) {
  Program p = load_program(path);
  std::set<std::string> dyn;
  for (const auto& d : split_list(dynamic)) dyn.insert(d);
  if (dyn.empty()) {
    for (const auto& in : p.inputs) dyn.insert(in.name);
  }
  CompileOptions options;
  options.rank = rank;
  TriggerSet ts = compile(p, dyn, parse_dims(dims_text), options);
  if (!raw) ts = optimize(ts);
  Output out(out_path);
  if (deltas) {
    for (const auto& name : dyn) {
      DeltaEnv env;
      env.entries.push_back(DeltaEntry::low_rank(name, "u", "v", rank));
      for (const auto& s : ts.program.statements) {
        if (!env.affects(s.expr)) continue;
        Expr d = derive_delta(s.expr, env);
        if (!is_factorable(d, env)) {
          out.stream() << "Δ" << s.target << " = " << to_string(d) << "\n";
          env.entries.push_back(DeltaEntry::dense(s.target, "D_" + s.target));
          continue;
        }
        FactoredDelta fd = factor_delta(d, env, s.target);
        out.stream() << fd.to_string() << "\n";
        env.entries.push_back(DeltaEntry::low_rank(s.target, "U_" + s.target,
                                                   "V_" + s.target, fd.width()));
      }
    }
    out.stream() << "\n";
  }
  out.stream() << dump(ts);
  return 0;
}

const char* kCsvHeader =
    "workload,model,strategy,n,p,k,s,update_index,mul_adds,adds,wall_ns,"
    "max_abs_error_vs_oracle";

int cmd_run(const RunSettings& rs, const std::string& stream_path,
            const std::string& gen_text, std::optional<bool> verify_flag,
            const std::string& out_path, const std::string& save_dir) {
  const std::uint64_t seed = rs.seed.value_or(default_seed());
  GenSpec gen = parse_gen(gen_text);
  Rng rng(seed);
  auto runner = make_runner(rs, gen.rank, rng);

  std::vector<RankKUpdate> updates;
  if (!stream_path.empty()) {
    updates = load_update_stream(stream_path, runner->updatable());
  } else {
    updates = generate(gen, *runner, gen.seed.value_or(seed + 1));
  }

  std::size_t largest = 0;
  for (const auto& [name, s] : runner->updatable()) {
    largest = std::max({largest, s.rows, s.cols});
  }
  const bool verify = verify_flag.value_or(largest <= 256);

  Output out(out_path);
  std::ostream& csv = out.stream();
  csv << kCsvHeader << "\n" << std::flush;

  CostLedger init;
  runner->initialize(init);
  for (std::size_t i = 0; i < updates.size(); ++i) {
    CostLedger ledger;
    const auto start = std::chrono::steady_clock::now();
    try {
      runner->apply(updates[i], ledger);
    } catch (const Error& e) {
      std::cerr << "ivla: update " << i << ": " << e.what() << "\n";
      return exit_code_for(e);
    }
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    csv << runner->workload << ',' << runner->model << ',' << runner->strategy
        << ',' << runner->n << ',' << runner->p << ',' << runner->k << ','
        << runner->s << ',' << i << ',' << ledger.mul_adds() << ','
        << ledger.adds() << ',' << ns << ',';
    if (verify) csv << fmt(runner->oracle_error());
    csv << "\n" << std::flush;
  }
  if (!save_dir.empty()) {
    std::filesystem::create_directories(save_dir);
    for (const auto& [name, m] : runner->finals()) {
      save_matrix((std::filesystem::path(save_dir) / (name + ".txt")).string(), m);
    }
  }
  return 0;
}

struct BenchSettings {
  std::string workload = "powers";
  std::string n_list = "64,128,256";
  std::size_t p = 8;
  std::size_t k = 16;
  std::size_t s = 4;
  std::string models = "exp";
  std::string strategies = "reeval,incr";
  std::string zipf_list;
  std::size_t batch = 1;
  std::size_t updates = 5;
  std::size_t runs = 3;
  std::optional<std::uint64_t> seed;
};

int cmd_bench(const BenchSettings& bs, const std::string& out_path) {
  const std::uint64_t seed = bs.seed.value_or(default_seed());
  struct Cell {
    std::string key;
    std::vector<std::string> prefix;
    std::string strategy;
    double mean = 0, stddev = 0;
    std::uint64_t mul_adds = 0, adds = 0;
  };
  std::vector<Cell> cells;
  std::vector<std::string> zipfs = split_list(bs.zipf_list);
  if (zipfs.empty()) zipfs.push_back("");

  for (const auto& n_text : split_list(bs.n_list)) {
    for (const auto& model : split_list(bs.models)) {
      for (const auto& z : zipfs) {
        for (const auto& strategy : split_list(bs.strategies)) {
          RunSettings rs;
          rs.workload = bs.workload;
          rs.dims_text = "n=" + n_text + ",p=" + std::to_string(bs.p);
          rs.k = bs.k;
          rs.s = bs.s;
          rs.model = model;
          rs.strategy = strategy;
          GenSpec gen;
          gen.count = bs.updates;
          gen.rank = 1;
          gen.batch = bs.batch;
          if (!z.empty()) gen.zipf = to_double(z, "zipf");
          try {
            std::vector<double> means;
            OpCounts counts;
            std::string workload;
            for (std::size_t r = 0; r < bs.runs; ++r) {
              Rng rng(seed);
              auto runner = make_runner(rs, z.empty() ? 1 : bs.batch, rng);
              workload = runner->workload;
              auto updates = generate(gen, *runner, seed + 1);
              CostLedger init, ledger;
              runner->initialize(init);
              const auto start = std::chrono::steady_clock::now();
              for (const auto& up : updates) runner->apply(up, ledger);
              const double ns = static_cast<double>(
                  std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count());
              means.push_back(ns / static_cast<double>(std::max<std::size_t>(1, updates.size())));
              counts = ledger.totals();
            }
            Cell c;
            double sum = 0, sq = 0;
            for (double m : means) sum += m;
            c.mean = sum / static_cast<double>(means.size());
            for (double m : means) sq += (m - c.mean) * (m - c.mean);
            c.stddev = means.size() > 1 ? std::sqrt(sq / static_cast<double>(means.size() - 1)) : 0.0;
            c.mul_adds = counts.mul_adds;
            c.adds = counts.adds;
            c.strategy = strategy;
            c.prefix = {workload, model, strategy, n_text,
                        bs.workload == "general" || bs.workload == "ols" ? std::to_string(bs.p) : "0",
                        std::to_string(bs.k), model == "skip" ? std::to_string(bs.s) : "0",
                        z.empty() ? "-" : z};
            c.key = workload + "|" + model + "|" + n_text + "|" + z;
            cells.push_back(std::move(c));
          } catch (const Error& e) {
            std::cerr << "bench cell " << bs.workload << " " << model << " "
                      << strategy << " n=" << n_text << " failed: " << e.what()
                      << "\n";
          }
        }
      }
    }
  }

  Output out(out_path);
  std::ostream& csv = out.stream();
  csv << "workload,model,strategy,n,p,k,s,zipf,updates,runs,mean_ns,stddev_ns,"
         "mul_adds,adds,speedup\n";
  for (const auto& c : cells) {
    for (const auto& f : c.prefix) csv << f << ',';
    csv << bs.updates << ',' << bs.runs << ',' << fmt(std::round(c.mean)) << ','
        << fmt(std::round(c.stddev)) << ',' << c.mul_adds << ',' << c.adds << ',';
    for (const auto& base : cells) {
      if (base.key == c.key && base.strategy == "reeval" && c.mean > 0) {
        csv << fmt(std::round(100.0 * base.mean / c.mean) / 100.0);
        break;
      }
    }
    csv << "\n";
  }
  return 0;
}

int cmd_predict(const std::string& workload, const std::string& model,
                std::size_t s, const std::string& strategy,
                const std::string& dims_text, std::size_t k, std::size_t rank) {
  DimBindings dims = parse_dims(dims_text);
  if (!dims.contains("n")) throw ConfigError("unbound dimension 'n'");
  const Workload w = parse_workload(workload);
  const std::size_t p = dims.contains("p") ? dims.at("p") : (w == Workload::Ols ? 1 : 0);
  const std::size_t m = dims.contains("m") ? dims.at("m") : 0;
  CostPrediction c = predict_cost(w, parse_model(model, s), parse_strategy(strategy),
                                  dims.at("n"), p, k, rank, m);
  std::cout << "workload: " << to_string(c.workload) << "\n"
            << "model: " << c.model.name() << "\n"
            << "strategy: " << to_string(c.strategy) << "\n"
            << "mul_adds: " << c.counts.mul_adds << "\n"
            << "adds: " << c.counts.adds << "\n"
            << "total: " << c.counts.total() << "\n"
            << "closed_form: " << (c.closed_form ? "yes" : "no") << "\n"
            << "time: O(" << c.big_o << ")\n"
            << "space: O(" << c.space_big_o << ")\n"
            << "stored_views: " << c.stored_views << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ivla: incremental view maintenance for linear algebra programs"};
  app.require_subcommand(1);

  std::string c_program, c_dynamic, c_dims, c_out;
  std::size_t c_rank = 1;
  bool c_raw = false, c_deltas = false;
  auto* compile_cmd = app.add_subcommand("compile", "Print the trigger program");
  compile_cmd->add_option("program", c_program, ".ivla source")->required();
  compile_cmd->add_option("--dynamic", c_dynamic, "Comma-separated dynamic inputs (default: all)");
  compile_cmd->add_option("--dims", c_dims, "Dimension bindings, e.g. n=64,p=8");
  compile_cmd->add_option("--rank", c_rank, "Update rank");
  compile_cmd->add_flag("--raw", c_raw, "Skip the optimizer");
  compile_cmd->add_flag("--deltas", c_deltas, "Also print factored deltas");
  compile_cmd->add_option("--out", c_out, "Output file");

  RunSettings rs;
  std::string r_stream, r_gen, r_out, r_save;
  bool r_verify = false, r_no_verify = false;
  std::uint64_t r_seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Apply an update stream, one CSV row per update");
  run_cmd->add_option("--workload", rs.workload, "powers, sums, general or ols");
  run_cmd->add_option("--program", rs.program, ".ivla program instead of a workload");
  run_cmd->add_option("--dims", rs.dims_text, "Dimension bindings");
  run_cmd->add_option("--k", rs.k, "Iterations");
  run_cmd->add_option("--s", rs.s, "Skip size");
  run_cmd->add_option("--model", rs.model, "lin, exp or skip");
  run_cmd->add_option("--strategy", rs.strategy, "reeval, incr or hybrid");
  run_cmd->add_option("--dynamic", rs.dynamic, "Dynamic inputs of --program");
  auto* stream_opt = run_cmd->add_option("--stream", r_stream, "Update stream file");
  run_cmd->add_option("--gen", r_gen, "count=..,rank=..,zipf=..,seed=..,batch=..,scale=..")
      ->excludes(stream_opt);
  auto* verify_opt = run_cmd->add_flag("--verify", r_verify, "Check every update against re-evaluation");
  run_cmd->add_flag("--no-verify", r_no_verify, "Skip the oracle")->excludes(verify_opt);
  run_cmd->add_option("--out", r_out, "CSV output file");
  run_cmd->add_option("--save", r_save, "Directory for final matrices");
  auto* seed_opt = run_cmd->add_option("--seed", r_seed, "Seed (default IVLA_SEED or 42)");

  BenchSettings bs;
  std::string b_out;
  std::uint64_t b_seed = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Compare strategies over a grid of sizes");
  bench_cmd->add_option("--workload", bs.workload, "powers, sums, general or ols");
  bench_cmd->add_option("--n", bs.n_list, "Comma-separated sizes");
  bench_cmd->add_option("--p", bs.p, "Columns of B/T (general) or Y (ols)");
  bench_cmd->add_option("--k", bs.k, "Iterations");
  bench_cmd->add_option("--s", bs.s, "Skip size");
  bench_cmd->add_option("--model", bs.models, "Comma-separated models");
  bench_cmd->add_option("--strategy", bs.strategies, "Comma-separated strategies");
  bench_cmd->add_option("--zipf", bs.zipf_list, "Comma-separated zipf factors (batch updates)");
  bench_cmd->add_option("--batch", bs.batch, "Row updates per zipf batch");
  bench_cmd->add_option("--updates", bs.updates, "Updates per run");
  bench_cmd->add_option("--runs", bs.runs, "Repetitions per cell");
  bench_cmd->add_option("--out", b_out, "CSV output file");
  auto* b_seed_opt = bench_cmd->add_option("--seed", b_seed, "Seed");

  std::string p_workload = "powers", p_model = "lin", p_strategy = "incr", p_dims;
  std::size_t p_k = 16, p_s = 4, p_rank = 1;
  auto* predict_cmd = app.add_subcommand("predict", "Predicted per-update cost");
  predict_cmd->add_option("--workload", p_workload, "powers, sums, general or ols");
  predict_cmd->add_option("--model", p_model, "lin, exp or skip");
  predict_cmd->add_option("--strategy", p_strategy, "reeval, incr or hybrid");
  predict_cmd->add_option("--dims", p_dims, "n=..,p=..,m=..")->required();
  predict_cmd->add_option("--k", p_k, "Iterations");
  predict_cmd->add_option("--s", p_s, "Skip size");
  predict_cmd->add_option("--rank", p_rank, "Update rank");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*compile_cmd) {
      return cmd_compile(c_program, c_dynamic, c_dims, c_rank, c_raw, c_deltas, c_out);
    }
    if (*run_cmd) {
      if (*seed_opt) rs.seed = r_seed;
      std::optional<bool> verify;
      if (r_verify) verify = true;
      if (r_no_verify) verify = false;
      return cmd_run(rs, r_stream, r_gen, verify, r_out, r_save);
    }
    if (*bench_cmd) {
      if (*b_seed_opt) bs.seed = b_seed;
      return cmd_bench(bs, b_out);
    }
    if (*predict_cmd) {
      return cmd_predict(p_workload, p_model, p_s, p_strategy, p_dims, p_k, p_rank);
    }
  } catch (const std::exception& e) {
    std::cerr << "ivla: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitInternal;
}
