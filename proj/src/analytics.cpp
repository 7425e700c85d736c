#include "ivla/analytics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>

#include "ivla/error.hpp"

namespace ivla {

std::string IterativeModel::name() const {
  switch (kind) {
    case ModelKind::Linear:
      return "lin";
    case ModelKind::Exponential:
      return "exp";
    case ModelKind::Skip:
      return "skip" + std::to_string(s);
  }
  return "?";
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Reevaluation:
      return "reeval";
    case Strategy::Incremental:
      return "incr";
    case Strategy::Hybrid:
      return "hybrid";
  }
  return "?";
}

std::string to_string(Workload w) {
  switch (w) {
    case Workload::Powers:
      return "powers";
    case Workload::Sums:
      return "sums";
    case Workload::General:
      return "general";
    case Workload::Ols:
      return "ols";
  }
  return "?";
}

void validate_model(const IterativeModel& model, std::size_t k) {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (model.kind == ModelKind::Exponential && !std::has_single_bit(k)) {
    throw ConfigError("exponential model needs k a power of two, got " +
                      std::to_string(k));
  }
  if (model.kind == ModelKind::Skip) {
    if (model.s == 0 || !std::has_single_bit(model.s) || model.s > k ||
        k % model.s != 0) {
      throw ConfigError("skip model needs s a power of two dividing k, got s=" +
                        std::to_string(model.s) + ", k=" + std::to_string(k));
    }
  }
}

std::vector<std::size_t> schedule(const IterativeModel& model, std::size_t k) {
  validate_model(model, k);
  std::vector<std::size_t> out;
  switch (model.kind) {
    case ModelKind::Linear:
      for (std::size_t i = 1; i <= k; ++i) out.push_back(i);
      break;
    case ModelKind::Exponential:
      for (std::size_t i = 1; i <= k; i *= 2) out.push_back(i);
      break;
    case ModelKind::Skip:
      for (std::size_t i = 1; i <= model.s; i *= 2) out.push_back(i);
      for (std::size_t i = 2 * model.s; i <= k; i += model.s) out.push_back(i);
      break;
  }
  return out;
}

namespace {

// Shape-only stand-in for Matrix: the same plan charges the same ledger.
struct Dim {
  std::size_t r = 0, c = 0;
  std::size_t rows() const { return r; }
  std::size_t cols() const { return c; }
};

Matrix k_mul(const Matrix& a, const Matrix& b, CostLedger& l) {
  return mat_mul(a, b, l);
}
Dim k_mul(const Dim& a, const Dim& b, CostLedger& l) {
  l.charge_mul_adds(a.r * a.c * b.c);
  return {a.r, b.c};
}
Matrix k_mul_tn(const Matrix& a, const Matrix& b, CostLedger& l) {
  return mat_mul_tn(a, b, l);
}
Dim k_mul_tn(const Dim& a, const Dim& b, CostLedger& l) {
  l.charge_mul_adds(a.c * a.r * b.c);
  return {a.c, b.c};
}
void k_add(Matrix& a, const Matrix& b, CostLedger& l) {
  mat_add_inplace(a, b, l);
}
void k_add(Dim& a, const Dim&, CostLedger& l) { l.charge_adds(a.r * a.c); }
void k_add_identity(Matrix& a, CostLedger& l) {
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += 1.0;
  l.charge_adds(a.rows());
}
void k_add_identity(Dim& a, CostLedger& l) { l.charge_adds(a.r); }
void k_acc(Matrix& c, const Matrix& a, const Matrix& b, CostLedger& l) {
  mat_mul_nt_accumulate(c, a, b, l);
}
void k_acc(Dim&, const Dim& a, const Dim& b, CostLedger& l) {
  l.charge_mul_adds(a.r * a.c * b.r);
}
Matrix k_hcat(const std::vector<Matrix>& blocks) { return hcat(blocks); }
Dim k_hcat(const std::vector<Dim>& blocks) {
  Dim d{blocks.front().r, 0};
  for (const auto& b : blocks) d.c += b.c;
  return d;
}
template <class V>
V k_zeros(std::size_t r, std::size_t c) {
  if constexpr (std::is_same_v<V, Matrix>) {
    return Matrix(r, c);
  } else {
    return Dim{r, c};
  }
}

template <class V>
struct Factored {
  V left, right;
  std::size_t width() const { return left.cols(); }
};

// Views of one workload under one model and strategy. P_1 is A, S_1 is the
// identity (never stored), T_0 is the fixed start.
template <class V>
class Engine {
 public:
  Engine(Workload w, IterativeModel model, Strategy strategy, std::size_t k,
         V a, V b, V t0)
      : workload_(w),
        model_(model),
        strategy_(strategy),
        k_(k),
        a_(std::move(a)),
        b_(std::move(b)),
        t0_(std::move(t0)) {
    validate_model(model, k);
    if (strategy == Strategy::Hybrid && w != Workload::General) {
      throw ConfigError("hybrid evaluation applies to the general form only");
    }
    if (a_.rows() != a_.cols()) {
      throw ConfigError("A must be square, got " + shape(a_));
    }
    if (w == Workload::General &&
        (b_.rows() != a_.rows() || t0_.rows() != a_.rows() ||
         b_.cols() != t0_.cols())) {
      throw ConfigError("general form needs B and T0 of shape n x p");
    }
    switch (w) {
      case Workload::Powers:
        need_p(k);
        break;
      case Workload::Sums: {
        need_s(k);
        CostLedger scratch;
        identity_ = k_zeros<V>(a_.rows(), a_.cols());
        k_add_identity(identity_, scratch);
        break;
      }
      case Workload::General:
        need_t(k);
        break;
      case Workload::Ols:
        throw ConfigError("OLS is not an iterative workload");
    }
  }

  void initialize(CostLedger& l) { compute_all(l); }

  void apply(const V& u, const V& v, CostLedger& l) {
    if (strategy_ == Strategy::Reevaluation) {
      k_acc(a_, u, v, l);
      compute_all(l);
      return;
    }
    std::map<std::size_t, Factored<V>> dp, ds, dt;
    std::map<std::size_t, V> dense;
    dp[1] = {u, v};
    const std::size_t n = a_.rows();
    ds[1] = {k_zeros<V>(n, 0), k_zeros<V>(n, 0)};
    dt[0] = {k_zeros<V>(n, 0), k_zeros<V>(t0_.cols(), 0)};

    for (std::size_t i : need_p_) {
      auto [a, b] = split(i);
      const auto &da = dp.at(a), &db = dp.at(b);
      V second = k_mul(pm(a), db.left, l);
      k_add(second, k_mul(da.left, k_mul_tn(da.right, db.left, l), l), l);
      V first_right = k_mul_tn(pm(b), da.right, l);
      dp[i] = {k_hcat(std::vector<V>{da.left, second}),
               k_hcat(std::vector<V>{first_right, db.right})};
    }
    for (std::size_t i : need_s_) {
      auto [a, b] = split(i);
      const auto &da = dp.at(a), &za = ds.at(a), &zb = ds.at(b);
      std::vector<V> lefts{da.left}, rights;
      rights.push_back(b == 1 ? da.right : k_mul_tn(s_.at(b), da.right, l));
      const bool merge = a == b && za.width() > 0;
      if (zb.width() > 0) {
        V second = k_mul(pm(a), zb.left, l);
        k_add(second, k_mul(da.left, k_mul_tn(da.right, zb.left, l), l), l);
        if (merge) k_add(second, za.left, l);
        lefts.push_back(std::move(second));
        rights.push_back(zb.right);
      }
      if (!merge && za.width() > 0) {
        lefts.push_back(za.left);
        rights.push_back(za.right);
      }
      ds[i] = {k_hcat(lefts), k_hcat(rights)};
    }
    for (std::size_t i : need_t_) {
      auto [a, b] = split(i);
      const auto &da = dp.at(a), &za = ds.at(a);
      if (strategy_ == Strategy::Hybrid) {
        V d = k_mul(da.left, k_mul_tn(da.right, tm(b), l), l);
        if (b > 0) {
          const V& db = dense.at(b);
          k_add(d, k_mul(pm(a), db, l), l);
          k_add(d, k_mul(da.left, k_mul_tn(da.right, db, l), l), l);
        }
        if (za.width() > 0) {
          k_add(d, k_mul(za.left, k_mul_tn(za.right, b_, l), l), l);
        }
        dense[i] = std::move(d);
        continue;
      }
      const auto& ub = dt.at(b);
      std::vector<V> lefts{da.left}, rights{k_mul_tn(tm(b), da.right, l)};
      if (ub.width() > 0) {
        V second = k_mul(pm(a), ub.left, l);
        k_add(second, k_mul(da.left, k_mul_tn(da.right, ub.left, l), l), l);
        lefts.push_back(std::move(second));
        rights.push_back(ub.right);
      }
      if (za.width() > 0) {
        lefts.push_back(za.left);
        rights.push_back(k_mul_tn(b_, za.right, l));
      }
      dt[i] = {k_hcat(lefts), k_hcat(rights)};
    }

    k_acc(a_, u, v, l);
    for (std::size_t i : need_p_) k_acc(p_.at(i), dp.at(i).left, dp.at(i).right, l);
    for (std::size_t i : need_s_) k_acc(s_.at(i), ds.at(i).left, ds.at(i).right, l);
    for (std::size_t i : need_t_) {
      if (strategy_ == Strategy::Hybrid) {
        k_add(t_.at(i), dense.at(i), l);
      } else {
        k_acc(t_.at(i), dt.at(i).left, dt.at(i).right, l);
      }
    }
  }

  const V& result() const {
    switch (workload_) {
      case Workload::Powers:
        return pm(k_);
      case Workload::Sums:
        return k_ == 1 ? identity_ : s_.at(k_);
      default:
        return t_.at(k_);
    }
  }

  const V& a() const { return a_; }

  std::size_t stored_views() const {
    return strategy_ == Strategy::Reevaluation ? 1 : schedule(model_, k_).size();
  }

 private:
  static std::string shape(const V& m) {
    return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
  }

  // X_i = X_a (.) X_b: P_i = P_a P_b, S_i = P_a S_b + S_a, T_i = P_a T_b + S_a B.
  std::pair<std::size_t, std::size_t> split(std::size_t i) const {
    if (i == 1) return {1, 0};
    if (model_.kind == ModelKind::Linear) return {1, i - 1};
    if (model_.kind == ModelKind::Skip && i > model_.s) {
      return {model_.s, i - model_.s};
    }
    return {i / 2, i / 2};
  }

  void need_p(std::size_t i) {
    if (i <= 1 || !need_p_.insert(i).second) return;
    auto [a, b] = split(i);
    need_p(a);
    need_p(b);
  }
  void need_s(std::size_t i) {
    if (i <= 1 || !need_s_.insert(i).second) return;
    auto [a, b] = split(i);
    need_p(a);
    need_s(b);
    need_s(a);
  }
  void need_t(std::size_t i) {
    if (i == 0 || !need_t_.insert(i).second) return;
    auto [a, b] = split(i);
    need_p(a);
    need_t(b);
    need_s(a);
  }

  const V& pm(std::size_t i) const { return i == 1 ? a_ : p_.at(i); }
  const V& tm(std::size_t i) const { return i == 0 ? t0_ : t_.at(i); }

  void compute_all(CostLedger& l) {
    p_.clear();
    s_.clear();
    t_.clear();
    for (std::size_t i : need_p_) {
      auto [a, b] = split(i);
      p_[i] = k_mul(pm(a), pm(b), l);
    }
    for (std::size_t i : need_s_) {
      auto [a, b] = split(i);
      V s = b == 1 ? pm(a) : k_mul(pm(a), s_.at(b), l);
      if (a == 1) {
        k_add_identity(s, l);
      } else {
        k_add(s, s_.at(a), l);
      }
      s_[i] = std::move(s);
    }
    for (std::size_t i : need_t_) {
      auto [a, b] = split(i);
      V t = k_mul(pm(a), tm(b), l);
      k_add(t, a == 1 ? b_ : k_mul(s_.at(a), b_, l), l);
      t_[i] = std::move(t);
    }
    if (strategy_ == Strategy::Reevaluation) drop_intermediates();
  }

  void drop_intermediates() {
    auto keep = [&](std::map<std::size_t, V>& m, bool is_result) {
      if (!is_result) {
        m.clear();
        return;
      }
      auto node = m.extract(k_);
      m.clear();
      if (node) m.insert(std::move(node));
    };
    keep(p_, workload_ == Workload::Powers);
    keep(s_, workload_ == Workload::Sums);
    keep(t_, workload_ == Workload::General);
  }

  Workload workload_;
  IterativeModel model_;
  Strategy strategy_;
  std::size_t k_;
  V a_, b_, t0_;
  V identity_;  // S_1
  std::set<std::size_t> need_p_, need_s_, need_t_;
  std::map<std::size_t, V> p_, s_, t_;
};

}  // namespace

struct IterativeView::Impl {
  Engine<Matrix> engine;
};

IterativeView::IterativeView(Workload workload, IterativeModel model,
                             Strategy strategy, std::size_t k, Matrix a,
                             Matrix b, Matrix t0)
    : impl_(std::make_unique<Impl>(Impl{Engine<Matrix>(
          workload, model, strategy, k, std::move(a), std::move(b),
          std::move(t0))})) {}

IterativeView::~IterativeView() = default;
IterativeView::IterativeView(IterativeView&&) noexcept = default;
IterativeView& IterativeView::operator=(IterativeView&&) noexcept = default;

void IterativeView::initialize(CostLedger& ledger) {
  impl_->engine.initialize(ledger);
}

void IterativeView::apply(const Matrix& u, const Matrix& v,
                          CostLedger& ledger) {
  const std::size_t n = impl_->engine.a().rows();
  if (u.rows() != n || v.rows() != n || u.cols() != v.cols()) {
    throw DataError("update factors " + u.shape_string() + " and " +
                    v.shape_string() + " do not fit A (" + std::to_string(n) +
                    "x" + std::to_string(n) + ")");
  }
  impl_->engine.apply(u, v, ledger);
}

const Matrix& IterativeView::result() const { return impl_->engine.result(); }
const Matrix& IterativeView::a() const { return impl_->engine.a(); }
std::size_t IterativeView::stored_views() const {
  return impl_->engine.stored_views();
}

Matrix reference_view(Workload workload, const Matrix& a, std::size_t k,
                      const Matrix& b, const Matrix& t0) {
  CostLedger scratch;
  const std::size_t n = a.rows();
  switch (workload) {
    case Workload::Powers: {
      Matrix p = a;
      for (std::size_t i = 1; i < k; ++i) p = mat_mul(a, p, scratch);
      return p;
    }
    case Workload::Sums: {
      Matrix term = Matrix::identity(n), sum = Matrix::identity(n);
      for (std::size_t i = 1; i < k; ++i) {
        term = mat_mul(a, term, scratch);
        mat_add_inplace(sum, term, scratch);
      }
      return sum;
    }
    case Workload::General: {
      Matrix t = t0;
      for (std::size_t i = 0; i < k; ++i) {
        t = mat_mul(a, t, scratch);
        mat_add_inplace(t, b, scratch);
      }
      return t;
    }
    case Workload::Ols:
      break;
  }
  throw ConfigError("reference_view: unsupported workload");
}

// ---- OLS -------------------------------------------------------------------

const char* ols_source() {
  return "input X : m x n;\n"
         "input Y : m x p;\n"
         "W := inv(X' * X);\n"
         "beta := W * X' * Y;\n"
         "output beta;\n";
}

OlsView::OlsView(Strategy strategy, Matrix x, Matrix y, std::size_t rank)
    : strategy_(strategy) {
  if (strategy == Strategy::Hybrid) {
    throw ConfigError("OLS supports reeval and incr strategies");
  }
  if (x.rows() != y.rows()) {
    throw ConfigError("X and Y must have the same number of rows");
  }
  const DimBindings dims{{"m", x.rows()}, {"n", x.cols()}, {"p", y.cols()}};
  CompileOptions options;
  options.rank = rank;
  triggers_ = optimize(compile(parse_program(ols_source()), {"X"}, dims, options));
  state_["X"] = std::move(x);
  state_["Y"] = std::move(y);
}

void OlsView::initialize(CostLedger& ledger) {
  state_ = initialize_state(triggers_, {{"X", state_.at("X")}, {"Y", state_.at("Y")}},
                            ledger);
}

void OlsView::apply(const Matrix& u, const Matrix& v, CostLedger& ledger) {
  if (strategy_ == Strategy::Incremental) {
    apply_trigger(triggers_.triggers.front(), state_, u, v, ledger);
    return;
  }
  Matrix x = state_.at("X");
  {
    LedgerLabel label(ledger, "X +=");
    mat_mul_nt_accumulate(x, u, v, ledger);
  }
  state_ = evaluate_program(triggers_.program, {{"X", std::move(x)}, {"Y", state_.at("Y")}},
                            ledger);
}

const Matrix& OlsView::beta() const { return state_.at("beta"); }
const Matrix& OlsView::x() const { return state_.at("X"); }
const Matrix& OlsView::y() const { return state_.at("Y"); }

// ---- prediction --------------------------------------------------------------

std::uint64_t powers_incremental_linear_cost(std::uint64_t n, std::uint64_t k) {
  return n * n * (k * k + k - 1) + 3 * n * k * (k - 1) / 2;
}

std::uint64_t powers_incremental_exponential_cost(std::uint64_t n,
                                                  std::uint64_t k) {
  return n * n * (4 * k - 3) + n * (k - 1) * (2 * k + 5) / 3;
}

namespace {

std::string time_class(Workload w, ModelKind m, Strategy s) {
  const int mi = static_cast<int>(m);
  if (w == Workload::Powers || w == Workload::Sums) {
    static const char* reeval[] = {"n^γ k", "n^γ log k", "n^γ (log s + k/s)"};
    static const char* incr[] = {"n^2 k^2", "n^2 k", "n^2 k^2/s"};
    return s == Strategy::Reevaluation ? reeval[mi] : incr[mi];
  }
  static const char* reeval[] = {"p n^2 k", "(n^γ + p n^2) log k",
                                 "n^γ log s + p n^2 (log s + k/s)"};
  static const char* incr[] = {"(n^2 + p n) k^2", "(n^2 + p n) k",
                               "(n^2 + n p) k^2/s"};
  static const char* hybrid[] = {"p n^2 k", "p n^2 log k + n^2 k",
                                 "p n^2 (log s + k/s) + n^2 s"};
  switch (s) {
    case Strategy::Reevaluation:
      return reeval[mi];
    case Strategy::Incremental:
      return incr[mi];
    case Strategy::Hybrid:
      return hybrid[mi];
  }
  return {};
}

std::string space_class(Workload w, ModelKind m, Strategy s) {
  const int mi = static_cast<int>(m);
  if (w == Workload::Powers || w == Workload::Sums) {
    static const char* incr[] = {"n^2 k", "n^2 log k", "n^2 (log s + k/s)"};
    return s == Strategy::Reevaluation ? "n^2" : incr[mi];
  }
  static const char* incr[] = {"n^2 + k n p", "(n^2 + n p) log k",
                               "(n^2 + n p) log s + n p k/s"};
  return s == Strategy::Reevaluation ? "n^2 + n p" : incr[mi];
}

}  // namespace

CostPrediction predict_cost(Workload workload, const IterativeModel& model,
                            Strategy strategy, std::size_t n, std::size_t p,
                            std::size_t k, std::size_t rank, std::size_t m) {
  CostPrediction out;
  out.workload = workload;
  out.model = model;
  out.strategy = strategy;
  out.n = n;
  out.p = p;
  out.k = k;
  if (n == 0 || rank == 0) throw ConfigError("n and rank must be positive");

  if (workload == Workload::Ols) {
    if (m == 0) m = 2 * n;
    if (p == 0) throw ConfigError("OLS needs p >= 1");
    if (strategy == Strategy::Hybrid) {
      throw ConfigError("OLS supports reeval and incr strategies");
    }
    const DimBindings dims{{"m", m}, {"n", n}, {"p", p}};
    CompileOptions options;
    options.rank = rank;
    TriggerSet ts = optimize(compile(parse_program(ols_source()), {"X"}, dims, options));
    if (strategy == Strategy::Incremental) {
      out.counts = trigger_cost(ts.triggers.front());
      out.big_o = "n^2 + m p + n p + m n";
    } else {
      out.counts.mul_adds = m * rank * n;
      for (const auto& s : ts.program.statements) {
        out.counts += evaluation_counts(s.expr, ts.shapes);
      }
      out.big_o = "n^γ + m n^2";
    }
    out.space_big_o = "n^2 + m n + n p";
    out.stored_views = 1;
    return out;
  }

  if (workload != Workload::General) p = n;
  if (workload == Workload::General && p == 0) {
    throw ConfigError("general form needs p >= 1");
  }
  Engine<Dim> engine(workload, model, strategy, k, Dim{n, n}, Dim{n, p},
                     Dim{n, p});
  CostLedger scratch, ledger;
  engine.initialize(scratch);
  engine.apply(Dim{n, rank}, Dim{n, rank}, ledger);
  out.counts = ledger.totals();
  out.stored_views = engine.stored_views();
  out.big_o = time_class(workload, model.kind, strategy);
  out.space_big_o = space_class(workload, model.kind, strategy);
  out.closed_form = workload == Workload::Powers && rank == 1 &&
                    strategy == Strategy::Incremental &&
                    model.kind != ModelKind::Skip;
  return out;
}

// ---- update streams ----------------------------------------------------------

ZipfBatchStream::ZipfBatchStream(std::size_t n, std::size_t cols,
                                 std::size_t batch_size, double zipf_factor,
                                 std::uint64_t seed, double magnitude)
    : n_(n), cols_(cols), batch_(batch_size), magnitude_(magnitude), rng_(seed) {
  if (n == 0 || cols == 0 || batch_size == 0) {
    throw ConfigError("zipf stream needs positive sizes");
  }
  if (zipf_factor < 0) throw ConfigError("zipf factor must be >= 0");
  cdf_.resize(n);
  double total = 0;
  for (std::size_t r = 0; r < n; ++r) {
    total += std::pow(static_cast<double>(r + 1), -zipf_factor);
    cdf_[r] = total;
  }
  for (auto& c : cdf_) c /= total;
}

RankKUpdate ZipfBatchStream::next(const std::string& target) {
  std::map<std::size_t, std::vector<double>> rows;
  for (std::size_t b = 0; b < batch_; ++b) {
    const double x = rng_.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
    const std::size_t row =
        std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), n_ - 1);
    auto& acc = rows[row];
    acc.resize(cols_, 0.0);
    for (auto& value : acc) value += magnitude_ * rng_.uniform(-1.0, 1.0);
  }
  RankKUpdate up{target, Matrix(n_, rows.size()), Matrix(cols_, rows.size())};
  std::size_t j = 0;
  for (const auto& [row, values] : rows) {
    up.u(row, j) = 1.0;
    for (std::size_t c = 0; c < cols_; ++c) up.v(c, j) = values[c];
    ++j;
  }
  return up;
}

std::vector<RankKUpdate> random_updates(std::size_t rows, std::size_t cols,
                                        std::size_t rank, std::size_t count,
                                        Rng& rng, double magnitude,
                                        const std::string& target) {
  std::vector<RankKUpdate> out;
  out.reserve(count);
  CostLedger scratch;
  for (std::size_t i = 0; i < count; ++i) {
    Matrix u = mat_scale(magnitude, random_matrix(rows, rank, rng), scratch);
    Matrix v = mat_scale(magnitude, random_matrix(cols, rank, rng), scratch);
    out.push_back({target, std::move(u), std::move(v)});
  }
  return out;
}

RankKUpdate row_update(std::size_t rows, std::size_t cols, std::size_t row,
                       Rng& rng, double magnitude, const std::string& target) {
  RankKUpdate up{target, Matrix(rows, 1), Matrix(cols, 1)};
  up.u(row, 0) = 1.0;
  for (std::size_t c = 0; c < cols; ++c) {
    up.v(c, 0) = magnitude * rng.uniform(-1.0, 1.0);
  }
  return up;
}

}  // namespace ivla
