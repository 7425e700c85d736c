#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ivla/compiler.hpp"
#include "ivla/ledger.hpp"
#include "ivla/matrix.hpp"
#include "ivla/random.hpp"

namespace ivla {

enum class ModelKind { Linear, Exponential, Skip };

struct IterativeModel {
  ModelKind kind = ModelKind::Linear;
  std::size_t s = 0;  // Skip only

  static IterativeModel linear() { return {ModelKind::Linear, 0}; }
  static IterativeModel exponential() { return {ModelKind::Exponential, 0}; }
  static IterativeModel skip(std::size_t s) { return {ModelKind::Skip, s}; }

  // "lin", "exp", "skip4"
  std::string name() const;
};

enum class Strategy { Reevaluation, Incremental, Hybrid };
enum class Workload { Powers, Sums, General, Ols };

std::string to_string(Strategy s);
std::string to_string(Workload w);

// Throws ConfigError unless k >= 1 and: exponential k a power of two; skip s a
// power of two with s <= k and s | k.
void validate_model(const IterativeModel& model, std::size_t k);

// Iteration indices materialized by the model, ascending:
//   linear 1..k, exponential 1,2,4,..,k, skip 1,2,4,..,s,2s,3s,..,k.
std::vector<std::size_t> schedule(const IterativeModel& model, std::size_t k);

// U * V' update of one input matrix.
struct RankKUpdate {
  std::string target;
  Matrix u;
  Matrix v;
  std::size_t rank() const { return u.cols(); }
};

// Incrementally or re-evaluatively maintained iterative view:
//   powers   P_k = A^k
//   sums     S_k = I + A + ... + A^(k-1)
//   general  T_k with T_i = A T_(i-1) + B.
// Every update changes A once; the whole k-step view is then refreshed.
class IterativeView {
 public:
  // `b` and `t0` are used by the general form only.
  IterativeView(Workload workload, IterativeModel model, Strategy strategy,
                std::size_t k, Matrix a, Matrix b = {}, Matrix t0 = {});
  ~IterativeView();
  IterativeView(IterativeView&&) noexcept;
  IterativeView& operator=(IterativeView&&) noexcept;

  // Computes all views from scratch.
  void initialize(CostLedger& ledger);
  void apply(const Matrix& u, const Matrix& v, CostLedger& ledger);

  const Matrix& result() const;
  const Matrix& a() const;
  // Iteration indices whose views are retained between updates.
  std::size_t stored_views() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Direct recomputation of the same view, for oracles.
Matrix reference_view(Workload workload, const Matrix& a, std::size_t k,
                      const Matrix& b = {}, const Matrix& t0 = {});

// beta = inv(X'X) X'Y maintained under updates to X.
class OlsView {
 public:
  OlsView(Strategy strategy, Matrix x, Matrix y, std::size_t rank = 1);
  void initialize(CostLedger& ledger);
  // On SingularityError the view is left unchanged.
  void apply(const Matrix& u, const Matrix& v, CostLedger& ledger);
  const Matrix& beta() const;
  const Matrix& x() const;
  const Matrix& y() const;
  const TriggerSet& triggers() const { return triggers_; }

 private:
  Strategy strategy_;
  TriggerSet triggers_;
  MatrixMap state_;
};

const char* ols_source();

struct CostPrediction {
  Workload workload;
  IterativeModel model;
  Strategy strategy;
  std::size_t n = 0, p = 0, k = 0;
  // Exact ledger counts of one refresh under a rank-`rank` update.
  OpCounts counts;
  // A closed form exists (incremental powers, linear and
  // exponential; all powers re-evaluation).
  bool closed_form = false;
  std::string big_o;       // time
  std::string space_big_o;
  std::size_t stored_views = 0;
};

// Per-update refresh cost. For OLS `n` is the column count and `m` the row
// count of X. Throws ConfigError on unsupported cells.
CostPrediction predict_cost(Workload workload, const IterativeModel& model,
                            Strategy strategy, std::size_t n, std::size_t p,
                            std::size_t k, std::size_t rank = 1,
                            std::size_t m = 0);

// Closed forms of incremental powers, rank-1.
std::uint64_t powers_incremental_linear_cost(std::uint64_t n, std::uint64_t k);
std::uint64_t powers_incremental_exponential_cost(std::uint64_t n,
                                                  std::uint64_t k);

// Batches of `batch_size` single-row updates whose rows follow a Zipf law
// (P(row r) ~ 1 / (r+1)^z). Rows repeated within a batch merge, so each batch
// has rank <= min(batch_size, n).
class ZipfBatchStream {
 public:
  ZipfBatchStream(std::size_t n, std::size_t cols, std::size_t batch_size,
                  double zipf_factor, std::uint64_t seed = kDefaultSeed,
                  double magnitude = 1.0);
  RankKUpdate next(const std::string& target = "A");

 private:
  std::size_t n_, cols_, batch_;
  double magnitude_;
  std::vector<double> cdf_;
  Rng rng_;
};

// `count` random rank-`rank` updates with entries scaled by `magnitude`.
std::vector<RankKUpdate> random_updates(std::size_t rows, std::size_t cols,
                                        std::size_t rank, std::size_t count,
                                        Rng& rng, double magnitude = 1.0,
                                        const std::string& target = "A");

// Row update of X: rank-1 change to row `row` only.
RankKUpdate row_update(std::size_t rows, std::size_t cols, std::size_t row,
                       Rng& rng, double magnitude, const std::string& target);

}  // namespace ivla
