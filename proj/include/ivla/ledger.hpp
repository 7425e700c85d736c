#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace ivla {

struct OpCounts {
  std::uint64_t mul_adds = 0;
  std::uint64_t adds = 0;

  std::uint64_t total() const { return mul_adds + adds; }
  OpCounts& operator+=(const OpCounts& o) {
    mul_adds += o.mul_adds;
    adds += o.adds;
    return *this;
  }
  friend OpCounts operator-(OpCounts a, const OpCounts& b) {
    a.mul_adds -= b.mul_adds;
    a.adds -= b.adds;
    return a;
  }
  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

// Exact scalar-operation counter. Every kernel charges the ledger it is given
// under the label that is current at the time of the call; totals always equal
// the sum over labels. A ledger is not thread-safe: use one per thread.
//
// Charging convention:
//   (a x b)(b x c) product ........ a*b*c mul_adds
//   fused C += A*B ................ same as the product, no adds
//   add / sub ..................... rows*cols adds
//   scale ......................... rows*cols mul_adds
//   transpose, concatenation ...... free
//   n x n inverse ................. n^3 mul_adds
class CostLedger {
 public:
  static constexpr const char* kUnlabeled = "(unlabeled)";

  void charge_mul_adds(std::uint64_t n) {
    totals_.mul_adds += n;
    per_statement_[label_].mul_adds += n;
  }
  void charge_adds(std::uint64_t n) {
    totals_.adds += n;
    per_statement_[label_].adds += n;
  }

  const OpCounts& totals() const { return totals_; }
  std::uint64_t mul_adds() const { return totals_.mul_adds; }
  std::uint64_t adds() const { return totals_.adds; }
  const std::map<std::string, OpCounts>& per_statement() const {
    return per_statement_;
  }

  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  void reset() {
    totals_ = {};
    per_statement_.clear();
  }

 private:
  OpCounts totals_;
  std::map<std::string, OpCounts> per_statement_;
  std::string label_ = kUnlabeled;
};

// Attributes all charges made during its lifetime to `label`.
class LedgerLabel {
 public:
  LedgerLabel(CostLedger& ledger, std::string label)
      : ledger_(ledger), previous_(ledger.label()) {
    ledger_.set_label(std::move(label));
  }
  ~LedgerLabel() { ledger_.set_label(std::move(previous_)); }
  LedgerLabel(const LedgerLabel&) = delete;
  LedgerLabel& operator=(const LedgerLabel&) = delete;

 private:
  CostLedger& ledger_;
  std::string previous_;
};

}  // namespace ivla
