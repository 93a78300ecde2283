// Frustration accounting and comparisons between strategies.
#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cat/strategies.hpp"
#include "cat/subject_model.hpp"

namespace cat {

// (negative tests, total tests) of one run. Lower is better in both.
struct FrustrationMeasure {
  std::int64_t negatives = 0;
  std::int64_t total = 0;

  friend bool operator==(const FrustrationMeasure&, const FrustrationMeasure&) = default;
};

FrustrationMeasure measure(const RunTrace& trace);

enum class FunRelation : std::uint8_t { MoreFun, LessFun, NonComparable };
std::string_view to_string(FunRelation relation);

// The "more or less fun" comparison read literally:
//   MoreFun  iff neg_a < neg_b and total_a < total_b
//   LessFun  iff (neg_a > neg_b and total_a == total_b) or (total_a > total_b and neg_a == neg_b)
//   NonComparable otherwise.
// It is not antisymmetric: fun_relation(a, b) == MoreFun does not imply
// fun_relation(b, a) == LessFun. Use dominates() for a lawful order.
FunRelation fun_relation(const FrustrationMeasure& a, const FrustrationMeasure& b);

// Pareto dominance: a <= b componentwise and a != b.
bool dominates(const FrustrationMeasure& a, const FrustrationMeasure& b);

using StrategyPoint = std::pair<StrategyKind, FrustrationMeasure>;

// Non-dominated subset, ordered by strategy enumeration order (stable for ties).
std::vector<StrategyPoint> pareto_front(std::span<const StrategyPoint> points);

int popcount(std::int64_t p);
// Zero bits strictly below the most significant set bit; 0 for p = 0.
int zeroes_below_msb(std::int64_t p);

// Closed-form frustration each strategy is expected to cause, in real numbers.
// log2 of 0 is taken as 0.
struct PredictedCurve {
  StrategyKind strategy = StrategyKind::Sequential;
  double negatives_pred = 0.0;
  double total_pred = 0.0;
};

PredictedCurve predicted(StrategyKind strategy, std::int64_t n, std::int64_t p);

// Minimum any correct strategy needs to certify p: a Pass at p (when p >= 1)
// and a Fail at p+1 (when p < n).
FrustrationMeasure instance_lower_bound(std::int64_t n, std::int64_t p);

struct OptimalityRatio {
  double negatives_ratio = 0.0;
  std::int64_t negatives_argmax = 0;
  double total_ratio = 0.0;
  std::int64_t total_argmax = 0;
};

// Per-p best over the five strategies, floored by instance_lower_bound.
std::vector<FrustrationMeasure> best_per_instance(std::int64_t n);

// max over p of cost(p) / max(1, best(p)) for each coordinate; argmax is the
// smallest p reaching the maximum. Requires n >= 2.
OptimalityRatio optimality_ratio(StrategyKind strategy, std::int64_t n);

}  // namespace cat
