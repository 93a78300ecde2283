#include "cat/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace cat {

FrustrationMeasure measure(const RunTrace& trace) {
  FrustrationMeasure m;
  m.total = static_cast<std::int64_t>(trace.size());
  m.negatives = std::count_if(trace.begin(), trace.end(),
                              [](const ProbeRecord& r) { return r.outcome == Outcome::Fail; });
  return m;
}

std::string_view to_string(FunRelation relation) {
  switch (relation) {
    case FunRelation::MoreFun:
      return "more_fun";
    case FunRelation::LessFun:
      return "less_fun";
    case FunRelation::NonComparable:
      return "non_comparable";
  }
  return "non_comparable";
}

FunRelation fun_relation(const FrustrationMeasure& a, const FrustrationMeasure& b) {
  if (a.negatives < b.negatives && a.total < b.total) return FunRelation::MoreFun;
  if ((a.negatives > b.negatives && a.total == b.total) || (a.total > b.total && a.negatives == b.negatives)) {
    return FunRelation::LessFun;
  }
  return FunRelation::NonComparable;
}

bool dominates(const FrustrationMeasure& a, const FrustrationMeasure& b) {
  return a.negatives <= b.negatives && a.total <= b.total && a != b;
}

std::vector<StrategyPoint> pareto_front(std::span<const StrategyPoint> points) {
  std::vector<StrategyPoint> front;
  for (const auto& candidate : points) {
    const bool beaten = std::any_of(points.begin(), points.end(), [&](const StrategyPoint& other) {
      return dominates(other.second, candidate.second);
    });
    if (!beaten) front.push_back(candidate);
  }
  std::stable_sort(front.begin(), front.end(),
                   [](const StrategyPoint& a, const StrategyPoint& b) { return a.first < b.first; });
  return front;
}

int popcount(std::int64_t p) {
  if (p < 0) throw std::domain_error("popcount needs p >= 0");
  return std::popcount(static_cast<std::uint64_t>(p));
}

int zeroes_below_msb(std::int64_t p) {
  if (p < 0) throw std::domain_error("zeroes_below_msb needs p >= 0");
  if (p == 0) return 0;
  const auto u = static_cast<std::uint64_t>(p);
  return static_cast<int>(std::bit_width(u)) - std::popcount(u);
}

namespace {

double log2_or_zero(std::int64_t x) { return x <= 0 ? 0.0 : std::log2(static_cast<double>(x)); }

}  // namespace

PredictedCurve predicted(StrategyKind strategy, std::int64_t n, std::int64_t p) {
  if (n < 1 || p < 0 || p > n) throw std::domain_error("predicted needs n >= 1 and 0 <= p <= n");
  const double lg_n = log2_or_zero(n);
  const double lg_p = log2_or_zero(p);
  PredictedCurve c{strategy, 0.0, 0.0};
  switch (strategy) {
    case StrategyKind::Sequential:
      c.negatives_pred = 1.0;
      c.total_pred = std::max(0.0, static_cast<double>(p) - 1.0);
      break;
    case StrategyKind::Binary:
      c.negatives_pred = lg_n;
      c.total_pred = 1.0 + lg_n;
      break;
    case StrategyKind::Doubling:
      c.negatives_pred = 1.0 + lg_p;
      c.total_pred = 1.0 + 2.0 * lg_p;
      break;
    case StrategyKind::Fun:
      c.negatives_pred = popcount(p);
      c.total_pred = 1.0 + 2.0 * lg_p;
      break;
    case StrategyKind::Frustrating:
      c.negatives_pred = zeroes_below_msb(p);
      c.total_pred = 1.0 + 2.0 * lg_p;
      break;
  }
  return c;
}

FrustrationMeasure instance_lower_bound(std::int64_t n, std::int64_t p) {
  if (p < 0 || p > n) throw std::domain_error("instance_lower_bound needs 0 <= p <= n");
  const std::int64_t fail_witness = p < n ? 1 : 0;
  const std::int64_t pass_witness = p >= 1 ? 1 : 0;
  return {fail_witness, fail_witness + pass_witness};
}

namespace {

FrustrationMeasure deterministic_measure(StrategyKind kind, std::int64_t n, std::int64_t p) {
  return measure(run_to_completion(kind, n, DeterministicProfile{n, p}).trace);
}

}  // namespace

std::vector<FrustrationMeasure> best_per_instance(std::int64_t n) {
  std::vector<FrustrationMeasure> best;
  best.reserve(static_cast<std::size_t>(n + 1));
  for (std::int64_t p = 0; p <= n; ++p) {
    FrustrationMeasure b = deterministic_measure(kAllStrategies.front(), n, p);
    for (StrategyKind kind : kAllStrategies) {
      const auto m = deterministic_measure(kind, n, p);
      b.negatives = std::min(b.negatives, m.negatives);
      b.total = std::min(b.total, m.total);
    }
    const auto floor = instance_lower_bound(n, p);
    b.negatives = std::max(b.negatives, floor.negatives);
    b.total = std::max(b.total, floor.total);
    best.push_back(b);
  }
  return best;
}

OptimalityRatio optimality_ratio(StrategyKind strategy, std::int64_t n) {
  if (n < 2) throw std::domain_error("optimality_ratio needs n >= 2");
  const auto best = best_per_instance(n);
  OptimalityRatio out;
  out.negatives_ratio = -1.0;
  out.total_ratio = -1.0;
  for (std::int64_t p = 0; p <= n; ++p) {
    const auto m = deterministic_measure(strategy, n, p);
    const auto& b = best[static_cast<std::size_t>(p)];
    const double neg = static_cast<double>(m.negatives) / static_cast<double>(std::max<std::int64_t>(1, b.negatives));
    const double tot = static_cast<double>(m.total) / static_cast<double>(std::max<std::int64_t>(1, b.total));
    if (neg > out.negatives_ratio) {
      out.negatives_ratio = neg;
      out.negatives_argmax = p;
    }
    if (tot > out.total_ratio) {
      out.total_ratio = tot;
      out.total_argmax = p;
    }
  }
  return out;
}

}  // namespace cat
