#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumeval/ngram_metrics.hpp"
#include "sumeval/ratings.hpp"

namespace sumeval {

enum class CorrelationKind { spearman, kendall_b };

struct CorrelationResult {
  CorrelationKind kind = CorrelationKind::spearman;
  double value = 0.0;
  std::size_t n = 0;
};

namespace detail {

Eigen::VectorXd rank_average_impl(const Eigen::Ref<const Eigen::VectorXd>& values);
CorrelationResult spearman_impl(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);
CorrelationResult kendall_impl(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace detail

/// 1-based ranks; tied values share the mean of their positions.
template <typename Derived>
Eigen::VectorXd rank_average(const Eigen::DenseBase<Derived>& values) {
  return detail::rank_average_impl(values.derived().template cast<double>());
}

/// Pearson correlation of average ranks. Throws std::invalid_argument for
/// unequal lengths or n < 2, DegenerateError when either series is constant.
template <typename A, typename B>
CorrelationResult spearman_rho(const Eigen::DenseBase<A>& x, const Eigen::DenseBase<B>& y) {
  return detail::spearman_impl(x.derived().template cast<double>(), y.derived().template cast<double>());
}

/// Kendall tau-b, (C - D) / sqrt((n0 - n1)(n0 - n2)), in O(n log n).
/// Throws DegenerateError when either series is entirely tied.
template <typename A, typename B>
CorrelationResult kendall_tau_b(const Eigen::DenseBase<A>& x, const Eigen::DenseBase<B>& y) {
  return detail::kendall_impl(x.derived().template cast<double>(), y.derived().template cast<double>());
}

inline Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

enum class UTestMode { automatic, exact, normal_approx };
enum class UTestMethod { exact, normal_approx };

std::string_view to_string(UTestMethod m);

struct UTestResult {
  double u1 = 0.0;
  double u2 = 0.0;
  double z = 0.0;
  double p_two_sided = 1.0;
  UTestMethod method = UTestMethod::normal_approx;
};

/// Groups up to this combined size, without ties, use the exact
/// distribution in automatic mode.
inline constexpr std::size_t kExactUTestLimit = 20;
/// Largest pooled size accepted by UTestMode::exact (the table is cubic in N).
inline constexpr std::size_t kExactUTestMax = 200;

/// Two-sided Mann-Whitney U test. u1 counts pairs (a in g1, b in g2) with
/// a > b plus half of the ties. The exact method is the permutation
/// distribution of U over all labelings of the pooled sample, so it is also
/// exact in the presence of ties; the normal approximation uses the
/// tie-corrected variance and a 0.5 continuity correction.
UTestResult mann_whitney_u(const Eigen::Ref<const Eigen::VectorXd>& g1, const Eigen::Ref<const Eigen::VectorXd>& g2,
                           UTestMode mode = UTestMode::automatic);

/// Metric scores and agreement levels aligned on shared item ids.
struct OrientedSeries {
  std::vector<std::string> item_ids;  // sorted
  Eigen::VectorXd metric;             // negated for lower-is-more-similar metrics
  Eigen::VectorXd agreement;          // 5 - mean rating
};

/// Throws InsufficientData when fewer than two items overlap and
/// std::invalid_argument when an item id repeats on either side.
OrientedSeries oriented_series(std::span<const MetricScore> scores, std::span<const AggregateRating> aggregates);

}  // namespace sumeval
