#include "sumeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>

#include "sumeval/error.hpp"

namespace sumeval {

namespace {

void require_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (!v.allFinite()) throw std::invalid_argument("series contains non-finite values");
}

void require_paired(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("correlation inputs differ in length");
  if (x.size() < 2) throw std::invalid_argument("correlation needs at least two observations");
  require_finite(x);
  require_finite(y);
}

std::vector<Eigen::Index> sorted_order(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  return idx;
}

// Sum of t(t-1)/2 over runs of equal values in an already sorted sequence.
template <typename Equal>
std::int64_t tied_pairs(std::size_t n, Equal equal) {
  std::int64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      total += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Sorts v ascending and returns the number of strict inversions.
std::int64_t count_inversions(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    std::swap(v, buf);
  }
  return swaps;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

namespace detail {

Eigen::VectorXd rank_average_impl(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() == 0) throw std::invalid_argument("cannot rank an empty series");
  require_finite(values);
  const auto order = sorted_order(values);
  Eigen::VectorXd ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult spearman_impl(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  require_paired(x, y);
  const Eigen::VectorXd rx = rank_average_impl(x);
  const Eigen::VectorXd ry = rank_average_impl(y);
  const Eigen::VectorXd dx = rx.array() - rx.mean();
  const Eigen::VectorXd dy = ry.array() - ry.mean();
  const double sxx = dx.squaredNorm();
  const double syy = dy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("Spearman correlation undefined for a constant series");
  const double rho = std::clamp(dx.dot(dy) / std::sqrt(sxx * syy), -1.0, 1.0);
  return {CorrelationKind::spearman, rho, static_cast<std::size_t>(x.size())};
}

CorrelationResult kendall_impl(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  require_paired(x, y);
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::int64_t x_ties = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]]; });
  const std::int64_t joint_ties = tied_pairs(
      n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]] && y[idx[a]] == y[idx[b]]; });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  const std::int64_t discordant = count_inversions(ys);
  const std::int64_t y_ties = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const auto total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t x_untied = total - x_ties;
  const std::int64_t y_untied = total - y_ties;
  if (x_untied == 0 || y_untied == 0) throw DegenerateError("Kendall tau-b undefined for an all-tied series");
  const std::int64_t c_minus_d = total - x_ties - y_ties + joint_ties - 2 * discordant;
  const double tau = static_cast<double>(c_minus_d) /
                     std::sqrt(static_cast<double>(x_untied) * static_cast<double>(y_untied));
  return {CorrelationKind::kendall_b, std::clamp(tau, -1.0, 1.0), n};
}

}  // namespace detail

std::string_view to_string(UTestMethod m) { return m == UTestMethod::exact ? "exact" : "normal_approx"; }

namespace {

struct PooledRanks {
  // Doubled mid-rank and size of every tie group, in ascending value order.
  std::vector<std::int64_t> doubled_rank;
  std::vector<std::int64_t> group_size;
  std::int64_t g1_doubled_rank_sum = 0;
  double tie_term = 0.0;  // sum of t^3 - t
  bool has_ties = false;
};

PooledRanks pool(const Eigen::Ref<const Eigen::VectorXd>& g1, const Eigen::Ref<const Eigen::VectorXd>& g2) {
  struct Obs {
    double value;
    bool first;
  };
  std::vector<Obs> all;
  all.reserve(static_cast<std::size_t>(g1.size() + g2.size()));
  for (Eigen::Index i = 0; i < g1.size(); ++i) all.push_back({g1[i], true});
  for (Eigen::Index i = 0; i < g2.size(); ++i) all.push_back({g2[i], false});
  std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.value < b.value; });

  PooledRanks p;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j + 1 < all.size() && all[j + 1].value == all[i].value) ++j;
    const auto start = static_cast<std::int64_t>(i + 1);
    const auto end = static_cast<std::int64_t>(j + 1);
    const std::int64_t t = end - start + 1;
    p.doubled_rank.push_back(start + end);
    p.group_size.push_back(t);
    if (t > 1) p.has_ties = true;
    p.tie_term += static_cast<double>(t * t * t - t);
    for (std::size_t k = i; k <= j; ++k) {
      if (all[k].first) p.g1_doubled_rank_sum += start + end;
    }
    i = j + 1;
  }
  return p;
}

// Permutation distribution of the doubled g1 rank sum; returns the two tail
// probabilities P(S <= observed) and P(S >= observed).
std::pair<double, double> exact_tails(const PooledRanks& p, std::int64_t n1) {
  std::int64_t max_sum = 0;
  for (std::size_t g = 0; g < p.doubled_rank.size(); ++g) max_sum += p.doubled_rank[g] * p.group_size[g];
  const auto width = static_cast<std::size_t>(max_sum + 1);
  const auto rows = static_cast<std::size_t>(n1 + 1);

  // ways[k * width + s]: labelings with k of the processed observations in g1
  // and doubled rank sum s.
  std::vector<double> ways(rows * width, 0.0), next(rows * width, 0.0);
  ways[0] = 1.0;
  std::int64_t reach = 0;
  for (std::size_t g = 0; g < p.doubled_rank.size(); ++g) {
    const std::int64_t t = p.group_size[g];
    const std::int64_t r2 = p.doubled_rank[g];
    std::fill(next.begin(), next.end(), 0.0);
    std::vector<double> choose(static_cast<std::size_t>(t + 1), 1.0);
    for (std::int64_t c = 1; c <= t; ++c) {
      choose[static_cast<std::size_t>(c)] =
          choose[static_cast<std::size_t>(c - 1)] * static_cast<double>(t - c + 1) / static_cast<double>(c);
    }
    for (std::int64_t k = 0; k <= n1; ++k) {
      for (std::int64_t s = 0; s <= reach; ++s) {
        const double w = ways[static_cast<std::size_t>(k) * width + static_cast<std::size_t>(s)];
        if (w == 0.0) continue;
        for (std::int64_t c = 0; c <= t && k + c <= n1; ++c) {
          next[static_cast<std::size_t>(k + c) * width + static_cast<std::size_t>(s + c * r2)] +=
              w * choose[static_cast<std::size_t>(c)];
        }
      }
    }
    reach += t * r2;
    std::swap(ways, next);
  }

  const double* dist = &ways[static_cast<std::size_t>(n1) * width];
  double total = 0.0, lower = 0.0, upper = 0.0;
  for (std::int64_t s = 0; s <= max_sum; ++s) {
    const double w = dist[s];
    total += w;
    if (s <= p.g1_doubled_rank_sum) lower += w;
    if (s >= p.g1_doubled_rank_sum) upper += w;
  }
  return {lower / total, upper / total};
}

}  // namespace

UTestResult mann_whitney_u(const Eigen::Ref<const Eigen::VectorXd>& g1, const Eigen::Ref<const Eigen::VectorXd>& g2,
                           UTestMode mode) {
  if (g1.size() == 0 || g2.size() == 0) throw std::invalid_argument("Mann-Whitney U needs two non-empty groups");
  require_finite(g1);
  require_finite(g2);
  const auto n1 = static_cast<std::int64_t>(g1.size());
  const auto n2 = static_cast<std::int64_t>(g2.size());
  if (mode == UTestMode::exact && static_cast<std::size_t>(n1 + n2) > kExactUTestMax) {
    throw std::invalid_argument("exact Mann-Whitney U is limited to " + std::to_string(kExactUTestMax) +
                                " observations");
  }
  const PooledRanks p = pool(g1, g2);

  UTestResult r;
  // 2 * U1 = 2 * R1 - n1 (n1 + 1), exact in integers.
  const std::int64_t twice_u1 = p.g1_doubled_rank_sum - n1 * (n1 + 1);
  r.u1 = static_cast<double>(twice_u1) / 2.0;
  r.u2 = static_cast<double>(n1 * n2) - r.u1;

  const double nn = static_cast<double>(n1 + n2);
  const double mu = static_cast<double>(n1 * n2) / 2.0;
  const double var =
      static_cast<double>(n1 * n2) / 12.0 * ((nn + 1.0) - p.tie_term / (nn * (nn - 1.0 > 0.0 ? nn - 1.0 : 1.0)));
  const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
  const double diff = r.u1 - mu;
  const double corrected = std::max(0.0, std::abs(diff) - 0.5);
  r.z = sd > 0.0 ? std::copysign(corrected / sd, diff) : 0.0;

  const bool use_exact = mode == UTestMode::exact ||
                         (mode == UTestMode::automatic &&
                          static_cast<std::size_t>(n1 + n2) <= kExactUTestLimit && !p.has_ties);
  if (use_exact) {
    const auto [lower, upper] = exact_tails(p, n1);
    r.method = UTestMethod::exact;
    r.p_two_sided = std::clamp(2.0 * std::min(lower, upper), 0.0, 1.0);
  } else {
    r.method = UTestMethod::normal_approx;
    r.p_two_sided = sd > 0.0 ? std::clamp(2.0 * normal_sf(std::abs(r.z)), 0.0, 1.0) : 1.0;
  }
  return r;
}

OrientedSeries oriented_series(std::span<const MetricScore> scores, std::span<const AggregateRating> aggregates) {
  std::map<std::string, const MetricScore*> by_item;
  for (const auto& s : scores) {
    if (!by_item.emplace(s.item_id, &s).second) {
      throw std::invalid_argument("item '" + s.item_id + "' scored twice for one metric");
    }
  }
  std::map<std::string, double> agreement;
  for (const auto& a : aggregates) {
    if (!agreement.emplace(a.item_id, 5.0 - a.mean).second) {
      throw std::invalid_argument("item '" + a.item_id + "' aggregated twice");
    }
  }

  OrientedSeries out;
  std::vector<double> x, y;
  for (const auto& [item, score] : by_item) {
    const auto it = agreement.find(item);
    if (it == agreement.end()) continue;
    out.item_ids.push_back(item);
    x.push_back(score->orientation == Orientation::lower_is_more_similar ? -score->value : score->value);
    y.push_back(it->second);
  }
  if (out.item_ids.size() < 2) {
    throw InsufficientData("metric scores and ratings share " + std::to_string(out.item_ids.size()) +
                           " item(s); at least 2 are needed");
  }
  out.metric = as_vector(x);
  out.agreement = as_vector(y);
  return out;
}

}  // namespace sumeval
