#include "surfdict/matcher.hpp"

#include <algorithm>
#include <cmath>

#include "surfdict/error.hpp"

namespace surfdict {

double sad(const Descriptor& a, const Descriptor& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    s += std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k]));
  }
  return s;
}

double interval_gap(float lo_a, float hi_a, float lo_b, float hi_b) {
  if (hi_a < lo_b) return static_cast<double>(lo_b) - static_cast<double>(hi_a);
  if (hi_b < lo_a) return static_cast<double>(lo_a) - static_cast<double>(hi_b);
  return 0.0;
}

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw Error(ErrorKind::kParameter, "SAD threshold must be positive and finite");
  }
}

// Lockstep descent. The running bound is accumulated in element order with
// the same double additions sad() uses; since each gap is <= the matching
// |a_k - b_k| and rounded addition is monotone, the bound can never exceed
// the computed SAD of a contained pair, so pruning is exact.
class LockstepMatcher {
 public:
  LockstepMatcher(const DescriptorDictionary& q, const DescriptorDictionary& c, double threshold,
                  MatchResult& out)
      : q_(q), c_(c), threshold_(threshold), out_(out) {}

  void descend(const std::vector<std::uint32_t>& level_q, const std::vector<std::uint32_t>& level_c, int depth,
               double bound) {
    const double remaining = threshold_ - bound;
    // Coarse window on the sorted candidate level; the exact test follows.
    const double slack = 1e-9 * (1.0 + std::abs(threshold_));
    for (std::uint32_t iq : level_q) {
      const DictionaryNode& nq = q_.node(iq);
      const double from = static_cast<double>(nq.lo) - remaining - slack;
      const double to = static_cast<double>(nq.hi) + remaining + slack;
      auto it = std::lower_bound(level_c.begin(), level_c.end(), from,
                                 [this](std::uint32_t n, double v) { return static_cast<double>(c_.node(n).hi) < v; });
      for (; it != level_c.end() && static_cast<double>(c_.node(*it).lo) <= to; ++it) {
        const DictionaryNode& nc = c_.node(*it);
        ++out_.node_visits;
        const double next = bound + interval_gap(nq.lo, nq.hi, nc.lo, nc.hi);
        if (next >= threshold_) continue;
        if (depth == kDescriptorSize) {
          compare_leaves(nq, nc);
        } else {
          descend(nq.children, nc.children, depth + 1, next);
        }
      }
    }
  }

 private:
  void compare_leaves(const DictionaryNode& nq, const DictionaryNode& nc) {
    for (std::uint32_t rq : nq.payload) {
      const KeypointRecord& a = q_.record(rq);
      for (std::uint32_t rc : nc.payload) {
        const KeypointRecord& b = c_.record(rc);
        ++out_.comparisons;
        const double d = sad(a.descriptor, b.descriptor);
        if (d < threshold_) out_.pairs.push_back({&a, &b, d});
      }
    }
  }

  const DescriptorDictionary& q_;
  const DescriptorDictionary& c_;
  double threshold_;
  MatchResult& out_;
};

}  // namespace

MatchResult match_dictionaries(const DescriptorDictionary& query, const DescriptorDictionary& candidate,
                               double threshold) {
  check_threshold(threshold);
  MatchResult result;
  result.combinations = static_cast<std::uint64_t>(query.descriptor_count()) *
                        static_cast<std::uint64_t>(candidate.descriptor_count());
  LockstepMatcher(query, candidate, threshold, result).descend(query.roots(), candidate.roots(), 1, 0.0);
  return result;
}

MatchResult brute_force_match(std::span<const KeypointRecord> a, std::span<const KeypointRecord> b,
                              double threshold) {
  check_threshold(threshold);
  MatchResult result;
  result.combinations = static_cast<std::uint64_t>(a.size()) * static_cast<std::uint64_t>(b.size());
  for (const KeypointRecord& ra : a) {
    for (const KeypointRecord& rb : b) {
      ++result.comparisons;
      const double d = sad(ra.descriptor, rb.descriptor);
      if (d < threshold) result.pairs.push_back({&ra, &rb, d});
    }
  }
  return result;
}

std::uint64_t combinations(std::uint64_t query_count, std::span<const std::uint64_t> collection_counts) {
  std::uint64_t total = 0;
  for (std::uint64_t c : collection_counts) total += c;
  return query_count * total;
}

}  // namespace surfdict
