#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "surfdict/dictionary.hpp"

namespace surfdict {

inline constexpr double kDefaultSadThreshold = 0.5;

/// Cross-image correspondence. Records are owned by the matched
/// dictionaries (or input spans) and must outlive the pair.
struct MatchPair {
  const KeypointRecord* a = nullptr;  // query side
  const KeypointRecord* b = nullptr;  // candidate side
  double sad = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::uint64_t comparisons = 0;   // exact SAD evaluations at leaf level
  std::uint64_t combinations = 0;  // |query| x |candidate|
  std::uint64_t node_visits = 0;   // interval tests, diagnostics only
};

/// L1 distance, accumulated in element order in double precision.
double sad(const Descriptor& a, const Descriptor& b);

/// Lower bound on |a - b| for any a in [lo_a, hi_a], b in [lo_b, hi_b].
double interval_gap(float lo_a, float hi_a, float lo_b, float hi_b);

/// All record pairs with sad < threshold, found by descending both tries in
/// lockstep and pruning node pairs whose summed interval gaps reach the
/// threshold. Pairs come out in query-leaf pre-order.
MatchResult match_dictionaries(const DescriptorDictionary& query, const DescriptorDictionary& candidate,
                               double threshold = kDefaultSadThreshold);

/// Exhaustive double loop; comparisons = |a| x |b|.
MatchResult brute_force_match(std::span<const KeypointRecord> a, std::span<const KeypointRecord> b,
                              double threshold = kDefaultSadThreshold);

/// query_count x sum(collection_counts).
std::uint64_t combinations(std::uint64_t query_count, std::span<const std::uint64_t> collection_counts);

}  // namespace surfdict
