#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "surfdict/dictionary.hpp"
#include "surfdict/geometry.hpp"
#include "surfdict/image_io.hpp"
#include "surfdict/matcher.hpp"
#include "surfdict/surf.hpp"

namespace surfdict {

inline constexpr float kDefaultTolerance = 0.05f;
inline constexpr std::size_t kDefaultMinPairs = 5;

struct IndexOptions {
  float tolerance = kDefaultTolerance;
  DetectorParams detector;
};

struct IndexEntry {
  std::string image_id;
  std::size_t keypoints = 0;
  std::size_t nodes = 0;
  std::uintmax_t file_bytes = 0;
};

struct IndexSummary {
  std::vector<IndexEntry> entries;
  std::vector<std::string> warnings;  // images that could not be indexed
};

/// Detects features in `img` and builds its dictionary.
DescriptorDictionary index_image(const GrayImage& img, std::string image_id, const IndexOptions& options);

/// Sorted list of *.pgm files (or *.sdic files) directly inside `dir`.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& extension);

/// Writes <stem>.sdic for every PGM in image_dir. Unreadable images become
/// warnings; throws kIo when the directory has no PGM or every image fails.
IndexSummary run_index(const std::filesystem::path& image_dir, const std::filesystem::path& out_dir,
                       const IndexOptions& options);

/// Loads every .sdic in `dir`, ordered by file name.
std::vector<DescriptorDictionary> load_index(const std::filesystem::path& dir);

struct MatchOptions {
  double sad_threshold = kDefaultSadThreshold;
  GeometryParams geometry;
};

struct QueryOptions {
  MatchOptions match;
  std::size_t min_pairs = kDefaultMinPairs;
  IndexOptions index;  // used to build the query dictionary
};

struct CandidateRow {
  std::string candidate_id;
  std::size_t points = 0;
  std::size_t raw_pairs = 0;
  std::size_t verified = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t combinations = 0;
};

struct QueryReport {
  std::string query_id;
  std::size_t query_points = 0;
  bool query_in_index = false;
  std::uint64_t combinations = 0;  // query_points x total indexed points
  std::vector<CandidateRow> rows;  // verified desc, then candidate_id asc
  std::vector<std::string> related;
  std::string notice;
};

/// Query dictionary and per-candidate outcomes; pairs point into `query`
/// and `candidates`, so keep the whole object together.
struct QueryRun {
  DescriptorDictionary query;
  std::vector<DescriptorDictionary> candidates;
  std::vector<MatchResult> matches;      // parallel to candidates
  std::vector<VerifiedMatch> verified;   // parallel to candidates
  QueryReport report;

  QueryRun() = default;
  QueryRun(const QueryRun&) = delete;
  QueryRun& operator=(const QueryRun&) = delete;
  QueryRun(QueryRun&&) = default;
  QueryRun& operator=(QueryRun&&) = default;
};

/// Matches `query` against every candidate, verifies geometry and ranks.
QueryRun run_query(DescriptorDictionary query, std::vector<DescriptorDictionary> candidates,
                   const QueryOptions& options);

struct ImageReport {
  std::string image_id;
  std::uint64_t point_count = 0;
  std::uint64_t raw_pairs = 0;
  std::uint64_t matched = 0;  // verified pairs against all other images
  std::uint64_t comparisons = 0;
  std::uint64_t combinations = 0;
  double performance = 0.0;  // 100 * comparisons / combinations
};

/// Per ordered image pair (i, j), i != j, outcome of match + verification.
struct PairOutcome {
  std::uint64_t raw_pairs = 0;
  std::uint64_t verified = 0;
  std::uint64_t comparisons = 0;
};

/// Folds an n x n outcome matrix (row-major, diagonal ignored) into one row
/// per image. Combinations use point_count x sum of all point counts.
std::vector<ImageReport> assemble_image_reports(const std::vector<std::string>& ids,
                                                const std::vector<std::uint64_t>& point_counts,
                                                const std::vector<PairOutcome>& outcomes);

/// All-vs-all matching across an index.
std::vector<ImageReport> run_stats(const std::vector<DescriptorDictionary>& index, const MatchOptions& options);

std::string stats_tsv(const std::vector<ImageReport>& rows);
std::string stats_table(const std::vector<ImageReport>& rows);
std::string query_tsv(const QueryReport& report);
std::string query_table(const QueryReport& report);

enum class OverlaySide { kQuery, kCandidate };

/// Static SVG: the raster embedded as PNG, a circle per kept keypoint on the
/// chosen side (radius proportional to scale) and a larger circle at the
/// common-area center.
std::string overlay_svg(const GrayImage& image, const VerifiedMatch& verified, OverlaySide side);
void render_overlay(const GrayImage& image, const VerifiedMatch& verified, OverlaySide side,
                    const std::filesystem::path& out_path);

}  // namespace surfdict
