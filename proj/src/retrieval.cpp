#include "surfdict/retrieval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>

#include "surfdict/error.hpp"

namespace surfdict {

namespace fs = std::filesystem;

namespace {

// Runs fn(i) for i in [0, n) on a few threads. Callers write results by index,
// so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

DescriptorDictionary index_image(const GrayImage& img, std::string image_id, const IndexOptions& options) {
  const IntegralImage ii(img);
  const std::vector<Feature> features = extract_features(ii, options.detector);
  const std::vector<KeypointRecord> records = to_records(features);
  return build_dictionary(records, options.tolerance, std::move(image_id));
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorKind::kMissingFile, "not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == extension) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

IndexSummary run_index(const fs::path& image_dir, const fs::path& out_dir, const IndexOptions& options) {
  const std::vector<fs::path> images = list_files(image_dir, ".pgm");
  if (images.empty()) throw Error(ErrorKind::kIo, "no images found in " + image_dir.string());
  fs::create_directories(out_dir);

  std::vector<std::optional<IndexEntry>> entries(images.size());
  std::vector<std::string> failures(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    try {
      const std::string id = images[i].stem().string();
      const DescriptorDictionary dict = index_image(load_pgm(images[i]), id, options);
      const fs::path target = out_dir / (id + ".sdic");
      serialize(dict, target);
      entries[i] = IndexEntry{id, dict.descriptor_count(), dict.node_count(), fs::file_size(target)};
    } catch (const std::exception& e) {
      failures[i] = fmt::format("skipping {}: {}", images[i].filename().string(), e.what());
    }
  });

  IndexSummary summary;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (entries[i]) {
      summary.entries.push_back(*entries[i]);
    } else {
      summary.warnings.push_back(failures[i]);
    }
  }
  if (summary.entries.empty()) {
    throw Error(ErrorKind::kIo, "no image in " + image_dir.string() + " could be indexed");
  }
  return summary;
}

std::vector<DescriptorDictionary> load_index(const fs::path& dir) {
  std::vector<DescriptorDictionary> out;
  for (const fs::path& p : list_files(dir, ".sdic")) out.push_back(deserialize(p));
  return out;
}

QueryRun run_query(DescriptorDictionary query, std::vector<DescriptorDictionary> candidates,
                   const QueryOptions& options) {
  if (candidates.empty()) throw Error(ErrorKind::kIo, "index is empty");
  options.match.geometry.validate();

  QueryRun run;
  run.query = std::move(query);
  run.candidates = std::move(candidates);
  QueryReport& report = run.report;
  report.query_id = run.query.image_id();
  report.query_points = run.query.descriptor_count();

  std::uint64_t total = 0;
  for (const DescriptorDictionary& c : run.candidates) {
    total += c.descriptor_count();
    if (c.image_id() == report.query_id) report.query_in_index = true;
  }
  // A member query is already part of the indexed total.
  report.combinations = static_cast<std::uint64_t>(report.query_points) * total;

  if (report.query_points == 0) {
    report.notice = "query image has no keypoints; nothing to match";
    return run;
  }

  const std::size_t n = run.candidates.size();
  run.matches.resize(n);
  run.verified.resize(n);
  parallel_for(n, [&](std::size_t i) {
    run.matches[i] = match_dictionaries(run.query, run.candidates[i], options.match.sad_threshold);
    run.verified[i] = filter_pairs(run.matches[i].pairs, options.match.geometry);
  });

  for (std::size_t i = 0; i < n; ++i) {
    CandidateRow row;
    row.candidate_id = run.candidates[i].image_id();
    row.points = run.candidates[i].descriptor_count();
    row.raw_pairs = run.matches[i].pairs.size();
    row.verified = run.verified[i].kept.size();
    row.comparisons = run.matches[i].comparisons;
    row.combinations = run.matches[i].combinations;
    report.rows.push_back(std::move(row));
  }
  std::sort(report.rows.begin(), report.rows.end(), [](const CandidateRow& a, const CandidateRow& b) {
    if (a.verified != b.verified) return a.verified > b.verified;
    return a.candidate_id < b.candidate_id;
  });
  for (const CandidateRow& row : report.rows) {
    if (row.verified >= options.min_pairs) report.related.push_back(row.candidate_id);
  }
  return run;
}

std::vector<ImageReport> assemble_image_reports(const std::vector<std::string>& ids,
                                                const std::vector<std::uint64_t>& point_counts,
                                                const std::vector<PairOutcome>& outcomes) {
  const std::size_t n = ids.size();
  if (point_counts.size() != n || outcomes.size() != n * n) {
    throw Error(ErrorKind::kParameter, "stats inputs have inconsistent sizes");
  }
  const std::uint64_t total = [&] {
    std::uint64_t t = 0;
    for (std::uint64_t c : point_counts) t += c;
    return t;
  }();
  std::vector<ImageReport> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImageReport& r = rows[i];
    r.image_id = ids[i];
    r.point_count = point_counts[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const PairOutcome& o = outcomes[i * n + j];
      r.raw_pairs += o.raw_pairs;
      r.matched += o.verified;
      r.comparisons += o.comparisons;
    }
    r.combinations = point_counts[i] * total;
    r.performance = r.combinations == 0 ? 0.0
                                        : 100.0 * static_cast<double>(r.comparisons) /
                                              static_cast<double>(r.combinations);
  }
  return rows;
}

std::vector<ImageReport> run_stats(const std::vector<DescriptorDictionary>& index, const MatchOptions& options) {
  options.geometry.validate();
  const std::size_t n = index.size();
  std::vector<PairOutcome> outcomes(n * n);
  parallel_for(n * n, [&](std::size_t k) {
    const std::size_t i = k / n;
    const std::size_t j = k % n;
    if (i == j) return;
    const MatchResult m = match_dictionaries(index[i], index[j], options.sad_threshold);
    const VerifiedMatch v = filter_pairs(m.pairs, options.geometry);
    outcomes[k] = PairOutcome{m.pairs.size(), v.kept.size(), m.comparisons};
  });
  std::vector<std::string> ids;
  std::vector<std::uint64_t> counts;
  for (const DescriptorDictionary& d : index) {
    ids.push_back(d.image_id());
    counts.push_back(d.descriptor_count());
  }
  return assemble_image_reports(ids, counts, outcomes);
}

std::string stats_tsv(const std::vector<ImageReport>& rows) {
  std::string out = "image\tpoints\tmatched\tcomparisons\tcombinations\tperformance_pct\n";
  for (const ImageReport& r : rows) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{:.4f}\n", r.image_id, r.point_count, r.matched, r.comparisons,
                       r.combinations, r.performance);
  }
  return out;
}

std::string stats_table(const std::vector<ImageReport>& rows) {
  std::size_t w = 5;
  for (const ImageReport& r : rows) w = std::max(w, r.image_id.size());
  std::string out = fmt::format("{:<{}}  {:>8}  {:>9}  {:>8}  {:>12}  {:>14}  {:>11}\n", "image", w, "points",
                                "raw pairs", "matched", "comparisons", "combinations", "performance");
  std::uint64_t comparisons = 0;
  std::uint64_t combos = 0;
  for (const ImageReport& r : rows) {
    out += fmt::format("{:<{}}  {:>8}  {:>9}  {:>8}  {:>12}  {:>14}  {:>10.2f}%\n", r.image_id, w, r.point_count,
                       r.raw_pairs, r.matched, r.comparisons, r.combinations, r.performance);
    comparisons += r.comparisons;
    combos += r.combinations;
  }
  const double overall = combos == 0 ? 0.0 : 100.0 * static_cast<double>(comparisons) / static_cast<double>(combos);
  out += fmt::format("overall: {} comparisons of {} combinations ({:.2f}%)\n", comparisons, combos, overall);
  return out;
}

std::string query_tsv(const QueryReport& report) {
  std::string out = "candidate\tpoints\traw_pairs\tmatched\tcomparisons\tcombinations\trelated\n";
  for (const CandidateRow& r : report.rows) {
    const bool related = std::find(report.related.begin(), report.related.end(), r.candidate_id) != report.related.end();
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.candidate_id, r.points, r.raw_pairs, r.verified,
                       r.comparisons, r.combinations, related ? 1 : 0);
  }
  return out;
}

std::string query_table(const QueryReport& report) {
  std::string out = fmt::format("query {} ({} keypoints{})\n", report.query_id, report.query_points,
                                report.query_in_index ? ", indexed" : "");
  if (!report.notice.empty()) out += "notice: " + report.notice + "\n";
  std::size_t w = 9;
  for (const CandidateRow& r : report.rows) w = std::max(w, r.candidate_id.size());
  out += fmt::format("{:<{}}  {:>8}  {:>9}  {:>8}  {:>12}\n", "candidate", w, "points", "raw pairs", "matched",
                     "comparisons");
  std::uint64_t comparisons = 0;
  for (const CandidateRow& r : report.rows) {
    out += fmt::format("{:<{}}  {:>8}  {:>9}  {:>8}  {:>12}\n", r.candidate_id, w, r.points, r.raw_pairs,
                       r.verified, r.comparisons);
    comparisons += r.comparisons;
  }
  const double perf = report.combinations == 0
                          ? 0.0
                          : 100.0 * static_cast<double>(comparisons) / static_cast<double>(report.combinations);
  out += fmt::format("comparisons {} of {} combinations ({:.2f}%)\n", comparisons, report.combinations, perf);
  out += "related:";
  for (const std::string& id : report.related) out += " " + id;
  out += report.related.empty() ? " (none)\n" : "\n";
  return out;
}

}  // namespace surfdict
