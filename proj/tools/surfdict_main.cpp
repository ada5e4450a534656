// Command-line driver: index a PGM collection, query it, report statistics.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <iostream>

#include "surfdict/error.hpp"
#include "surfdict/retrieval.hpp"

namespace fs = std::filesystem;
using namespace surfdict;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

// "0.8:1.25" -> (0.8, 1.25)
void parse_band(const std::string& text, GeometryParams& geometry) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--ratio-band", "expected LOW:HIGH");
  try {
    geometry.ratio_low = std::stod(text.substr(0, colon));
    geometry.ratio_high = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--ratio-band", "expected LOW:HIGH");
  }
}

int cmd_index(const fs::path& image_dir, const fs::path& out_dir, const IndexOptions& options) {
  const IndexSummary summary = run_index(image_dir, out_dir, options);
  for (const std::string& w : summary.warnings) std::cerr << "warning: " << w << '\n';
  for (const IndexEntry& e : summary.entries) {
    std::cout << fmt::format("{}\tkeypoints={}\tnodes={}\tbytes={}\n", e.image_id, e.keypoints, e.nodes,
                             e.file_bytes);
  }
  return 0;
}

int cmd_query(const fs::path& image, const fs::path& index_dir, const QueryOptions& options,
              const std::optional<fs::path>& overlay_dir, const std::optional<fs::path>& image_dir,
              const std::optional<fs::path>& tsv) {
  std::vector<DescriptorDictionary> index = load_index(index_dir);
  if (index.empty()) throw Error(ErrorKind::kIo, "no .sdic files in " + index_dir.string());
  const GrayImage query_image = load_pgm(image);
  DescriptorDictionary query = index_image(query_image, image.stem().string(), options.index);
  const QueryRun run = run_query(std::move(query), std::move(index), options);

  std::cout << query_table(run.report);
  if (tsv) write_text(*tsv, query_tsv(run.report));

  if (overlay_dir && !run.verified.empty()) {
    fs::create_directories(*overlay_dir);
    for (std::size_t i = 0; i < run.candidates.size(); ++i) {
      const std::string& cid = run.candidates[i].image_id();
      if (std::find(run.report.related.begin(), run.report.related.end(), cid) == run.report.related.end()) {
        continue;
      }
      const std::string stem = run.report.query_id + "__" + cid;
      render_overlay(query_image, run.verified[i], OverlaySide::kQuery, *overlay_dir / (stem + ".query.svg"));
      if (image_dir) {
        const fs::path candidate_image = *image_dir / (cid + ".pgm");
        if (fs::exists(candidate_image)) {
          render_overlay(load_pgm(candidate_image), run.verified[i], OverlaySide::kCandidate,
                         *overlay_dir / (stem + ".candidate.svg"));
        }
      }
    }
  }
  return 0;
}

int cmd_stats(const fs::path& index_dir, const MatchOptions& options, const std::optional<fs::path>& tsv) {
  const std::vector<DescriptorDictionary> index = load_index(index_dir);
  if (index.empty()) throw Error(ErrorKind::kIo, "no .sdic files in " + index_dir.string());
  const std::vector<ImageReport> rows = run_stats(index, options);
  std::cout << stats_table(rows);
  if (tsv) write_text(*tsv, stats_tsv(rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dictionary-indexed SURF image retrieval"};
  app.require_subcommand(1);

  IndexOptions index_options;
  QueryOptions query_options;
  MatchOptions stats_options;
  std::string query_band = "0.8:1.25";
  std::string stats_band = "0.8:1.25";
  fs::path image_dir;
  fs::path out_dir;
  fs::path query_image;
  fs::path index_dir;
  std::optional<fs::path> overlay_dir;
  std::optional<fs::path> overlay_images;
  std::optional<fs::path> tsv;

  auto add_detector = [](CLI::App* cmd, IndexOptions& o) {
    cmd->add_option("--tolerance", o.tolerance, "Grouping tolerance of dictionary nodes")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--hessian-threshold", o.detector.hessian_threshold, "Minimum Hessian determinant")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--octaves", o.detector.octaves, "Scale-space octaves")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--layers", o.detector.layers_per_octave, "Filter layers per octave (>= 3)")
        ->capture_default_str()
        ->check(CLI::Range(3, 16));
    cmd->add_option("--step", o.detector.initial_step, "Sampling step of the first octave")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };

  CLI::App* index = app.add_subcommand("index", "Build .sdic dictionaries for every PGM in a directory");
  index->add_option("image_dir", image_dir, "Directory of binary PGM images")->required();
  index->add_option("--out", out_dir, "Output directory for .sdic files")->required();
  add_detector(index, index_options);

  CLI::App* query = app.add_subcommand("query", "Rank indexed images against a query image");
  query->add_option("image", query_image, "Query image (binary PGM)")->required();
  query->add_option("--index", index_dir, "Directory of .sdic files")->required();
  query->add_option("--sad-threshold", query_options.match.sad_threshold, "SAD similarity threshold")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  query->add_option("--min-pairs", query_options.min_pairs, "Verified pairs needed to call an image related")
      ->capture_default_str();
  query->add_option("--angle-tol", query_options.match.geometry.angle_tolerance, "Direction tolerance (radians)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  query->add_option("--ratio-band", query_band, "Accepted distance ratio LOW:HIGH")->capture_default_str();
  query->add_option("--overlay-dir", overlay_dir, "Write SVG overlays for related images here");
  query->add_option("--image-dir", overlay_images, "Where to find candidate PGMs for candidate-side overlays");
  query->add_option("--tsv", tsv, "Write the ranking as TSV");
  add_detector(query, query_options.index);

  CLI::App* stats = app.add_subcommand("stats", "All-vs-all statistics over an index");
  stats->add_option("--index", index_dir, "Directory of .sdic files")->required();
  stats->add_option("--tsv", tsv, "Write the per-image table as TSV");
  stats->add_option("--sad-threshold", stats_options.sad_threshold, "SAD similarity threshold")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  stats->add_option("--angle-tol", stats_options.geometry.angle_tolerance, "Direction tolerance (radians)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  stats->add_option("--ratio-band", stats_band, "Accepted distance ratio LOW:HIGH")->capture_default_str();

  try {
    app.parse(argc, argv);
    parse_band(query_band, query_options.match.geometry);
    parse_band(stats_band, stats_options.geometry);
    query_options.match.geometry.validate();
    stats_options.geometry.validate();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*index) return cmd_index(image_dir, out_dir, index_options);
    if (*query) return cmd_query(query_image, index_dir, query_options, overlay_dir, overlay_images, tsv);
    if (*stats) return cmd_stats(index_dir, stats_options, tsv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
