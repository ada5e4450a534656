#include "surfdict/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "surfdict/error.hpp"

namespace surfdict {

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::kParameter, "image dimensions must be positive");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::kParameter, "pixel count does not match width x height");
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::kParameter, "intensity outside [0, 1]");
    }
  }
}

GrayImage::GrayImage(int width, int height, double fill)
    : GrayImage(width, height,
                std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                        static_cast<std::size_t>(std::max(height, 0)),
                                    fill)) {}

IntegralImage::IntegralImage(const GrayImage& img)
    : width_(img.width()), height_(img.height()), table_(img.pixels().size()) {
  const std::size_t w = static_cast<std::size_t>(width_);
  for (int y = 0; y < height_; ++y) {
    double row = 0.0;
    const std::size_t base = static_cast<std::size_t>(y) * w;
    for (int x = 0; x < width_; ++x) {
      row += img.pixels()[base + static_cast<std::size_t>(x)];
      table_[base + static_cast<std::size_t>(x)] = row + (y > 0 ? table_[base - w + static_cast<std::size_t>(x)] : 0.0);
    }
  }
}

double IntegralImage::box_sum(int x0, int y0, int x1, int y1) const {
  if (width_ == 0 || height_ == 0) return 0.0;
  x0 = std::clamp(x0, 0, width_ - 1);
  x1 = std::clamp(x1, 0, width_ - 1);
  y0 = std::clamp(y0, 0, height_ - 1);
  y1 = std::clamp(y1, 0, height_ - 1);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return inner_sum(x0, y0, x1, y1);
}

namespace {

// A run of source columns (or rows) and how often each is replicated.
struct Run {
  int lo;
  int hi;
  double mult;
};

// Splits [a, b] into runs over [0, n - 1] under border replication.
int replicate_runs(int a, int b, int n, std::array<Run, 3>& out) {
  int count = 0;
  if (n == 1) {
    out[count++] = {0, 0, static_cast<double>(b - a + 1)};
    return count;
  }
  const int left = std::min(b, 0) - a + 1;
  if (left > 0) out[count++] = {0, 0, static_cast<double>(left)};
  const int mid_lo = std::max(a, 1);
  const int mid_hi = std::min(b, n - 2);
  if (mid_lo <= mid_hi) out[count++] = {mid_lo, mid_hi, 1.0};
  const int right = b - std::max(a, n - 1) + 1;
  if (right > 0) out[count++] = {n - 1, n - 1, static_cast<double>(right)};
  return count;
}

}  // namespace

double IntegralImage::padded_box_sum(int x0, int y0, int x1, int y1) const {
  if (width_ == 0 || height_ == 0 || x0 > x1 || y0 > y1) return 0.0;
  if (x0 >= 0 && y0 >= 0 && x1 < width_ && y1 < height_) {
    return inner_sum(x0, y0, x1, y1);
  }
  std::array<Run, 3> xs{};
  std::array<Run, 3> ys{};
  const int nx = replicate_runs(x0, x1, width_, xs);
  const int ny = replicate_runs(y0, y1, height_, ys);
  double total = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      total += xs[i].mult * ys[j].mult * inner_sum(xs[i].lo, ys[j].lo, xs[i].hi, ys[j].hi);
    }
  }
  return total;
}

IntegralImage build_integral(const GrayImage& img) { return IntegralImage(img); }

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
bool next_token(std::istream& in, std::string& token) {
  token.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n' && c != '\r') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c) && c != '#') {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c == '#') in.unget();
  // The single whitespace byte after maxval has been consumed here, which is
  // exactly what the format requires before the raster.
  return !token.empty();
}

int parse_dimension(const std::string& token, const std::filesystem::path& path) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); }) ||
      token.size() > 9) {
    throw Error(ErrorKind::kMalformedHeader, "bad PGM header field '" + token + "' in " + path.string());
  }
  return std::stoi(token);
}

}  // namespace

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kMissingFile, "cannot open " + path.string());
  }
  std::string token;
  if (!next_token(in, token) || token != "P5") {
    throw Error(ErrorKind::kMalformedHeader, "not a binary PGM (P5): " + path.string());
  }
  std::array<int, 3> fields{};
  for (int& f : fields) {
    if (!next_token(in, token)) {
      throw Error(ErrorKind::kMalformedHeader, "incomplete PGM header in " + path.string());
    }
    f = parse_dimension(token, path);
  }
  const auto [width, height, maxval] = fields;
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::kMalformedHeader, "PGM dimensions must be positive in " + path.string());
  }
  if (maxval != 255) {
    throw Error(ErrorKind::kUnsupportedMaxval,
                "PGM maxval " + std::to_string(maxval) + " unsupported (need 255) in " + path.string());
  }
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw Error(ErrorKind::kTruncated, "PGM pixel data truncated in " + path.string());
  }
  std::vector<double> pixels(count);
  std::transform(raw.begin(), raw.end(), pixels.begin(), [](unsigned char b) { return b / 255.0; });
  return GrayImage(width, height, std::move(pixels));
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<char> raw(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), raw.begin(), [](double v) {
    return static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  });
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace surfdict
