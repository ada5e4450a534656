#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "surfdict/error.hpp"
#include "surfdict/retrieval.hpp"

namespace surfdict {

namespace {

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  std::vector<std::uint8_t> raster(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), raster.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, raster.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encoding failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, raster.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encoding failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

std::string base64(const std::vector<std::uint8_t>& data) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    const std::uint32_t b0 = data[i];
    const std::uint32_t b1 = i + 1 < data.size() ? data[i + 1] : 0;
    const std::uint32_t b2 = i + 2 < data.size() ? data[i + 2] : 0;
    const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
    out.push_back(kAlphabet[(triple >> 18) & 63]);
    out.push_back(kAlphabet[(triple >> 12) & 63]);
    out.push_back(i + 1 < data.size() ? kAlphabet[(triple >> 6) & 63] : '=');
    out.push_back(i + 2 < data.size() ? kAlphabet[triple & 63] : '=');
  }
  return out;
}

}  // namespace

std::string overlay_svg(const GrayImage& image, const VerifiedMatch& verified, OverlaySide side) {
  const int w = image.width();
  const int h = image.height();
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" "
      "width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<image x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" xlink:href=\"data:image/png;base64,{2}\"/>\n",
      w, h, base64(encode_png(image)));

  for (const MatchPair& pair : verified.kept) {
    const KeypointRecord& kp = side == OverlaySide::kQuery ? *pair.a : *pair.b;
    svg += fmt::format(
        "<circle class=\"keypoint\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.3f}\" fill=\"none\" stroke=\"#00d000\" "
        "stroke-width=\"1\"/>\n",
        kp.x, kp.y, 2.0 * kp.scale);
  }
  const std::optional<Point2>& center = side == OverlaySide::kQuery ? verified.center_a : verified.center_b;
  if (center) {
    const double r = std::max(6.0, 0.03 * std::min(w, h));
    svg += fmt::format(
        "<circle class=\"center\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.3f}\" fill=\"#ff2020\" fill-opacity=\"0.6\" "
        "stroke=\"#ffffff\" stroke-width=\"1\"/>\n",
        center->x, center->y, r);
  }
  svg += "</svg>\n";
  return svg;
}

void render_overlay(const GrayImage& image, const VerifiedMatch& verified, OverlaySide side,
                    const std::filesystem::path& out_path) {
  const std::string svg = overlay_svg(image, verified, side);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + out_path.string());
  out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + out_path.string());
}

}  // namespace surfdict
