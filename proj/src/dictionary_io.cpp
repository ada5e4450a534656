#include <bit>
#include <fstream>
#include <iterator>
#include <limits>

#include "surfdict/dictionary.hpp"
#include "surfdict/error.hpp"

namespace surfdict {

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void i8(std::int8_t v) { out_.push_back(static_cast<std::uint8_t>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

std::uint16_t checked_u16(std::size_t n, const char* what) {
  if (n > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorKind::kStructural, std::string(what) + " exceeds the 16-bit limit of the file format");
  }
  return static_cast<std::uint16_t>(n);
}

void write_record(ByteWriter& w, const KeypointRecord& r) {
  w.u32(r.keypoint_id);
  w.f32(r.x);
  w.f32(r.y);
  w.f32(r.scale);
  w.f32(r.orientation);
  w.i8(r.laplacian_sign);
  for (float v : r.descriptor) w.f32(v);
}

void write_nodes(ByteWriter& w, const DescriptorDictionary& dict, const std::vector<std::uint32_t>& level,
                 int depth) {
  for (std::uint32_t idx : level) {
    const DictionaryNode& n = dict.node(idx);
    w.f32(n.lo);
    w.f32(n.hi);
    if (depth == kDescriptorSize) {
      w.u16(checked_u16(n.payload.size(), "leaf payload count"));
      for (std::uint32_t r : n.payload) write_record(w, dict.record(r));
    } else {
      w.u16(checked_u16(n.children.size(), "child count"));
      write_nodes(w, dict, n.children, depth + 1);
    }
  }
}

}  // namespace

class DictionaryReader {
 public:
  explicit DictionaryReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  DescriptorDictionary read() {
    if (bytes_.size() < 4) throw Error(ErrorKind::kTruncated, "dictionary file too short for header");
    if (u32() != kDictionaryMagic) throw Error(ErrorKind::kBadMagic, "not a dictionary file (bad magic)");
    const std::uint16_t version = u16();
    if (version != kDictionaryVersion) {
      throw Error(ErrorKind::kUnsupportedVersion, "unsupported dictionary version " + std::to_string(version));
    }
    DescriptorDictionary dict;
    dict.tolerance_ = f32();
    const std::uint32_t declared = u32();
    const std::uint16_t id_len = u16();
    need(id_len);
    dict.image_id_.assign(reinterpret_cast<const char*>(bytes_.data() + pos_), id_len);
    pos_ += id_len;

    const std::uint16_t root_count = u16();
    dict.roots_ = read_level(dict, root_count, 1);
    if (pos_ != bytes_.size()) throw Error(ErrorKind::kStructural, "trailing bytes after node stream");
    if (dict.records_.size() != declared) {
      throw Error(ErrorKind::kInvariantViolation, "descriptor_count does not match stored payloads");
    }
    dict.validate();
    return dict;
  }

 private:
  std::vector<std::uint32_t> read_level(DescriptorDictionary& dict, std::uint16_t count, int depth) {
    std::vector<std::uint32_t> level;
    level.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
      const auto idx = static_cast<std::uint32_t>(dict.nodes_.size());
      DictionaryNode node;
      node.lo = f32();
      node.hi = f32();
      const std::uint16_t n = u16();
      dict.nodes_.push_back(std::move(node));
      if (depth == kDescriptorSize) {
        std::vector<std::uint32_t> payload;
        payload.reserve(n);
        for (std::uint16_t r = 0; r < n; ++r) {
          payload.push_back(static_cast<std::uint32_t>(dict.records_.size()));
          dict.records_.push_back(read_record());
        }
        dict.nodes_[idx].payload = std::move(payload);
      } else {
        std::vector<std::uint32_t> children = read_level(dict, n, depth + 1);
        dict.nodes_[idx].children = std::move(children);
      }
      level.push_back(idx);
    }
    return level;
  }

  KeypointRecord read_record() {
    KeypointRecord r;
    r.keypoint_id = u32();
    r.x = f32();
    r.y = f32();
    r.scale = f32();
    r.orientation = f32();
    r.laplacian_sign = static_cast<std::int8_t>(u8());
    for (float& v : r.descriptor) v = f32();
    return r;
  }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorKind::kTruncated, "dictionary file truncated");
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode_dictionary(const DescriptorDictionary& dict) {
  if (dict.descriptor_count() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::kStructural, "descriptor count exceeds the 32-bit limit");
  }
  ByteWriter w;
  w.u32(kDictionaryMagic);
  w.u16(kDictionaryVersion);
  w.f32(dict.tolerance());
  w.u32(static_cast<std::uint32_t>(dict.descriptor_count()));
  w.u16(checked_u16(dict.image_id().size(), "image id length"));
  w.bytes(dict.image_id());
  w.u16(checked_u16(dict.roots().size(), "root count"));
  write_nodes(w, dict, dict.roots(), 1);
  return w.take();
}

DescriptorDictionary decode_dictionary(std::span<const std::uint8_t> bytes) {
  return DictionaryReader(bytes).read();
}

void serialize(const DescriptorDictionary& dict, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_dictionary(dict);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

DescriptorDictionary deserialize(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_dictionary(bytes);
}

}  // namespace surfdict
