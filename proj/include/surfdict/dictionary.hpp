#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "surfdict/surf.hpp"

namespace surfdict {

/// Keypoint data stored at the end of a dictionary word, together with the
/// verbatim descriptor.
struct KeypointRecord {
  std::uint32_t keypoint_id = 0;
  float x = 0.0f;
  float y = 0.0f;
  float scale = 0.0f;
  float orientation = 0.0f;
  std::int8_t laplacian_sign = 1;
  Descriptor descriptor{};

  friend bool operator==(const KeypointRecord&, const KeypointRecord&) = default;
};

KeypointRecord to_record(const Feature& feature);
std::vector<KeypointRecord> to_records(std::span<const Feature> features);

/// One grouped interval [lo, hi] at a fixed element position. Children and
/// payload refer into the owning dictionary's arrays.
struct DictionaryNode {
  float lo = 0.0f;
  float hi = 0.0f;
  std::vector<std::uint32_t> children;  // sorted by lo, pairwise disjoint
  std::vector<std::uint32_t> payload;   // record indices, leaves only
};

struct DictionaryStats {
  std::size_t node_count = 0;
  std::size_t leaf_count = 0;
  double compression_ratio = 0.0;  // node_count / (64 * descriptor_count)
};

/// Depth-64 interval trie over descriptor elements. Level k groups the k-th
/// element of every descriptor into intervals no wider than the tolerance;
/// the leaf at level 64 keeps the full records.
class DescriptorDictionary {
 public:
  DescriptorDictionary() = default;
  DescriptorDictionary(std::string image_id, float tolerance);

  const std::string& image_id() const noexcept { return image_id_; }
  float tolerance() const noexcept { return tolerance_; }
  std::size_t descriptor_count() const noexcept { return records_.size(); }

  const std::vector<std::uint32_t>& roots() const noexcept { return roots_; }
  const DictionaryNode& node(std::uint32_t index) const { return nodes_[index]; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const std::vector<KeypointRecord>& records() const noexcept { return records_; }
  const KeypointRecord& record(std::uint32_t index) const { return records_[index]; }

  /// Adds one record, extending or creating one node per level.
  void insert(const KeypointRecord& record);

  /// Checks every structural invariant; throws kInvariantViolation.
  void validate() const;

  /// Structural equality: same header, same intervals, same child order and
  /// same leaf payloads, independent of internal node numbering.
  friend bool operator==(const DescriptorDictionary& a, const DescriptorDictionary& b);

 private:
  friend class DictionaryReader;

  std::uint32_t find_or_create(std::vector<std::uint32_t>& siblings, float value);

  std::string image_id_;
  float tolerance_ = 0.05f;
  std::vector<DictionaryNode> nodes_;
  std::vector<std::uint32_t> roots_;
  std::vector<KeypointRecord> records_;
};

/// Width of [min(lo, v), max(hi, v)], evaluated in double precision. All
/// tolerance checks go through this function.
double extended_width(float lo, float hi, float value);

/// Builds a dictionary, inserting records in ascending keypoint_id order.
/// Throws kParameter for a non-positive tolerance.
DescriptorDictionary build_dictionary(std::span<const KeypointRecord> records, float tolerance,
                                      std::string image_id = {});

DictionaryStats stats(const DescriptorDictionary& dict);

inline constexpr std::uint32_t kDictionaryMagic = 0x43494453;  // "SDIC" little-endian
inline constexpr std::uint16_t kDictionaryVersion = 1;

/// Binary .sdic encoding, little-endian throughout.
std::vector<std::uint8_t> encode_dictionary(const DescriptorDictionary& dict);
DescriptorDictionary decode_dictionary(std::span<const std::uint8_t> bytes);

void serialize(const DescriptorDictionary& dict, const std::filesystem::path& path);
DescriptorDictionary deserialize(const std::filesystem::path& path);

}  // namespace surfdict
