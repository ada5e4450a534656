#include "surfdict/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "surfdict/error.hpp"

namespace surfdict {

namespace {
constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();
}  // namespace

KeypointRecord to_record(const Feature& feature) {
  KeypointRecord r;
  r.keypoint_id = feature.keypoint.id;
  r.x = feature.keypoint.x;
  r.y = feature.keypoint.y;
  r.scale = feature.keypoint.scale;
  r.orientation = feature.keypoint.orientation;
  r.laplacian_sign = feature.keypoint.laplacian_sign;
  r.descriptor = feature.descriptor;
  return r;
}

std::vector<KeypointRecord> to_records(std::span<const Feature> features) {
  std::vector<KeypointRecord> out;
  out.reserve(features.size());
  for (const Feature& f : features) out.push_back(to_record(f));
  return out;
}

double extended_width(float lo, float hi, float value) {
  const double a = std::min(static_cast<double>(lo), static_cast<double>(value));
  const double b = std::max(static_cast<double>(hi), static_cast<double>(value));
  return b - a;
}

DescriptorDictionary::DescriptorDictionary(std::string image_id, float tolerance)
    : image_id_(std::move(image_id)), tolerance_(tolerance) {
  if (!(tolerance > 0.0f) || !std::isfinite(tolerance)) {
    throw Error(ErrorKind::kParameter, "grouping tolerance must be positive and finite");
  }
}

std::uint32_t DescriptorDictionary::find_or_create(std::vector<std::uint32_t>& siblings, float value) {
  // First sibling whose interval starts above the value.
  auto right = std::upper_bound(siblings.begin(), siblings.end(), value,
                                [this](float v, std::uint32_t n) { return v < nodes_[n].lo; });
  const bool has_left = right != siblings.begin();
  const bool has_right = right != siblings.end();

  if (has_left) {
    const DictionaryNode& left = nodes_[*(right - 1)];
    if (value <= left.hi) return *(right - 1);
  }

  // The value sits in a gap: only the two neighbours can absorb it without
  // overlapping another sibling. Best fit wins, ties go to the lower interval.
  const double tol = tolerance_;
  double best_width = std::numeric_limits<double>::infinity();
  std::uint32_t chosen = kNoParent;
  if (has_left) {
    const std::uint32_t n = *(right - 1);
    const double w = extended_width(nodes_[n].lo, nodes_[n].hi, value);
    if (w <= tol) {
      best_width = w;
      chosen = n;
    }
  }
  if (has_right) {
    const std::uint32_t n = *right;
    const double w = extended_width(nodes_[n].lo, nodes_[n].hi, value);
    if (w <= tol && w < best_width) chosen = n;
  }
  if (chosen != kNoParent) {
    DictionaryNode& node = nodes_[chosen];
    node.lo = std::min(node.lo, value);
    node.hi = std::max(node.hi, value);
    return chosen;
  }

  const auto index = static_cast<std::uint32_t>(nodes_.size());
  siblings.insert(right, index);
  DictionaryNode fresh;
  fresh.lo = value;
  fresh.hi = value;
  nodes_.push_back(std::move(fresh));
  return index;
}

void DescriptorDictionary::insert(const KeypointRecord& record) {
  for (float v : record.descriptor) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kParameter, "descriptor contains a non-finite value");
  }
  if (records_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::kStructural, "too many records for one dictionary");
  }
  const auto record_index = static_cast<std::uint32_t>(records_.size());
  records_.push_back(record);

  std::uint32_t parent = kNoParent;
  for (float value : record.descriptor) {
    // Detach the sibling list while nodes_ may grow underneath it.
    std::vector<std::uint32_t> siblings =
        parent == kNoParent ? std::move(roots_) : std::move(nodes_[parent].children);
    const std::uint32_t child = find_or_create(siblings, value);
    if (parent == kNoParent) {
      roots_ = std::move(siblings);
    } else {
      nodes_[parent].children = std::move(siblings);
    }
    parent = child;
  }
  nodes_[parent].payload.push_back(record_index);
}

void DescriptorDictionary::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvariantViolation, what); };
  if (!(tolerance_ > 0.0f) || !std::isfinite(tolerance_)) fail("tolerance must be positive and finite");

  std::vector<unsigned char> seen(records_.size(), 0);
  std::vector<unsigned char> visited(nodes_.size(), 0);
  std::size_t payload_total = 0;
  std::array<std::uint32_t, kDescriptorSize> path{};

  std::function<void(const std::vector<std::uint32_t>&, int)> walk =
      [&](const std::vector<std::uint32_t>& level, int depth) {
        const DictionaryNode* prev = nullptr;
        for (std::uint32_t idx : level) {
          if (idx >= nodes_.size()) fail("node index out of range");
          if (visited[idx]) fail("node reachable twice");
          visited[idx] = 1;
          const DictionaryNode& n = nodes_[idx];
          if (!std::isfinite(n.lo) || !std::isfinite(n.hi) || n.lo > n.hi) fail("malformed interval");
          if (extended_width(n.lo, n.hi, n.lo) > tolerance_) fail("interval wider than tolerance");
          if (prev != nullptr && !(prev->hi < n.lo)) fail("sibling intervals unsorted or overlapping");
          prev = &n;
          path[static_cast<std::size_t>(depth - 1)] = idx;
          if (depth < kDescriptorSize) {
            if (n.children.empty()) fail("path shorter than 64 levels");
            if (!n.payload.empty()) fail("payload above leaf level");
            walk(n.children, depth + 1);
          } else {
            if (!n.children.empty()) fail("path longer than 64 levels");
            if (n.payload.empty()) fail("leaf without payload");
            for (std::uint32_t r : n.payload) {
              if (r >= records_.size() || seen[r]) fail("payload record missing or shared");
              seen[r] = 1;
              ++payload_total;
              const Descriptor& d = records_[r].descriptor;
              for (std::size_t k = 0; k < d.size(); ++k) {
                const DictionaryNode& on_path = nodes_[path[k]];
                if (d[k] < on_path.lo || d[k] > on_path.hi) fail("descriptor outside its path intervals");
              }
            }
          }
        }
      };
  walk(roots_, 1);
  if (payload_total != records_.size()) fail("payload count differs from descriptor count");
  if (std::find(visited.begin(), visited.end(), 0) != visited.end()) fail("unreachable node");
}

bool operator==(const DescriptorDictionary& a, const DescriptorDictionary& b) {
  if (a.image_id_ != b.image_id_ || a.tolerance_ != b.tolerance_ || a.records_.size() != b.records_.size()) {
    return false;
  }
  std::function<bool(const std::vector<std::uint32_t>&, const std::vector<std::uint32_t>&)> same =
      [&](const std::vector<std::uint32_t>& la, const std::vector<std::uint32_t>& lb) {
        if (la.size() != lb.size()) return false;
        for (std::size_t i = 0; i < la.size(); ++i) {
          const DictionaryNode& na = a.nodes_[la[i]];
          const DictionaryNode& nb = b.nodes_[lb[i]];
          if (na.lo != nb.lo || na.hi != nb.hi || na.payload.size() != nb.payload.size()) return false;
          for (std::size_t p = 0; p < na.payload.size(); ++p) {
            if (!(a.records_[na.payload[p]] == b.records_[nb.payload[p]])) return false;
          }
          if (!same(na.children, nb.children)) return false;
        }
        return true;
      };
  return same(a.roots_, b.roots_);
}

DescriptorDictionary build_dictionary(std::span<const KeypointRecord> records, float tolerance,
                                      std::string image_id) {
  DescriptorDictionary dict(std::move(image_id), tolerance);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return records[l].keypoint_id < records[r].keypoint_id;
  });
  for (std::size_t i : order) dict.insert(records[i]);
  return dict;
}

DictionaryStats stats(const DescriptorDictionary& dict) {
  DictionaryStats s;
  s.node_count = dict.node_count();
  for (std::uint32_t i = 0; i < dict.node_count(); ++i) {
    if (!dict.node(i).payload.empty()) ++s.leaf_count;
  }
  if (dict.descriptor_count() > 0) {
    s.compression_ratio = static_cast<double>(s.node_count) /
                          (static_cast<double>(kDescriptorSize) * static_cast<double>(dict.descriptor_count()));
  }
  return s;
}

}  // namespace surfdict
