#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "surfdict/dictionary.hpp"
#include "surfdict/error.hpp"
#include "surfdict/geometry.hpp"
#include "surfdict/matcher.hpp"
#include "surfdict/retrieval.hpp"
#include "surfdict/surf.hpp"

namespace py = pybind11;
using namespace surfdict;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// uint8 images are scaled by 1/255, anything else is taken as [0, 1].
GrayImage to_image(const py::array& array) {
  if (array.ndim() != 2) throw Error(ErrorKind::kStructural, "image must be a 2-D array");
  const auto h = static_cast<int>(array.shape(0));
  const auto w = static_cast<int>(array.shape(1));
  std::vector<double> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  if (py::isinstance<py::array_t<std::uint8_t>>(array)) {
    const auto u8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>::ensure(array);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = u8.data()[i] / 255.0;
  } else {
    const DoubleArray d = DoubleArray::ensure(array);
    std::memcpy(px.data(), d.data(), px.size() * sizeof(double));
  }
  return GrayImage(w, h, std::move(px));
}

DoubleArray from_image(const GrayImage& img) {
  DoubleArray out(std::vector<py::ssize_t>{img.height(), img.width()});
  std::memcpy(out.mutable_data(), img.pixels().data(), img.pixels().size() * sizeof(double));
  return out;
}

Descriptor to_descriptor(const FloatArray& a) {
  if (a.ndim() != 1 || a.shape(0) != kDescriptorSize) {
    throw Error(ErrorKind::kStructural, "descriptor must have exactly 64 elements");
  }
  Descriptor d;
  std::memcpy(d.data(), a.data(), sizeof(Descriptor));
  return d;
}

py::array descriptor_array(const Descriptor& d) {
  return py::array(py::dtype::of<float>(), {py::ssize_t{kDescriptorSize}}, {py::ssize_t{sizeof(float)}}, d.data());
}

std::vector<KeypointRecord> records_from_matrix(const FloatArray& m) {
  if (m.ndim() != 2 || m.shape(1) != kDescriptorSize) {
    throw Error(ErrorKind::kStructural, "descriptors must be an (n, 64) array");
  }
  std::vector<KeypointRecord> out(static_cast<std::size_t>(m.shape(0)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].keypoint_id = static_cast<std::uint32_t>(i);
    std::memcpy(out[i].descriptor.data(), m.data() + i * kDescriptorSize, sizeof(Descriptor));
  }
  return out;
}

DetectorParams detector(double threshold, int octaves, int layers, int step) {
  return DetectorParams{threshold, octaves, layers, step};
}

GeometryParams geometry(double angle_tol, double ratio_low, double ratio_high) {
  GeometryParams g;
  g.angle_tolerance = angle_tol;
  g.ratio_low = ratio_low;
  g.ratio_high = ratio_high;
  return g;
}

py::list pair_tuples(const std::vector<MatchPair>& pairs) {
  py::list out;
  for (const MatchPair& p : pairs) out.append(py::make_tuple(p.a->keypoint_id, p.b->keypoint_id, p.sad));
  return out;
}

py::dict match_dict(const MatchResult& r) {
  py::dict d;
  d["pairs"] = pair_tuples(r.pairs);
  d["comparisons"] = r.comparisons;
  d["combinations"] = r.combinations;
  d["node_visits"] = r.node_visits;
  return d;
}

py::object point(const std::optional<Point2>& p) {
  if (!p) return py::none();
  return py::make_tuple(p->x, p->y);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dictionary-indexed SURF descriptors and exact SAD matching";

  static py::exception<Error> error_type(m, "SurfdictError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      instance.attr("kind") = to_string(e.kind());
      PyErr_SetObject(error_type.ptr(), instance.ptr());
    }
  });

  m.attr("DESCRIPTOR_SIZE") = kDescriptorSize;
  m.attr("DEFAULT_SAD_THRESHOLD") = kDefaultSadThreshold;
  m.attr("DEFAULT_TOLERANCE") = kDefaultTolerance;

  py::class_<KeypointRecord>(m, "KeypointRecord")
      .def_readonly("keypoint_id", &KeypointRecord::keypoint_id)
      .def_readonly("x", &KeypointRecord::x)
      .def_readonly("y", &KeypointRecord::y)
      .def_readonly("scale", &KeypointRecord::scale)
      .def_readonly("orientation", &KeypointRecord::orientation)
      .def_readonly("laplacian_sign", &KeypointRecord::laplacian_sign)
      .def_property_readonly("descriptor", [](const KeypointRecord& r) { return descriptor_array(r.descriptor); })
      .def("__repr__", [](const KeypointRecord& r) {
        return "<KeypointRecord id=" + std::to_string(r.keypoint_id) + " x=" + std::to_string(r.x) +
               " y=" + std::to_string(r.y) + ">";
      });

  py::class_<DescriptorDictionary>(m, "Dictionary")
      .def(py::init<std::string, float>(), py::arg("image_id") = "", py::arg("tolerance") = kDefaultTolerance)
      .def_property_readonly("image_id", &DescriptorDictionary::image_id)
      .def_property_readonly("tolerance", &DescriptorDictionary::tolerance)
      .def_property_readonly("descriptor_count", &DescriptorDictionary::descriptor_count)
      .def_property_readonly("records", &DescriptorDictionary::records)
      .def("stats",
           [](const DescriptorDictionary& d) {
             const DictionaryStats s = stats(d);
             py::dict out;
             out["node_count"] = s.node_count;
             out["leaf_count"] = s.leaf_count;
             out["compression_ratio"] = s.compression_ratio;
             return out;
           })
      .def("validate", &DescriptorDictionary::validate)
      .def("to_bytes",
           [](const DescriptorDictionary& d) {
             const std::vector<std::uint8_t> b = encode_dictionary(d);
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def_static("from_bytes",
                  [](const py::bytes& data) {
                    const std::string s = data;
                    return decode_dictionary(
                        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
                  })
      .def("save", [](const DescriptorDictionary& d, const std::filesystem::path& p) { serialize(d, p); })
      .def_static("load", &deserialize)
      .def("__eq__", [](const DescriptorDictionary& a, const DescriptorDictionary& b) { return a == b; })
      .def("__len__", &DescriptorDictionary::descriptor_count);

  m.def("load_pgm", [](const std::filesystem::path& p) { return from_image(load_pgm(p)); }, py::arg("path"),
        "Binary PGM as a float64 array in [0, 1], shape (height, width).");

  m.def(
      "extract_features",
      [](const py::array& image, double hessian_threshold, int octaves, int layers, int step) {
        const IntegralImage ii(to_image(image));
        return to_records(extract_features(ii, detector(hessian_threshold, octaves, layers, step)));
      },
      py::arg("image"), py::arg("hessian_threshold") = DetectorParams{}.hessian_threshold,
      py::arg("octaves") = DetectorParams{}.octaves, py::arg("layers") = DetectorParams{}.layers_per_octave,
      py::arg("step") = DetectorParams{}.initial_step, "Keypoints with descriptors, as KeypointRecord objects.");

  m.def(
      "index_image",
      [](const py::array& image, std::string image_id, float tolerance, double hessian_threshold) {
        IndexOptions o;
        o.tolerance = tolerance;
        o.detector.hessian_threshold = hessian_threshold;
        return index_image(to_image(image), std::move(image_id), o);
      },
      py::arg("image"), py::arg("image_id") = "", py::arg("tolerance") = kDefaultTolerance,
      py::arg("hessian_threshold") = DetectorParams{}.hessian_threshold);

  m.def(
      "build_dictionary",
      [](const FloatArray& descriptors, float tolerance, std::string image_id) {
        return build_dictionary(records_from_matrix(descriptors), tolerance, std::move(image_id));
      },
      py::arg("descriptors"), py::arg("tolerance") = kDefaultTolerance, py::arg("image_id") = "",
      "Dictionary over an (n, 64) array; row i gets keypoint_id i.");

  m.def("sad", [](const FloatArray& a, const FloatArray& b) { return sad(to_descriptor(a), to_descriptor(b)); },
        py::arg("a"), py::arg("b"));

  m.def(
      "match",
      [](const DescriptorDictionary& q, const DescriptorDictionary& c, double threshold) {
        return match_dict(match_dictionaries(q, c, threshold));
      },
      py::arg("query"), py::arg("candidate"), py::arg("threshold") = kDefaultSadThreshold,
      "Pairs (query_id, candidate_id, sad) with sad < threshold, plus counters.");

  m.def(
      "brute_force_match",
      [](const FloatArray& a, const FloatArray& b, double threshold) {
        const auto ra = records_from_matrix(a);
        const auto rb = records_from_matrix(b);
        return match_dict(brute_force_match(ra, rb, threshold));
      },
      py::arg("a"), py::arg("b"), py::arg("threshold") = kDefaultSadThreshold);

  m.def(
      "combinations",
      [](std::uint64_t q, const std::vector<std::uint64_t>& counts) { return combinations(q, counts); },
      py::arg("query_count"), py::arg("collection_counts"));

  m.def(
      "verify",
      [](const DescriptorDictionary& q, const DescriptorDictionary& c, double threshold, double angle_tol,
         double ratio_low, double ratio_high) {
        const MatchResult r = match_dictionaries(q, c, threshold);
        const VerifiedMatch v = filter_pairs(r.pairs, geometry(angle_tol, ratio_low, ratio_high));
        py::dict out;
        out["kept"] = pair_tuples(v.kept);
        out["rejected"] = pair_tuples(v.rejected);
        out["center_a"] = point(v.center_a);
        out["center_b"] = point(v.center_b);
        return out;
      },
      py::arg("query"), py::arg("candidate"), py::arg("threshold") = kDefaultSadThreshold,
      py::arg("angle_tol") = GeometryParams{}.angle_tolerance, py::arg("ratio_low") = GeometryParams{}.ratio_low,
      py::arg("ratio_high") = GeometryParams{}.ratio_high,
      "Match two dictionaries and apply the geometric consistency filter.");

  m.def(
      "index_directory",
      [](const std::filesystem::path& image_dir, const std::filesystem::path& out_dir, float tolerance) {
        IndexOptions o;
        o.tolerance = tolerance;
        const IndexSummary s = run_index(image_dir, out_dir, o);
        py::list entries;
        for (const IndexEntry& e : s.entries) {
          entries.append(py::make_tuple(e.image_id, e.keypoints, e.nodes, e.file_bytes));
        }
        return py::make_tuple(entries, s.warnings);
      },
      py::arg("image_dir"), py::arg("out_dir"), py::arg("tolerance") = kDefaultTolerance);

  m.def(
      "query",
      [](const py::array& image, const std::string& query_id, const std::filesystem::path& index_dir,
         double threshold, std::size_t min_pairs) {
        QueryOptions o;
        o.match.sad_threshold = threshold;
        o.min_pairs = min_pairs;
        const QueryRun run = run_query(index_image(to_image(image), query_id, o.index), load_index(index_dir), o);
        return query_tsv(run.report);
      },
      py::arg("image"), py::arg("query_id"), py::arg("index_dir"), py::arg("threshold") = kDefaultSadThreshold,
      py::arg("min_pairs") = kDefaultMinPairs, "Ranking as TSV text.");

  m.def(
      "stats",
      [](const std::filesystem::path& index_dir, double threshold) {
        MatchOptions o;
        o.sad_threshold = threshold;
        return stats_tsv(run_stats(load_index(index_dir), o));
      },
      py::arg("index_dir"), py::arg("threshold") = kDefaultSadThreshold, "All-vs-all table as TSV text.");
}
