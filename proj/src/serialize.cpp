#include "slicecluster/serialize.hpp"

#include <fstream>
#include <iterator>

#include "slicecluster/detectsim.hpp"

namespace slicecluster {

namespace fs = std::filesystem;

namespace {

const Json& require(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(what + ": missing field '" + key + "'");
  return j.at(key);
}

std::array<double, 3> triple(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(what + ": expected an array of 3 numbers");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ParseError(what + ": expected an array of 3 numbers");
    out[i] = j[i].get<double>();
  }
  return out;
}

Json triple_json(const std::array<double, 3>& a) { return Json::array({a[0], a[1], a[2]}); }

Json centroids_json(const std::vector<Point3>& pts) {
  Json arr = Json::array();
  for (const auto& p : pts) arr.push_back(to_json(p));
  return arr;
}

std::vector<Point3> centroids_from(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": 'centroids' must be an array");
  std::vector<Point3> out;
  for (const auto& p : j) out.push_back(point_from_json(p));
  return out;
}

}  // namespace

Json volume_header_json(const VolumeDims& dims) {
  return Json{{"x_len", dims.x_len}, {"y_len", dims.y_len}, {"z_len", dims.z_len}, {"dtype", "u16"},
              {"order", "x-fastest"}};
}

VolumeDims volume_dims_from_header(const Json& header) {
  const std::string what = "volume header";
  if (require(header, "dtype", what) != "u16") throw ParseError(what + ": dtype must be \"u16\"");
  if (require(header, "order", what) != "x-fastest") throw ParseError(what + ": order must be \"x-fastest\"");
  std::array<std::int64_t, 3> len{};
  const char* keys[3] = {"x_len", "y_len", "z_len"};
  for (int i = 0; i < 3; ++i) {
    const Json& v = require(header, keys[i], what);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
      throw ParseError(what + ": '" + keys[i] + "' must be a positive integer");
    }
    len[i] = v.get<std::int64_t>();
  }
  return {len[0], len[1], len[2]};
}

void save_volume(const LabeledVolume& volume, const fs::path& raw_path, const fs::path& header_path) {
  const auto labels = volume.labels();
  std::string bytes(labels.size() * 2, '\0');
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bytes[2 * i] = static_cast<char>(labels[i] & 0xff);
    bytes[2 * i + 1] = static_cast<char>(labels[i] >> 8);
  }
  std::ofstream out(raw_path, std::ios::binary);
  if (!out) throw IoError("cannot open " + raw_path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + raw_path.string());
  write_json_file(volume_header_json(volume.dims()), header_path);
}

LabeledVolume load_volume(const fs::path& raw_path, const fs::path& header_path) {
  const VolumeDims dims = volume_dims_from_header(read_json_file(header_path));
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + raw_path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != dims.voxel_count() * 2) {
    throw ParseError(raw_path.string() + ": expected " + std::to_string(dims.voxel_count() * 2) + " bytes, found " +
                     std::to_string(bytes.size()));
  }
  std::vector<Label> labels(dims.voxel_count());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<Label>(static_cast<unsigned char>(bytes[2 * i]) |
                                   (static_cast<unsigned>(static_cast<unsigned char>(bytes[2 * i + 1])) << 8));
  }
  LabeledVolume volume(dims, std::move(labels));
  volume.check_contiguous();
  return volume;
}

Json to_json(const Point3& p) { return Json::array({p.x, p.y, p.z}); }

Point3 point_from_json(const Json& j) {
  const auto t = triple(j, "point");
  return {t[0], t[1], t[2]};
}

Json to_json(const GroundTruth& truth) {
  Json nuclei = Json::array();
  for (std::size_t i = 0; i < truth.specs.size(); ++i) {
    const auto& s = truth.specs[i];
    nuclei.push_back({{"label", s.label},
                      {"center", to_json(s.center)},
                      {"semi_axes", triple_json(s.semi_axes)},
                      {"rotation", triple_json(s.rotation)},
                      {"centroid", to_json(truth.centroids[i])}});
  }
  return Json{{"count", truth.count()}, {"nuclei", nuclei}};
}

GroundTruth ground_truth_from_json(const Json& j) {
  const std::string what = "ground truth";
  GroundTruth truth;
  const Json& nuclei = require(j, "nuclei", what);
  if (!nuclei.is_array()) throw ParseError(what + ": 'nuclei' must be an array");
  for (const auto& n : nuclei) {
    EllipsoidSpec s;
    const Json& label = require(n, "label", what);
    if (!label.is_number_integer()) throw ParseError(what + ": 'label' must be an integer");
    s.label = label.get<int>();
    s.center = point_from_json(require(n, "center", what));
    s.semi_axes = triple(require(n, "semi_axes", what), what + " semi_axes");
    s.rotation = triple(require(n, "rotation", what), what + " rotation");
    truth.specs.push_back(s);
    truth.centroids.push_back(point_from_json(require(n, "centroid", what)));
  }
  const Json& count = require(j, "count", what);
  if (!count.is_number_integer() || count.get<std::size_t>() != truth.count()) {
    throw ParseError(what + ": 'count' does not match the number of nuclei");
  }
  return truth;
}

Json to_json(const ClusterResult& result) {
  Json j;
  if (result.axis) j["axis"] = std::string(axis_name(*result.axis));
  j["k"] = result.k;
  j["silhouette"] = result.silhouette ? Json(*result.silhouette) : Json(nullptr);
  j["centroids"] = centroids_json(result.centroids);
  return j;
}

ClusterResult cluster_result_from_json(const Json& j) {
  const std::string what = "cluster result";
  ClusterResult r;
  if (j.contains("axis")) {
    if (!j["axis"].is_string()) throw ParseError(what + ": 'axis' must be a string");
    r.axis = parse_axis(j["axis"].get<std::string>());
  }
  const Json& k = require(j, "k", what);
  if (!k.is_number_integer()) throw ParseError(what + ": 'k' must be an integer");
  r.k = k.get<std::size_t>();
  const Json& s = require(j, "silhouette", what);
  if (s.is_number()) r.silhouette = s.get<double>();
  r.centroids = centroids_from(require(j, "centroids", what), what);
  if (r.centroids.size() != r.k) throw ParseError(what + ": 'k' does not match the number of centroids");
  return r;
}

Json to_json(const FusionResult& fusion) {
  Json support = Json::array();
  for (const auto& s : fusion.support) {
    Json axes = Json::array();
    for (Axis a : s) axes.push_back(std::string(axis_name(a)));
    support.push_back(axes);
  }
  return Json{{"k", fusion.count()},
              {"silhouette", fusion.silhouette ? Json(*fusion.silhouette) : Json(nullptr)},
              {"centroids", centroids_json(fusion.centroids)},
              {"support", support}};
}

FusionResult fusion_result_from_json(const Json& j) {
  const std::string what = "fusion result";
  FusionResult f;
  f.centroids = centroids_from(require(j, "centroids", what), what);
  const Json& s = require(j, "silhouette", what);
  if (s.is_number()) f.silhouette = s.get<double>();
  const Json& support = require(j, "support", what);
  if (!support.is_array() || support.size() != f.centroids.size()) {
    throw ParseError(what + ": 'support' must list one axis set per centroid");
  }
  for (const auto& axes : support) {
    std::vector<Axis> set;
    for (const auto& a : axes) set.push_back(parse_axis(a.get<std::string>()));
    f.support.push_back(std::move(set));
  }
  return f;
}

std::string threshold_key(double t) { return format_number(t); }

Json to_json(const EvalReport& report) {
  const auto by_t = [](const std::map<double, double>& m) {
    Json j = Json::object();
    for (const auto& [t, v] : m) j[threshold_key(t)] = v;
    return j;
  };
  Json per_volume = Json::array();
  for (const auto& v : report.per_volume) {
    per_volume.push_back({{"estimated_count", v.estimated_count},
                          {"gt_count", v.gt_count},
                          {"precision", by_t(v.precision)},
                          {"recall", by_t(v.recall)},
                          {"ap", by_t(v.ap)}});
  }
  return Json{{"mape", report.mape}, {"ap", by_t(report.ap_by_t)}, {"map", report.map_score},
              {"per_volume", per_volume}};
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace slicecluster
