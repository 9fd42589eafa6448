#include "slicecluster/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <future>
#include <set>

#include "slicecluster/rng.hpp"
#include "slicecluster/slicing.hpp"

namespace slicecluster {

namespace fs = std::filesystem;

namespace artifacts {
std::string gt_boxes(Axis axis) { return "gt_boxes_" + std::string(axis_name(axis)) + ".jsonl"; }
std::string detections(Axis axis) { return "detections_" + std::string(axis_name(axis)) + ".jsonl"; }
std::string cluster(Axis axis) { return "cluster_" + std::string(axis_name(axis)) + ".json"; }
}  // namespace artifacts

namespace {

void check_keys(const Json& section, const std::string& name, std::initializer_list<const char*> allowed) {
  if (!section.is_object()) throw ParseError("config: '" + name + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ParseError("config: unknown key '" + key + "' in " + name);
  }
}

template <typename T>
void read_if(const Json& section, const char* key, T& target, const std::string& name) {
  if (!section.contains(key)) return;
  try {
    target = section.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ParseError("config: '" + name + "." + key + "' has the wrong type");
  }
}

std::array<double, 3> read_triple(const Json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 3) throw ParseError("config: '" + name + "' must be an array of 3 numbers");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ParseError("config: '" + name + "' must be an array of 3 numbers");
    out[i] = j[i].get<double>();
  }
  return out;
}

std::pair<double, double> read_pair(const Json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError("config: '" + name + "' must be [min, max]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string variant_name(SilhouetteVariant v) {
  return v == SilhouetteVariant::NearestCluster ? "nearest" : "mean";
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("missing input file " + path.string());
}

DetectionSet read_detections(const fs::path& path, const std::optional<VolumeDims>& dims) {
  require_file(path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return load_detections(in, dims);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_detections(const DetectionSet& set, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_detections(set, out);
  if (!out) throw IoError("failed writing " + path.string());
}

DetectionSet only_axis(const DetectionSet& set, Axis axis) {
  const auto g = set.group(axis);
  return DetectionSet(std::vector<Detection2D>(g.begin(), g.end()));
}

}  // namespace

void PipelineConfig::validate() const {
  synth.validate();
  noise.validate();
  spacing.validate();
  if (axes.empty()) throw InvalidArgument("config: at least one axis is required");
  if (std::set<Axis>(axes.begin(), axes.end()).size() != axes.size()) {
    throw InvalidArgument("config: axes must be distinct");
  }
  const KRange r = resolved_k_range();
  if (r.k_min < 2 || r.k_min > r.k_max) throw InvalidArgument("config: k_range must satisfy 2 <= k_min <= k_max");
  if (t_dist.empty()) throw InvalidArgument("config: t_dist must not be empty");
  for (double t : t_dist) {
    if (!(t > 0.0)) throw InvalidArgument("config: t_dist values must be > 0");
  }
}

void PipelineConfig::resolve_seeds() {
  synth.seed = derive_seed(seed, "synth");
  noise.seed = derive_seed(seed, "detect");
}

KRange PipelineConfig::resolved_k_range() const {
  if (k_range) return *k_range;
  return {2, std::max<std::size_t>(2, 2 * static_cast<std::size_t>(std::max(synth.n_nuclei, 0)))};
}

PipelineConfig config_from_json(const Json& j) {
  PipelineConfig c;
  check_keys(j, "config", {"seed", "out_dir", "synth", "noise", "axes", "cluster", "fuse", "eval"});
  read_if(j, "seed", c.seed, "config");
  if (j.contains("out_dir")) {
    std::string out;
    read_if(j, "out_dir", out, "config");
    c.out_dir = out;
  }
  if (j.contains("synth")) {
    const Json& s = j["synth"];
    check_keys(s, "synth",
               {"dims", "n_nuclei", "semi_axis_range", "t_ov", "max_attempts_per_nucleus", "center_margin"});
    if (s.contains("dims")) {
      const auto d = read_triple(s["dims"], "synth.dims");
      for (double v : d) {
        if (v != std::floor(v)) throw ParseError("config: 'synth.dims' must hold integers");
      }
      c.synth.dims = VolumeDims(static_cast<std::int64_t>(d[0]), static_cast<std::int64_t>(d[1]),
                                static_cast<std::int64_t>(d[2]));
    }
    read_if(s, "n_nuclei", c.synth.n_nuclei, "synth");
    if (s.contains("semi_axis_range")) {
      std::tie(c.synth.a_min, c.synth.a_max) = read_pair(s["semi_axis_range"], "synth.semi_axis_range");
    }
    read_if(s, "t_ov", c.synth.t_ov, "synth");
    read_if(s, "max_attempts_per_nucleus", c.synth.max_attempts_per_nucleus, "synth");
    read_if(s, "center_margin", c.synth.center_margin, "synth");
  }
  if (j.contains("noise")) {
    const Json& n = j["noise"];
    check_keys(n, "noise", {"sigma_center", "sigma_size", "p_miss", "fp_rate", "fp_size_range"});
    read_if(n, "sigma_center", c.noise.sigma_center, "noise");
    read_if(n, "sigma_size", c.noise.sigma_size, "noise");
    read_if(n, "p_miss", c.noise.p_miss, "noise");
    read_if(n, "fp_rate", c.noise.fp_rate, "noise");
    if (n.contains("fp_size_range")) {
      std::tie(c.noise.fp_size_min, c.noise.fp_size_max) = read_pair(n["fp_size_range"], "noise.fp_size_range");
    }
  }
  if (j.contains("axes")) {
    if (!j["axes"].is_array()) throw ParseError("config: 'axes' must be an array");
    c.axes.clear();
    for (const auto& a : j["axes"]) {
      if (!a.is_string()) throw ParseError("config: 'axes' entries must be strings");
      c.axes.push_back(parse_axis(a.get<std::string>()));
    }
  }
  if (j.contains("cluster")) {
    const Json& s = j["cluster"];
    check_keys(s, "cluster", {"spacing", "k_range", "silhouette"});
    if (s.contains("spacing")) {
      const auto sp = read_triple(s["spacing"], "cluster.spacing");
      c.spacing = {sp[0], sp[1], sp[2]};
    }
    if (s.contains("k_range")) {
      const Json& k = s["k_range"];
      if (k.is_string() && k.get<std::string>() == "auto") {
        c.k_range.reset();
      } else if (k.is_array() && k.size() == 2 && k[0].is_number_unsigned() && k[1].is_number_unsigned()) {
        c.k_range = KRange{k[0].get<std::size_t>(), k[1].get<std::size_t>()};
      } else {
        throw ParseError("config: 'cluster.k_range' must be \"auto\" or [k_min, k_max]");
      }
    }
    if (s.contains("silhouette")) {
      const std::string v = s["silhouette"].is_string() ? s["silhouette"].get<std::string>() : "";
      if (v == "nearest") {
        c.silhouette = SilhouetteVariant::NearestCluster;
      } else if (v == "mean") {
        c.silhouette = SilhouetteVariant::MeanOfClusters;
      } else {
        throw ParseError("config: 'cluster.silhouette' must be \"nearest\" or \"mean\"");
      }
    }
  }
  if (j.contains("fuse")) {
    check_keys(j["fuse"], "fuse", {"margin"});
    read_if(j["fuse"], "margin", c.fuse_margin, "fuse");
  }
  if (j.contains("eval")) {
    check_keys(j["eval"], "eval", {"t_dist"});
    read_if(j["eval"], "t_dist", c.t_dist, "eval");
  }
  return c;
}

Json to_json(const PipelineConfig& c) {
  Json axes = Json::array();
  for (Axis a : c.axes) axes.push_back(std::string(axis_name(a)));
  Json k_range = c.k_range ? Json::array({c.k_range->k_min, c.k_range->k_max}) : Json("auto");
  return Json{
      {"seed", c.seed},
      {"out_dir", c.out_dir.generic_string()},
      {"synth",
       {{"dims", Json::array({c.synth.dims.x_len, c.synth.dims.y_len, c.synth.dims.z_len})},
        {"n_nuclei", c.synth.n_nuclei},
        {"semi_axis_range", Json::array({c.synth.a_min, c.synth.a_max})},
        {"t_ov", c.synth.t_ov},
        {"max_attempts_per_nucleus", c.synth.max_attempts_per_nucleus},
        {"center_margin", c.synth.center_margin}}},
      {"noise",
       {{"sigma_center", c.noise.sigma_center},
        {"sigma_size", c.noise.sigma_size},
        {"p_miss", c.noise.p_miss},
        {"fp_rate", c.noise.fp_rate},
        {"fp_size_range", Json::array({c.noise.fp_size_min, c.noise.fp_size_max})}}},
      {"axes", axes},
      {"cluster",
       {{"spacing", Json::array({c.spacing.x, c.spacing.y, c.spacing.z})},
        {"k_range", k_range},
        {"silhouette", variant_name(c.silhouette)}}},
      {"fuse", {{"margin", c.fuse_margin}}},
      {"eval", {{"t_dist", c.t_dist}}},
  };
}

std::vector<std::string> run_synth(const PipelineConfig& config) {
  ensure_writable_dir(config.out_dir);
  PipelineConfig c = config;
  c.resolve_seeds();
  auto [volume, truth] = place_nuclei(c.synth);
  save_volume(volume, c.out_dir / artifacts::kVolumeRaw, c.out_dir / artifacts::kVolumeHeader);
  write_json_file(to_json(truth), c.out_dir / artifacts::kGroundTruth);
  return {artifacts::kVolumeRaw, artifacts::kVolumeHeader, artifacts::kGroundTruth};
}

std::vector<std::string> run_detect(const PipelineConfig& config) {
  ensure_writable_dir(config.out_dir);
  PipelineConfig c = config;
  c.resolve_seeds();
  require_file(c.out_dir / artifacts::kVolumeRaw);
  require_file(c.out_dir / artifacts::kVolumeHeader);
  const LabeledVolume volume = load_volume(c.out_dir / artifacts::kVolumeRaw, c.out_dir / artifacts::kVolumeHeader);

  std::vector<SliceGtBox> all_boxes;
  std::vector<std::string> written;
  for (Axis axis : c.axes) {
    const auto boxes = gt_boxes_for_axis(volume, axis);
    write_detections(detections_from_gt(boxes), c.out_dir / artifacts::gt_boxes(axis));
    written.push_back(artifacts::gt_boxes(axis));
    all_boxes.insert(all_boxes.end(), boxes.begin(), boxes.end());
  }
  const DetectionSet detections = simulate_detections(all_boxes, volume.dims(), c.axes, c.noise);
  for (Axis axis : c.axes) {
    write_detections(only_axis(detections, axis), c.out_dir / artifacts::detections(axis));
    written.push_back(artifacts::detections(axis));
  }
  return written;
}

std::vector<std::string> run_cluster(const PipelineConfig& config, const std::vector<fs::path>& inputs) {
  ensure_writable_dir(config.out_dir);
  std::optional<VolumeDims> dims;
  const fs::path header = config.out_dir / artifacts::kVolumeHeader;
  if (fs::is_regular_file(header)) dims = volume_dims_from_header(read_json_file(header));

  DetectionSet detections;
  if (inputs.empty()) {
    for (Axis axis : config.axes) {
      for (const auto& d : read_detections(config.out_dir / artifacts::detections(axis), dims).all()) {
        detections.add(d);
      }
    }
  } else {
    for (const auto& path : inputs) {
      for (const auto& d : read_detections(path, dims).all()) detections.add(d);
    }
  }

  const KRange range = config.resolved_k_range();
  std::vector<std::future<ClusterResult>> jobs;
  for (Axis axis : config.axes) {
    jobs.push_back(std::async(std::launch::async, [&, axis] {
      return cluster_axis(detections, axis, config.spacing, range, config.silhouette);
    }));
  }
  std::vector<ClusterResult> results;
  for (auto& job : jobs) results.push_back(job.get());

  std::vector<std::string> written;
  for (const auto& r : results) {
    write_json_file(to_json(r), config.out_dir / artifacts::cluster(*r.axis));
    written.push_back(artifacts::cluster(*r.axis));
  }
  return written;
}

std::vector<std::string> run_fuse(const PipelineConfig& config, const std::vector<fs::path>& inputs) {
  ensure_writable_dir(config.out_dir);
  std::vector<fs::path> paths = inputs;
  if (paths.empty()) {
    for (Axis axis : config.axes) paths.push_back(config.out_dir / artifacts::cluster(axis));
  }
  std::vector<ClusterResult> results;
  for (const auto& p : paths) {
    require_file(p);
    try {
      results.push_back(cluster_result_from_json(read_json_file(p)));
    } catch (const ParseError& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  }
  const FusionResult fusion = fuse_axes(results, config.fuse_margin, config.spacing, config.silhouette);
  write_json_file(to_json(fusion), config.out_dir / artifacts::kFusion);
  return {artifacts::kFusion};
}

std::vector<std::string> run_eval(const PipelineConfig& config, const std::optional<fs::path>& fusion,
                                  const std::optional<fs::path>& ground_truth) {
  ensure_writable_dir(config.out_dir);
  const fs::path fusion_path = fusion.value_or(config.out_dir / artifacts::kFusion);
  const fs::path gt_path = ground_truth.value_or(config.out_dir / artifacts::kGroundTruth);
  require_file(fusion_path);
  require_file(gt_path);
  VolumeCentroids volume;
  volume.estimated = fusion_result_from_json(read_json_file(fusion_path)).centroids;
  volume.gt = ground_truth_from_json(read_json_file(gt_path)).centroids;
  const EvalReport report = evaluate(std::span<const VolumeCentroids>(&volume, 1), config.t_dist, config.spacing);
  write_json_file(to_json(report), config.out_dir / artifacts::kEval);
  return {artifacts::kEval};
}

Json run_pipeline(const PipelineConfig& config) {
  try {
    config.validate();
  } catch (const Error& e) {
    throw StageError("config", e.what());
  }
  try {
    ensure_writable_dir(config.out_dir);
  } catch (const Error& e) {
    throw StageError("synth", e.what());
  }

  Json outputs = Json::object();
  Json timings = Json::object();
  const auto stage = [&](const char* name, const std::function<std::vector<std::string>()>& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
      outputs[name] = body();
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
    timings[name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  stage("synth", [&] { return run_synth(config); });
  stage("detect", [&] { return run_detect(config); });
  stage("cluster", [&] { return run_cluster(config); });
  stage("fuse", [&] { return run_fuse(config); });
  stage("eval", [&] { return run_eval(config); });

  PipelineConfig resolved = config;
  resolved.resolve_seeds();
  const KRange range = config.resolved_k_range();
  Json manifest{{"tool", "slicecluster"},
                {"version", kToolVersion},
                {"config", to_json(config)},
                {"derived_seeds", {{"synth", resolved.synth.seed}, {"detect", resolved.noise.seed}}},
                {"k_range", Json::array({range.k_min, range.k_max})},
                {"outputs", outputs},
                {"timings_ms", timings}};
  write_json_file(manifest, config.out_dir / artifacts::kManifest);
  return manifest;
}

}  // namespace slicecluster
