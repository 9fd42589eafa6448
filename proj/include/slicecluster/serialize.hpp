#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "slicecluster/cluster.hpp"
#include "slicecluster/metrics.hpp"
#include "slicecluster/synthgen.hpp"
#include "slicecluster/voxelcore.hpp"

namespace slicecluster {

using Json = nlohmann::json;

/// Raw little-endian u16 labels plus a JSON sidecar header.
void save_volume(const LabeledVolume& volume, const std::filesystem::path& raw_path,
                 const std::filesystem::path& header_path);
LabeledVolume load_volume(const std::filesystem::path& raw_path, const std::filesystem::path& header_path);

Json volume_header_json(const VolumeDims& dims);
VolumeDims volume_dims_from_header(const Json& header);

Json to_json(const Point3& p);
Point3 point_from_json(const Json& j);

Json to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const Json& j);

Json to_json(const ClusterResult& result);
/// Labels are not serialized; the loaded result carries centroids only.
ClusterResult cluster_result_from_json(const Json& j);

Json to_json(const FusionResult& fusion);
FusionResult fusion_result_from_json(const Json& j);

/// Decimal key for a threshold ("4", "6.5").
std::string threshold_key(double t);
Json to_json(const EvalReport& report);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const Json& j, const std::filesystem::path& path);

}  // namespace slicecluster
