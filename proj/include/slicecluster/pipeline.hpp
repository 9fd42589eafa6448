#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slicecluster/cluster.hpp"
#include "slicecluster/detectsim.hpp"
#include "slicecluster/serialize.hpp"
#include "slicecluster/synthgen.hpp"

namespace slicecluster {

inline constexpr const char* kToolVersion = "0.1.0";

/// A failure inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  /// synth.seed and noise.seed are overwritten from `seed` by resolve_seeds().
  SynthConfig synth{{128, 128, 128}, 40, 10.0, 14.0, 10, 1000, 0.0, 0};
  NoiseModel noise;
  std::vector<Axis> axes{Axis::X, Axis::Y, Axis::Z};
  Spacing spacing;
  /// nullopt means auto: [2, 2 * n_nuclei].
  std::optional<KRange> k_range;
  SilhouetteVariant silhouette = SilhouetteVariant::NearestCluster;
  std::size_t fuse_margin = 5;
  std::vector<double> t_dist{6, 7, 8, 9, 10, 11, 12};
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;

  void validate() const;
  void resolve_seeds();
  KRange resolved_k_range() const;
};

PipelineConfig config_from_json(const Json& j);
Json to_json(const PipelineConfig& config);

/// Canonical artifact names inside the output directory.
namespace artifacts {
inline constexpr const char* kVolumeRaw = "volume.raw";
inline constexpr const char* kVolumeHeader = "volume.json";
inline constexpr const char* kGroundTruth = "ground_truth.json";
inline constexpr const char* kFusion = "fusion.json";
inline constexpr const char* kEval = "eval.json";
inline constexpr const char* kManifest = "manifest.json";
std::string gt_boxes(Axis axis);
std::string detections(Axis axis);
std::string cluster(Axis axis);
}  // namespace artifacts

/// Each stage writes into config.out_dir and returns the file names it wrote,
/// relative to that directory.
std::vector<std::string> run_synth(const PipelineConfig& config);
std::vector<std::string> run_detect(const PipelineConfig& config);
/// Reads detections_<axis>.jsonl unless explicit input files are given.
std::vector<std::string> run_cluster(const PipelineConfig& config,
                                     const std::vector<std::filesystem::path>& inputs = {});
/// Reads cluster_<axis>.json unless explicit input files are given.
std::vector<std::string> run_fuse(const PipelineConfig& config,
                                  const std::vector<std::filesystem::path>& inputs = {});
std::vector<std::string> run_eval(const PipelineConfig& config, const std::optional<std::filesystem::path>& fusion = {},
                                  const std::optional<std::filesystem::path>& ground_truth = {});

/// All stages in order plus manifest.json. Stage failures surface as
/// StageError.
Json run_pipeline(const PipelineConfig& config);

}  // namespace slicecluster
