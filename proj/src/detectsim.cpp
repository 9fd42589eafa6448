#include "slicecluster/detectsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>

#include <json.hpp>

#include "slicecluster/rng.hpp"

namespace slicecluster {

bool canonical_less(const Detection2D& a, const Detection2D& b) {
  return std::tie(a.slice_index, a.box.u_min, a.box.v_min, a.box.u_max, a.box.v_max, a.score) <
         std::tie(b.slice_index, b.box.u_min, b.box.v_min, b.box.u_max, b.box.v_max, b.score);
}

DetectionSet::DetectionSet(std::vector<Detection2D> detections) {
  for (auto& d : detections) groups_[static_cast<int>(d.axis)].push_back(d);
  for (auto& g : groups_) std::stable_sort(g.begin(), g.end(), canonical_less);
}

void DetectionSet::add(const Detection2D& d) {
  auto& g = groups_[static_cast<int>(d.axis)];
  g.insert(std::upper_bound(g.begin(), g.end(), d, canonical_less), d);
}

std::size_t DetectionSet::size() const {
  return groups_[0].size() + groups_[1].size() + groups_[2].size();
}

std::vector<Detection2D> DetectionSet::all() const {
  std::vector<Detection2D> out;
  out.reserve(size());
  for (const auto& g : groups_) out.insert(out.end(), g.begin(), g.end());
  return out;
}

void NoiseModel::validate() const {
  const auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(sigma_center)) throw InvalidArgument("noise sigma_center must be finite and >= 0");
  if (!finite_nonneg(sigma_size)) throw InvalidArgument("noise sigma_size must be finite and >= 0");
  if (!(p_miss >= 0.0 && p_miss <= 1.0)) throw InvalidArgument("noise p_miss must be in [0, 1]");
  if (!finite_nonneg(fp_rate)) throw InvalidArgument("noise fp_rate must be finite and >= 0");
  if (!finite_nonneg(fp_size_min) || !(fp_size_max >= fp_size_min) || !std::isfinite(fp_size_max)) {
    throw InvalidArgument("noise fp_size_range must satisfy 0 <= min <= max");
  }
}

std::uint64_t axis_seed_tag(Axis axis) {
  return splitmix64(static_cast<std::uint64_t>(axis_name(axis)[0]));
}

namespace {

BoundingBox2D clamped_box(double cu, double cv, double hu, double hv, double u_hi, double v_hi) {
  return {std::clamp(cu - hu, 0.0, u_hi), std::clamp(cv - hv, 0.0, v_hi), std::clamp(cu + hu, 0.0, u_hi),
          std::clamp(cv + hv, 0.0, v_hi)};
}

void simulate_axis(std::span<const SliceGtBox> gt, const VolumeDims& dims, Axis axis, const NoiseModel& noise,
                   DetectionSet& out) {
  SeededRng rng(noise.seed ^ axis_seed_tag(axis));
  const auto [u_len, v_len] = dims.slice_extent(axis);
  const double u_hi = static_cast<double>(u_len - 1);
  const double v_hi = static_cast<double>(v_len - 1);

  std::vector<const SliceGtBox*> ordered;
  for (const auto& b : gt) {
    if (b.axis == axis) ordered.push_back(&b);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const SliceGtBox* a, const SliceGtBox* b) { return a->slice_index < b->slice_index; });

  auto it = ordered.begin();
  for (std::int64_t p = 0; p < dims.extent(axis); ++p) {
    for (; it != ordered.end() && (*it)->slice_index == p; ++it) {
      const BoundingBox2D& src = (*it)->box;
      if (noise.p_miss > 0.0 && rng.bernoulli(noise.p_miss)) continue;
      if (noise.sigma_center == 0.0 && noise.sigma_size == 0.0) {
        out.add({axis, p, src, 1.0});
        continue;
      }
      double cu = src.center_u();
      double cv = src.center_v();
      double hu = 0.5 * (src.u_max - src.u_min);
      double hv = 0.5 * (src.v_max - src.v_min);
      if (noise.sigma_center > 0.0) {
        cu += rng.normal(0.0, noise.sigma_center);
        cv += rng.normal(0.0, noise.sigma_center);
      }
      if (noise.sigma_size > 0.0) {
        hu = std::max(0.5, hu + rng.normal(0.0, noise.sigma_size));
        hv = std::max(0.5, hv + rng.normal(0.0, noise.sigma_size));
      }
      out.add({axis, p, clamped_box(cu, cv, hu, hv, u_hi, v_hi), 1.0});
    }
    if (noise.fp_rate <= 0.0) continue;
    const std::uint64_t n_fp = rng.poisson(noise.fp_rate);
    for (std::uint64_t i = 0; i < n_fp; ++i) {
      const double cu = rng.uniform(0.0, u_hi);
      const double cv = rng.uniform(0.0, v_hi);
      const double hu = 0.5 * rng.uniform(noise.fp_size_min, noise.fp_size_max);
      const double hv = 0.5 * rng.uniform(noise.fp_size_min, noise.fp_size_max);
      out.add({axis, p, clamped_box(cu, cv, hu, hv, u_hi, v_hi), 1.0});
    }
  }
  if (it != ordered.end()) {
    throw OutOfBounds("ground-truth box on slice " + std::to_string((*it)->slice_index) + " outside axis " +
                      std::string(axis_name(axis)));
  }
}

}  // namespace

DetectionSet simulate_detections(std::span<const SliceGtBox> gt_boxes, const VolumeDims& dims,
                                 std::span<const Axis> axes, const NoiseModel& noise) {
  noise.validate();
  for (const auto& b : gt_boxes) {
    if (std::find(axes.begin(), axes.end(), b.axis) == axes.end()) {
      throw InvalidArgument("ground-truth box on axis " + std::string(axis_name(b.axis)) +
                            " which is not being simulated");
    }
  }
  DetectionSet out;
  for (Axis axis : axes) simulate_axis(gt_boxes, dims, axis, noise, out);
  return out;
}

DetectionSet detections_from_gt(std::span<const SliceGtBox> gt_boxes) {
  std::vector<Detection2D> dets;
  dets.reserve(gt_boxes.size());
  for (const auto& b : gt_boxes) dets.push_back({b.axis, b.slice_index, b.box, 1.0});
  return DetectionSet(std::move(dets));
}

double iou(const BoundingBox2D& a, const BoundingBox2D& b) {
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min) + 1.0;
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min) + 1.0;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (a.u_max - a.u_min + 1.0) * (a.v_max - a.v_min + 1.0);
  const double area_b = (b.u_max - b.u_min + 1.0) * (b.v_max - b.v_min + 1.0);
  return inter / (area_a + area_b - inter);
}

DetectionSet nms(const DetectionSet& detections, double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) throw InvalidArgument("NMS IoU threshold must be in [0, 1]");
  DetectionSet out;
  for (Axis axis : kAllAxes) {
    const auto g = detections.group(axis);
    std::size_t begin = 0;
    while (begin < g.size()) {
      std::size_t end = begin;
      while (end < g.size() && g[end].slice_index == g[begin].slice_index) ++end;

      std::vector<std::size_t> order(end - begin);
      std::iota(order.begin(), order.end(), begin);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return g[a].score > g[b].score; });
      std::vector<bool> suppressed(g.size(), false);
      for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t keep = order[i];
        if (suppressed[keep]) continue;
        out.add(g[keep]);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
          const std::size_t other = order[j];
          if (!suppressed[other] && iou(g[keep].box, g[other].box) > iou_threshold) suppressed[other] = true;
        }
      }
      begin = end;
    }
  }
  return out;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& field, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": field '" + field + "': " + what);
}

double number_field(const nlohmann::json& v, std::size_t line, const std::string& field) {
  if (!v.is_number()) parse_fail(line, field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) parse_fail(line, field, "not finite");
  return d;
}

}  // namespace

DetectionSet load_detections(std::istream& in, const std::optional<VolumeDims>& dims) {
  DetectionSet out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    if (!rec.is_object()) parse_fail(line, "<record>", "expected a JSON object");
    for (const char* key : {"axis", "slice", "box", "score"}) {
      if (!rec.contains(key)) parse_fail(line, key, "missing");
    }
    Detection2D d;
    if (!rec["axis"].is_string()) parse_fail(line, "axis", "expected \"x\", \"y\" or \"z\"");
    const auto axis_text = rec["axis"].get<std::string>();
    if (axis_text != "x" && axis_text != "y" && axis_text != "z") {
      parse_fail(line, "axis", "expected \"x\", \"y\" or \"z\"");
    }
    d.axis = parse_axis(axis_text);
    if (!rec["slice"].is_number_integer()) parse_fail(line, "slice", "expected an integer");
    d.slice_index = rec["slice"].get<std::int64_t>();
    if (d.slice_index < 0) parse_fail(line, "slice", "negative slice index");
    if (dims && d.slice_index >= dims->extent(d.axis)) {
      parse_fail(line, "slice",
                 std::to_string(d.slice_index) + " outside axis " + axis_text + " of length " +
                     std::to_string(dims->extent(d.axis)));
    }
    const auto& box = rec["box"];
    if (!box.is_array() || box.size() != 4) parse_fail(line, "box", "expected [u_min, v_min, u_max, v_max]");
    d.box = {number_field(box[0], line, "box"), number_field(box[1], line, "box"),
             number_field(box[2], line, "box"), number_field(box[3], line, "box")};
    if (d.box.u_min > d.box.u_max) parse_fail(line, "box", "u_min > u_max");
    if (d.box.v_min > d.box.v_max) parse_fail(line, "box", "v_min > v_max");
    d.score = number_field(rec["score"], line, "score");
    if (!(d.score > 0.0 && d.score <= 1.0)) parse_fail(line, "score", "must be in (0, 1]");
    out.add(d);
  }
  return out;
}

void save_detections(const DetectionSet& detections, std::ostream& out) {
  for (const auto& d : detections.all()) {
    out << "{\"axis\":\"" << axis_name(d.axis) << "\",\"slice\":" << d.slice_index << ",\"box\":["
        << format_number(d.box.u_min) << ',' << format_number(d.box.v_min) << ',' << format_number(d.box.u_max)
        << ',' << format_number(d.box.v_max) << "],\"score\":" << format_number(d.score) << "}\n";
  }
}

}  // namespace slicecluster
