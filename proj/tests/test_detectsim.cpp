#include <doctest.h>

#include <sstream>

#include "slicecluster/cluster.hpp"
#include "slicecluster/detectsim.hpp"
#include "slicecluster/rng.hpp"
#include "slicecluster/synthgen.hpp"

using namespace slicecluster;

namespace {

std::vector<SliceGtBox> random_gt(std::size_t n, const VolumeDims& dims, Axis axis, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<SliceGtBox> out;
  const auto [ul, vl] = dims.slice_extent(axis);
  for (std::size_t i = 0; i < n; ++i) {
    const double u0 = std::floor(rng.uniform(0, double(ul - 10)));
    const double v0 = std::floor(rng.uniform(0, double(vl - 10)));
    out.push_back({axis, std::int64_t(rng.below(std::uint64_t(dims.extent(axis)))), int(i + 1),
                   {u0, v0, u0 + std::floor(rng.uniform(0, 9)), v0 + std::floor(rng.uniform(0, 9))}});
  }
  return out;
}

std::string save(const DetectionSet& s) {
  std::ostringstream out;
  save_detections(s, out);
  return out.str();
}

DetectionSet load(const std::string& text, std::optional<VolumeDims> dims = std::nullopt) {
  std::istringstream in(text);
  return load_detections(in, dims);
}

}  // namespace

TEST_CASE("zero noise reproduces ground truth") {
  const VolumeDims dims{64, 64, 64};
  const auto gt = random_gt(200, dims, Axis::Z, 1);
  const std::array<Axis, 1> axes{Axis::Z};
  const DetectionSet out = simulate_detections(gt, dims, axes, NoiseModel{});
  CHECK(out == detections_from_gt(gt));
  for (const auto& d : out.all()) CHECK(d.score == 1.0);

  // Lifting the noiseless detections lands exactly on the box centers.
  const auto lifted = lift(out, Axis::Z);
  const auto ordered = detections_from_gt(gt).group(Axis::Z);
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    CHECK(lifted[i].position.x == ordered[i].box.center_u());
    CHECK(lifted[i].position.y == ordered[i].box.center_v());
    CHECK(lifted[i].position.z == double(ordered[i].slice_index));
  }
}

TEST_CASE("p_miss = 1 without false positives drops everything") {
  const VolumeDims dims{32, 32, 32};
  const std::array<Axis, 3> axes{Axis::X, Axis::Y, Axis::Z};
  std::vector<SliceGtBox> gt;
  for (Axis a : axes) {
    const auto g = random_gt(50, dims, a, 2);
    gt.insert(gt.end(), g.begin(), g.end());
  }
  NoiseModel noise;
  noise.p_miss = 1.0;
  CHECK(simulate_detections(gt, dims, axes, noise).empty());
}

TEST_CASE("miss rate stays within the binomial 3-sigma band") {
  const VolumeDims dims{64, 64, 64};
  const auto gt = random_gt(1000, dims, Axis::Y, 3);
  NoiseModel noise;
  noise.p_miss = 0.1;
  noise.seed = 12345;
  const std::array<Axis, 1> axes{Axis::Y};
  const auto kept = simulate_detections(gt, dims, axes, noise).size();
  const auto dropped = 1000 - kept;
  CHECK(dropped >= 72);
  CHECK(dropped <= 128);
}

TEST_CASE("noisy simulation is deterministic and clamped") {
  const VolumeDims dims{40, 30, 20};
  const std::array<Axis, 3> axes{Axis::X, Axis::Y, Axis::Z};
  std::vector<SliceGtBox> gt;
  for (Axis a : axes) {
    const auto g = random_gt(100, dims, a, 4);
    gt.insert(gt.end(), g.begin(), g.end());
  }
  NoiseModel noise{3.0, 2.0, 0.2, 0.5, 4.0, 30.0, 77};
  const auto a = simulate_detections(gt, dims, axes, noise);
  CHECK(a == simulate_detections(gt, dims, axes, noise));
  for (Axis axis : axes) {
    const auto [ul, vl] = dims.slice_extent(axis);
    for (const auto& d : a.group(axis)) {
      CHECK(d.box.u_min >= 0.0);
      CHECK(d.box.v_min >= 0.0);
      CHECK(d.box.u_max <= double(ul - 1));
      CHECK(d.box.v_max <= double(vl - 1));
      CHECK_NOTHROW(d.box.validate());
    }
  }
  noise.seed = 78;
  CHECK_FALSE(a == simulate_detections(gt, dims, axes, noise));

  const std::array<Axis, 1> only_z{Axis::Z};
  CHECK_THROWS_AS(simulate_detections(gt, dims, only_z, noise), InvalidArgument);
  noise.p_miss = 1.5;
  CHECK_THROWS_AS(noise.validate(), InvalidArgument);
}

TEST_CASE("false positives follow the Poisson rate per slice") {
  const VolumeDims dims{64, 64, 500};
  NoiseModel noise;
  noise.fp_rate = 0.4;
  noise.seed = 9;
  const std::array<Axis, 1> axes{Axis::Z};
  const auto n = simulate_detections(std::vector<SliceGtBox>{}, dims, axes, noise).size();
  // Mean 200, sd ~14.
  CHECK(n > 150);
  CHECK(n < 250);
}

TEST_CASE("iou under the inclusive convention") {
  const BoundingBox2D a{0, 0, 9, 9};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {20, 20, 25, 25}) == 0.0);
  CHECK(iou(a, {10, 0, 19, 9}) == 0.0);
  CHECK(iou(a, {5, 0, 14, 9}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(iou({3, 3, 3, 3}, {3, 3, 3, 3}) == 1.0);
}

TEST_CASE("nms") {
  const auto det = [](double u0, double u1, double score = 1.0, std::int64_t slice = 0) {
    return Detection2D{Axis::Z, slice, {u0, 0, u1, 9}, score};
  };
  CHECK(nms(DetectionSet({det(0, 9), det(0, 9)}), 0.5).size() == 1);
  CHECK(nms(DetectionSet({det(0, 9), det(20, 29), det(40, 49)}), 0.5).size() == 3);

  // Chain A-B-C: IoU(A,B) = IoU(B,C) = 1/3, A and C disjoint. A is kept
  // first, suppresses B, and C survives because B was never kept.
  const DetectionSet chain({det(0, 9), det(5, 14), det(10, 19)});
  const DetectionSet kept = nms(chain, 0.3);
  REQUIRE(kept.size() == 2);
  CHECK(kept.group(Axis::Z)[0].box.u_min == 0);
  CHECK(kept.group(Axis::Z)[1].box.u_min == 10);

  // A higher score wins regardless of order.
  const DetectionSet scored({det(0, 9, 0.4), det(1, 10, 0.9)});
  REQUIRE(nms(scored, 0.5).size() == 1);
  CHECK(nms(scored, 0.5).group(Axis::Z)[0].score == 0.9);

  // Suppression never crosses slices.
  CHECK(nms(DetectionSet({det(0, 9, 1, 0), det(0, 9, 1, 1)}), 0.5).size() == 2);
  CHECK_THROWS_AS(nms(chain, 1.5), InvalidArgument);
}

TEST_CASE("nms is idempotent and returns a subset") {
  SeededRng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Detection2D> dets;
    for (int i = 0; i < 40; ++i) {
      const double u = std::floor(rng.uniform(0, 40)), v = std::floor(rng.uniform(0, 40));
      dets.push_back({kAllAxes[rng.below(3)], std::int64_t(rng.below(3)),
                      {u, v, u + std::floor(rng.uniform(0, 12)), v + std::floor(rng.uniform(0, 12))},
                      std::ceil(rng.uniform(0.01, 1.0) * 4) / 4});
    }
    const DetectionSet s(dets);
    const double t = rng.uniform(0, 1);
    const DetectionSet once = nms(s, t);
    CHECK(nms(once, t) == once);
    CHECK(once.size() <= s.size());
    const auto all = s.all();
    for (const auto& d : once.all()) CHECK(std::find(all.begin(), all.end(), d) != all.end());
  }
}

TEST_CASE("detection set keeps canonical order") {
  DetectionSet s;
  s.add({Axis::Z, 5, {3, 1, 4, 2}, 1});
  s.add({Axis::Z, 2, {9, 9, 9, 9}, 1});
  s.add({Axis::Z, 5, {1, 7, 4, 8}, 1});
  s.add({Axis::X, 0, {0, 0, 0, 0}, 1});
  const auto z = s.group(Axis::Z);
  REQUIRE(z.size() == 3);
  CHECK(z[0].slice_index == 2);
  CHECK(z[1].box.u_min == 1);
  CHECK(z[2].box.u_min == 3);
  CHECK(s.group(Axis::X).size() == 1);
  CHECK(s.all().front().axis == Axis::X);
}

TEST_CASE("detection file format") {
  CHECK(load("").empty());
  CHECK(load("\n\n").empty());

  const auto one = load(R"({"axis":"z","slice":15,"box":[10,12,20,22],"score":1.0})");
  REQUIRE(one.size() == 1);
  const auto& d = one.group(Axis::Z)[0];
  CHECK(d.slice_index == 15);
  CHECK(d.box == BoundingBox2D{10, 12, 20, 22});
  CHECK(d.score == 1.0);
  CHECK(save(one) == "{\"axis\":\"z\",\"slice\":15,\"box\":[10,12,20,22],\"score\":1}\n");

  const auto err = [](const std::string& text) {
    try {
      load(text, VolumeDims{16, 16, 16});
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(err(R"({"axis":"z","slice":1,"box":[5,0,4,2],"score":1})").find("'box': u_min > u_max") !=
        std::string::npos);
  CHECK(err("{}\n{\"axis\":\"q\",\"slice\":1,\"box\":[0,0,1,1],\"score\":1}").find("line 1") != std::string::npos);
  CHECK(err("\n{\"axis\":\"q\",\"slice\":1,\"box\":[0,0,1,1],\"score\":1}").find("line 2: field 'axis'") !=
        std::string::npos);
  CHECK(err(R"({"axis":"x","slice":16,"box":[0,0,1,1],"score":1})").find("'slice'") != std::string::npos);
  CHECK(err(R"({"axis":"x","slice":1.5,"box":[0,0,1,1],"score":1})").find("'slice'") != std::string::npos);
  CHECK(err(R"({"axis":"x","slice":1,"box":[0,0,1],"score":1})").find("'box'") != std::string::npos);
  CHECK(err(R"({"axis":"x","slice":1,"box":[0,0,1,1],"score":0})").find("'score'") != std::string::npos);
  CHECK(err(R"({"axis":"x","slice":1,"box":[0,0,1,1]})").find("'score': missing") != std::string::npos);
  CHECK(err("not json").find("line 1") != std::string::npos);
}

TEST_CASE("save/load round trip is byte-stable") {
  const VolumeDims dims{50, 50, 50};
  const std::array<Axis, 3> axes{Axis::X, Axis::Y, Axis::Z};
  std::vector<SliceGtBox> gt;
  for (Axis a : axes) {
    const auto g = random_gt(60, dims, a, 8);
    gt.insert(gt.end(), g.begin(), g.end());
  }
  const auto set = simulate_detections(gt, dims, axes, NoiseModel{1.3, 0.7, 0.1, 0.3, 5, 20, 4});
  const std::string first = save(set);
  const DetectionSet loaded = load(first, dims);
  CHECK(loaded == set);
  CHECK(save(loaded) == first);
}

TEST_CASE("format_number is shortest round-trip") {
  CHECK(format_number(10.0) == "10");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(12.5) == "12.5");
  const double tricky = 0.1 + 0.2;
  CHECK(std::stod(format_number(tricky)) == tricky);
}
