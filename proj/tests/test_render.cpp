// Ray generation, stratified sampling, front-to-back compositing, and the
// three-term batch loss, checked against hand arithmetic and an independent
// product-form oracle.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "noma/errors.hpp"
#include "noma/render.hpp"
#include "oracle.hpp"
#include "shadow.hpp"
#include "testutil.hpp"

using noma::Box3;
using noma::Camera;
using noma::ColorImage;
using noma::DepthImage;
using noma::FieldOutput;
using noma::MaskImage;
using noma::ObjectRay;
using noma::Pose;
using noma::RayKind;
using noma::RaySampleSet;
using noma::Vec3;

namespace {

struct Scene {
  Camera cam;
  ColorImage rgb;
  DepthImage depth;
  MaskImage mask;
};

Scene single_pixel_scene() {
  Scene s;
  s.cam.fx = s.cam.fy = 10.f;
  s.cam.cx = s.cam.cy = 4.f;
  s.cam.width = s.cam.height = 9;
  s.rgb = ColorImage(9, 9, {0.f, 0.f, 0.f});
  s.depth = DepthImage(9, 9, 0.f);
  s.mask = MaskImage(9, 9, 0);
  s.mask.at(4, 4) = 1;
  s.depth.at(4, 4) = 1.5f;
  s.rgb.at(4, 4) = {0.2f, 0.4f, 0.6f};
  return s;
}

// Hand-constructed sample set; batch_loss consumes depths/deltas/escaped only.
RaySampleSet manual_samples(std::vector<float> depths, std::vector<float> deltas) {
  RaySampleSet set;
  set.depths = std::move(depths);
  set.deltas = std::move(deltas);
  set.positions.resize(set.depths.size());
  return set;
}

}  // namespace

TEST_CASE("generate_rays: principal pixel gives the (0,0,1) ray with image targets") {
  const Scene s = single_pixel_scene();
  std::mt19937 rng(1);
  const auto rays =
      noma::generate_rays(s.cam, s.rgb, s.depth, s.mask, 1, Pose{}, {1.f, 1.f, 1.f}, 5, 0.f, rng);
  REQUIRE(rays.size() == 5);
  for (const ObjectRay& r : rays) {
    CHECK(r.kind == RayKind::kObject);
    CHECK(r.origin.x == 0.f);
    CHECK(r.origin.y == 0.f);
    CHECK(r.origin.z == 0.f);
    CHECK(r.direction.x == doctest::Approx(0.f));
    CHECK(r.direction.y == doctest::Approx(0.f));
    CHECK(r.direction.z == doctest::Approx(1.f));
    CHECK(r.target_color.x == 0.2f);
    CHECK(r.target_color.y == 0.4f);
    CHECK(r.target_color.z == 0.6f);
    REQUIRE(r.target_depth.has_value());
    CHECK(*r.target_depth == 1.5f);
  }
}

TEST_CASE("generate_rays: sentinel depth 0 leaves target_depth absent") {
  Scene s = single_pixel_scene();
  s.depth.at(4, 4) = 0.f;
  std::mt19937 rng(1);
  const auto rays =
      noma::generate_rays(s.cam, s.rgb, s.depth, s.mask, 1, Pose{}, {1.f, 1.f, 1.f}, 3, 0.f, rng);
  for (const ObjectRay& r : rays) CHECK_FALSE(r.target_depth.has_value());
}

TEST_CASE("generate_rays: object pose maps the ray into the object frame") {
  Scene s = single_pixel_scene();
  Pose obj;
  // Rotation by +90 degrees about x (y -> z, z -> -y) plus a translation.
  obj.R(0, 0) = 1.f; obj.R(0, 1) = 0.f; obj.R(0, 2) = 0.f;
  obj.R(1, 0) = 0.f; obj.R(1, 1) = 0.f; obj.R(1, 2) = -1.f;
  obj.R(2, 0) = 0.f; obj.R(2, 1) = 1.f; obj.R(2, 2) = 0.f;
  obj.t = {1.f, 2.f, 3.f};
  std::mt19937 rng(1);
  const auto rays =
      noma::generate_rays(s.cam, s.rgb, s.depth, s.mask, 1, obj, {1.f, 1.f, 1.f}, 1, 0.f, rng);
  REQUIRE(rays.size() == 1);
  // origin = R^T (0 - t) = (-1, -3, 2); direction = R^T (0,0,1) = (0, 1, 0).
  CHECK(rays[0].origin.x == doctest::Approx(-1.f));
  CHECK(rays[0].origin.y == doctest::Approx(-3.f));
  CHECK(rays[0].origin.z == doctest::Approx(2.f));
  CHECK(rays[0].direction.x == doctest::Approx(0.f));
  CHECK(rays[0].direction.y == doctest::Approx(1.f));
  CHECK(rays[0].direction.z == doctest::Approx(0.f));
}

TEST_CASE("generate_rays: full-frame mask yields object rays only, even with a bg fraction") {
  Scene s = single_pixel_scene();
  for (auto& m : s.mask.data) m = 1;
  std::mt19937 rng(2);
  const auto rays = noma::generate_rays(s.cam, s.rgb, s.depth, s.mask, 1, Pose{}, {1.f, 1.f, 1.f},
                                        40, 0.5f, rng);
  REQUIRE(rays.size() == 40);
  for (const ObjectRay& r : rays) CHECK(r.kind == RayKind::kObject);
}

TEST_CASE("generate_rays: deterministic for a fixed seed and splits counts by bg_fraction") {
  Scene s;
  s.cam.fx = s.cam.fy = 20.f;
  s.cam.cx = s.cam.cy = 15.5f;
  s.cam.width = s.cam.height = 32;
  s.rgb = ColorImage(32, 32, {0.1f, 0.1f, 0.1f});
  s.depth = DepthImage(32, 32, 2.f);
  s.mask = MaskImage(32, 32, 0);
  for (int y = 8; y < 12; ++y)
    for (int x = 8; x < 12; ++x) s.mask.at(x, y) = 7;

  auto draw = [&] {
    std::mt19937 rng(99);
    return noma::generate_rays(s.cam, s.rgb, s.depth, s.mask, 7, Pose{}, {1.f, 1.f, 1.f}, 100,
                               0.5f, rng, 2);
  };
  const auto a = draw();
  const auto b = draw();
  REQUIRE(a.size() == 100);
  int n_obj = 0, n_bg = 0;
  for (const ObjectRay& r : a) (r.kind == RayKind::kObject ? n_obj : n_bg) += 1;
  CHECK(n_obj == 50);
  CHECK(n_bg == 50);
  // Object rays precede background rays.
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK_FALSE((a[i - 1].kind == RayKind::kBackground && a[i].kind == RayKind::kObject));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].kind == b[i].kind);
    CHECK(a[i].origin.x == b[i].origin.x);
    CHECK(a[i].direction.x == b[i].direction.x);
    CHECK(a[i].direction.y == b[i].direction.y);
    CHECK(a[i].direction.z == b[i].direction.z);
  }
}

TEST_CASE("generate_rays: contract errors") {
  Scene s = single_pixel_scene();
  std::mt19937 rng(1);
  MaskImage wrong(4, 4, 1);
  CHECK_THROWS_AS(noma::generate_rays(s.cam, s.rgb, s.depth, wrong, 1, Pose{}, {1.f, 1.f, 1.f}, 5,
                                      0.f, rng),
                  noma::DataError);
  CHECK_THROWS_AS(noma::generate_rays(s.cam, s.rgb, s.depth, s.mask, 2, Pose{}, {1.f, 1.f, 1.f},
                                      5, 0.f, rng),
                  noma::DataError);  // instance 2 absent
  CHECK_THROWS_AS(noma::generate_rays(s.cam, s.rgb, s.depth, s.mask, 1, Pose{}, {1.f, 1.f, 1.f},
                                      0, 0.f, rng),
                  noma::UsageError);
}

TEST_CASE("dilation_band: equals a brute-force Chebyshev distance oracle") {
  MaskImage mask(32, 32, 0);
  for (int y = 8; y < 12; ++y)
    for (int x = 8; x < 12; ++x) mask.at(x, y) = 7;
  // A second instance nearby: its pixels may fall inside instance 7's band.
  for (int y = 13; y < 15; ++y)
    for (int x = 9; x < 11; ++x) mask.at(x, y) = 3;

  const int band_px = 3;
  const MaskImage band = noma::dilation_band(mask, 7, band_px);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      int best = 1 << 20;
      for (int oy = 8; oy < 12; ++oy)
        for (int ox = 8; ox < 12; ++ox)
          best = std::min(best, std::max(std::abs(x - ox), std::abs(y - oy)));
      const bool expect = best >= 1 && best <= band_px;
      CHECK(static_cast<bool>(band.at(x, y)) == expect);
    }
}

TEST_CASE("uniform_samples: axis ray entering at t=1 and exiting at t=2 with n=4") {
  ObjectRay ray;
  ray.origin = {0.5f, 0.5f, -1.f};
  ray.direction = {0.f, 0.f, 1.f};
  const Box3 box{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  const RaySampleSet set = noma::uniform_samples(ray, box, 4);
  REQUIRE_FALSE(set.escaped);
  REQUIRE(set.size() == 4);
  const float expect[] = {1.125f, 1.375f, 1.625f, 1.875f};
  for (int i = 0; i < 4; ++i) {
    CHECK(set.depths[i] == doctest::Approx(expect[i]).epsilon(1e-6));
    CHECK(set.deltas[i] == doctest::Approx(0.25f).epsilon(1e-6));
    // positions are box-normalized: x = y = 0.5, z = depth - 1.
    CHECK(set.positions[i].x == doctest::Approx(0.5f));
    CHECK(set.positions[i].y == doctest::Approx(0.5f));
    CHECK(set.positions[i].z == doctest::Approx(expect[i] - 1.f).epsilon(1e-5));
  }
  CHECK(set.t_entry == doctest::Approx(1.f));
  CHECK(set.t_exit == doctest::Approx(2.f));
}

TEST_CASE("uniform_samples: diagonal ray through the cube center, n=32, equal deltas") {
  ObjectRay ray;
  ray.origin = {-0.5f, -0.5f, -0.5f};
  ray.direction = noma::normalized({1.f, 1.f, 1.f});
  const Box3 box{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  const RaySampleSet set = noma::uniform_samples(ray, box, 32);
  REQUIRE_FALSE(set.escaped);
  REQUIRE(set.size() == 32);
  const float span = set.t_exit - set.t_entry;
  CHECK(span == doctest::Approx(std::sqrt(3.f)).epsilon(1e-5));
  for (float d : set.deltas) CHECK(d == doctest::Approx(span / 32.f).epsilon(1e-6));
  for (const Vec3& p : set.positions) {
    CHECK(p.x >= 0.f);
    CHECK(p.x <= 1.f);
    CHECK(p.y >= 0.f);
    CHECK(p.y <= 1.f);
    CHECK(p.z >= 0.f);
    CHECK(p.z <= 1.f);
  }
}

TEST_CASE("uniform_samples: rays missing the box or pointing away escape") {
  const Box3 box{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  ObjectRay miss;
  miss.origin = {-1.f, 5.f, 0.5f};
  miss.direction = {1.f, 0.f, 0.f};
  CHECK(noma::uniform_samples(miss, box, 8).escaped);

  ObjectRay behind;
  behind.origin = {0.5f, 0.5f, 2.f};
  behind.direction = {0.f, 0.f, 1.f};
  CHECK(noma::uniform_samples(behind, box, 8).escaped);
}

TEST_CASE("uniform_samples: origin inside the box clamps the span start to zero") {
  ObjectRay ray;
  ray.origin = {0.5f, 0.5f, 0.5f};
  ray.direction = {0.f, 0.f, 1.f};
  const Box3 box{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  const RaySampleSet set = noma::uniform_samples(ray, box, 4);
  REQUIRE_FALSE(set.escaped);
  CHECK(set.t_entry == 0.f);
  CHECK(set.t_exit == doctest::Approx(0.5f));
  const float expect[] = {0.0625f, 0.1875f, 0.3125f, 0.4375f};
  for (int i = 0; i < 4; ++i) CHECK(set.depths[i] == doctest::Approx(expect[i]).epsilon(1e-5));
}

TEST_CASE("composite: all-zero densities produce zero color, depth, and term probabilities") {
  const std::vector<float> sigmas(5, 0.f);
  const std::vector<Vec3> colors(5, Vec3{0.9f, 0.8f, 0.7f});
  const std::vector<float> deltas(5, 0.2f);
  const std::vector<float> depths{1.f, 1.2f, 1.4f, 1.6f, 1.8f};
  const noma::CompositeResult r = noma::composite(sigmas, colors, deltas, depths);
  CHECK(r.color.x == 0.f);
  CHECK(r.color.y == 0.f);
  CHECK(r.color.z == 0.f);
  CHECK(r.depth == 0.f);
  for (float p : r.term_probs) CHECK(p == 0.f);
}

TEST_CASE("composite: single sample with sigma*delta = ln 2 terminates with probability 1/2") {
  const float ln2 = std::log(2.f);
  const noma::CompositeResult r =
      noma::composite({ln2}, {Vec3{0.8f, 0.4f, 0.2f}}, {1.f}, {1.7f});
  CHECK(r.term_probs[0] == doctest::Approx(0.5f).epsilon(1e-6));
  CHECK(r.color.x == doctest::Approx(0.4f).epsilon(1e-6));
  CHECK(r.color.y == doctest::Approx(0.2f).epsilon(1e-6));
  CHECK(r.color.z == doctest::Approx(0.1f).epsilon(1e-6));
  CHECK(r.depth == doctest::Approx(0.85f).epsilon(1e-6));
}

TEST_CASE("composite: matches the brute-force product-form oracle on random 8-sample rays") {
  std::mt19937 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::vector<float> sigmas, deltas, depths;
    std::vector<Vec3> colors;
    float t = testutil::uniform(rng, 0.5f, 1.f);
    for (int i = 0; i < 8; ++i) {
      sigmas.push_back(testutil::uniform(rng, 0.f, 8.f));
      deltas.push_back(testutil::uniform(rng, 0.01f, 0.4f));
      t += deltas.back();
      depths.push_back(t);
      colors.push_back(testutil::random_point(rng));
    }
    const noma::CompositeResult lib = noma::composite(sigmas, colors, deltas, depths);
    std::vector<double> ds(sigmas.begin(), sigmas.end());
    std::vector<double> dd(deltas.begin(), deltas.end());
    std::vector<double> dz(depths.begin(), depths.end());
    std::vector<std::array<double, 3>> dc;
    for (const Vec3& v : colors) dc.push_back({v.x, v.y, v.z});
    const oracle::CompositeRef ref = oracle::composite_product_form(ds, dc, dd, dz);
    REQUIRE(lib.term_probs.size() == 8);
    for (int i = 0; i < 8; ++i)
      CHECK(std::fabs(lib.term_probs[i] - ref.term_probs[i]) < 1e-6);
    CHECK(std::fabs(lib.color.x - ref.color[0]) < 1e-6);
    CHECK(std::fabs(lib.color.y - ref.color[1]) < 1e-6);
    CHECK(std::fabs(lib.color.z - ref.color[2]) < 1e-6);
    CHECK(std::fabs(lib.depth - ref.depth) < 1e-5);
  }
}

TEST_CASE("composite: total termination mass equals one minus the survival product") {
  std::mt19937 rng(7);
  for (int round = 0; round < 1000; ++round) {
    const int n = testutil::uniform_int(rng, 1, 12);
    std::vector<float> sigmas, deltas, depths;
    std::vector<Vec3> colors(n, Vec3{0.5f, 0.5f, 0.5f});
    for (int i = 0; i < n; ++i) {
      sigmas.push_back(testutil::uniform(rng, 0.f, 20.f));
      deltas.push_back(testutil::uniform(rng, 1e-3f, 0.5f));
      depths.push_back(1.f + 0.1f * i);
    }
    const noma::CompositeResult r = noma::composite(sigmas, colors, deltas, depths);
    double sum = 0.0, survive = 1.0;
    for (int i = 0; i < n; ++i) {
      sum += r.term_probs[i];
      survive *= 1.0 - (1.0 - std::exp(-static_cast<double>(sigmas[i]) * deltas[i]));
    }
    CHECK(std::fabs(sum - (1.0 - survive)) < 1e-6);
    for (float p : r.term_probs) CHECK(p >= 0.f);
  }
}

TEST_CASE("composite: sample order matters for asymmetric densities") {
  const std::vector<float> sigmas{4.f, 0.5f, 0.1f};
  const std::vector<float> rev{0.1f, 0.5f, 4.f};
  const std::vector<Vec3> colors(3, Vec3{0.5f, 0.5f, 0.5f});
  const std::vector<float> deltas(3, 0.3f);
  const std::vector<float> depths{1.f, 1.3f, 1.6f};
  const auto fwd = noma::composite(sigmas, colors, deltas, depths);
  const auto bwd = noma::composite(rev, colors, deltas, depths);
  CHECK(std::fabs(fwd.term_probs[0] - bwd.term_probs[0]) > 1e-3f);
}

TEST_CASE("batch_loss: predictions equal to targets give exactly zero loss") {
  std::mt19937 arch_rng(11);
  const noma::FieldArch arch = testutil::random_tiny_arch(arch_rng);
  const noma::ParamVector params = testutil::random_params_for_gradients(arch, arch_rng);
  const Box3 box{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};

  std::vector<ObjectRay> rays(3);
  std::vector<RaySampleSet> samples;
  std::vector<std::vector<FieldOutput>> outputs;
  for (int r = 0; r < 3; ++r) {
    rays[r].origin = {-1.f, 0.3f + 0.2f * r, 0.4f};
    rays[r].direction = noma::normalized(Vec3{1.f, 0.1f * r, 0.2f});
    samples.push_back(noma::uniform_samples(rays[r], box, 5));
    REQUIRE_FALSE(samples.back().escaped);
    outputs.push_back(noma::field_eval(arch, params, samples.back().positions));
    std::vector<float> sigmas;
    std::vector<Vec3> colors;
    for (const FieldOutput& o : outputs.back()) {
      sigmas.push_back(o.sigma);
      colors.push_back(o.rgb);
    }
    const auto comp = noma::composite(sigmas, colors, samples.back().deltas, samples.back().depths);
    rays[r].target_color = comp.color;
    rays[r].target_depth = comp.depth;
  }
  std::mt19937 rng(3);
  const noma::LossResult loss = noma::batch_loss(rays, samples, outputs, {0.3f, 1e-3f}, rng);
  CHECK(loss.total == 0.0);
  CHECK(loss.color_term == 0.0);
  CHECK(loss.depth_term == 0.0);
  CHECK(loss.sigma_term == 0.0);
  REQUIRE(loss.grads.size() == 3);
  for (const auto& g : loss.grads) CHECK(g.size() == 5);
}

TEST_CASE("batch_loss: background hand case sums the density penalty to one") {
  // One background ray, two samples, sigma = {0.3, 0.7}, lambda_sigma = 1,
  // composited color arranged to hit the drawn random target exactly.
  std::vector<ObjectRay> rays(1);
  rays[0].kind = RayKind::kBackground;
  std::vector<RaySampleSet> samples{manual_samples({1.f, 1.25f}, {0.25f, 0.25f})};

  const std::uint32_t seed = 42;
  const auto bg = shadow::draw_bg_colors(rays, samples, seed);
  REQUIRE(bg.size() == 1);
  const double a1 = 1.0 - std::exp(-0.3 * 0.25);
  const double a2 = 1.0 - std::exp(-0.7 * 0.25);
  const double mass = a1 + (1.0 - a1) * a2;
  const Vec3 c{static_cast<float>(bg[0][0] / mass), static_cast<float>(bg[0][1] / mass),
               static_cast<float>(bg[0][2] / mass)};
  std::vector<std::vector<FieldOutput>> outputs{{{0.3f, c}, {0.7f, c}}};

  std::mt19937 rng(seed);
  const noma::LossResult loss = noma::batch_loss(rays, samples, outputs, {0.5f, 1.f}, rng);
  CHECK(loss.sigma_term == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(loss.color_term < 1e-5);
  CHECK(loss.depth_term == 0.0);
  CHECK(loss.total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("batch_loss: doubling the depth weight adds exactly one depth term") {
  std::vector<ObjectRay> rays(2);
  std::vector<RaySampleSet> samples;
  std::vector<std::vector<FieldOutput>> outputs;
  for (int r = 0; r < 2; ++r) {
    rays[r].target_color = {0.2f, 0.3f, 0.4f};
    rays[r].target_depth = 2.f + r;
    samples.push_back(manual_samples({1.f, 1.5f}, {0.5f, 0.5f}));
    outputs.push_back({{1.2f, {0.9f, 0.1f, 0.3f}}, {0.4f, {0.2f, 0.8f, 0.5f}}});
  }
  auto eval = [&](float lambda_d) {
    std::mt19937 rng(1);
    return noma::batch_loss(rays, samples, outputs, {lambda_d, 0.f}, rng);
  };
  const auto base = eval(0.25f);
  const auto twice = eval(0.5f);
  CHECK(base.depth_term > 0.1);
  CHECK(twice.depth_term == base.depth_term);  // raw term is weight-free
  CHECK(twice.total - base.total ==
        doctest::Approx(0.25 * base.depth_term).epsilon(1e-9));
}

TEST_CASE("batch_loss: background target_depth is ignored") {
  std::vector<ObjectRay> rays(2);
  rays[0].target_color = {0.5f, 0.5f, 0.5f};
  rays[0].target_depth = 2.f;
  rays[1].kind = RayKind::kBackground;
  std::vector<RaySampleSet> samples{manual_samples({1.f, 1.5f}, {0.5f, 0.5f}),
                                    manual_samples({1.f, 1.5f}, {0.5f, 0.5f})};
  std::vector<std::vector<FieldOutput>> outputs{
      {{1.f, {0.9f, 0.1f, 0.3f}}, {0.5f, {0.2f, 0.8f, 0.5f}}},
      {{0.2f, {0.4f, 0.4f, 0.4f}}, {0.1f, {0.6f, 0.6f, 0.6f}}}};
  auto eval = [&] {
    std::mt19937 rng(9);
    return noma::batch_loss(rays, samples, outputs, {0.3f, 1e-2f}, rng).total;
  };
  const double before = eval();
  rays[1].target_depth = 5.f;  // must not participate
  CHECK(eval() == before);
}

TEST_CASE("batch_loss: escaped rays consume no random draws") {
  std::vector<ObjectRay> rays(3, ObjectRay{});
  for (auto& r : rays) r.kind = RayKind::kBackground;
  RaySampleSet escaped;
  escaped.escaped = true;
  std::vector<RaySampleSet> with_gap{manual_samples({1.f}, {0.5f}), escaped,
                                     manual_samples({2.f}, {0.5f})};
  std::vector<std::vector<FieldOutput>> outputs_gap{
      {{0.4f, {0.1f, 0.2f, 0.3f}}}, {}, {{0.7f, {0.6f, 0.5f, 0.4f}}}};

  std::vector<ObjectRay> rays2(2, ObjectRay{});
  for (auto& r : rays2) r.kind = RayKind::kBackground;
  std::vector<RaySampleSet> no_gap{with_gap[0], with_gap[2]};
  std::vector<std::vector<FieldOutput>> outputs2{outputs_gap[0], outputs_gap[2]};

  std::mt19937 rng_a(7), rng_b(7);
  const double a = noma::batch_loss(rays, with_gap, outputs_gap, {0.1f, 1e-2f}, rng_a).total;
  const double b = noma::batch_loss(rays2, no_gap, outputs2, {0.1f, 1e-2f}, rng_b).total;
  CHECK(a == b);
}

TEST_CASE("loss gradients through compositing match finite differences") {
  for (std::uint64_t seed : {100ull, 101ull}) {
    const gradcheck::Case c = gradcheck::make_case(seed);
    const auto analytic = gradcheck::analytic_gradient(c);
    const auto fd = gradcheck::fd_gradient(c);
    const auto cmp = gradcheck::compare(analytic, fd);
    CHECK(cmp.checked > 20);
    CHECK(cmp.max_rel < 1e-3);
  }
}
