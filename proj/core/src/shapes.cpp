#include "noma/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "noma/errors.hpp"

namespace noma {
namespace {

float sd_sphere(const Vec3& p, float r) { return norm(p) - r; }

float sd_box(const Vec3& p, const Vec3& half) {
  Vec3 q{std::fabs(p.x) - half.x, std::fabs(p.y) - half.y, std::fabs(p.z) - half.z};
  Vec3 qp = cwise_max(q, {0.f, 0.f, 0.f});
  return norm(qp) + std::fmin(std::fmax(q.x, std::fmax(q.y, q.z)), 0.f);
}

// Capped cylinder about the z axis.
float sd_cylinder(const Vec3& p, float radius, float height) {
  float dr = std::sqrt(p.x * p.x + p.y * p.y) - radius;
  float dz = std::fabs(p.z) - 0.5f * height;
  float outside = std::sqrt(std::fmax(dr, 0.f) * std::fmax(dr, 0.f) +
                            std::fmax(dz, 0.f) * std::fmax(dz, 0.f));
  return outside + std::fmin(std::fmax(dr, dz), 0.f);
}

// Torus about the x axis: ring of major radius R in the y-z plane.
float sd_torus_x(const Vec3& p, float major, float minor) {
  float ring = std::sqrt(p.y * p.y + p.z * p.z) - major;
  return std::sqrt(ring * ring + p.x * p.x) - minor;
}

float sd_capsule(const Vec3& p, const Vec3& a, const Vec3& b, float r) {
  Vec3 pa = p - a, ba = b - a;
  float h = std::clamp(dot(pa, ba) / dot(ba, ba), 0.f, 1.f);
  return norm(pa - ba * h) - r;
}

float csg_union(float a, float b) { return std::fmin(a, b); }
float csg_subtract(float a, float b) { return std::fmax(a, -b); }

struct MugParams {
  float body_radius, body_height, wall, handle_major, handle_minor;
};
MugParams mug_params(const ShapeSpec& s) {
  return {s.params[0], s.params[1], s.params[2], s.params[3], s.params[4]};
}

float sdf_mug(const ShapeSpec& s, const Vec3& p) {
  MugParams m = mug_params(s);
  float body = sd_cylinder(p, m.body_radius, m.body_height);
  // cavity rises above the rim so the top stays open; floor keeps one wall
  // thickness of material
  Vec3 pc = p - Vec3{0.f, 0.f, m.wall};
  float cavity = sd_cylinder(pc, m.body_radius - m.wall, m.body_height);
  Vec3 ph = p - Vec3{0.f, m.body_radius + m.handle_major * 0.55f, 0.f};
  float handle = sd_torus_x(ph, m.handle_major, m.handle_minor);
  return csg_subtract(csg_union(body, handle), cavity);
}

Box3 bounds_mug(const ShapeSpec& s) {
  MugParams m = mug_params(s);
  float r = m.body_radius;
  float hy = r + m.handle_major * 0.55f + m.handle_major + m.handle_minor;
  return {{-r, -r, -0.5f * m.body_height}, {r, hy, 0.5f * m.body_height}};
}

struct BookParams {
  float width, height, thickness;
};
BookParams book_params(const ShapeSpec& s) { return {s.params[0], s.params[1], s.params[2]}; }

float sdf_book(const ShapeSpec& s, const Vec3& p) {
  BookParams b = book_params(s);
  // cover block plus a pages block protruding at the fore-edge (+x), giving
  // the yaw-identifiable asymmetry of a real closed book
  float cover = sd_box(p, {0.5f * b.width, 0.5f * b.height, 0.5f * b.thickness});
  Vec3 pp = p - Vec3{0.52f * b.width, 0.f, 0.f};
  float pages = sd_box(pp, {0.06f * b.width, 0.46f * b.height, 0.38f * b.thickness});
  return csg_union(cover, pages);
}

Box3 bounds_book(const ShapeSpec& s) {
  BookParams b = book_params(s);
  return {{-0.5f * b.width, -0.5f * b.height, -0.5f * b.thickness},
          {0.58f * b.width, 0.5f * b.height, 0.5f * b.thickness}};
}

float sdf_ball(const ShapeSpec& s, const Vec3& p) { return sd_sphere(p, s.params[0]); }

Box3 bounds_ball(const ShapeSpec& s) {
  float r = s.params[0];
  return {{-r, -r, -r}, {r, r, r}};
}

struct LaptopParams {
  float base_depth, base_width, base_thick, screen_height, screen_thick, open_angle;
};
LaptopParams laptop_params(const ShapeSpec& s) {
  return {s.params[0], s.params[1], s.params[2], s.params[3], s.params[4], s.params[5]};
}

float sdf_laptop(const ShapeSpec& s, const Vec3& p) {
  LaptopParams l = laptop_params(s);
  // base lies flat, hinge along y at the -x edge; screen leans back past
  // vertical so its normal keeps a +x component (screen faces +x)
  Vec3 pb = p - Vec3{0.f, 0.f, 0.5f * l.base_thick};
  float base = sd_box(pb, {0.5f * l.base_depth, 0.5f * l.base_width, 0.5f * l.base_thick});
  Vec3 hinge{-0.5f * l.base_depth, 0.f, l.base_thick};
  Vec3 q = p - hinge;
  float c = std::cos(l.open_angle), sn = std::sin(l.open_angle);
  // rotate about the y axis so the screen slab becomes axis-aligned
  Vec3 qr{c * q.x + sn * q.z, q.y, -sn * q.x + c * q.z};
  qr -= Vec3{0.f, 0.f, 0.5f * l.screen_height};
  float screen = sd_box(qr, {0.5f * l.screen_thick, 0.5f * l.base_width, 0.5f * l.screen_height});
  return csg_union(base, screen);
}

Box3 bounds_laptop(const ShapeSpec& s) {
  LaptopParams l = laptop_params(s);
  float c = std::cos(l.open_angle), sn = std::sin(l.open_angle);
  float screen_reach_x = -0.5f * l.base_depth - sn * l.screen_height - l.screen_thick;
  float top = l.base_thick + c * l.screen_height + l.screen_thick;
  return {{screen_reach_x, -0.5f * l.base_width, 0.f},
          {0.5f * l.base_depth, 0.5f * l.base_width, top}};
}

struct ChairParams {
  float seat_w, seat_d, seat_h, seat_t, back_h, leg_r;
};
ChairParams chair_params(const ShapeSpec& s) {
  return {s.params[0], s.params[1], s.params[2], s.params[3], s.params[4], s.params[5]};
}

float sdf_chair(const ShapeSpec& s, const Vec3& p) {
  ChairParams ch = chair_params(s);
  Vec3 ps = p - Vec3{0.f, 0.f, ch.seat_h};
  float seat = sd_box(ps, {0.5f * ch.seat_w, 0.5f * ch.seat_d, 0.5f * ch.seat_t});
  Vec3 pb = p - Vec3{0.f, -0.5f * ch.seat_d + 0.5f * ch.seat_t,
                     ch.seat_h + 0.5f * ch.back_h};
  float back = sd_box(pb, {0.5f * ch.seat_w, 0.5f * ch.seat_t, 0.5f * ch.back_h});
  float d = csg_union(seat, back);
  float lx = 0.5f * ch.seat_w - ch.leg_r * 1.5f;
  float ly = 0.5f * ch.seat_d - ch.leg_r * 1.5f;
  for (float sx : {-lx, lx})
    for (float sy : {-ly, ly})
      d = csg_union(d, sd_capsule(p, {sx, sy, 0.f}, {sx, sy, ch.seat_h}, ch.leg_r));
  return d;
}

Box3 bounds_chair(const ShapeSpec& s) {
  ChairParams ch = chair_params(s);
  float top = ch.seat_h + ch.back_h;
  return {{-0.5f * ch.seat_w, -0.5f * ch.seat_d, -ch.leg_r},
          {0.5f * ch.seat_w, 0.5f * ch.seat_d, top}};
}

}  // namespace

std::string to_string(Category c) {
  switch (c) {
    case Category::kMug: return "mug";
    case Category::kChair: return "chair";
    case Category::kLaptop: return "laptop";
    case Category::kBook: return "book";
    case Category::kBall: return "ball";
  }
  return "unknown";
}

Category category_from_string(const std::string& s) {
  for (Category c : all_categories())
    if (to_string(c) == s) return c;
  throw DataError("unknown category: " + s);
}

const std::vector<Category>& all_categories() {
  static const std::vector<Category> cats = {Category::kMug, Category::kChair, Category::kLaptop,
                                             Category::kBook, Category::kBall};
  return cats;
}

bool rotationally_symmetric(Category c) { return c == Category::kBall; }

ShapeSpec sample_shape(Category category, std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::uint32_t>(seed * 2654435761u + 17u));
  auto uni = [&](float lo, float hi) {
    return std::uniform_real_distribution<float>(lo, hi)(rng);
  };
  ShapeSpec spec;
  spec.category = category;
  switch (category) {
    case Category::kMug: {
      float r = uni(0.035f, 0.055f);
      float h = uni(0.085f, 0.125f);
      float wall = uni(0.005f, 0.008f);
      float hm = uni(0.26f, 0.34f) * h;
      float hr = uni(0.007f, 0.011f);
      spec.params = {r, h, wall, hm, hr};
      break;
    }
    case Category::kChair: {
      spec.params = {uni(0.36f, 0.46f), uni(0.34f, 0.44f), uni(0.38f, 0.48f),
                     uni(0.03f, 0.05f), uni(0.3f, 0.45f), uni(0.018f, 0.028f)};
      break;
    }
    case Category::kLaptop: {
      spec.params = {uni(0.2f, 0.26f), uni(0.28f, 0.36f), uni(0.012f, 0.02f),
                     uni(0.18f, 0.24f), uni(0.006f, 0.012f), uni(0.32f, 0.5f)};
      break;
    }
    case Category::kBook: {
      spec.params = {uni(0.13f, 0.19f), uni(0.18f, 0.26f), uni(0.025f, 0.055f)};
      break;
    }
    case Category::kBall: {
      spec.params = {uni(0.04f, 0.11f)};
      break;
    }
  }
  spec.albedo = {uni(0.25f, 0.9f), uni(0.25f, 0.9f), uni(0.25f, 0.9f)};
  return spec;
}

float sdf_eval(const ShapeSpec& spec, const Vec3& p) {
  switch (spec.category) {
    case Category::kMug: return sdf_mug(spec, p);
    case Category::kChair: return sdf_chair(spec, p);
    case Category::kLaptop: return sdf_laptop(spec, p);
    case Category::kBook: return sdf_book(spec, p);
    case Category::kBall: return sdf_ball(spec, p);
  }
  throw NumericError("sdf_eval: bad category");
}

Vec3 sdf_normal(const ShapeSpec& spec, const Vec3& p) {
  const float h = 1e-4f;
  float dx = sdf_eval(spec, {p.x + h, p.y, p.z}) - sdf_eval(spec, {p.x - h, p.y, p.z});
  float dy = sdf_eval(spec, {p.x, p.y + h, p.z}) - sdf_eval(spec, {p.x, p.y - h, p.z});
  float dz = sdf_eval(spec, {p.x, p.y, p.z + h}) - sdf_eval(spec, {p.x, p.y, p.z - h});
  return normalized({dx, dy, dz});
}

Box3 shape_bounds(const ShapeSpec& spec) {
  switch (spec.category) {
    case Category::kMug: return bounds_mug(spec);
    case Category::kChair: return bounds_chair(spec);
    case Category::kLaptop: return bounds_laptop(spec);
    case Category::kBook: return bounds_book(spec);
    case Category::kBall: return bounds_ball(spec);
  }
  throw NumericError("shape_bounds: bad category");
}

}  // namespace noma
