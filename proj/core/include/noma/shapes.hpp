#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noma/geom.hpp"

namespace noma {

enum class Category { kMug, kChair, kLaptop, kBook, kBall };

std::string to_string(Category c);
Category category_from_string(const std::string& s);
const std::vector<Category>& all_categories();

// Whether yaw canonicalization is meaningful for the category.
bool rotationally_symmetric(Category c);

// Parametric CSG shape in its canonical frame: z is up; mug handle points
// along +y; laptop screen faces +x; chair backrest sits at -y; book spine at
// -x. Parameter meaning is category-specific (see shapes.cpp).
struct ShapeSpec {
  Category category = Category::kBall;
  std::vector<float> params;
  Vec3 albedo{0.7f, 0.7f, 0.7f};
};

// Deterministic per (category, seed); parameters within per-category ranges.
ShapeSpec sample_shape(Category category, std::uint64_t seed);

// Signed distance (meters, negative inside); exact or a 1-Lipschitz lower
// bound from the CSG composition.
float sdf_eval(const ShapeSpec& spec, const Vec3& p);

// Central-difference surface normal.
Vec3 sdf_normal(const ShapeSpec& spec, const Vec3& p);

// Tight axis-aligned bounds of the shape in its canonical frame.
Box3 shape_bounds(const ShapeSpec& spec);

}  // namespace noma
