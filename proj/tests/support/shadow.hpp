#pragma once

// 64-bit re-implementation of the forward pipeline (hash encoding, MLP,
// compositing, batch loss) used as the base function for finite-difference
// gradient checks. It follows the published layout and formulas but shares
// no arithmetic code with the library, so agreement is evidence rather than
// tautology.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "noma/field.hpp"
#include "noma/render.hpp"

namespace shadow {

struct ShadowOutput {
  double sigma = 0.0;
  std::array<double, 3> rgb{0.0, 0.0, 0.0};
};

// Per-axis hash primes and the dense/hashed switch mirror the table layout
// contract; all real arithmetic is double.
ShadowOutput field_eval(const noma::FieldArch& arch, const std::vector<float>& params,
                        const std::array<double, 3>& p);

// Encoder features alone (length L*F).
std::vector<double> hash_encode(const noma::FieldArch& arch, const std::vector<float>& params,
                                const std::array<double, 3>& p);

// Batch loss over fixed rays and fixed sample positions: per non-escaped ray,
// shadow field outputs at the stored positions, product-form compositing,
// Euclidean color error (background rays against bg_colors in ray order),
// absolute depth error on object rays with a depth target, and the density
// magnitude penalty on background-ray samples. Plain sums.
double batch_loss(const noma::FieldArch& arch, const std::vector<float>& params,
                  const std::vector<noma::ObjectRay>& rays,
                  const std::vector<noma::RaySampleSet>& samples,
                  const noma::LossWeights& weights,
                  const std::vector<std::array<double, 3>>& bg_colors);

// Background targets exactly as the library draws them: one float triple per
// non-escaped background ray, in ray order, from a fresh mt19937(seed).
std::vector<std::array<double, 3>> draw_bg_colors(const std::vector<noma::ObjectRay>& rays,
                                                  const std::vector<noma::RaySampleSet>& samples,
                                                  std::uint32_t seed);

}  // namespace shadow
