#pragma once

#include <cstdint>
#include <vector>

#include "noma/geom.hpp"

namespace noma {

// Symmetric Chamfer distance: 0.5 * (mean nearest-neighbor distance a->b +
// mean b->a), unsquared Euclidean, in the clouds' length units.
double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Fraction of gt points whose nearest rec point lies within tau. Empty rec
// covers nothing.
double completion_ratio(const std::vector<Vec3>& gt, const std::vector<Vec3>& rec, double tau);

// Exact minimum-cost perfect matching on an n x n cost matrix (row-major),
// returning the column assigned to each row.
std::vector<int> hungarian_assignment(const std::vector<double>& cost, int n);

// Earth mover's distance: seeded subsample of both clouds to n_sub points,
// optimal one-to-one matching on Euclidean costs, mean matched distance.
double emd(const std::vector<Vec3>& a, const std::vector<Vec3>& b, int n_sub, std::uint64_t seed);

}  // namespace noma
