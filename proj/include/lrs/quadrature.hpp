#pragma once

#include <vector>

namespace lrs {

struct GaussRule {
	std::vector<double> points;  // on [-1,1]
	std::vector<double> weights; // sum to 2
};

// Gauss-Legendre rule with n points, n in [1,10].
const GaussRule& gaussRule(int n);

} // namespace lrs
