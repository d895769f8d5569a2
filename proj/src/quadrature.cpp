#include "lrs/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace lrs {

namespace {

GaussRule makeRule(int n) {
	GaussRule r;
	r.points.resize(n);
	r.weights.resize(n);
	for (int i = 0; i < n; i++) {
		// Newton iteration from the Chebyshev estimate
		double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
		double dp = 0.0;
		for (int it = 0; it < 100; it++) {
			double p0 = 1.0, p1 = x;
			for (int k = 2; k <= n; k++) {
				double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
				p0 = p1;
				p1 = p2;
			}
			dp = n * (x * p1 - p0) / (x * x - 1.0);
			double dx = p1 / dp;
			x -= dx;
			if (std::abs(dx) < 1e-15)
				break;
		}
		r.points[n - 1 - i] = x;
		r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
	}
	return r;
}

} // namespace

const GaussRule& gaussRule(int n) {
	if (n < 1 || n > 10)
		throw std::invalid_argument("gauss rule: n out of range");
	static const std::vector<GaussRule> rules = [] {
		std::vector<GaussRule> v;
		for (int k = 1; k <= 10; k++)
			v.push_back(makeRule(k));
		return v;
	}();
	return rules[n - 1];
}

} // namespace lrs
