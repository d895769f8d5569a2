#pragma once

#include "lrs/builders.hpp"
#include "lrs/lr_mesh.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testutil {

// Direct recursive Cox-de Boor table, independent of the library's
// iterative evaluation path. t has p+2 entries for the local function i=0.
inline double deBoorOracle(const std::vector<double>& t, int i, int p, double x) {
	if (p == 0) {
		bool atRight = x >= t.back();
		if (atRight)
			return (t[i] < x && x <= t[i + 1]) ? 1.0 : 0.0;
		return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
	}
	double a = 0.0, b = 0.0;
	if (t[i + p] > t[i])
		a = (x - t[i]) / (t[i + p] - t[i]) * deBoorOracle(t, i, p - 1, x);
	if (t[i + p + 1] > t[i + 1])
		b = (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * deBoorOracle(t, i + 1, p - 1, x);
	return a + b;
}

inline double deBoorDerivOracle(const std::vector<double>& t, int p, double x) {
	double a = 0.0, b = 0.0;
	if (t[p] > t[0])
		a = deBoorOracle(t, 0, p - 1, x) / (t[p] - t[0]);
	std::vector<double> right(t.begin() + 1, t.end());
	if (t[p + 1] > t[1])
		b = deBoorOracle(right, 0, p - 1, x) / (t[p + 1] - t[1]);
	return p * (a - b);
}

inline double binom(int n, int k) {
	double r = 1.0;
	for (int i = 1; i <= k; i++)
		r = r * (n - k + i) / i;
	return r;
}

inline double bernsteinOracle(int p, int i, double t) {
	return binom(p, i) * std::pow(t, i) * std::pow(1.0 - t, p - i);
}

// Flat cubic patch with non-trivial rational weights and out-of-plane bumps.
inline lrs::LRMesh makeCubicRationalPatch(int nel = 5) {
	lrs::LRMesh m = lrs::buildSheetPatch(3, nel, nel, 1.0, 1.0);
	std::vector<lrs::WeightedPoint> pts = lrs::fromProjective(m);
	for (size_t i = 0; i < pts.size(); i++) {
		pts[i].w = 1.0 + 0.4 * std::sin(2.7 * i + 0.3);
		pts[i].x.z = 0.2 * std::cos(1.9 * i);
	}
	lrs::toProjective(m, pts);
	return m;
}

inline lrs::Meshline randomPrimitiveLine(const lrs::LRMesh& mesh, std::mt19937& rng) {
	std::uniform_int_distribution<int> elPick(0, mesh.numElements() - 1);
	std::uniform_int_distribution<int> dirPick(0, 1);
	return lrs::minspanLine(mesh, elPick(rng),
	                        dirPick(rng) ? lrs::LineDir::Vertical : lrs::LineDir::Horizontal);
}

// Applies n random primitive insertions (retrying lines that already exist).
inline void randomRefine(lrs::LRMesh& mesh, int n, unsigned seed) {
	std::mt19937 rng(seed);
	int done = 0, guard = 0;
	while (done < n && guard < 50 * n) {
		guard++;
		auto before = mesh.version();
		mesh.insertMeshline(randomPrimitiveLine(mesh, rng));
		if (mesh.version() != before)
			done++;
	}
}

} // namespace testutil
