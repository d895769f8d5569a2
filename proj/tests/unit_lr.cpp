#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lrs/builders.hpp"
#include "lrs/lr_mesh.hpp"
#include "lrs/mesh_io.hpp"
#include "test_util.hpp"

#include <map>
#include <random>
#include <set>

using namespace lrs;

TEST_CASE("local knot vector validation") {
	CHECK_THROWS_AS(LocalKnotVector({0.0, 1.0, 0.5, 2.0}, 2), invariant_error);
	CHECK_THROWS_AS(LocalKnotVector({0.0, 1.0, 2.0}, 2), invariant_error);
	CHECK_THROWS_AS(LocalKnotVector({1.0, 1.0, 1.0, 1.0}, 2), invariant_error);
	CHECK_NOTHROW(LocalKnotVector({0.0, 0.0, 0.0, 0.0, 1.0}, 3));
	CHECK_NOTHROW(LocalKnotVector({0.0, 0.0, 0.0, 1.0}, 2));
}

TEST_CASE("degree zero basis is the span indicator") {
	LocalKnotVector kv({0.0, 1.0}, 0);
	double v, d;
	kv.evaluate(0.5, v, d);
	CHECK(v == 1.0);
	CHECK(d == 0.0);
}

TEST_CASE("open vector endpoint value and slope") {
	LocalKnotVector kv({0.0, 0.0, 0.0, 1.0}, 2); // (1-xi)^2
	double v, d;
	kv.evaluate(0.0, v, d);
	CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
	CHECK(d == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("cox-de boor matches the direct table oracle") {
	std::vector<std::vector<double>> kvs = {
		{0, 0.25, 0.5, 0.75},
		{0, 0, 0.5, 1},
		{0, 0.5, 0.5, 1},
		{0, 0.1, 0.7, 0.8, 2.0},
		{0, 0, 0, 1, 1},
		{1, 2, 2, 2, 3},
	};
	for (const auto& knots : kvs) {
		int p = static_cast<int>(knots.size()) - 2;
		LocalKnotVector kv(knots, p);
		for (int k = 0; k <= 100; k++) {
			double x = knots.front() + (knots.back() - knots.front()) * k / 100.0;
			double v, d;
			kv.evaluate(x, v, d);
			CHECK(v == doctest::Approx(testutil::deBoorOracle(knots, 0, p, x)).epsilon(1e-14));
			CHECK(d == doctest::Approx(testutil::deBoorDerivOracle(knots, p, x)).epsilon(1e-12));
		}
	}
	// spot check at an interior evaluation point
	LocalKnotVector kv({0, 0.25, 0.5, 0.75}, 2);
	double v, d;
	kv.evaluate(0.375, v, d);
	CHECK(std::abs(v - testutil::deBoorOracle({0, 0.25, 0.5, 0.75}, 0, 2, 0.375)) < 1e-14);
}

TEST_CASE("function split: knot vectors, alphas and reproduction") {
	LRFunction f;
	f.kx = LocalKnotVector({0, 0.25, 0.5, 0.75}, 2);
	f.ky = LocalKnotVector({0, 0, 0, 1}, 2);
	f.gamma = 1.0;
	f.cps = {homogeneous({1, 2, 3}, 1.0)};

	SplitResult r = splitLRFunction(f, LineDir::Vertical, 0.375);
	CHECK(r.child1.kx.knots() == std::vector<double>{0, 0.25, 0.375, 0.5});
	CHECK(r.child2.kx.knots() == std::vector<double>{0.25, 0.375, 0.5, 0.75});
	CHECK(r.alpha1 == doctest::Approx(0.75).epsilon(1e-15));
	CHECK(r.alpha2 == doctest::Approx(0.75).epsilon(1e-15));

	// gamma*N = gamma1*N1 + gamma2*N2 on 50 sample points
	for (int k = 0; k <= 50; k++) {
		double x = 0.75 * k / 50.0;
		double v, d, v1, v2;
		f.kx.evaluate(x, v, d);
		r.child1.kx.evaluate(x, v1, d);
		r.child2.kx.evaluate(x, v2, d);
		CHECK(std::abs(f.gamma * v - (r.child1.gamma * v1 + r.child2.gamma * v2)) < 1e-13);
	}

	// split at an existing span boundary in the last span: alpha1 = 1
	SplitResult r2 = splitLRFunction(f, LineDir::Vertical, 0.6);
	CHECK(r2.alpha1 == 1.0);

	CHECK_THROWS_AS(splitLRFunction(f, LineDir::Vertical, 0.9), insertion_error);
}

TEST_CASE("tensor mesh basics and partition of unity") {
	LRMesh m = buildSheetPatch(2, 4, 4, 1.0, 1.0);
	CHECK(m.numElements() == 16);
	CHECK(m.numFunctions() == 36);
	for (const LRFunction& f : m.functions())
		CHECK(m.hasMinimalSupport(f));

	std::mt19937 rng(7);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	for (int k = 0; k < 200; k++)
		CHECK(m.partitionOfUnityError(u(rng), u(rng)) < 1e-12);

	CHECK(checkLinearIndependence(m));
}

TEST_CASE("full-width insertion reproduces classical knot insertion") {
	LRMesh m = buildSheetPatch(2, 4, 4, 1.0, 1.0);
	int nEta = 6;
	int before = m.numFunctions();
	m.insertMeshline({LineDir::Vertical, 0.125, 0.0, 1.0, 1});
	CHECK(m.numFunctions() == before + nEta);
	CHECK(m.numElements() == 20);

	std::mt19937 rng(3);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	for (int k = 0; k < 200; k++)
		CHECK(m.partitionOfUnityError(u(rng), u(rng)) < 1e-12);

	// matches the tensor mesh built directly from the refined knot vector
	LRMesh ref = [] {
		std::vector<double> kx = {0, 0, 0, 0.125, 0.25, 0.5, 0.75, 1, 1, 1};
		std::vector<double> ky = {0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1};
		int nx = 7, ny = 6;
		std::vector<Vec4> cps;
		for (int j = 0; j < ny; j++)
			for (int i = 0; i < nx; i++)
				cps.push_back(homogeneous({0, 0, 0}, 1.0));
		return LRMesh::tensor(2, 2, kx, ky, cps);
	}();
	for (const LRFunction& f : m.functions())
		CHECK(ref.findFunction(f.kx, f.ky) >= 0);
}

TEST_CASE("tensor-product limit: all full lines give uniform refinement counts") {
	LRMesh m = buildSheetPatch(2, 3, 3, 1.0, 1.0);
	// n, m function counts: 5x5; insert k=2 full rows each direction
	m.insertMeshline({LineDir::Vertical, 1.0 / 6.0, 0.0, 1.0, 1});
	m.insertMeshline({LineDir::Vertical, 5.0 / 6.0, 0.0, 1.0, 1});
	CHECK(m.numFunctions() == 7 * 5); // (n+k)*m
	m.insertMeshline({LineDir::Horizontal, 1.0 / 6.0, 0.0, 1.0, 1});
	m.insertMeshline({LineDir::Horizontal, 5.0 / 6.0, 0.0, 1.0, 1});
	CHECK(m.numFunctions() == 7 * 7);
}

TEST_CASE("insertion error paths") {
	LRMesh m = buildSheetPatch(2, 5, 5, 1.0, 1.0);
	// interior line over 2 elements traverses no support: not primitive
	CHECK_THROWS_AS(m.insertMeshline({LineDir::Vertical, 0.5, 0.2, 0.6, 1}), insertion_error);
	// span endpoint off the element grid
	CHECK_THROWS_AS(m.insertMeshline({LineDir::Vertical, 0.5, 0.13, 0.93, 1}), insertion_error);
	// outside domain
	CHECK_THROWS_AS(m.insertMeshline({LineDir::Vertical, 1.0, 0.0, 1.0, 1}), insertion_error);
	// elongation+raise combo is rejected
	m.insertMeshline({LineDir::Vertical, 0.5, 0.0, 0.6, 1});
	CHECK_THROWS_AS(m.insertMeshline({LineDir::Vertical, 0.5, 0.0, 0.8, 2}), insertion_error);
	// plain elongation by one element is fine
	CHECK_NOTHROW(m.insertMeshline({LineDir::Vertical, 0.5, 0.0, 0.8, 1}));
	// re-inserting the same line is a no-op
	auto v = m.version();
	m.insertMeshline({LineDir::Vertical, 0.5, 0.0, 0.8, 1});
	CHECK(m.version() == v);
}

TEST_CASE("minimal support predicate under a partial-span meshline") {
	LRMesh m = buildSheetPatch(2, 5, 5, 1.0, 1.0);
	// the gray function of the figure: support [0.2,0.8] x [0.2,0.8]
	LRFunction gray;
	gray.kx = LocalKnotVector({0.2, 0.4, 0.6, 0.8}, 2);
	gray.ky = LocalKnotVector({0.2, 0.4, 0.6, 0.8}, 2);
	gray.gamma = 1.0;
	gray.cps = {homogeneous({0, 0, 0}, 1.0)};
	CHECK(m.hasMinimalSupport(gray)); // tensor mesh: all lines are knot lines

	m.insertMeshline({LineDir::Vertical, 0.5, 0.2, 0.8, 1});
	CHECK_FALSE(m.hasMinimalSupport(gray)); // the line fully crosses its support
	for (const LRFunction& f : m.functions())
		CHECK(m.hasMinimalSupport(f)); // mesh functions were re-split
}

TEST_CASE("insertion counts match an independent fixpoint oracle") {
	// Oracle: minimal reimplementation tracking only knot-vector pairs.
	struct Tiny {
		int p;
		std::set<std::pair<std::vector<double>, std::vector<double>>> fns;
		std::vector<Meshline> lines;

		static bool traverses(const Meshline& l, const std::vector<double>& kx,
		                      const std::vector<double>& ky) {
			const auto& orth = (l.dir == LineDir::Vertical) ? kx : ky;
			const auto& run = (l.dir == LineDir::Vertical) ? ky : kx;
			return orth.front() < l.fixed && l.fixed < orth.back() &&
			       l.start <= run.front() && run.back() <= l.stop;
		}
		void insert(Meshline l) {
			// merge collinear overlapping/touching lines into one segment
			for (auto it = lines.begin(); it != lines.end();) {
				if (it->dir == l.dir && it->fixed == l.fixed &&
				    it->start <= l.stop && l.start <= it->stop) {
					l.start = std::min(l.start, it->start);
					l.stop = std::max(l.stop, it->stop);
					it = lines.erase(it);
				} else {
					++it;
				}
			}
			lines.push_back(l);
			bool changed = true;
			while (changed) {
				changed = false;
				for (auto it = fns.begin(); it != fns.end(); ++it) {
					for (const Meshline& L : lines) {
						const auto& orth = (L.dir == LineDir::Vertical) ? it->first : it->second;
						if (!traverses(L, it->first, it->second))
							continue;
						if (std::count(orth.begin(), orth.end(), L.fixed) > 0)
							continue;
						auto [kx, ky] = *it;
						fns.erase(it);
						auto& target = (L.dir == LineDir::Vertical) ? kx : ky;
						std::vector<double> big = target;
						big.insert(std::upper_bound(big.begin(), big.end(), L.fixed), L.fixed);
						std::vector<double> k1(big.begin(), big.end() - 1);
						std::vector<double> k2(big.begin() + 1, big.end());
						if (L.dir == LineDir::Vertical) {
							fns.insert({k1, ky});
							fns.insert({k2, ky});
						} else {
							fns.insert({kx, k1});
							fns.insert({kx, k2});
						}
						changed = true;
						break;
					}
					if (changed)
						break;
				}
			}
		}
	};

	LRMesh m = buildSheetPatch(2, 5, 5, 1.0, 1.0);
	Tiny tiny{2, {}, {}};
	for (const LRFunction& f : m.functions())
		tiny.fns.insert({f.kx.knots(), f.ky.knots()});

	std::vector<Meshline> seq = {
		{LineDir::Vertical, 0.5, 0.2, 0.8, 1},
		{LineDir::Horizontal, 0.5, 0.2, 0.8, 1},
		{LineDir::Vertical, 0.3, 0.0, 0.6, 1},
		{LineDir::Horizontal, 0.7, 0.4, 1.0, 1},
		{LineDir::Vertical, 0.5, 0.0, 0.2, 1}, // elongation
	};
	for (const Meshline& l : seq) {
		m.insertMeshline(l);
		tiny.insert(l);
		CHECK(m.numFunctions() == static_cast<int>(tiny.fns.size()));
		for (const LRFunction& f : m.functions())
			CHECK(tiny.fns.count({f.kx.knots(), f.ky.knots()}) == 1);
	}
}

TEST_CASE("geometry and partition of unity survive random refinement") {
	auto runOn = [](LRMesh m, unsigned seed) {
		std::mt19937 rng(seed);
		std::uniform_real_distribution<double> ux(m.xmin(), m.xmax());
		std::uniform_real_distribution<double> uy(m.ymin(), m.ymax());
		std::vector<std::pair<double, double>> pts;
		std::vector<Vec3> before;
		for (int i = 0; i < 200; i++) {
			pts.emplace_back(ux(rng), uy(rng));
			before.push_back(m.surfacePoint(pts.back().first, pts.back().second));
		}
		testutil::randomRefine(m, 20, seed);
		for (int i = 0; i < 200; i++) {
			Vec3 after = m.surfacePoint(pts[i].first, pts[i].second);
			CHECK(norm(after - before[i]) < 1e-12);
			CHECK(m.partitionOfUnityError(pts[i].first, pts[i].second) < 1e-12);
		}
		for (const LRFunction& f : m.functions()) {
			CHECK(m.hasMinimalSupport(f));
			CHECK(f.gamma > 0.0);
			CHECK(f.gamma <= 1.0);
		}
		// scaled basis functions stay non-negative
		for (int k = 0; k < 25; k++) {
			double xi = pts[k].first, eta = pts[k].second;
			for (const LRFunction& f : m.functions()) {
				double nx, dnx, ny, dny;
				f.kx.evaluate(xi, nx, dnx);
				f.ky.evaluate(eta, ny, dny);
				CHECK(f.gamma * nx * ny >= 0.0);
			}
		}
		CHECK(checkLinearIndependence(m));
	};
	LRMesh oct = buildSphereOctantPatch();
	uniformRefine(oct, 1); // 4 elements to give insertions room
	runOn(oct, 11);
	runOn(testutil::makeCubicRationalPatch(5), 13);
}

TEST_CASE("sphere octant: corner interpolation and exact sphere after refinement") {
	LRMesh m = buildSphereOctantPatch();
	Vec3 corner = m.surfacePoint(0.0, 0.0);
	CHECK(norm(corner - Vec3{1, 0, 0}) < 1e-12);

	// constant-geometry patch: all control points equal, mixed weights
	LRMesh flat = buildSphereOctantPatch();
	std::vector<WeightedPoint> pts = fromProjective(flat);
	for (auto& p : pts)
		p.x = Vec3{3, -1, 2};
	toProjective(flat, pts);
	CHECK(norm(flat.surfacePoint(0.37, 0.63) - Vec3{3, -1, 2}) < 1e-12);

	uniformRefine(m, 2);
	for (int i = 0; i <= 10; i++)
		for (int j = 0; j <= 10; j++) {
			Vec3 x = m.surfacePoint(i / 10.0, j / 10.0);
			CHECK(std::abs(norm(x) - 1.0) < 1e-12);
		}
	// weights stay positive through refinement in homogeneous coordinates
	for (const auto& wp : fromProjective(m))
		CHECK(wp.w > 0.0);
}

TEST_CASE("hemisphere patch is an exact sphere surface") {
	LRMesh m = buildHemispherePatch(2.0);
	for (int i = 0; i <= 16; i++)
		for (int j = 0; j <= 8; j++) {
			Vec3 x = m.surfacePoint(4.0 * i / 16.0, j / 8.0);
			CHECK(std::abs(norm(x) - 2.0) < 1e-12);
			CHECK(x.z > -1e-12);
		}
	setUniformResolution(m, 8, 8);
	CHECK(m.numElements() == 64);
	for (int i = 0; i <= 16; i++)
		for (int j = 0; j <= 8; j++)
			CHECK(std::abs(norm(m.surfacePoint(4.0 * i / 16.0, j / 8.0)) - 2.0) < 1e-12);
}

TEST_CASE("projective transform round trip") {
	LRMesh m = buildSphereOctantPatch();
	std::vector<WeightedPoint> pts = fromProjective(m);
	// definitional example
	LRMesh m2 = buildSheetPatch(2, 1, 1, 1.0, 1.0);
	auto p2 = fromProjective(m2);
	p2[0] = {{1, 2, 3}, 2.0};
	toProjective(m2, p2);
	const Vec4& h = m2.function(0).cps[0];
	CHECK(h.x == 2.0);
	CHECK(h.y == 4.0);
	CHECK(h.z == 6.0);
	CHECK(h.w == 2.0);

	toProjective(m, pts);
	auto rt = fromProjective(m);
	for (size_t i = 0; i < pts.size(); i++) {
		CHECK(norm(rt[i].x - pts[i].x) < 1e-14);
		CHECK(rt[i].w == pts[i].w);
	}
	pts[0].w = 0.0;
	CHECK_THROWS_AS(toProjective(m, pts), invariant_error);
}

TEST_CASE("mesh json round trip is stable") {
	LRMesh m = buildSphereOctantPatch();
	uniformRefine(m, 1);
	m.insertMeshline(minspanLine(m, 0, LineDir::Vertical));
	m.addChannel();

	std::string j1 = meshToJson(m);
	LRMesh back = meshFromJson(j1);
	std::string j2 = meshToJson(back);
	CHECK(j1 == j2);
	CHECK(back.numFunctions() == m.numFunctions());
	CHECK(back.numElements() == m.numElements());
	CHECK(back.numChannels() == 2);
	for (int i = 0; i < m.numFunctions(); i++) {
		CHECK(back.findFunction(m.function(i).kx, m.function(i).ky) >= 0);
	}
	// fresh insertion works on a deserialized mesh
	CHECK_NOTHROW(back.insertMeshline(minspanLine(back, 2, LineDir::Horizontal)));
}

TEST_CASE("multiplicity raise insertion keeps invariants") {
	LRMesh m = buildSheetPatch(2, 4, 4, 1.0, 1.0);
	m.insertMeshline({LineDir::Vertical, 0.5, 0.0, 1.0, 2}); // raise to C0
	std::mt19937 rng(5);
	std::uniform_real_distribution<double> u(0.01, 0.99);
	for (int k = 0; k < 100; k++)
		CHECK(m.partitionOfUnityError(u(rng), u(rng)) < 1e-12);
	for (const LRFunction& f : m.functions())
		CHECK(m.hasMinimalSupport(f));
	CHECK(checkLinearIndependence(m));
}
