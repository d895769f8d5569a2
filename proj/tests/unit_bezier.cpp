#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lrs/bezier.hpp"
#include "lrs/builders.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>

#include <random>

using namespace lrs;

namespace {

// Independent route to extraction rows: evaluate the function directly and
// identify its polynomial piece by Bernstein collocation on [a,b].
std::vector<double> collocationRowOracle(const LocalKnotVector& kv, double a, double b) {
	const int p = kv.degree();
	Eigen::MatrixXd A(p + 1, p + 1);
	Eigen::VectorXd r(p + 1);
	for (int k = 0; k <= p; k++) {
		double u = (p == 0) ? 0.5 : (1.0 * k) / p * 0.9 + 0.05;
		double x = a + (b - a) * u;
		for (int i = 0; i <= p; i++)
			A(k, i) = testutil::bernsteinOracle(p, i, u);
		double v, d;
		kv.evaluate(x, v, d);
		r(k) = v;
	}
	Eigen::VectorXd c = A.fullPivLu().solve(r);
	std::vector<double> out(p + 1);
	for (int i = 0; i <= p; i++)
		out[i] = c(i);
	return out;
}

double rowEval(const std::vector<double>& row, double t) {
	int p = static_cast<int>(row.size()) - 1;
	double s = 0.0;
	for (int i = 0; i <= p; i++)
		s += row[i] * testutil::bernsteinOracle(p, i, t);
	return s;
}

} // namespace

TEST_CASE("bernstein values, endpoints and binomial oracle") {
	double b[4], db[4];
	bernstein(2, 0.5, b);
	CHECK(b[0] == doctest::Approx(0.25).epsilon(1e-15));
	CHECK(b[1] == doctest::Approx(0.5).epsilon(1e-15));
	CHECK(b[2] == doctest::Approx(0.25).epsilon(1e-15));
	bernstein(2, 0.0, b);
	CHECK(b[0] == 1.0);
	CHECK(b[1] == 0.0);
	CHECK(b[2] == 0.0);

	bernstein(3, 0.25, b, db);
	for (int i = 0; i <= 3; i++)
		CHECK(std::abs(b[i] - testutil::bernsteinOracle(3, i, 0.25)) < 1e-15);
	// derivative against central differences of the oracle
	for (int i = 0; i <= 3; i++) {
		double h = 1e-7;
		double fd = (testutil::bernsteinOracle(3, i, 0.25 + h) -
		             testutil::bernsteinOracle(3, i, 0.25 - h)) / (2 * h);
		CHECK(db[i] == doctest::Approx(fd).epsilon(1e-7));
	}
	// partition of unity for a few degrees and points
	for (int p = 0; p <= 5; p++)
		for (double t : {0.0, 0.31, 0.77, 1.0}) {
			double v[8];
			bernstein(p, t, v);
			double s = 0.0;
			for (int i = 0; i <= p; i++)
				s += v[i];
			CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
		}
}

TEST_CASE("knot vector opening") {
	auto knots = [](const OpenedKnotVector& o) { return o.knots; };

	OpenedKnotVector a = openExtend(LocalKnotVector({0, 0, 0, 1}, 2));
	CHECK(knots(a) == std::vector<double>{0, 0, 0, 1, 1, 1});
	CHECK(a.target == 0);

	OpenedKnotVector b = openExtend(LocalKnotVector({0, 0.25, 0.5, 0.75}, 2));
	CHECK(knots(b) == std::vector<double>{0, 0, 0, 0.25, 0.5, 0.75, 0.75, 0.75});
	CHECK(b.target == 2);

	OpenedKnotVector c = openExtend(LocalKnotVector({0, 1, 2, 3}, 2));
	CHECK(knots(c) == std::vector<double>{0, 0, 0, 1, 2, 3, 3, 3});
	CHECK(c.target == 2);

	// the target function of the extension equals the original on its support
	for (const auto& kv : {LocalKnotVector({0, 0.25, 0.5, 0.75}, 2),
	                       LocalKnotVector({0, 1, 2, 3}, 2),
	                       LocalKnotVector({0, 0, 1, 2, 2}, 3)}) {
		OpenedKnotVector o = openExtend(kv);
		LocalKnotVector window(
			std::vector<double>(o.knots.begin() + o.target,
		                        o.knots.begin() + o.target + kv.degree() + 2),
			kv.degree());
		for (int k = 0; k <= 50; k++) {
			double x = kv.supportMin() +
			           (kv.supportMax() - kv.supportMin()) * k / 50.0;
			double v1, d1, v2, d2;
			kv.evaluate(x, v1, d1);
			window.evaluate(x, v2, d2);
			CHECK(v1 == doctest::Approx(v2).epsilon(1e-14));
		}
	}
}

TEST_CASE("extraction rows reproduce the basis on each span") {
	// already-Bezier vector
	LocalKnotVector bez({0, 0, 0, 1}, 2);
	std::vector<double> row = extractionRow(bez, 0.0, 1.0);
	CHECK(row[0] == doctest::Approx(1.0).epsilon(1e-14));
	CHECK(row[1] == doctest::Approx(0.0).epsilon(1e-14));
	CHECK(row[2] == doctest::Approx(0.0).epsilon(1e-14));

	LocalKnotVector kv({0, 0.25, 0.5, 0.75}, 2);
	std::vector<double> r2 = extractionRow(kv, 0.25, 0.5);
	for (int k = 0; k <= 50; k++) {
		double x = 0.25 + 0.25 * k / 50.0;
		double v, d;
		kv.evaluate(x, v, d);
		CHECK(std::abs(rowEval(r2, (x - 0.25) / 0.25) - v) < 1e-13);
	}

	// uniform interior cubic, middle span, against the collocation oracle
	LocalKnotVector cub({0, 1, 2, 3, 4}, 3);
	std::vector<double> r3 = extractionRow(cub, 1.0, 2.0);
	std::vector<double> oracle = collocationRowOracle(cub, 1.0, 2.0);
	for (int i = 0; i <= 3; i++)
		CHECK(r3[i] == doctest::Approx(oracle[i]).epsilon(1e-12));

	CHECK_THROWS_AS(extractionRow(cub, 1.0, 3.0), invariant_error);

	// every span of several vectors against the oracle
	for (const auto& kv2 : {LocalKnotVector({0, 0.1, 0.7, 0.8, 2.0}, 3),
	                        LocalKnotVector({0, 0, 0.5, 1}, 2),
	                        LocalKnotVector({1, 2, 2, 3}, 2)}) {
		for (int i = 0; i + 1 < kv2.size(); i++) {
			if (!(kv2[i + 1] > kv2[i]))
				continue;
			std::vector<double> r = extractionRow(kv2, kv2[i], kv2[i + 1]);
			std::vector<double> o = collocationRowOracle(kv2, kv2[i], kv2[i + 1]);
			for (size_t j = 0; j < r.size(); j++)
				CHECK(std::abs(r[j] - o[j]) < 1e-12);
		}
	}
}

TEST_CASE("row remap to sub-spans") {
	// identity when spans coincide
	std::vector<double> row = {0.3, 0.5, 0.2};
	CHECK(remapRow(row, 0.0, 1.0, 0.0, 1.0) == row);

	// function span [0,0.2] exceeding the element [0,0.1]
	LocalKnotVector kv({0, 0.2, 0.4, 0.6}, 2);
	std::vector<double> base = extractionRow(kv, 0.0, 0.2);
	std::vector<double> sub = remapRow(base, 0.0, 0.2, 0.0, 0.1);
	for (int k = 0; k <= 50; k++) {
		double x = 0.1 * k / 50.0;
		double v, d;
		kv.evaluate(x, v, d);
		CHECK(std::abs(rowEval(sub, x / 0.1) - v) < 1e-12);
	}

	// constants stay constants
	std::vector<double> ones = {1.0, 1.0, 1.0};
	std::vector<double> rem = remapRow(ones, 0.0, 1.0, 0.25, 0.3125);
	for (double c : rem)
		CHECK(c == doctest::Approx(1.0).epsilon(1e-12));

	CHECK_THROWS_AS(remapRow(row, 0.0, 1.0, 0.5, 0.5), invariant_error);
}

TEST_CASE("element operators reproduce direct evaluation") {
	auto checkMesh = [](const LRMesh& m) {
		std::vector<ElementOperator> ops = buildAllElementOperators(m);
		std::mt19937 rng(17);
		std::uniform_real_distribution<double> u(0.0, 1.0);
		for (const ElementOperator& op : ops) {
			std::vector<double> val, dx, de;
			for (int s = 0; s < 5; s++) {
				double xi = op.box.x0 + op.box.lenX() * u(rng);
				double eta = op.box.y0 + op.box.lenY() * u(rng);
				op.evalScaled(m, xi, eta, val, dx, de);
				double sum = 0.0;
				for (int a = 0; a < op.count(); a++) {
					const LRFunction& f = m.function(op.fns[a]);
					double vx, dvx, vy, dvy;
					f.kx.evaluate(xi, vx, dvx);
					f.ky.evaluate(eta, vy, dvy);
					CHECK(std::abs(val[a] - f.gamma * vx * vy) < 1e-12);
					CHECK(std::abs(dx[a] - f.gamma * dvx * vy) < 1e-12);
					CHECK(std::abs(de[a] - f.gamma * vx * dvy) < 1e-12);
					sum += val[a];
				}
				CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

				// rational basis sums to one as well
				op.evalRational(m, xi, eta, val, dx, de);
				double rsum = 0.0, rdx = 0.0, rde = 0.0;
				for (int a = 0; a < op.count(); a++) {
					rsum += val[a];
					rdx += dx[a];
					rde += de[a];
				}
				CHECK(rsum == doctest::Approx(1.0).epsilon(1e-12));
				CHECK(std::abs(rdx) < 1e-10);
				CHECK(std::abs(rde) < 1e-10);
			}
		}
	};

	LRMesh tensor = buildSheetPatch(2, 4, 4, 1.0, 1.0);
	checkMesh(tensor);

	// locally refined: n_e on a refined element may exceed (p+1)(q+1)
	LRMesh lr = buildSheetPatch(2, 5, 5, 1.0, 1.0);
	lr.insertMeshline({LineDir::Vertical, 0.5, 0.2, 0.8, 1});
	lr.insertMeshline({LineDir::Horizontal, 0.5, 0.2, 0.8, 1});
	bool sawBig = false;
	std::vector<ElementOperator> ops = buildAllElementOperators(lr);
	for (const auto& op : ops)
		sawBig |= op.count() > 9;
	CHECK(sawBig);
	checkMesh(lr);

	LRMesh oct = buildSphereOctantPatch();
	uniformRefine(oct, 1);
	testutil::randomRefine(oct, 8, 23);
	checkMesh(oct);

	checkMesh(testutil::makeCubicRationalPatch(4));
}

TEST_CASE("operator construction is deterministic and cache-transparent") {
	LRMesh m = buildSphereOctantPatch();
	uniformRefine(m, 1);
	testutil::randomRefine(m, 5, 31);
	std::vector<ElementOperator> a = buildAllElementOperators(m);
	std::vector<ElementOperator> b = buildAllElementOperators(m);
	REQUIRE(a.size() == b.size());
	for (size_t i = 0; i < a.size(); i++) {
		CHECK(a[i].fns == b[i].fns);
		CHECK(a[i].rowX == b[i].rowX);
		CHECK(a[i].rowY == b[i].rowY);
	}
}

TEST_CASE("operator csv dump") {
	LRMesh m = buildSheetPatch(2, 2, 2, 1.0, 1.0);
	std::vector<ElementOperator> ops = buildAllElementOperators(m);
	writeOperatorsCsv(ops, "ops_dump_test.csv");
	std::ifstream is("ops_dump_test.csv");
	REQUIRE(is.good());
	std::string header;
	std::getline(is, header);
	CHECK(header == "element,function,direction,coefficients");
	int lines = 0;
	for (std::string s; std::getline(is, s);)
		lines++;
	CHECK(lines == 4 * 9 * 2); // 4 elements x 9 functions x 2 directions
}
