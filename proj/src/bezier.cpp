#include "lrs/bezier.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lrs {

void bernstein(int p, double t, double* values, double* derivatives) {
	// de Casteljau-style accumulation
	values[0] = 1.0;
	for (int r = 1; r <= p; r++) {
		if (derivatives && r == p) {
			// values currently hold degree p-1
			derivatives[0] = -p * values[0];
			for (int i = 1; i < p; i++)
				derivatives[i] = p * (values[i - 1] - values[i]);
			derivatives[p] = p * values[p - 1];
		}
		double saved = 0.0;
		for (int j = 0; j < r; j++) {
			double tmp = values[j];
			values[j] = saved + (1.0 - t) * tmp;
			saved = t * tmp;
		}
		values[r] = saved;
	}
	if (derivatives && p == 0)
		derivatives[0] = 0.0;
}

OpenedKnotVector openExtend(const LocalKnotVector& kv) {
	const int p = kv.degree();
	OpenedKnotVector out;
	out.degree = p;
	const double first = kv.supportMin();
	const double last = kv.supportMax();
	int multFirst = kv.multiplicityOf(first);
	int multLast = kv.multiplicityOf(last);

	out.target = p + 1 - multFirst;
	out.knots.assign(p + 1 - multFirst, first);
	out.knots.insert(out.knots.end(), kv.knots().begin(), kv.knots().end());
	out.knots.insert(out.knots.end(), p + 1 - multLast, last);
	return out;
}

std::vector<double> bezierRowFromOpen(const OpenedKnotVector& open, double a, double b) {
	const int p = open.degree;
	std::vector<double> U = open.knots;
	int n = static_cast<int>(U.size()) - p - 1;

	// coefficients of the target function in the current (refined) basis
	std::vector<double> c(n, 0.0);
	c[open.target] = 1.0;

	// distinct interior values
	std::vector<double> interior;
	for (double v : U)
		if (v > U.front() && v < U.back() && (interior.empty() || v != interior.back()))
			interior.push_back(v);

	for (double v : interior) {
		int mult = static_cast<int>(std::count(U.begin(), U.end(), v));
		while (mult < p) {
			// span index k: U[k] <= v < U[k+1]
			int k = static_cast<int>(std::upper_bound(U.begin(), U.end(), v) - U.begin()) - 1;
			auto alpha = [&](int j) -> double {
				if (j <= k - p)
					return 1.0;
				if (j >= k + 1)
					return 0.0;
				return (v - U[j]) / (U[j + p] - U[j]);
			};
			std::vector<double> cn(n + 1, 0.0);
			for (int i = 0; i <= n; i++) {
				double s = 0.0;
				if (i < n)
					s += c[i] * alpha(i);
				if (i > 0)
					s += c[i - 1] * (1.0 - alpha(i));
				cn[i] = s;
			}
			c = std::move(cn);
			U.insert(U.begin() + k + 1, v);
			n++;
			mult++;
		}
	}

	// locate the span containing [a,b] in the fully decomposed vector
	double mid = 0.5 * (a + b);
	int K = -1;
	for (int i = 0; i + 1 < static_cast<int>(U.size()); i++)
		if (U[i] <= mid && mid < U[i + 1])
			K = i;
	if (K < 0)
		throw invariant_error("bezier row: span not found");

	return std::vector<double>(c.begin() + (K - p), c.begin() + (K + 1));
}

std::vector<double> extractionRow(const LocalKnotVector& kv, double a, double b) {
	// [a,b] must be a knot span of kv
	bool found = false;
	for (int i = 0; i + 1 < kv.size(); i++)
		if (std::abs(kv[i] - a) <= LRMesh::kTol && std::abs(kv[i + 1] - b) <= LRMesh::kTol)
			found = true;
	if (!found)
		throw invariant_error("extraction row: [a,b] is not a knot span");
	return bezierRowFromOpen(openExtend(kv), a, b);
}

std::vector<double> remapRow(const std::vector<double>& row,
                             double a, double b, double c, double d) {
	const int p = static_cast<int>(row.size()) - 1;
	if (!(d - c > 1e-14))
		throw invariant_error("remap row: degenerate sub-span");
	if (std::abs(a - c) <= LRMesh::kTol && std::abs(b - d) <= LRMesh::kTol)
		return row;
	if (c < a - LRMesh::kTol || d > b + LRMesh::kTol)
		throw invariant_error("remap row: [c,d] not contained in [a,b]");

	// collocation at p+1 Chebyshev points of [c,d]
	Eigen::MatrixXd A(p + 1, p + 1);
	Eigen::VectorXd r(p + 1);
	std::vector<double> bv(p + 1);
	for (int k = 0; k <= p; k++) {
		double u = (p == 0) ? 0.5 : 0.5 * (1.0 - std::cos(M_PI * k / p));
		double t = c + (d - c) * u;
		bernstein(p, u, bv.data());
		for (int i = 0; i <= p; i++)
			A(k, i) = bv[i];
		bernstein(p, (t - a) / (b - a), bv.data());
		double s = 0.0;
		for (int i = 0; i <= p; i++)
			s += row[i] * bv[i];
		r(k) = s;
	}
	Eigen::VectorXd x = A.partialPivLu().solve(r);
	std::vector<double> out(p + 1);
	for (int i = 0; i <= p; i++)
		out[i] = x(i);
	return out;
}

namespace {

// The knot span of kv that contains the element extent [lo,hi]. No knot of a
// mesh function lies strictly inside an element of its support, so the span
// is unique.
void containingSpan(const LocalKnotVector& kv, double lo, double hi,
                    double& a, double& b) {
	double mid = 0.5 * (lo + hi);
	for (int i = 0; i + 1 < kv.size(); i++) {
		if (kv[i] <= mid && mid < kv[i + 1]) {
			a = kv[i];
			b = kv[i + 1];
			return;
		}
	}
	throw invariant_error("element operator: element outside function support");
}

} // namespace

ElementOperator buildElementOperator(const LRMesh& mesh, int element) {
	ElementOperator op;
	op.element = element;
	op.box = mesh.element(element);
	op.fns = mesh.elementSupports()[element];

	for (int fi : op.fns) {
		const LRFunction& f = mesh.function(fi);
		double ax, bx, ay, by;
		containingSpan(f.kx, op.box.x0, op.box.x1, ax, bx);
		containingSpan(f.ky, op.box.y0, op.box.y1, ay, by);
		std::vector<double> rx = extractionRow(f.kx, ax, bx);
		std::vector<double> ry = extractionRow(f.ky, ay, by);
		rx = remapRow(rx, ax, bx, op.box.x0, op.box.x1);
		ry = remapRow(ry, ay, by, op.box.y0, op.box.y1);
		op.rowX.push_back(std::move(rx));
		op.rowY.push_back(std::move(ry));
	}
	return op;
}

std::vector<ElementOperator> buildAllElementOperators(const LRMesh& mesh) {
	mesh.elementSupports(); // build the shared cache before going parallel
	std::vector<ElementOperator> ops(mesh.numElements());
#pragma omp parallel for schedule(dynamic)
	for (int e = 0; e < mesh.numElements(); e++)
		ops[e] = buildElementOperator(mesh, e);
	return ops;
}

void ElementOperator::evalScaled(const LRMesh& mesh, double xi, double eta,
                                 std::vector<double>& val,
                                 std::vector<double>& dXi,
                                 std::vector<double>& dEta) const {
	const int p = mesh.degreeX(), q = mesh.degreeY();
	const double lx = box.lenX(), ly = box.lenY();
	double bu[16], dbu[16], bv[16], dbv[16];
	bernstein(p, (xi - box.x0) / lx, bu, dbu);
	bernstein(q, (eta - box.y0) / ly, bv, dbv);

	const int n = count();
	val.resize(n);
	dXi.resize(n);
	dEta.resize(n);
	for (int a = 0; a < n; a++) {
		double nx = 0, dnx = 0, ny = 0, dny = 0;
		for (int i = 0; i <= p; i++) {
			nx += rowX[a][i] * bu[i];
			dnx += rowX[a][i] * dbu[i];
		}
		for (int j = 0; j <= q; j++) {
			ny += rowY[a][j] * bv[j];
			dny += rowY[a][j] * dbv[j];
		}
		double g = mesh.function(fns[a]).gamma;
		val[a] = g * nx * ny;
		dXi[a] = g * (dnx / lx) * ny;
		dEta[a] = g * nx * (dny / ly);
	}
}

void ElementOperator::evalRational(const LRMesh& mesh, double xi, double eta,
                                   std::vector<double>& val,
                                   std::vector<double>& dXi,
                                   std::vector<double>& dEta) const {
	evalScaled(mesh, xi, eta, val, dXi, dEta);
	const int n = count();
	double W = 0, Wx = 0, We = 0;
	std::vector<double> w(n);
	for (int a = 0; a < n; a++) {
		w[a] = mesh.function(fns[a]).weight();
		W += val[a] * w[a];
		Wx += dXi[a] * w[a];
		We += dEta[a] * w[a];
	}
	if (std::abs(W) < 1e-14)
		throw invariant_error("rational basis: zero weight sum");
	for (int a = 0; a < n; a++) {
		double v = val[a] * w[a];
		double vx = dXi[a] * w[a];
		double ve = dEta[a] * w[a];
		val[a] = v / W;
		dXi[a] = (vx - v * Wx / W) / W;
		dEta[a] = (ve - v * We / W) / W;
	}
}

void writeOperatorsCsv(const std::vector<ElementOperator>& ops,
                       const std::string& path) {
	std::ofstream os(path);
	if (!os)
		throw std::runtime_error("cannot write " + path);
	os << "element,function,direction,coefficients\n";
	char buf[64];
	auto writeRow = [&](int el, int fn, const char* dir, const std::vector<double>& row) {
		os << el << "," << fn << "," << dir;
		for (double c : row) {
			std::snprintf(buf, sizeof buf, ",%.17g", c);
			os << buf;
		}
		os << "\n";
	};
	for (const ElementOperator& op : ops)
		for (int a = 0; a < op.count(); a++) {
			writeRow(op.element, op.fns[a], "xi", op.rowX[a]);
			writeRow(op.element, op.fns[a], "eta", op.rowY[a]);
		}
}

} // namespace lrs
