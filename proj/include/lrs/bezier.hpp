#pragma once

#include "lrs/lr_mesh.hpp"

#include <string>
#include <vector>

namespace lrs {

// Bernstein polynomials B_{i,p} on [0,1]; values and first derivatives.
void bernstein(int p, double t, double* values, double* derivatives = nullptr);

struct OpenedKnotVector {
	std::vector<double> knots; // first/last value at multiplicity p+1
	int degree = 0;
	int target = 0; // index of the function equal to the original one
};

// Extends a local knot vector with repeated boundary entries until it is
// open. The original function is the `target` function of the result.
OpenedKnotVector openExtend(const LocalKnotVector& kv);

// Bernstein coefficients of the target function of an opened knot vector,
// restricted to one of its knot spans [a,b], obtained by inserting knots
// until all interior entries have multiplicity p.
std::vector<double> bezierRowFromOpen(const OpenedKnotVector& open, double a, double b);

// Row of the spline-to-Bernstein decomposition of a local knot vector over
// the knot span [a,b] (which must be a span of kv).
std::vector<double> extractionRow(const LocalKnotVector& kv, double a, double b);

// Remaps Bernstein coefficients from span [a,b] to a sub-span [c,d] via the
// linear operator built from Bernstein collocation at p+1 Chebyshev points.
// Identity when the spans coincide.
std::vector<double> remapRow(const std::vector<double>& row,
                             double a, double b, double c, double d);

// Per-element Bezier extraction rows of every supporting function. Rows are
// plain B-spline coefficients; rationalization (division by the weight
// function) happens at evaluation time from homogeneous sums.
struct ElementOperator {
	int element = -1;
	ElementBox box;
	std::vector<int> fns;
	std::vector<std::vector<double>> rowX; // per function, degX+1 coefficients
	std::vector<std::vector<double>> rowY; // per function, degY+1 coefficients

	int count() const { return static_cast<int>(fns.size()); }

	// Scaled B-spline basis gamma_a*B_a and parametric derivatives at
	// (xi,eta) inside the element, in the order of `fns`.
	void evalScaled(const LRMesh& mesh, double xi, double eta,
	                std::vector<double>& val,
	                std::vector<double>& dXi,
	                std::vector<double>& dEta) const;

	// Rational scaled basis (gamma_a w_a B_a / W) and derivatives; these are
	// the shape functions used for assembly and sum to one.
	void evalRational(const LRMesh& mesh, double xi, double eta,
	                  std::vector<double>& val,
	                  std::vector<double>& dXi,
	                  std::vector<double>& dEta) const;
};

ElementOperator buildElementOperator(const LRMesh& mesh, int element);

// Builds operators for all elements (OpenMP-parallel; results are
// independent of thread count).
std::vector<ElementOperator> buildAllElementOperators(const LRMesh& mesh);

// Debug dump: element id, function id, direction, row coefficients.
void writeOperatorsCsv(const std::vector<ElementOperator>& ops,
                       const std::string& path);

} // namespace lrs
