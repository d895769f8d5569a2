#pragma once

#include <stdexcept>
#include <vector>

namespace lrs {

// One univariate B-spline basis function described by its local knot vector
// of p+2 non-decreasing entries.
class LocalKnotVector {
public:
	LocalKnotVector() = default;
	LocalKnotVector(std::vector<double> knots, int degree);

	int degree() const { return degree_; }
	int size() const { return static_cast<int>(knots_.size()); }
	double operator[](int i) const { return knots_[i]; }
	const std::vector<double>& knots() const { return knots_; }

	double supportMin() const { return knots_.front(); }
	double supportMax() const { return knots_.back(); }

	// Number of entries equal to value (within tol).
	int multiplicityOf(double value, double tol = 1e-12) const;

	// Knot average of the p interior entries.
	double greville() const;

	// Value and first derivative at xi via the Cox-de Boor recursion.
	// Outside [first,last] both are zero. 0/0 terms evaluate to 0.
	void evaluate(double xi, double& value, double& derivative) const;

	bool operator==(const LocalKnotVector& o) const {
		return degree_ == o.degree_ && knots_ == o.knots_;
	}

private:
	std::vector<double> knots_;
	int degree_ = 0;
};

struct invariant_error : std::runtime_error {
	using std::runtime_error::runtime_error;
};

} // namespace lrs
