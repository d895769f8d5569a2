#include "lrs/local_knots.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lrs {

LocalKnotVector::LocalKnotVector(std::vector<double> knots, int degree)
	: knots_(std::move(knots)), degree_(degree) {
	if (degree_ < 0)
		throw invariant_error("local knot vector: negative degree");
	if (static_cast<int>(knots_.size()) != degree_ + 2)
		throw invariant_error("local knot vector: expected p+2 knots, got " +
		                      std::to_string(knots_.size()));
	if (!std::is_sorted(knots_.begin(), knots_.end()))
		throw invariant_error("local knot vector: knots not non-decreasing");
	if (!(knots_.front() < knots_.back()))
		throw invariant_error("local knot vector: empty support");
	// multiplicity of any value must not exceed p+1
	int run = 1;
	for (size_t i = 1; i < knots_.size(); i++) {
		run = (knots_[i] == knots_[i - 1]) ? run + 1 : 1;
		if (run > degree_ + 1)
			throw invariant_error("local knot vector: knot multiplicity exceeds p+1");
	}
}

int LocalKnotVector::multiplicityOf(double value, double tol) const {
	int m = 0;
	for (double k : knots_)
		if (std::abs(k - value) <= tol)
			m++;
	return m;
}

double LocalKnotVector::greville() const {
	double s = 0.0;
	for (int i = 1; i <= degree_; i++)
		s += knots_[i];
	return degree_ > 0 ? s / degree_ : 0.5 * (knots_.front() + knots_.back());
}

void LocalKnotVector::evaluate(double xi, double& value, double& derivative) const {
	value = 0.0;
	derivative = 0.0;
	const int p = degree_;
	const std::vector<double>& t = knots_;
	if (xi < t.front() || xi > t.back())
		return;

	// Evaluation at the right end of the support is taken as the limit from
	// the left, so end-interpolatory functions report their full value there.
	const bool at_right = (xi >= t.back());

	// triangular table over the p+1 degree-0 spans of the local vector
	std::vector<double> N(p + 1, 0.0);
	for (int j = 0; j <= p; j++) {
		bool inside = at_right ? (t[j] < xi && xi <= t[j + 1])
		                       : (t[j] <= xi && xi < t[j + 1]);
		N[j] = inside ? 1.0 : 0.0;
	}
	double left0 = 0.0, left1 = 0.0; // degree p-1 values feeding the derivative
	for (int r = 1; r <= p; r++) {
		if (r == p) {
			left0 = N[0];
			left1 = N[1];
		}
		for (int j = 0; j + r <= p; j++) {
			double d1 = t[j + r] - t[j];
			double d2 = t[j + r + 1] - t[j + 1];
			double a = (d1 > 0.0) ? (xi - t[j]) / d1 * N[j] : 0.0;
			double b = (d2 > 0.0) ? (t[j + r + 1] - xi) / d2 * N[j + 1] : 0.0;
			N[j] = a + b;
		}
	}
	value = N[0];
	if (p > 0) {
		double d1 = t[p] - t[0];
		double d2 = t[p + 1] - t[1];
		double da = (d1 > 0.0) ? left0 / d1 : 0.0;
		double db = (d2 > 0.0) ? left1 / d2 : 0.0;
		derivative = p * (da - db);
	}
}

} // namespace lrs
