#include "lrs/contact.hpp"

#include <cmath>

namespace lrs {

SphereGap sphereGap(const Vec3& x, const RigidSphere& sphere) {
	Vec3 d = x - sphere.center;
	double r = norm(d);
	if (r < 1e-14 * sphere.radius)
		throw std::domain_error("sphere gap: point coincides with the center");
	SphereGap g;
	g.normal = d / r;
	g.projection = sphere.center + g.normal * sphere.radius;
	g.gn = r - sphere.radius;
	return g;
}

double elementPenalty(const ContactParams& params, double lenX, double lenY) {
	double ratio = (params.baseLenX * params.baseLenY) / (lenX * lenY);
	return params.basePenalty * std::pow(ratio, params.degree - 1);
}

ContactTraction contactTraction(const Vec3& x, const RigidSphere& sphere, double eps) {
	ContactTraction out;
	SphereGap g = sphereGap(x, sphere);
	if (g.gn >= 0.0)
		return out;
	out.active = true;
	out.t = g.normal * (-eps * g.gn);
	// t = -eps*g*n with g = |d|-R, n = d/|d|
	// dt/dx = -eps*(n n^T) - eps*g*(I - n n^T)/|d|
	double r = g.gn + sphere.radius;
	for (int i = 0; i < 3; i++)
		for (int j = 0; j < 3; j++) {
			double nn = g.normal[i] * g.normal[j];
			double proj = (i == j ? 1.0 : 0.0) - nn;
			out.dTdx[3 * i + j] = -eps * nn - eps * g.gn * proj / r;
		}
	return out;
}

} // namespace lrs
