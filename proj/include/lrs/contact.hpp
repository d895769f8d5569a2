#pragma once

#include "lrs/vec.hpp"

#include <stdexcept>

namespace lrs {

struct RigidSphere {
	Vec3 center;
	double radius = 1.0;
};

struct ContactParams {
	double basePenalty = 0.0; // eps_n^0, force/length^3
	int degree = 2;
	// reference (initial-mesh) element lengths per parametric direction
	double baseLenX = 1.0;
	double baseLenY = 1.0;
};

struct SphereGap {
	double gn = 0.0; // signed: negative means penetration
	Vec3 normal;     // outward sphere normal at the projection point
	Vec3 projection; // closest point on the sphere surface
};

// Closest-point projection onto an analytic sphere. Throws when x coincides
// with the center.
SphereGap sphereGap(const Vec3& x, const RigidSphere& sphere);

// Element-size-scaled penalty eps_n^el = eps0 * (l0x*l0y/(lx*ly))^(p-1).
double elementPenalty(const ContactParams& params, double lenX, double lenY);

// Penalty traction t_n = -eps*gn*n for gn < 0, zero otherwise, and its
// derivative w.r.t. the surface point, d t_n / d x (3x3, row major).
struct ContactTraction {
	Vec3 t;
	double dTdx[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
	bool active = false;
};
ContactTraction contactTraction(const Vec3& x, const RigidSphere& sphere, double eps);

} // namespace lrs
