#pragma once

#include <array>
#include <cmath>

namespace lrs {

struct Vec3 {
	double x = 0.0, y = 0.0, z = 0.0;

	double& operator[](int i) { return (&x)[i]; }
	double operator[](int i) const { return (&x)[i]; }

	Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
	Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
	Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
	Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
	Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
	Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
	Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
	return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

// Homogeneous control point (x*w, y*w, z*w, w).
struct Vec4 {
	double x = 0.0, y = 0.0, z = 0.0, w = 0.0;

	double& operator[](int i) { return (&x)[i]; }
	double operator[](int i) const { return (&x)[i]; }

	Vec4 operator+(const Vec4& o) const { return {x + o.x, y + o.y, z + o.z, w + o.w}; }
	Vec4 operator-(const Vec4& o) const { return {x - o.x, y - o.y, z - o.z, w - o.w}; }
	Vec4 operator*(double s) const { return {x * s, y * s, z * s, w * s}; }
	Vec4& operator+=(const Vec4& o) { x += o.x; y += o.y; z += o.z; w += o.w; return *this; }

	Vec3 spatial() const { return {x / w, y / w, z / w}; }
};

inline Vec4 homogeneous(const Vec3& p, double w) { return {p.x * w, p.y * w, p.z * w, w}; }

} // namespace lrs
