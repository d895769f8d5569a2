#include "lrs/builders.hpp"

#include <cmath>
#include <string>

namespace lrs {

LRMesh buildSheetPatch(int degree, int nelX, int nelY, double lx, double ly) {
	auto openUniform = [&](int nel, double len) {
		std::vector<double> k(degree + 1, 0.0);
		for (int i = 1; i < nel; i++)
			k.push_back(len * i / nel);
		k.insert(k.end(), degree + 1, len);
		return k;
	};
	std::vector<double> kx = openUniform(nelX, lx);
	std::vector<double> ky = openUniform(nelY, ly);
	int nx = static_cast<int>(kx.size()) - degree - 1;
	int ny = static_cast<int>(ky.size()) - degree - 1;

	auto greville = [&](const std::vector<double>& k, int i) {
		double s = 0.0;
		for (int j = 1; j <= degree; j++)
			s += k[i + j];
		return s / degree;
	};
	std::vector<Vec4> cps;
	cps.reserve(nx * ny);
	for (int j = 0; j < ny; j++)
		for (int i = 0; i < nx; i++)
			cps.push_back(homogeneous({greville(kx, i), greville(ky, j), 0.0}, 1.0));
	return LRMesh::tensor(degree, degree, kx, ky, cps);
}

LRMesh buildHemispherePatch(double radius) {
	const double s = std::sqrt(2.0) / 2.0;
	std::vector<double> kx = {0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 4};
	std::vector<double> ky = {0, 0, 0, 1, 1, 1};

	// full circle: 9 control points on the circumscribing square
	const double cx[9] = {1, 1, 0, -1, -1, -1, 0, 1, 1};
	const double cy[9] = {0, 1, 1, 1, 0, -1, -1, -1, 0};
	const double cw[9] = {1, s, 1, s, 1, s, 1, s, 1};
	// quarter-circle profile from equator to pole in the (r,z) plane
	const double pr[3] = {1, 1, 0};
	const double pz[3] = {0, 1, 1};
	const double pw[3] = {1, s, 1};

	std::vector<Vec4> cps;
	cps.reserve(27);
	for (int j = 0; j < 3; j++)
		for (int i = 0; i < 9; i++) {
			Vec3 p{radius * pr[j] * cx[i], radius * pr[j] * cy[i], radius * pz[j]};
			cps.push_back(homogeneous(p, cw[i] * pw[j]));
		}
	return LRMesh::tensor(2, 2, kx, ky, cps);
}

LRMesh buildSphereOctantPatch() {
	const double s = std::sqrt(2.0) / 2.0;
	std::vector<double> kv = {0, 0, 0, 1, 1, 1};
	std::vector<Vec4> cps = {
		homogeneous({1, 0, 0}, 1), homogeneous({1, 1, 0}, s), homogeneous({0, 1, 0}, 1),
		homogeneous({1, 0, 1}, s), homogeneous({1, 1, 1}, 0.5), homogeneous({0, 1, 1}, s),
		homogeneous({0, 0, 1}, 1), homogeneous({0, 0, 1}, s), homogeneous({0, 0, 1}, 1),
	};
	return LRMesh::tensor(2, 2, kv, kv, cps);
}

void uniformRefine(LRMesh& mesh, int times) {
	for (int t = 0; t < times; t++) {
		std::vector<double> xs = mesh.boundariesX();
		std::vector<double> ys = mesh.boundariesY();
		for (size_t i = 0; i + 1 < xs.size(); i++)
			mesh.insertMeshline({LineDir::Vertical, 0.5 * (xs[i] + xs[i + 1]),
			                     mesh.ymin(), mesh.ymax(), 1});
		for (size_t j = 0; j + 1 < ys.size(); j++)
			mesh.insertMeshline({LineDir::Horizontal, 0.5 * (ys[j] + ys[j + 1]),
			                     mesh.xmin(), mesh.xmax(), 1});
	}
}

void setUniformResolution(LRMesh& mesh, int nx, int ny) {
	std::vector<double> xs = mesh.boundariesX();
	std::vector<double> ys = mesh.boundariesY();
	int mx = static_cast<int>(xs.size()) - 1;
	int my = static_cast<int>(ys.size()) - 1;
	if (nx % mx != 0 || ny % my != 0)
		throw invariant_error("uniform resolution must be a multiple of the base mesh: " +
		                      std::to_string(mx) + "x" + std::to_string(my));
	int fx = nx / mx, fy = ny / my;
	for (size_t i = 0; i + 1 < xs.size(); i++)
		for (int k = 1; k < fx; k++)
			mesh.insertMeshline({LineDir::Vertical, xs[i] + (xs[i + 1] - xs[i]) * k / fx,
			                     mesh.ymin(), mesh.ymax(), 1});
	for (size_t j = 0; j + 1 < ys.size(); j++)
		for (int k = 1; k < fy; k++)
			mesh.insertMeshline({LineDir::Horizontal, ys[j] + (ys[j + 1] - ys[j]) * k / fy,
			                     mesh.xmin(), mesh.xmax(), 1});
}

} // namespace lrs
