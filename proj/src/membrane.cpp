#include "lrs/membrane.hpp"

#include "lrs/quadrature.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <map>
#include <numeric>

namespace lrs {

SimState makeState(const MembraneModel& model) {
	SimState s;
	s.mesh = model.initialMesh;
	if (s.mesh.numChannels() < 2)
		s.mesh.addChannel();
	return s;
}

std::vector<Vec3> cartesianPoints(const LRMesh& mesh, int channel) {
	std::vector<Vec3> out(mesh.numFunctions());
	for (int i = 0; i < mesh.numFunctions(); i++)
		out[i] = mesh.function(i).cps[channel].spatial();
	return out;
}

namespace {

bool edgeMatches(const LRFunction& f, PatchEdge edge, const LRMesh& mesh) {
	const double tol = LRMesh::kTol;
	switch (edge) {
	case PatchEdge::XiMin: return std::abs(f.kx[f.kx.degree()] - mesh.xmin()) <= tol;
	case PatchEdge::XiMax: return std::abs(f.kx[1] - mesh.xmax()) <= tol;
	case PatchEdge::EtaMin: return std::abs(f.ky[f.ky.degree()] - mesh.ymin()) <= tol;
	case PatchEdge::EtaMax: return std::abs(f.ky[1] - mesh.ymax()) <= tol;
	}
	return false;
}

struct UnionFind {
	std::vector<int> parent;
	explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
	int find(int i) {
		while (parent[i] != i)
			i = parent[i] = parent[parent[i]];
		return i;
	}
	void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

DofMap buildDofMap(const MembraneModel& model, const LRMesh& mesh) {
	const int n = mesh.numFunctions();
	std::vector<std::array<bool, 3>> fixed(n, {false, false, false});

	for (int i = 0; i < n; i++) {
		const LRFunction& f = mesh.function(i);
		for (const EdgeConstraint& ec : model.edgeConstraints)
			if (edgeMatches(f, ec.edge, mesh))
				for (int c = 0; c < 3; c++)
					fixed[i][c] = fixed[i][c] || ec.fix[c];
		Vec3 X = f.cps[0].spatial();
		for (const PointPin& pin : model.pins)
			if (norm(X - pin.at) <= pin.tol)
				for (int c = 0; c < 3; c++)
					fixed[i][c] = fixed[i][c] || pin.fix[c];
	}

	UnionFind uf(n);
	if (model.coupling == CouplingMode::SeamAndPole) {
		// pole row: all eta-end-interpolatory functions act as one point
		int firstPole = -1;
		for (int i = 0; i < n; i++) {
			if (std::abs(mesh.function(i).ky[1] - mesh.ymax()) <= LRMesh::kTol) {
				if (firstPole < 0)
					firstPole = i;
				else
					uf.unite(i, firstPole);
			}
		}
		// seam: the xi-start column pairs with the xi-end column by eta knots
		std::map<std::vector<double>, int> left;
		for (int i = 0; i < n; i++) {
			const LRFunction& f = mesh.function(i);
			if (std::abs(f.kx[f.kx.degree()] - mesh.xmin()) <= LRMesh::kTol)
				left[f.ky.knots()] = i;
		}
		for (int i = 0; i < n; i++) {
			const LRFunction& f = mesh.function(i);
			if (std::abs(f.kx[1] - mesh.xmax()) <= LRMesh::kTol) {
				auto it = left.find(f.ky.knots());
				if (it == left.end())
					throw invariant_error("seam coupling: unmatched seam function "
					                      "(asymmetric refinement across the seam)");
				uf.unite(i, it->second);
			}
		}
		// coupled points must coincide in the reference configuration
		for (int i = 0; i < n; i++) {
			int r = uf.find(i);
			if (r != i) {
				Vec3 a = mesh.function(i).cps[0].spatial();
				Vec3 b = mesh.function(r).cps[0].spatial();
				if (norm(a - b) > 1e-9)
					throw invariant_error("coupling: grouped control points do not coincide");
			}
		}
	}

	// fixed flags propagate across a group
	std::vector<std::array<bool, 3>> groupFixed = fixed;
	for (int i = 0; i < n; i++) {
		int r = uf.find(i);
		for (int c = 0; c < 3; c++)
			groupFixed[r][c] = groupFixed[r][c] || fixed[i][c];
	}

	DofMap map;
	map.dofOf.assign(n, {-1, -1, -1});
	std::vector<std::array<int, 3>> repDof(n, {-1, -1, -1});
	for (int i = 0; i < n; i++) {
		if (uf.find(i) != i)
			continue;
		for (int c = 0; c < 3; c++)
			if (!groupFixed[i][c])
				repDof[i][c] = map.numDofs++;
	}
	for (int i = 0; i < n; i++)
		map.dofOf[i] = repDof[uf.find(i)];
	return map;
}

void rebuildCache(const MembraneModel& model, const LRMesh& mesh, FemCache& cache) {
	if (cache.meshVersion == mesh.version())
		return;
	cache.meshVersion = mesh.version();
	cache.dofs = buildDofMap(model, mesh);
	cache.operators = buildAllElementOperators(mesh);

	const GaussRule& rule = gaussRule(model.quadratureOrder);
	const int nq = model.quadratureOrder;
	const double lam2 = model.preStretch * model.preStretch;
	std::vector<Vec3> X = cartesianPoints(mesh, 0);

	cache.elements.assign(mesh.numElements(), {});
#pragma omp parallel for schedule(dynamic)
	for (int e = 0; e < mesh.numElements(); e++) {
		const ElementOperator& op = cache.operators[e];
		ElementData& ed = cache.elements[e];
		ed.element = e;
		ed.box = op.box;
		ed.fns = op.fns;
		ed.penaltyRatio = (model.baseLenX * model.baseLenY) / (ed.box.lenX() * ed.box.lenY());
		ed.qps.resize(nq * nq);
		for (int qj = 0; qj < nq; qj++)
			for (int qi = 0; qi < nq; qi++) {
				QuadPoint& qp = ed.qps[qj * nq + qi];
				qp.xi = ed.box.x0 + 0.5 * ed.box.lenX() * (1.0 + rule.points[qi]);
				qp.eta = ed.box.y0 + 0.5 * ed.box.lenY() * (1.0 + rule.points[qj]);
				qp.w = 0.25 * ed.box.lenX() * ed.box.lenY() * rule.weights[qi] * rule.weights[qj];
				op.evalRational(mesh, qp.xi, qp.eta, qp.N, qp.dNx, qp.dNe);

				Vec3 A1{}, A2{};
				for (int a = 0; a < op.count(); a++) {
					A1 += X[op.fns[a]] * qp.dNx[a];
					A2 += X[op.fns[a]] * qp.dNe[a];
				}
				// pre-stretch scales the pullback: A_eff = A / lambda^2
				double A11 = dot(A1, A1) / lam2;
				double A22 = dot(A2, A2) / lam2;
				double A12 = dot(A1, A2) / lam2;
				double det = A11 * A22 - A12 * A12;
				if (!(det > 0.0))
					throw degenerate_error("reference metric is singular");
				qp.Acon[0] = A22 / det;
				qp.Acon[1] = A11 / det;
				qp.Acon[2] = -A12 / det;
				qp.sqrtDetA = std::sqrt(det);
			}
	}
}

MetricData metrics(const QuadPoint& qp, const std::vector<Vec3>& x) {
	MetricData m;
	const int n = static_cast<int>(x.size());
	for (int a = 0; a < n; a++) {
		m.a1 += x[a] * qp.dNx[a];
		m.a2 += x[a] * qp.dNe[a];
	}
	m.amet[0] = dot(m.a1, m.a1);
	m.amet[1] = dot(m.a2, m.a2);
	m.amet[2] = dot(m.a1, m.a2);
	double det = m.amet[0] * m.amet[1] - m.amet[2] * m.amet[2];
	if (!(det > 0.0))
		throw degenerate_error("current metric is singular");
	m.acon[0] = m.amet[1] / det;
	m.acon[1] = m.amet[0] / det;
	m.acon[2] = -m.amet[2] / det;
	m.da = std::sqrt(det);
	m.Acon[0] = qp.Acon[0];
	m.Acon[1] = qp.Acon[1];
	m.Acon[2] = qp.Acon[2];
	m.J = m.da / qp.sqrtDetA;
	if (!(m.J > 0.0))
		throw degenerate_error("non-positive surface stretch");
	Vec3 c = cross(m.a1, m.a2);
	m.n = c / norm(c);
	return m;
}

std::array<double, 3> membraneStress(const MetricData& m, double mu) {
	double J2 = m.J * m.J;
	return {mu / m.J * (m.Acon[0] - m.acon[0] / J2),
	        mu / m.J * (m.Acon[1] - m.acon[1] / J2),
	        mu / m.J * (m.Acon[2] - m.acon[2] / J2)};
}

namespace {

struct ElementBlock {
	std::vector<double> R, K, G, dV;
	double V = 0.0;
	Vec3 net;
	bool active = false;
	double minGap = 0.0;
	bool hasGap = false;
};

void computeElementBlock(const MembraneModel& model, const ElementData& ed,
                         const std::vector<Vec3>& xAll, double pressure,
                         const RigidSphere* sphere, const ContactParams* contact,
                         ElementBlock& blk) {
	const int n = static_cast<int>(ed.fns.size());
	const int m3 = 3 * n;
	blk.R.assign(m3, 0.0);
	blk.K.assign(m3 * m3, 0.0);
	const bool vc = model.volumeConstraint;
	if (vc) {
		blk.G.assign(m3, 0.0);
		blk.dV.assign(m3, 0.0);
	}

	std::vector<Vec3> x(n);
	for (int a = 0; a < n; a++)
		x[a] = xAll[ed.fns[a]];

	double epsEl = 0.0;
	if (sphere && contact)
		epsEl = elementPenalty(*contact, ed.box.lenX(), ed.box.lenY());

	std::vector<double> dtau(3 * m3); // per (b,j): dtau11, dtau22, dtau12
	for (const QuadPoint& qp : ed.qps) {
		MetricData mt = metrics(qp, x);
		double J2 = mt.J * mt.J;
		double tau[3] = {model.mu * (mt.Acon[0] - mt.acon[0] / J2),
		                 model.mu * (mt.Acon[1] - mt.acon[1] / J2),
		                 model.mu * (mt.Acon[2] - mt.acon[2] / J2)};
		const double F = qp.w * qp.sqrtDetA;
		const Vec3 tang[2] = {mt.a1, mt.a2};
		const double acon[2][2] = {{mt.acon[0], mt.acon[2]}, {mt.acon[2], mt.acon[1]}};

		// internal force: tau^{ab} N_{a,alpha} (a_beta)_i
		for (int a = 0; a < n; a++) {
			double da0 = qp.dNx[a], da1 = qp.dNe[a];
			for (int i = 0; i < 3; i++)
				blk.R[3 * a + i] += F * (tau[0] * da0 * mt.a1[i] + tau[1] * da1 * mt.a2[i] +
				                         tau[2] * (da0 * mt.a2[i] + da1 * mt.a1[i]));
		}

		// material tangent: dtau^{ab}(b,j) from the exact variation of tau
		const double cmu = model.mu / J2;
		for (int b = 0; b < n; b++) {
			double der[2] = {qp.dNx[b], qp.dNe[b]};
			for (int j = 0; j < 3; j++) {
				double dmet[2][2];
				dmet[0][0] = 2.0 * der[0] * tang[0][j];
				dmet[1][1] = 2.0 * der[1] * tang[1][j];
				dmet[0][1] = dmet[1][0] = der[0] * tang[1][j] + der[1] * tang[0][j];
				double d11 = 0, d22 = 0, d12 = 0;
				for (int g = 0; g < 2; g++)
					for (int d = 0; d < 2; d++) {
						double dm = dmet[g][d];
						d11 += (acon[0][g] * acon[0][d] + acon[0][0] * acon[g][d]) * dm;
						d22 += (acon[1][g] * acon[1][d] + acon[1][1] * acon[g][d]) * dm;
						d12 += (acon[0][g] * acon[1][d] + acon[0][1] * acon[g][d]) * dm;
					}
				dtau[3 * (3 * b + j) + 0] = cmu * d11;
				dtau[3 * (3 * b + j) + 1] = cmu * d22;
				dtau[3 * (3 * b + j) + 2] = cmu * d12;
			}
		}
		for (int a = 0; a < n; a++) {
			double da0 = qp.dNx[a], da1 = qp.dNe[a];
			for (int i = 0; i < 3; i++) {
				double B0 = da0 * mt.a1[i];
				double B1 = da1 * mt.a2[i];
				double B2 = da0 * mt.a2[i] + da1 * mt.a1[i];
				double* Krow = &blk.K[(3 * a + i) * m3];
				for (int bj = 0; bj < m3; bj++)
					Krow[bj] += F * (B0 * dtau[3 * bj + 0] + B1 * dtau[3 * bj + 1] +
					                 B2 * dtau[3 * bj + 2]);
			}
			// geometric part: tau^{ab} N_{a,a} N_{b,b} delta_ij
			for (int b = 0; b < n; b++) {
				double g = F * (tau[0] * da0 * qp.dNx[b] + tau[1] * da1 * qp.dNe[b] +
				                tau[2] * (da0 * qp.dNe[b] + da1 * qp.dNx[b]));
				for (int i = 0; i < 3; i++)
					blk.K[(3 * a + i) * m3 + (3 * b + i)] += g;
			}
		}

		Vec3 xq{};
		for (int a = 0; a < n; a++)
			xq += x[a] * qp.N[a];

		// follower pressure and enclosed-volume terms
		if (vc) {
			Vec3 cr = cross(mt.a1, mt.a2);
			blk.V += qp.w / 3.0 * dot(xq, cr);
			Vec3 a2xx = cross(mt.a2, xq);
			Vec3 xxa1 = cross(xq, mt.a1);
			for (int b = 0; b < n; b++)
				for (int j = 0; j < 3; j++) {
					blk.G[3 * b + j] += qp.w * qp.N[b] * cr[j];
					blk.dV[3 * b + j] += qp.w / 3.0 *
						(qp.N[b] * cr[j] + qp.dNx[b] * a2xx[j] + qp.dNe[b] * xxa1[j]);
				}
			for (int a = 0; a < n; a++)
				for (int i = 0; i < 3; i++)
					blk.R[3 * a + i] -= pressure * qp.w * qp.N[a] * cr[i];
			static const Vec3 unit[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
			for (int b = 0; b < n; b++)
				for (int j = 0; j < 3; j++) {
					Vec3 dcr = cross(unit[j], mt.a2) * qp.dNx[b] +
					           cross(mt.a1, unit[j]) * qp.dNe[b];
					for (int a = 0; a < n; a++)
						for (int i = 0; i < 3; i++)
							blk.K[(3 * a + i) * m3 + (3 * b + j)] -=
								pressure * qp.w * qp.N[a] * dcr[i];
				}
		}

		// penalty contact against the rigid sphere
		if (sphere && contact) {
			SphereGap gp = sphereGap(xq, *sphere);
			if (!blk.hasGap || gp.gn < blk.minGap) {
				blk.minGap = gp.gn;
				blk.hasGap = true;
			}
			if (gp.gn < 0.0) {
				blk.active = true;
				ContactTraction tr = contactTraction(xq, *sphere, epsEl);
				double wda = qp.w * mt.da;
				blk.net += tr.t * wda;
				for (int a = 0; a < n; a++)
					for (int i = 0; i < 3; i++)
						blk.R[3 * a + i] -= wda * qp.N[a] * tr.t[i];
				for (int b = 0; b < n; b++) {
					double der[2] = {qp.dNx[b], qp.dNe[b]};
					for (int j = 0; j < 3; j++) {
						// d(sqrt det a)/dx_bj
						double dda = mt.da *
							(mt.acon[0] * der[0] * mt.a1[j] + mt.acon[1] * der[1] * mt.a2[j] +
							 mt.acon[2] * (der[0] * mt.a2[j] + der[1] * mt.a1[j]));
						for (int a = 0; a < n; a++) {
							double Nq = qp.N[a];
							for (int i = 0; i < 3; i++) {
								double dt = tr.dTdx[3 * i + j] * qp.N[b];
								blk.K[(3 * a + i) * m3 + (3 * b + j)] -=
									Nq * (wda * dt + qp.w * dda * tr.t[i]);
							}
						}
					}
				}
			}
		}
	}
}

} // namespace

AssemblyResult assemble(const MembraneModel& model, const SimState& state,
                        const FemCache& cache, const RigidSphere* sphere,
                        const ContactParams* contact, ExecPolicy policy) {
	const int nel = static_cast<int>(cache.elements.size());
	std::vector<Vec3> xAll = cartesianPoints(state.mesh, 1);
	std::vector<ElementBlock> blocks(nel);

	std::exception_ptr firstError = nullptr;
	if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic)
		for (int e = 0; e < nel; e++) {
			try {
				computeElementBlock(model, cache.elements[e], xAll, state.pressure,
				                    sphere, contact, blocks[e]);
			} catch (...) {
#pragma omp critical
				if (!firstError)
					firstError = std::current_exception();
			}
		}
	} else {
		for (int e = 0; e < nel; e++) {
			try {
				computeElementBlock(model, cache.elements[e], xAll, state.pressure,
				                    sphere, contact, blocks[e]);
			} catch (...) {
				if (!firstError)
					firstError = std::current_exception();
			}
		}
	}
	if (firstError)
		std::rethrow_exception(firstError);

	// serial scatter keeps results independent of the thread count
	const DofMap& dofs = cache.dofs;
	AssemblyResult out;
	out.residual = Eigen::VectorXd::Zero(dofs.numDofs);
	if (model.volumeConstraint) {
		out.pressureColumn = Eigen::VectorXd::Zero(dofs.numDofs);
		out.volumeGradient = Eigen::VectorXd::Zero(dofs.numDofs);
	}
	std::vector<Eigen::Triplet<double>> trips;
	bool anyGap = false;
	for (int e = 0; e < nel; e++) {
		const ElementData& ed = cache.elements[e];
		const ElementBlock& blk = blocks[e];
		const int n = static_cast<int>(ed.fns.size());
		for (int a = 0; a < n; a++)
			for (int i = 0; i < 3; i++) {
				int gi = dofs.dofOf[ed.fns[a]][i];
				if (gi < 0)
					continue;
				out.residual[gi] += blk.R[3 * a + i];
				if (model.volumeConstraint) {
					out.pressureColumn[gi] -= blk.G[3 * a + i];
					out.volumeGradient[gi] += blk.dV[3 * a + i];
				}
				for (int b = 0; b < n; b++)
					for (int j = 0; j < 3; j++) {
						int gj = dofs.dofOf[ed.fns[b]][j];
						if (gj >= 0)
							trips.emplace_back(gi, gj, blk.K[(3 * a + i) * (3 * n) + 3 * b + j]);
					}
			}
		out.volume += blk.V;
		out.netContact += blk.net;
		if (blk.active)
			out.activeElements++;
		if (blk.hasGap && (!anyGap || blk.minGap < out.minGap)) {
			out.minGap = blk.minGap;
			anyGap = true;
		}
	}
	out.tangent.resize(dofs.numDofs, dofs.numDofs);
	out.tangent.setFromTriplets(trips.begin(), trips.end());
	return out;
}

ElementContact contactElementForce(const MembraneModel& model, const SimState& state,
                                   const FemCache& cache, int element,
                                   const RigidSphere& sphere, const ContactParams& params) {
	const ElementData& ed = cache.elements[element];
	const int n = static_cast<int>(ed.fns.size());
	ElementContact out;
	out.force.assign(3 * n, 0.0);
	out.tangent.assign(9 * n * n, 0.0);
	out.activeQp.assign(ed.qps.size(), 0);

	std::vector<Vec3> x(n);
	for (int a = 0; a < n; a++)
		x[a] = state.mesh.function(ed.fns[a]).cps[1].spatial();
	double eps = elementPenalty(params, ed.box.lenX(), ed.box.lenY());

	for (size_t q = 0; q < ed.qps.size(); q++) {
		const QuadPoint& qp = ed.qps[q];
		Vec3 xq{};
		for (int a = 0; a < n; a++)
			xq += x[a] * qp.N[a];
		ContactTraction tr = contactTraction(xq, sphere, eps);
		if (!tr.active)
			continue;
		out.activeQp[q] = 1;
		MetricData mt = metrics(qp, x);
		double wda = qp.w * mt.da;
		out.net += tr.t * wda;
		for (int a = 0; a < n; a++)
			for (int i = 0; i < 3; i++)
				out.force[3 * a + i] += wda * qp.N[a] * tr.t[i];
		for (int b = 0; b < n; b++) {
			double der[2] = {qp.dNx[b], qp.dNe[b]};
			for (int j = 0; j < 3; j++) {
				double dda = mt.da *
					(mt.acon[0] * der[0] * mt.a1[j] + mt.acon[1] * der[1] * mt.a2[j] +
					 mt.acon[2] * (der[0] * mt.a2[j] + der[1] * mt.a1[j]));
				for (int a = 0; a < n; a++)
					for (int i = 0; i < 3; i++)
						out.tangent[(3 * a + i) * (3 * n) + 3 * b + j] +=
							qp.N[a] * (wda * tr.dTdx[3 * i + j] * qp.N[b] +
							           qp.w * dda * tr.t[i]);
			}
		}
	}
	return out;
}

double enclosedVolume(const MembraneModel& model, const SimState& state,
                      const FemCache& cache, Eigen::VectorXd* gradient) {
	if (!model.closureDeclared)
		throw invariant_error("enclosed volume: surface closure not declared");
	std::vector<Vec3> xAll = cartesianPoints(state.mesh, 1);
	double V = 0.0;
	if (gradient)
		gradient->setZero(cache.dofs.numDofs);
	for (const ElementData& ed : cache.elements) {
		const int n = static_cast<int>(ed.fns.size());
		std::vector<Vec3> x(n);
		for (int a = 0; a < n; a++)
			x[a] = xAll[ed.fns[a]];
		for (const QuadPoint& qp : ed.qps) {
			Vec3 a1{}, a2{}, xq{};
			for (int a = 0; a < n; a++) {
				a1 += x[a] * qp.dNx[a];
				a2 += x[a] * qp.dNe[a];
				xq += x[a] * qp.N[a];
			}
			Vec3 cr = cross(a1, a2);
			V += qp.w / 3.0 * dot(xq, cr);
			if (gradient) {
				Vec3 a2xx = cross(a2, xq);
				Vec3 xxa1 = cross(xq, a1);
				for (int b = 0; b < n; b++)
					for (int j = 0; j < 3; j++) {
						int g = cache.dofs.dofOf[ed.fns[b]][j];
						if (g >= 0)
							(*gradient)[g] += qp.w / 3.0 *
								(qp.N[b] * cr[j] + qp.dNx[b] * a2xx[j] + qp.dNe[b] * xxa1[j]);
					}
			}
		}
	}
	return V;
}

namespace {

void applyIncrement(SimState& state, const DofMap& dofs, const Eigen::VectorXd& du) {
	for (int i = 0; i < state.mesh.numFunctions(); i++) {
		const LRFunction& f = state.mesh.function(i);
		Vec3 x = f.cps[1].spatial();
		bool moved = false;
		for (int c = 0; c < 3; c++) {
			int g = dofs.dofOf[i][c];
			if (g >= 0) {
				x[c] += du[g];
				moved = true;
			}
		}
		if (moved)
			state.mesh.setControlPoint(i, 1, homogeneous(x, f.weight()));
	}
}

} // namespace

SolveReport newtonSolve(const MembraneModel& model, SimState& state, FemCache& cache,
                        const RigidSphere* sphere, const ContactParams* contact,
                        const NewtonControls& controls) {
	rebuildCache(model, state.mesh, cache);
	SolveReport rep;
	const bool vc = model.volumeConstraint;
	const double tolR = controls.tolResidual * model.forceScale;
	const double tolV = controls.tolVolume * model.volumeScale;

	for (int iter = 0; iter <= controls.maxIterations; iter++) {
		AssemblyResult asmr;
		try {
			asmr = assemble(model, state, cache, sphere, contact, controls.policy);
		} catch (const degenerate_error&) {
			return rep; // step cut handled by the caller
		}
		double rnorm = asmr.residual.size() ? asmr.residual.lpNorm<Eigen::Infinity>() : 0.0;
		double cres = vc ? asmr.volume - state.volumeTarget : 0.0;
		if (controls.log)
			controls.log(iter, rnorm, std::abs(cres));
		rep.iterations = iter;
		rep.residualNorm = rnorm;
		rep.netContact = asmr.netContact;
		rep.activeElements = asmr.activeElements;
		rep.minGap = asmr.minGap;
		rep.volume = asmr.volume;
		if (rnorm <= tolR && std::abs(cres) <= tolV) {
			rep.converged = true;
			return rep;
		}
		if (iter == controls.maxIterations || !std::isfinite(rnorm) ||
		    rnorm > 1e10 * model.forceScale)
			return rep;

		const int n = cache.dofs.numDofs;
		const int nsys = n + (vc ? 1 : 0);
		std::vector<Eigen::Triplet<double>> trips;
		trips.reserve(static_cast<size_t>(asmr.tangent.nonZeros()) + 2 * n + 1);
		for (int k = 0; k < asmr.tangent.outerSize(); k++)
			for (Eigen::SparseMatrix<double>::InnerIterator it(asmr.tangent, k); it; ++it)
				trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
				                   it.value());
		Eigen::VectorXd rhs(nsys);
		rhs.head(n) = -asmr.residual;
		if (vc) {
			for (int i = 0; i < n; i++) {
				if (asmr.pressureColumn[i] != 0.0)
					trips.emplace_back(i, n, asmr.pressureColumn[i]);
				if (asmr.volumeGradient[i] != 0.0)
					trips.emplace_back(n, i, asmr.volumeGradient[i]);
			}
			rhs[n] = -cres;
		}
		Eigen::SparseMatrix<double> A(nsys, nsys);
		A.setFromTriplets(trips.begin(), trips.end());
		A.makeCompressed();
		Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
		if (lu.info() != Eigen::Success)
			return rep; // singular tangent
		Eigen::VectorXd du = lu.solve(rhs);
		if (!du.allFinite())
			return rep;

		applyIncrement(state, cache.dofs, du.head(n));
		if (vc)
			state.pressure += du[n];
	}
	return rep;
}

SolveReport loadStep(const MembraneModel& model, SimState& state, FemCache& cache,
                     double volumeTarget, std::optional<Vec3> sphereTarget,
                     const RigidSphere* sphereTemplate, const ContactParams* contact,
                     const NewtonControls& controls) {
	const SimState initial = state;
	const double vFrom = state.volumeTarget;
	const Vec3 cFrom = sphereTemplate ? sphereTemplate->center : Vec3{};

	SimState lastGood = state;
	RigidSphere sphere = sphereTemplate ? *sphereTemplate : RigidSphere{};
	SolveReport rep;

	double t = 0.0, dt = 1.0;
	int halvings = 0;
	while (t < 1.0 - 1e-12) {
		double tNext = std::min(1.0, t + dt);
		state.volumeTarget = vFrom + (volumeTarget - vFrom) * tNext;
		if (sphereTarget)
			sphere.center = cFrom + (*sphereTarget - cFrom) * tNext;
		rep = newtonSolve(model, state, cache,
		                  sphereTemplate ? &sphere : nullptr, contact, controls);
		rep.halvings = halvings;
		if (rep.converged) {
			t = tNext;
			lastGood = state;
		} else {
			halvings++;
			if (halvings > controls.maxHalvings) {
				state = initial; // roll back the whole step
				rep.converged = false;
				rep.halvings = halvings;
				return rep;
			}
			state = lastGood;
			dt *= 0.5;
		}
	}
	return rep;
}

} // namespace lrs
