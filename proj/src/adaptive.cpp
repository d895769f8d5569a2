#include "lrs/adaptive.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace lrs {

void validateAdaptiveParams(const AdaptiveParams& p) {
	if (p.maxDepth < 0)
		throw invariant_error("adaptive: max depth must be >= 0");
	if (p.refMultiple < 0 || p.safeMultiple < 0)
		throw invariant_error("adaptive: d_ref and d_safe must be >= 0");
	for (int d = 1; d <= std::max(1, p.maxDepth); d++) {
		double safeAbs = p.safeMultiple / std::pow(2.0, d - 1);
		if (!(p.crsMultiple > safeAbs))
			throw invariant_error("adaptive: d_crs must exceed d_safe at every depth");
	}
}

namespace {

int depthOf(double baseLen, double len) {
	return static_cast<int>(std::lround(std::log2(baseLen / len)));
}

// closed intersection of `el` with `region` dilated by (dx,dy)
bool touchesDilated(const ElementBox& region, const ElementBox& el, double dx, double dy) {
	return region.x0 - dx <= el.x1 + LRMesh::kTol && el.x0 <= region.x1 + dx + LRMesh::kTol &&
	       region.y0 - dy <= el.y1 + LRMesh::kTol && el.y0 <= region.y1 + dy + LRMesh::kTol;
}

// open (strict) intersection with the dilated region
bool overlapsDilated(const ElementBox& region, const ElementBox& el, double dx, double dy) {
	return region.x0 - dx < el.x1 - LRMesh::kTol && el.x0 < region.x1 + dx - LRMesh::kTol &&
	       region.y0 - dy < el.y1 - LRMesh::kTol && el.y0 < region.y1 + dy - LRMesh::kTol;
}

} // namespace

int elementDepth(const MembraneModel& model, const ElementBox& box) {
	return std::max(depthOf(model.baseLenX, box.lenX()), depthOf(model.baseLenY, box.lenY()));
}

namespace {

// an element counts as fully refined to depth d only when both directions
// have been halved d times (spilled minspan lines split one direction only)
int fullDepth(const MembraneModel& model, const ElementBox& box) {
	return std::min(depthOf(model.baseLenX, box.lenX()), depthOf(model.baseLenY, box.lenY()));
}

} // namespace

std::vector<int> depthMap(const MembraneModel& model, const LRMesh& mesh) {
	std::vector<int> d(mesh.numElements());
	for (int e = 0; e < mesh.numElements(); e++)
		d[e] = elementDepth(model, mesh.element(e));
	return d;
}

std::vector<int> contactDomain(const MembraneModel& model, const SimState& state,
                               const FemCache& cache, const RigidSphere& sphere) {
	(void)model;
	std::vector<Vec3> x = cartesianPoints(state.mesh, 1);
	std::vector<int> out;
	for (const ElementData& ed : cache.elements) {
		bool active = false;
		for (const QuadPoint& qp : ed.qps) {
			Vec3 xq{};
			for (size_t a = 0; a < ed.fns.size(); a++)
				xq += x[ed.fns[a]] * qp.N[a];
			if (sphereGap(xq, sphere).gn < 0.0) {
				active = true;
				break;
			}
		}
		if (active)
			out.push_back(ed.element);
	}
	return out;
}

std::vector<ElementBox> elementBoxes(const LRMesh& mesh, const std::vector<int>& elements) {
	std::vector<ElementBox> out;
	out.reserve(elements.size());
	for (int e : elements)
		out.push_back(mesh.element(e));
	return out;
}

std::vector<Meshline> planRefinement(const MembraneModel& model, const LRMesh& mesh,
                                     const std::vector<ElementBox>& contactRegion,
                                     const AdaptiveParams& params, int depth) {
	std::vector<Meshline> lines;
	if (depth < 1 || depth > params.maxDepth || contactRegion.empty())
		return lines;
	const double scale = std::pow(2.0, depth - 1);
	const double dx = params.refMultiple * model.baseLenX / scale;
	const double dy = params.refMultiple * model.baseLenY / scale;

	for (int e = 0; e < mesh.numElements(); e++) {
		const ElementBox& el = mesh.element(e);
		bool inRegion = false;
		for (const ElementBox& r : contactRegion)
			if (overlapsDilated(r, el, dx, dy)) {
				inRegion = true;
				break;
			}
		if (!inRegion)
			continue;
		if (depthOf(model.baseLenX, el.lenX()) < depth)
			lines.push_back(minspanLine(mesh, e, LineDir::Vertical));
		if (depthOf(model.baseLenY, el.lenY()) < depth)
			lines.push_back(minspanLine(mesh, e, LineDir::Horizontal));
	}

	// merge collinear overlapping/touching candidates
	std::sort(lines.begin(), lines.end(), [](const Meshline& a, const Meshline& b) {
		if (a.dir != b.dir)
			return a.dir == LineDir::Vertical;
		if (a.fixed != b.fixed)
			return a.fixed < b.fixed;
		return a.start < b.start;
	});
	std::vector<Meshline> merged;
	for (const Meshline& l : lines) {
		if (!merged.empty() && merged.back().dir == l.dir &&
		    std::abs(merged.back().fixed - l.fixed) <= LRMesh::kTol &&
		    l.start <= merged.back().stop + LRMesh::kTol) {
			merged.back().stop = std::max(merged.back().stop, l.stop);
		} else {
			merged.push_back(l);
		}
	}
	return merged;
}

bool needsRefine(const MembraneModel& model, const LRMesh& mesh,
                 const std::vector<int>& contactElements, const AdaptiveParams& params) {
	if (params.maxDepth == 0 || contactElements.empty())
		return false;
	const double scale = std::pow(2.0, params.maxDepth - 1);
	const double dx = params.safeMultiple * model.baseLenX / scale;
	const double dy = params.safeMultiple * model.baseLenY / scale;
	for (int ce : contactElements) {
		const ElementBox& cb = mesh.element(ce);
		for (int e = 0; e < mesh.numElements(); e++) {
			if (fullDepth(model, mesh.element(e)) >= params.maxDepth)
				continue;
			if (touchesDilated(cb, mesh.element(e), dx, dy))
				return true;
		}
	}
	return false;
}

bool needsCoarsen(const MembraneModel& model, const LRMesh& mesh,
                  const std::vector<int>& contactElements, const AdaptiveParams& params) {
	const double dx = params.crsMultiple * model.baseLenX;
	const double dy = params.crsMultiple * model.baseLenY;
	for (int e = 0; e < mesh.numElements(); e++) {
		if (elementDepth(model, mesh.element(e)) == 0)
			continue;
		bool within = false;
		for (int ce : contactElements)
			if (touchesDilated(mesh.element(ce), mesh.element(e), dx, dy)) {
				within = true;
				break;
			}
		if (!within)
			return true; // strictly beyond d_crs of every contact element
	}
	return false;
}

int refineTowardContact(const MembraneModel& model, SimState& state,
                        const std::vector<ElementBox>& contactRegion,
                        const AdaptiveParams& params) {
	int inserted = 0;
	for (int d = 1; d <= params.maxDepth; d++) {
		std::vector<Meshline> lines = planRefinement(model, state.mesh, contactRegion, params, d);
		for (const Meshline& l : lines) {
			auto v = state.mesh.version();
			state.mesh.insertMeshline(l);
			if (state.mesh.version() != v)
				inserted++;
		}
	}
	return inserted;
}

CoarsenReport coarsenRebuild(const MembraneModel& model, SimState& state,
                             const std::vector<ElementBox>& contactRegion,
                             const AdaptiveParams& params) {
	CoarsenReport rep;
	const LRMesh old = state.mesh; // step 1: store the configuration

	// step 2: recover the undeformed reference mesh
	LRMesh fresh = model.initialMesh;
	if (fresh.numChannels() < 2)
		fresh.addChannel();

	// step 3: least-squares fit of the deformed surface at Greville points
	// and element midpoints of the coarse mesh
	std::vector<std::pair<double, double>> samples;
	for (const LRFunction& f : fresh.functions())
		samples.emplace_back(f.grevilleX(), f.grevilleY());
	for (const ElementBox& e : fresh.elements())
		samples.emplace_back(e.midX(), e.midY());

	const int nf = fresh.numFunctions();
	const int ns = static_cast<int>(samples.size());
	Eigen::MatrixXd M(ns, nf);
	Eigen::MatrixXd rhs(ns, 3);
	for (int s = 0; s < ns; s++) {
		double xi = samples[s].first, eta = samples[s].second;
		double W = 0.0;
		std::vector<double> gb(nf);
		for (int a = 0; a < nf; a++) {
			const LRFunction& f = fresh.function(a);
			double nx, dnx, ny, dny;
			f.kx.evaluate(xi, nx, dnx);
			f.ky.evaluate(eta, ny, dny);
			gb[a] = f.gamma * nx * ny * f.weight();
			W += gb[a];
		}
		for (int a = 0; a < nf; a++)
			M(s, a) = gb[a] / W;
		Vec3 xf = old.surfacePoint(xi, eta, 1);
		rhs(s, 0) = xf.x;
		rhs(s, 1) = xf.y;
		rhs(s, 2) = xf.z;
	}
	Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
	qr.setThreshold(1e-10);
	if (qr.rank() < nf) {
		rep.reason = "interpolation system is rank deficient; coarsening aborted";
		std::fprintf(stderr, "warning: %s\n", rep.reason.c_str());
		return rep;
	}
	Eigen::MatrixXd fit = qr.solve(rhs);
	for (int a = 0; a < nf; a++)
		fresh.setControlPoint(a, 1,
			homogeneous({fit(a, 0), fit(a, 1), fit(a, 2)}, fresh.function(a).weight()));

	// step 4: local re-refinement within d_ref of the contact domain
	SimState rebuilt;
	rebuilt.mesh = std::move(fresh);
	rebuilt.pressure = state.pressure;
	rebuilt.step = state.step;
	rebuilt.volumeTarget = state.volumeTarget;
	refineTowardContact(model, rebuilt, contactRegion, params);

	// step 5 is a no-op for frictionless contact: the active flags are
	// geometric and recomputed from the new configuration.

	// step 6: recover control points of functions whose discretization is
	// unchanged between the old and the new mesh
	for (int a = 0; a < rebuilt.mesh.numFunctions(); a++) {
		const LRFunction& f = rebuilt.mesh.function(a);
		int oldIdx = old.findFunction(f.kx, f.ky);
		if (oldIdx >= 0 && std::abs(old.function(oldIdx).gamma - f.gamma) <= 1e-12) {
			rebuilt.mesh.setControlPoint(a, 1, old.function(oldIdx).cps[1]);
			rep.recovered++;
		} else {
			rep.fitted++;
		}
	}

	// contact-domain control points must be unaffected by the procedure
	for (int a = 0; a < rebuilt.mesh.numFunctions(); a++) {
		const LRFunction& f = rebuilt.mesh.function(a);
		bool onContact = false;
		for (const ElementBox& r : contactRegion)
			if (f.kx.supportMin() < r.x1 && r.x0 < f.kx.supportMax() &&
			    f.ky.supportMin() < r.y1 && r.y0 < f.ky.supportMax()) {
				onContact = true;
				break;
			}
		if (!onContact)
			continue;
		int oldIdx = old.findFunction(f.kx, f.ky);
		if (oldIdx >= 0) {
			Vec4 d = old.function(oldIdx).cps[1] - f.cps[1];
			double delta = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z + d.w * d.w);
			rep.contactMaxDelta = std::max(rep.contactMaxDelta, delta);
		} else {
			// the contact-domain discretization changed: report loudly
			rep.contactMaxDelta = std::max(rep.contactMaxDelta, 1.0);
		}
	}

	state.mesh = std::move(rebuilt.mesh);
	rep.performed = true;
	return rep;
}

StepOutcome adaptiveStep(const MembraneModel& model, SimState& state, FemCache& cache,
                         RigidSphere& sphere, const Vec3& sphereTarget,
                         const ContactParams& contact, const AdaptiveParams& params,
                         const NewtonControls& controls) {
	StepOutcome out;
	out.solve = loadStep(model, state, cache, state.volumeTarget, sphereTarget,
	                     &sphere, &contact, controls);
	sphere.center = sphereTarget;
	if (!out.solve.converged || params.maxDepth == 0)
		return out;

	auto forces = [&](const SolveReport& r) {
		return std::pair<double, double>(std::abs(r.netContact.z),
		                                 std::hypot(r.netContact.x, r.netContact.y));
	};

	std::vector<int> contactEls = contactDomain(model, state, cache, sphere);
	if (needsRefine(model, state.mesh, contactEls, params)) {
		AdaptiveEvent ev;
		ev.type = "refine";
		ev.elementsBefore = state.mesh.numElements();
		ev.dofsBefore = cache.dofs.numDofs;
		const SimState saved = state;
		int inserted =
			refineTowardContact(model, state, elementBoxes(state.mesh, contactEls), params);
		if (inserted > 0) {
			rebuildCache(model, state.mesh, cache);
			out.solve = newtonSolve(model, state, cache, &sphere, &contact, controls);
			ev.elementsAfter = state.mesh.numElements();
			ev.dofsAfter = cache.dofs.numDofs;
			std::tie(ev.fN, ev.fT) = forces(out.solve);
			out.events.push_back(ev);
			if (!out.solve.converged) {
				state = saved; // roll mesh and state back together
				rebuildCache(model, state.mesh, cache);
				return out;
			}
			contactEls = contactDomain(model, state, cache, sphere);
		}
	}

	if (needsCoarsen(model, state.mesh, contactEls, params)) {
		AdaptiveEvent ev;
		ev.type = "coarsen";
		ev.elementsBefore = state.mesh.numElements();
		ev.dofsBefore = cache.dofs.numDofs;
		const SimState saved = state;
		const SolveReport preEvent = out.solve;
		CoarsenReport cr = coarsenRebuild(model, state,
		                                  elementBoxes(state.mesh, contactEls), params);
		if (cr.performed) {
			rebuildCache(model, state.mesh, cache);
			out.solve = newtonSolve(model, state, cache, &sphere, &contact, controls);
			if (!out.solve.converged) {
				// coarsening is optional: keep the converged refined state
				std::fprintf(stderr,
				             "warning: re-solve after coarsening diverged; keeping the "
				             "refined mesh at step %d\n", state.step);
				state = saved;
				rebuildCache(model, state.mesh, cache);
				out.solve = preEvent;
			} else {
				ev.elementsAfter = state.mesh.numElements();
				ev.dofsAfter = cache.dofs.numDofs;
				ev.coarsenContactDelta = cr.contactMaxDelta;
				std::tie(ev.fN, ev.fT) = forces(out.solve);
				out.events.push_back(ev);
			}
		}
	}
	return out;
}

} // namespace lrs
