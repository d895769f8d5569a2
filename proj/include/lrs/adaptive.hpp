#pragma once

#include "lrs/membrane.hpp"

#include <string>

namespace lrs {

// Distances are multiples of element lengths: d_ref and d_safe scale with
// the previous-depth element length d_e0/2^(d-1), d_crs with the base
// element length d_e0.
struct AdaptiveParams {
	int maxDepth = 0;
	double refMultiple = 0.0;  // d_ref^d = refMultiple * d_e0 / 2^(d-1)
	double safeMultiple = 2.0; // d_safe^d = safeMultiple * d_e0 / 2^(d-1)
	double crsMultiple = 4.0;  // d_crs = crsMultiple * d_e0
};

void validateAdaptiveParams(const AdaptiveParams& p);

// Refinement depth of an element: halvings of the base element length
// (maximum over the two directions).
int elementDepth(const MembraneModel& model, const ElementBox& box);
std::vector<int> depthMap(const MembraneModel& model, const LRMesh& mesh);

// Elements with at least one penetrating quadrature point.
std::vector<int> contactDomain(const MembraneModel& model, const SimState& state,
                               const FemCache& cache, const RigidSphere& sphere);

// Parametric region covered by a set of elements.
std::vector<ElementBox> elementBoxes(const LRMesh& mesh, const std::vector<int>& elements);

// Primitive meshlines that bisect every depth-(d-1) element within the
// contact region enlarged by d_ref^d.
std::vector<Meshline> planRefinement(const MembraneModel& model, const LRMesh& mesh,
                                     const std::vector<ElementBox>& contactRegion,
                                     const AdaptiveParams& params, int depth);

// True when a contact-active element lies within d_safe of an element
// coarser than the target depth (inclusive at the band edge).
bool needsRefine(const MembraneModel& model, const LRMesh& mesh,
                 const std::vector<int>& contactElements, const AdaptiveParams& params);

// True when a refined element lies strictly beyond d_crs from the contact
// region (any refined element counts when there is no contact).
bool needsCoarsen(const MembraneModel& model, const LRMesh& mesh,
                  const std::vector<int>& contactElements, const AdaptiveParams& params);

// Runs refinement passes d=1..maxDepth on the state mesh (both control
// point channels refine in lockstep). Returns the number of lines inserted.
int refineTowardContact(const MembraneModel& model, SimState& state,
                        const std::vector<ElementBox>& contactRegion,
                        const AdaptiveParams& params);

struct CoarsenReport {
	bool performed = false;
	std::string reason;          // set when aborted
	int recovered = 0;           // functions copied verbatim from the old mesh
	int fitted = 0;              // functions taken from the least-squares fit
	double contactMaxDelta = 0.0; // max control point change on the contact domain
};

// Six-step coarsen/rebuild: store, recover the reference mesh, interpolate
// the deformed surface, re-refine at the contact, recompute contact flags,
// recover unchanged control points verbatim.
CoarsenReport coarsenRebuild(const MembraneModel& model, SimState& state,
                             const std::vector<ElementBox>& contactRegion,
                             const AdaptiveParams& params);

struct AdaptiveEvent {
	int step = 0;
	std::string type; // "refine", "coarsen" or "none"
	int elementsBefore = 0, elementsAfter = 0;
	int dofsBefore = 0, dofsAfter = 0;
	double fN = 0.0, fT = 0.0;
	double coarsenContactDelta = 0.0;
};

struct StepOutcome {
	SolveReport solve;
	std::vector<AdaptiveEvent> events;
};

// One quasi-static step: move the sphere, re-solve, then apply refinement
// and coarsening events as detected, re-solving after each.
StepOutcome adaptiveStep(const MembraneModel& model, SimState& state, FemCache& cache,
                         RigidSphere& sphere, const Vec3& sphereTarget,
                         const ContactParams& contact, const AdaptiveParams& params,
                         const NewtonControls& controls);

} // namespace lrs
