#pragma once

#include "lrs/bezier.hpp"
#include "lrs/contact.hpp"
#include "lrs/lr_mesh.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <memory>
#include <optional>

namespace lrs {

enum class PatchEdge { XiMin, XiMax, EtaMin, EtaMax };

// Structural edge constraint: fixes components of every control point that
// interpolates the given patch edge (these stay well defined under
// refinement, unlike geometric predicates).
struct EdgeConstraint {
	PatchEdge edge;
	std::array<bool, 3> fix = {false, false, false};
};

// Fixes components of the control points whose reference position matches
// `at` (used for the isolated pins that remove rigid-body modes).
struct PointPin {
	Vec3 at;
	std::array<bool, 3> fix = {false, false, false};
	double tol = 1e-9;
};

// Closed-surface couplings for the hemisphere patch: the two seam columns
// and the degenerate pole row share degrees of freedom.
enum class CouplingMode { None, SeamAndPole };

struct MembraneModel {
	double mu = 1.0;          // shear modulus, force/length
	double preStretch = 1.0;  // isotropic pre-stretch folded into the pullback
	int quadratureOrder = 5;  // Gauss points per direction
	std::vector<EdgeConstraint> edgeConstraints;
	std::vector<PointPin> pins;
	CouplingMode coupling = CouplingMode::None;
	bool volumeConstraint = false;
	bool closureDeclared = false; // surface + coordinate planes enclose a region
	double forceScale = 1.0;      // mu*L0^2; residual tolerance reference
	double volumeScale = 1.0;     // max(|Vbar|, L0^3)

	LRMesh initialMesh; // pristine reference (single channel), for coarsening
	double baseLenX = 1.0, baseLenY = 1.0; // initial parametric element sizes
};

// Deformed configuration: mesh channel 0 holds the reference geometry,
// channel 1 the current control points (same weights). The mesh travels
// with the state so refinement transforms both channels in lockstep.
struct SimState {
	LRMesh mesh;
	double pressure = 0.0;
	int step = 0;
	double volumeTarget = 0.0;
};

SimState makeState(const MembraneModel& model);

struct degenerate_error : std::runtime_error {
	using std::runtime_error::runtime_error;
};

// Reduced system numbering. Components map to a free dof id or -1 (fixed);
// coupled control points share ids.
struct DofMap {
	int numDofs = 0;
	std::vector<std::array<int, 3>> dofOf;
};
DofMap buildDofMap(const MembraneModel& model, const LRMesh& mesh);

// Per-quadrature-point tables: rational shape functions, their parametric
// derivatives and the effective (pre-stretch scaled) reference metrics.
struct QuadPoint {
	double xi = 0, eta = 0, w = 0;
	std::vector<double> N, dNx, dNe;
	double Acon[3] = {0, 0, 0}; // effective A^11, A^22, A^12
	double sqrtDetA = 0;        // effective reference area density
};

struct ElementData {
	int element = -1;
	ElementBox box;
	std::vector<int> fns;
	std::vector<QuadPoint> qps;
	double penaltyRatio = 1.0; // (l0x*l0y)/(lx*ly)
};

struct FemCache {
	std::uint64_t meshVersion = ~0ull;
	DofMap dofs;
	std::vector<ElementData> elements;
	std::vector<ElementOperator> operators;
};
void rebuildCache(const MembraneModel& model, const LRMesh& mesh, FemCache& cache);

// Current-configuration metrics at a quadrature point.
struct MetricData {
	Vec3 a1, a2, n;
	double amet[3] = {0, 0, 0}; // a_11, a_22, a_12
	double acon[3] = {0, 0, 0}; // a^11, a^22, a^12
	double Acon[3] = {0, 0, 0};
	double da = 0; // sqrt(det a)
	double J = 0;  // surface stretch
};
MetricData metrics(const QuadPoint& qp, const std::vector<Vec3>& x);

// Incompressible Neo-Hookean membrane: sigma^{ab} = mu/J (A^{ab} - a^{ab}/J^2).
std::array<double, 3> membraneStress(const MetricData& m, double mu);

enum class ExecPolicy { Serial, Parallel };

struct AssemblyResult {
	Eigen::VectorXd residual;        // free dofs
	Eigen::VectorXd pressureColumn;  // dR/dp = -G (empty without constraint)
	Eigen::VectorXd volumeGradient;  // dV/du
	Eigen::SparseMatrix<double> tangent;
	double volume = 0.0;
	Vec3 netContact;
	int activeElements = 0;
	double minGap = 0.0;
};

AssemblyResult assemble(const MembraneModel& model, const SimState& state,
                        const FemCache& cache,
                        const RigidSphere* sphere = nullptr,
                        const ContactParams* contact = nullptr,
                        ExecPolicy policy = ExecPolicy::Parallel);

// Per-element contact quantities: force vector, per-quadrature-point active
// flags and the consistent tangent contribution (3n x 3n, row major).
struct ElementContact {
	std::vector<double> force;
	std::vector<std::uint8_t> activeQp;
	std::vector<double> tangent;
	Vec3 net;
};
ElementContact contactElementForce(const MembraneModel& model, const SimState& state,
                                   const FemCache& cache, int element,
                                   const RigidSphere& sphere, const ContactParams& params);

// Enclosed volume (1/3) Int x . n da over the surface; exact for regions
// closed by coordinate planes through the origin. Throws unless the model
// declares the closure.
double enclosedVolume(const MembraneModel& model, const SimState& state,
                      const FemCache& cache, Eigen::VectorXd* gradient = nullptr);

struct NewtonControls {
	double tolResidual = 1e-9; // relative to forceScale, max-norm
	double tolVolume = 1e-10;  // relative to volumeScale
	int maxIterations = 25;
	int maxHalvings = 8;
	ExecPolicy policy = ExecPolicy::Parallel;
	std::function<void(int, double, double)> log; // iter, |R|, |C|
};

struct SolveReport {
	bool converged = false;
	int iterations = 0;
	int halvings = 0;
	double residualNorm = 0.0;
	Vec3 netContact;
	int activeElements = 0;
	double minGap = 0.0;
	double volume = 0.0;
};

// Newton solve at fixed targets (sphere position, volume target in state).
SolveReport newtonSolve(const MembraneModel& model, SimState& state, FemCache& cache,
                        const RigidSphere* sphere, const ContactParams* contact,
                        const NewtonControls& controls);

// One quasi-static load step with step halving on divergence: interpolates
// volume target and sphere center between the previous converged state and
// the target. On failure the state is rolled back and converged=false.
SolveReport loadStep(const MembraneModel& model, SimState& state, FemCache& cache,
                     double volumeTarget, std::optional<Vec3> sphereTarget,
                     const RigidSphere* sphereTemplate, const ContactParams* contact,
                     const NewtonControls& controls);

// Current Cartesian control points of a channel.
std::vector<Vec3> cartesianPoints(const LRMesh& mesh, int channel);

} // namespace lrs
