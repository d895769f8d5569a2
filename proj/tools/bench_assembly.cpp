// Benchmark of the OpenMP-parallel element assembly against the serial
// reference path. Both must agree bitwise; the timing difference is the
// point of the exercise.

#include "lrs/builders.hpp"
#include "lrs/membrane.hpp"

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace lrs;

namespace {

double seconds() {
	using namespace std::chrono;
	return duration<double>(steady_clock::now().time_since_epoch()).count();
}

double benchmark(const MembraneModel& model, const SimState& state, const FemCache& cache,
                 const RigidSphere& sphere, const ContactParams& cp, ExecPolicy policy,
                 int reps, AssemblyResult& out) {
	double best = 1e300;
	for (int r = 0; r < reps; r++) {
		double t0 = seconds();
		out = assemble(model, state, cache, &sphere, &cp, policy);
		best = std::min(best, seconds() - t0);
	}
	return best;
}

} // namespace

int main(int argc, char** argv) {
	int nel = argc > 1 ? std::atoi(argv[1]) : 24;
	int reps = argc > 2 ? std::atoi(argv[2]) : 5;

	MembraneModel model;
	model.mu = 1.0;
	model.preStretch = 1.1;
	model.quadratureOrder = 5;
	model.edgeConstraints = {{PatchEdge::XiMin, {true, true, true}},
	                         {PatchEdge::XiMax, {true, true, true}},
	                         {PatchEdge::EtaMin, {true, true, true}},
	                         {PatchEdge::EtaMax, {true, true, true}}};
	model.baseLenX = 1.0 / nel;
	model.baseLenY = 1.0 / nel;
	model.initialMesh = buildSheetPatch(2, nel, nel, 1.0, 1.0);

	SimState state = makeState(model);
	FemCache cache;
	rebuildCache(model, state.mesh, cache);

	// deformed configuration with an active contact patch
	for (int i = 0; i < state.mesh.numFunctions(); i++) {
		Vec3 x = state.mesh.function(i).cps[1].spatial();
		x.z = 0.05 * std::sin(6.0 * x.x) * std::sin(5.0 * x.y);
		state.mesh.setControlPoint(i, 1, homogeneous(x, state.mesh.function(i).weight()));
	}
	RigidSphere sphere{{0.5, 0.5, 0.22}, 0.3};
	ContactParams cp{30.0, 2, model.baseLenX, model.baseLenY};

	AssemblyResult serial, parallel;
	double ts = benchmark(model, state, cache, sphere, cp, ExecPolicy::Serial, reps, serial);
	double tp = benchmark(model, state, cache, sphere, cp, ExecPolicy::Parallel, reps, parallel);

	double maxDiff = (serial.residual - parallel.residual).lpNorm<Eigen::Infinity>();
	Eigen::SparseMatrix<double> d = serial.tangent - parallel.tangent;
	double maxK = d.coeffs().size() ? d.coeffs().abs().maxCoeff() : 0.0;

	int threads = 1;
#ifdef _OPENMP
	threads = omp_get_max_threads();
#endif
	std::printf("mesh %dx%d, %d elements, %d dofs, %d threads\n", nel, nel,
	            state.mesh.numElements(), cache.dofs.numDofs, threads);
	std::printf("serial   %.4f s\n", ts);
	std::printf("parallel %.4f s  (speedup %.2fx)\n", tp, ts / tp);
	std::printf("bitwise residual diff %.3g, tangent diff %.3g\n", maxDiff, maxK);
	return (maxDiff == 0.0 && maxK == 0.0) ? 0 : 1;
}
