#include "lrs/scenario.hpp"

#include "lrs/builders.hpp"
#include "lrs/mesh_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace lrs {

using nlohmann::json;

namespace {

double wallSeconds() {
	using namespace std::chrono;
	return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void requireKeys(const json& j, const std::set<std::string>& allowed,
                 const std::string& where) {
	for (auto it = j.begin(); it != j.end(); ++it)
		if (!allowed.count(it.key()))
			throw config_error("unknown key \"" + it.key() + "\" in " + where);
}

std::string fmt(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

} // namespace

ScenarioConfig parseConfig(const std::string& text) {
	json j;
	try {
		j = json::parse(text);
	} catch (const std::exception& e) {
		throw config_error(std::string("config is not valid JSON: ") + e.what());
	}
	requireKeys(j, {"scenario", "L0", "R", "mu", "E0", "penalty0", "pre_stretch",
	                "degree", "mesh", "quadrature", "max_depth", "d_ref", "d_safe",
	                "d_crs", "steps", "seed"},
	            "config");

	ScenarioConfig c;
	c.scenario = j.at("scenario").get<std::string>();
	if (c.scenario != "inflate" && c.scenario != "indent" && c.scenario != "slide")
		throw config_error("unknown scenario \"" + c.scenario + "\"");

	c.L0 = j.value("L0", 1.0);
	c.R = j.value("R", c.scenario == "inflate" ? 1.0 : c.L0);
	c.mu = j.value("mu", 1.0);
	c.E0 = j.value("E0", 3.0 * c.mu);
	c.penalty0 = j.value("penalty0", 10.0 * c.E0 / c.L0);
	if (!(c.L0 > 0) || !(c.R > 0) || !(c.mu > 0) || !(c.E0 > 0) || !(c.penalty0 > 0))
		throw config_error("physical parameters must be positive");

	double psDefault = c.scenario == "indent" ? 1.1 : (c.scenario == "slide" ? 1.25 : 1.0);
	c.preStretch = j.value("pre_stretch", psDefault);
	if (!(c.preStretch >= 1.0))
		throw config_error("pre_stretch must be >= 1");

	c.degree = j.value("degree", c.scenario == "indent" ? 3 : 2);
	if (c.degree < 2 || c.degree > 4)
		throw config_error("degree must be 2, 3 or 4");
	if (c.scenario == "inflate" && c.degree != 2)
		throw config_error("the hemisphere patch is biquadratic; degree must be 2");

	if (j.contains("mesh")) {
		auto m = j.at("mesh");
		if (!m.is_array() || m.size() != 2)
			throw config_error("mesh must be [nx, ny]");
		c.meshX = m[0];
		c.meshY = m[1];
	} else {
		if (c.scenario == "inflate") {
			c.meshX = 8;
			c.meshY = 8;
		} else if (c.scenario == "indent") {
			c.meshX = 4;
			c.meshY = 4;
		} else {
			c.meshX = 16;
			c.meshY = 4;
		}
	}
	if (c.meshX < 1 || c.meshY < 1)
		throw config_error("mesh counts must be positive");

	c.quadrature = j.value("quadrature", c.scenario == "inflate" ? 3 : 5);
	if (c.quadrature < 2 || c.quadrature > 10)
		throw config_error("quadrature order out of range");

	c.adaptive.maxDepth = j.value("max_depth", c.scenario == "inflate" ? 0 : 2);
	c.adaptive.refMultiple = j.value("d_ref", c.scenario == "slide" ? 3.0 : 0.0);
	c.adaptive.safeMultiple = j.value("d_safe", 2.0);
	c.adaptive.crsMultiple = j.value("d_crs", 4.0);
	validateAdaptiveParams(c.adaptive);

	if (j.contains("steps")) {
		const json& s = j.at("steps");
		if (c.scenario == "inflate") {
			requireKeys(s, {"volume_factor_max", "num_steps"}, "steps");
			c.steps.volumeFactorMax = s.value("volume_factor_max", 10.0);
			c.steps.volumeSteps = s.value("num_steps", 18);
			if (!(c.steps.volumeFactorMax > 1.0) || c.steps.volumeSteps < 1)
				throw config_error("inflate schedule must grow the volume in >= 1 steps");
		} else if (c.scenario == "indent") {
			requireKeys(s, {"z_start", "z_end", "num_steps"}, "steps");
			c.steps.zStart = s.value("z_start", 1.02);
			c.steps.zEnd = s.value("z_end", 0.5);
			c.steps.indentSteps = s.value("num_steps", 26);
			if (c.steps.indentSteps < 1 || !(c.steps.zStart > c.steps.zEnd))
				throw config_error("indent schedule must move the sphere down in >= 1 steps");
		} else {
			requireKeys(s, {"z_down", "down_steps", "x_end", "slide_steps"}, "steps");
			c.steps.slideZ = s.value("z_down", 0.5);
			c.steps.downSteps = s.value("down_steps", 8);
			c.steps.slideXEnd = s.value("x_end", 7.0);
			c.steps.slideSteps = s.value("slide_steps", 60);
			if (c.steps.downSteps < 1 || c.steps.slideSteps < 1)
				throw config_error("slide schedule must be non-empty");
		}
	}
	c.seed = j.value("seed", 0ull);
	return c;
}

ScenarioConfig loadConfig(const std::string& path) {
	std::ifstream is(path);
	if (!is)
		throw config_error("cannot read config file " + path);
	std::stringstream ss;
	ss << is.rdbuf();
	return parseConfig(ss.str());
}

std::string resolvedConfigJson(const ScenarioConfig& c) {
	json j;
	j["scenario"] = c.scenario;
	j["L0"] = c.L0;
	j["R"] = c.R;
	j["mu"] = c.mu;
	j["E0"] = c.E0;
	j["penalty0"] = c.penalty0;
	j["pre_stretch"] = c.preStretch;
	j["degree"] = c.degree;
	j["mesh"] = {c.meshX, c.meshY};
	j["quadrature"] = c.quadrature;
	j["max_depth"] = c.adaptive.maxDepth;
	j["d_ref"] = c.adaptive.refMultiple;
	j["d_safe"] = c.adaptive.safeMultiple;
	j["d_crs"] = c.adaptive.crsMultiple;
	if (c.scenario == "inflate")
		j["steps"] = {{"volume_factor_max", c.steps.volumeFactorMax},
		              {"num_steps", c.steps.volumeSteps}};
	else if (c.scenario == "indent")
		j["steps"] = {{"z_start", c.steps.zStart},
		              {"z_end", c.steps.zEnd},
		              {"num_steps", c.steps.indentSteps}};
	else
		j["steps"] = {{"z_down", c.steps.slideZ},
		              {"down_steps", c.steps.downSteps},
		              {"x_end", c.steps.slideXEnd},
		              {"slide_steps", c.steps.slideSteps}};
	j["seed"] = c.seed;
	return j.dump(1, '\t');
}

MembraneModel makeInflateModel(const ScenarioConfig& cfg, int uniformDepth) {
	int f = 1 << std::max(0, uniformDepth);
	LRMesh mesh = buildHemispherePatch(cfg.R);
	setUniformResolution(mesh, cfg.meshX * f, cfg.meshY * f);

	MembraneModel m;
	m.mu = cfg.mu;
	m.preStretch = 1.0;
	m.quadratureOrder = cfg.quadrature;
	m.edgeConstraints = {{PatchEdge::EtaMin, {false, false, true}}}; // equator on z=0
	// kill the in-plane rigid modes, leaving the radial motion free
	m.pins = {{{cfg.R, 0, 0}, {false, true, false}},
	          {{-cfg.R, 0, 0}, {false, true, false}},
	          {{0, cfg.R, 0}, {true, false, false}}};
	m.coupling = CouplingMode::SeamAndPole;
	m.volumeConstraint = true;
	m.closureDeclared = true;
	m.forceScale = cfg.mu * cfg.R * cfg.R;
	m.volumeScale = 2.0 * M_PI * cfg.R * cfg.R * cfg.R / 3.0;
	m.baseLenX = (mesh.xmax() - mesh.xmin()) / (cfg.meshX * f);
	m.baseLenY = (mesh.ymax() - mesh.ymin()) / (cfg.meshY * f);
	m.initialMesh = std::move(mesh);
	return m;
}

MembraneModel makeIndentModel(const ScenarioConfig& cfg, int uniformDepth) {
	double side = 2.0 * cfg.L0;
	LRMesh mesh = buildSheetPatch(cfg.degree, cfg.meshX, cfg.meshY, side, side);

	MembraneModel m;
	m.mu = cfg.mu;
	m.preStretch = cfg.preStretch;
	m.quadratureOrder = cfg.quadrature;
	m.edgeConstraints = {{PatchEdge::XiMax, {true, true, true}},
	                     {PatchEdge::EtaMax, {true, true, true}},
	                     {PatchEdge::XiMin, {true, false, false}},  // symmetry x=0
	                     {PatchEdge::EtaMin, {false, true, false}}}; // symmetry y=0
	m.volumeConstraint = false;
	m.closureDeclared = false;
	m.forceScale = cfg.mu * cfg.L0 * cfg.L0;
	m.volumeScale = cfg.L0 * cfg.L0 * cfg.L0;
	m.baseLenX = side / cfg.meshX;
	m.baseLenY = side / cfg.meshY;
	if (uniformDepth > 0)
		uniformRefine(mesh, uniformDepth);
	m.initialMesh = std::move(mesh);
	return m;
}

MembraneModel makeSlideModel(const ScenarioConfig& cfg, int uniformDepth) {
	double lx = 8.0 * cfg.preStretch * cfg.L0;
	double ly = 2.0 * cfg.preStretch * cfg.L0;
	LRMesh mesh = buildSheetPatch(cfg.degree, cfg.meshX, cfg.meshY, lx, ly);

	MembraneModel m;
	m.mu = cfg.mu;
	m.preStretch = cfg.preStretch;
	m.quadratureOrder = cfg.quadrature;
	m.edgeConstraints = {{PatchEdge::XiMin, {true, true, true}},
	                     {PatchEdge::XiMax, {true, true, true}},
	                     {PatchEdge::EtaMin, {true, true, true}},
	                     {PatchEdge::EtaMax, {true, true, true}}};
	m.volumeConstraint = true; // constant-volume cushion
	m.closureDeclared = true;
	m.forceScale = cfg.mu * cfg.L0 * cfg.L0;
	m.volumeScale = cfg.L0 * cfg.L0 * cfg.L0;
	m.baseLenX = lx / cfg.meshX;
	m.baseLenY = ly / cfg.meshY;
	if (uniformDepth > 0)
		uniformRefine(mesh, uniformDepth);
	m.initialMesh = std::move(mesh);
	return m;
}

ContactParams makeContactParams(const ScenarioConfig& cfg, const MembraneModel& model) {
	ContactParams p;
	p.basePenalty = cfg.penalty0;
	p.degree = cfg.degree;
	p.baseLenX = model.baseLenX;
	p.baseLenY = model.baseLenY;
	return p;
}

double analyticInflationPressure(double vOverV0) {
	double r = 1.0 / vOverV0;
	return 2.0 * (std::pow(r, 1.0 / 3.0) - std::pow(r, 7.0 / 3.0));
}

namespace {

struct RunWriter {
	std::string dir;
	std::ofstream forces, events, contact, solver, pressure;

	explicit RunWriter(const std::string& outDir, const std::string& scenario)
		: dir(outDir) {
		std::filesystem::create_directories(dir);
		forces.open(dir + "/forces.csv");
		forces << "step,load,f_n,f_t,dofs,events\n";
		events.open(dir + "/events.csv");
		events << "step,event,elements_before,elements_after,dofs_before,dofs_after,f_n,f_t\n";
		if (scenario != "inflate") {
			contact.open(dir + "/contact.csv");
			contact << "step,cx,cy,cz,f_n,f_t,active_elements\n";
		}
		if (scenario != "indent") {
			solver.open(dir + "/solver.csv");
			solver << "step,V_over_V0,p_R_over_mu,residual,iterations\n";
		}
		if (scenario == "inflate") {
			pressure.open(dir + "/pressure.csv");
			pressure << "step,V_over_V0,p_num,p_analytic,rel_error\n";
		}
	}

	void forceRow(const RunRow& r) {
		forces << r.step << "," << fmt(r.load) << "," << fmt(r.fN) << "," << fmt(r.fT)
		       << "," << r.dofs << "," << r.events << "\n";
	}
	void eventRow(const AdaptiveEvent& e) {
		events << e.step << "," << e.type << "," << e.elementsBefore << ","
		       << e.elementsAfter << "," << e.dofsBefore << "," << e.dofsAfter << ","
		       << fmt(e.fN) << "," << fmt(e.fT) << "\n";
	}
	void contactRow(const RunRow& r) {
		if (contact.is_open())
			contact << r.step << "," << fmt(r.sphereX) << "," << fmt(r.sphereY) << ","
			        << fmt(r.sphereZ) << "," << fmt(r.fN) << "," << fmt(r.fT) << ","
			        << r.activeElements << "\n";
	}
	void solverRow(int step, double vOverV0, double pRmu, double res, int iters) {
		if (solver.is_open())
			solver << step << "," << fmt(vOverV0) << "," << fmt(pRmu) << "," << fmt(res)
			       << "," << iters << "\n";
	}
	void pressureRow(const RunRow& r) {
		double err = std::abs(r.pAnalytic) > 1e-12
		                 ? std::abs(r.pNum - r.pAnalytic) / std::abs(r.pAnalytic)
		                 : std::abs(r.pNum - r.pAnalytic);
		pressure << r.step << "," << fmt(r.vOverV0) << "," << fmt(r.pNum) << ","
		         << fmt(r.pAnalytic) << "," << fmt(err) << "\n";
	}
	void snapshot(const LRMesh& mesh, const std::string& tag) {
		writeMeshJson(mesh, dir + "/mesh_" + tag + ".json");
		writeMeshVtk(mesh, dir + "/mesh_" + tag + ".vtk", mesh.numChannels() > 1 ? 1 : 0);
	}
	void report(const ScenarioConfig& cfg, const RunReport& rep) {
		std::ofstream os(dir + "/config_resolved.json");
		os << resolvedConfigJson(cfg) << "\n";
		json j;
		j["scenario"] = cfg.scenario;
		j["failed"] = rep.failed;
		if (rep.failed)
			j["failure"] = rep.failure;
		j["rows"] = rep.rows.size();
		j["final_dofs"] = rep.finalDofs;
		j["events"] = rep.events.size();
		j["max_pressure_error"] = rep.maxPressureError;
		j["wall"] = {{"setup", rep.wallSetup}, {"run", rep.wallRun},
		             {"output", rep.wallOutput}};
		std::ofstream ro(dir + "/report.json");
		ro << j.dump(1, '\t') << "\n";
	}
};

void refinedCentroid(const MembraneModel& model, const LRMesh& mesh, RunRow& row) {
	double area = 0.0, cx = 0.0, cy = 0.0;
	int count = 0;
	for (int e = 0; e < mesh.numElements(); e++) {
		const ElementBox& b = mesh.element(e);
		if (elementDepth(model, b) > 0) {
			double a = b.lenX() * b.lenY();
			area += a;
			cx += a * b.midX();
			cy += a * b.midY();
			count++;
		}
	}
	if (count > 0) {
		row.refinedCx = cx / area;
		row.refinedCy = cy / area;
	}
	row.refinedElements = count;
}

} // namespace

RunReport runInflate(const ScenarioConfig& cfg, const std::string& outDir, int uniformDepth) {
	double t0 = wallSeconds();
	MembraneModel model = makeInflateModel(cfg, uniformDepth);
	SimState state = makeState(model);
	FemCache cache;
	rebuildCache(model, state.mesh, cache);

	RunWriter w(outDir, cfg.scenario);
	RunReport rep;
	double V0 = enclosedVolume(model, state, cache);
	state.volumeTarget = V0;
	NewtonControls ctl;

	rep.wallSetup = wallSeconds() - t0;
	t0 = wallSeconds();

	const int N = cfg.steps.volumeSteps;
	for (int s = 1; s <= N; s++) {
		double factor = 1.0 + (cfg.steps.volumeFactorMax - 1.0) * s / N;
		SolveReport sr = loadStep(model, state, cache, V0 * factor, std::nullopt,
		                          nullptr, nullptr, ctl);
		RunRow row;
		row.step = s;
		row.load = factor;
		row.vOverV0 = factor;
		row.dofs = cache.dofs.numDofs + 1;
		row.pNum = state.pressure * cfg.R / cfg.mu;
		row.pAnalytic = analyticInflationPressure(factor);
		row.iterations = sr.iterations;
		row.residual = sr.residualNorm;
		if (!sr.converged) {
			rep.failed = true;
			rep.failure = "load step " + std::to_string(s) + " did not converge";
			rep.rows.push_back(row);
			break;
		}
		state.step = s;
		if (std::abs(row.pAnalytic) > 1e-12)
			rep.maxPressureError = std::max(
				rep.maxPressureError,
				std::abs(row.pNum - row.pAnalytic) / std::abs(row.pAnalytic));
		rep.rows.push_back(row);
		w.forceRow(row);
		w.solverRow(s, factor, row.pNum, sr.residualNorm, sr.iterations);
		w.pressureRow(row);
	}
	rep.finalDofs = cache.dofs.numDofs + 1;
	rep.wallRun = wallSeconds() - t0;
	t0 = wallSeconds();
	w.snapshot(state.mesh, "final");
	w.report(cfg, rep);
	rep.wallOutput = wallSeconds() - t0;
	return rep;
}

namespace {

RunReport runContactScenario(const ScenarioConfig& cfg, const std::string& outDir,
                             int uniformDepth, bool slide) {
	double t0 = wallSeconds();
	MembraneModel model = slide ? makeSlideModel(cfg, uniformDepth)
	                            : makeIndentModel(cfg, uniformDepth);
	AdaptiveParams params = cfg.adaptive;
	if (uniformDepth >= 0)
		params.maxDepth = 0; // adaptivity disabled for reference runs
	ContactParams contact = makeContactParams(cfg, model);

	SimState state = makeState(model);
	FemCache cache;
	rebuildCache(model, state.mesh, cache);

	RigidSphere sphere;
	sphere.radius = slide ? cfg.L0 : cfg.R;
	std::vector<Vec3> targets;
	if (slide) {
		double lam = cfg.preStretch;
		Vec3 start{lam * cfg.L0, lam * cfg.L0, lam * cfg.L0};
		sphere.center = start;
		Vec3 down{start.x, start.y, cfg.steps.slideZ * lam * cfg.L0};
		for (int s = 1; s <= cfg.steps.downSteps; s++)
			targets.push_back(start + (down - start) * (double(s) / cfg.steps.downSteps));
		Vec3 end{cfg.steps.slideXEnd * lam * cfg.L0, down.y, down.z};
		for (int s = 1; s <= cfg.steps.slideSteps; s++)
			targets.push_back(down + (end - down) * (double(s) / cfg.steps.slideSteps));
	} else {
		sphere.center = {0, 0, cfg.steps.zStart * cfg.L0};
		for (int s = 1; s <= cfg.steps.indentSteps; s++) {
			double z = cfg.steps.zStart +
			           (cfg.steps.zEnd - cfg.steps.zStart) * double(s) / cfg.steps.indentSteps;
			targets.push_back({0, 0, z * cfg.L0});
		}
	}

	if (model.volumeConstraint)
		state.volumeTarget = enclosedVolume(model, state, cache);

	RunWriter w(outDir, cfg.scenario);
	RunReport rep;
	NewtonControls ctl;
	rep.wallSetup = wallSeconds() - t0;
	t0 = wallSeconds();

	for (size_t s = 0; s < targets.size(); s++) {
		state.step = static_cast<int>(s + 1);
		StepOutcome oc = adaptiveStep(model, state, cache, sphere, targets[s],
		                              contact, params, ctl);
		RunRow row;
		row.step = state.step;
		row.load = slide ? (s < size_t(cfg.steps.downSteps) ? sphere.center.z : sphere.center.x)
		                 : sphere.center.z / cfg.L0;
		row.fN = std::abs(oc.solve.netContact.z);
		row.fT = std::hypot(oc.solve.netContact.x, oc.solve.netContact.y);
		row.dofs = cache.dofs.numDofs + (model.volumeConstraint ? 1 : 0);
		row.events = static_cast<int>(oc.events.size());
		row.sphereX = sphere.center.x;
		row.sphereY = sphere.center.y;
		row.sphereZ = sphere.center.z;
		row.minGap = oc.solve.minGap;
		row.activeElements = oc.solve.activeElements;
		row.iterations = oc.solve.iterations;
		row.residual = oc.solve.residualNorm;
		refinedCentroid(model, state.mesh, row);
		if (model.volumeConstraint)
			row.vOverV0 = 1.0;
		if (!oc.solve.converged) {
			rep.failed = true;
			rep.failure = "step " + std::to_string(row.step) + " did not converge";
			rep.rows.push_back(row);
			break;
		}
		rep.rows.push_back(row);
		w.forceRow(row);
		w.contactRow(row);
		if (model.volumeConstraint)
			w.solverRow(row.step, 1.0, state.pressure * cfg.L0 / cfg.mu,
			            oc.solve.residualNorm, oc.solve.iterations);
		for (AdaptiveEvent ev : oc.events) {
			ev.step = row.step;
			rep.events.push_back(ev);
			w.eventRow(ev);
			w.snapshot(state.mesh, std::to_string(row.step) + "_" + ev.type);
		}
	}
	rep.finalDofs = cache.dofs.numDofs + (model.volumeConstraint ? 1 : 0);
	rep.wallRun = wallSeconds() - t0;
	t0 = wallSeconds();
	w.snapshot(state.mesh, "final");
	w.report(cfg, rep);
	rep.wallOutput = wallSeconds() - t0;
	return rep;
}

} // namespace

RunReport runIndent(const ScenarioConfig& cfg, const std::string& outDir, int uniformDepth) {
	return runContactScenario(cfg, outDir, uniformDepth, false);
}

RunReport runSlide(const ScenarioConfig& cfg, const std::string& outDir, int uniformDepth) {
	return runContactScenario(cfg, outDir, uniformDepth, true);
}

RunReport runScenario(const ScenarioConfig& cfg, const std::string& outDir, int uniformDepth) {
	if (cfg.scenario == "inflate")
		return runInflate(cfg, outDir, uniformDepth);
	if (cfg.scenario == "indent")
		return runIndent(cfg, outDir, uniformDepth);
	return runSlide(cfg, outDir, uniformDepth);
}

CompareReport compareRuns(const RunReport& run, const RunReport& ref) {
	if (run.rows.size() != ref.rows.size())
		throw config_error("compare: step schedules differ in length");
	CompareReport out;
	double fnScale = 0.0;
	for (const RunRow& r : ref.rows)
		fnScale = std::max(fnScale, std::abs(r.fN));
	double floorN = std::max(1e-12, 1e-9 * fnScale);

	double ratioSum = 0.0;
	for (size_t i = 0; i < run.rows.size(); i++) {
		const RunRow& a = run.rows[i];
		const RunRow& b = ref.rows[i];
		if (std::abs(a.load - b.load) > 1e-9 * (1.0 + std::abs(b.load)))
			throw config_error("compare: load schedules differ at step " +
			                   std::to_string(a.step));
		CompareRow r;
		r.step = a.step;
		r.load = a.load;
		r.fN = a.fN;
		r.fNRef = b.fN;
		r.fT = a.fT;
		r.fTRef = b.fT;
		r.eN = std::abs(a.fN - b.fN) / std::max(std::abs(b.fN), floorN);
		r.eT = std::abs(a.fT - b.fT) / std::max(fnScale, floorN);
		r.dofRatio = b.dofs > 0 ? double(a.dofs) / b.dofs : 0.0;
		out.maxEN = std::max(out.maxEN, r.eN);
		out.maxET = std::max(out.maxET, r.eT);
		out.maxDofRatio = std::max(out.maxDofRatio, r.dofRatio);
		ratioSum += r.dofRatio;
		out.rows.push_back(r);
	}
	out.meanDofRatio = out.rows.empty() ? 0.0 : ratioSum / out.rows.size();
	return out;
}

RunReport readRunDir(const std::string& dir) {
	std::ifstream is(dir + "/forces.csv");
	if (!is)
		throw config_error("cannot read " + dir + "/forces.csv");
	RunReport rep;
	std::string line;
	std::getline(is, line);
	if (line != "step,load,f_n,f_t,dofs,events")
		throw config_error("unexpected forces.csv header in " + dir);
	while (std::getline(is, line)) {
		RunRow r;
		if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%d,%d", &r.step, &r.load, &r.fN,
		                &r.fT, &r.dofs, &r.events) != 6)
			throw config_error("malformed forces.csv row in " + dir);
		rep.rows.push_back(r);
	}
	if (!rep.rows.empty())
		rep.finalDofs = rep.rows.back().dofs;
	return rep;
}

CompareReport compareRunDirs(const std::string& runDir, const std::string& refDir,
                             const std::string& outDir) {
	CompareReport rep = compareRuns(readRunDir(runDir), readRunDir(refDir));
	if (!outDir.empty()) {
		std::filesystem::create_directories(outDir);
		std::ofstream csv(outDir + "/compare.csv");
		csv << "step,load,f_n,f_n_ref,e_n_rel,f_t,f_t_ref,e_t_rel,dof_ratio\n";
		for (const CompareRow& r : rep.rows)
			csv << r.step << "," << fmt(r.load) << "," << fmt(r.fN) << "," << fmt(r.fNRef)
			    << "," << fmt(r.eN) << "," << fmt(r.fT) << "," << fmt(r.fTRef) << ","
			    << fmt(r.eT) << "," << fmt(r.dofRatio) << "\n";
		json j;
		j["max_e_n_rel"] = rep.maxEN;
		j["max_e_t_rel"] = rep.maxET;
		j["max_dof_ratio"] = rep.maxDofRatio;
		j["mean_dof_ratio"] = rep.meanDofRatio;
		j["steps"] = rep.rows.size();
		std::ofstream js(outDir + "/compare.json");
		js << j.dump(1, '\t') << "\n";
	}
	return rep;
}

} // namespace lrs
