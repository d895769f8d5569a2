#pragma once

#include "lrs/adaptive.hpp"
#include "lrs/membrane.hpp"

#include <string>

namespace lrs {

struct config_error : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct StepSchedule {
	// inflate
	double volumeFactorMax = 10.0;
	int volumeSteps = 18;
	// indent (multiples of L0)
	double zStart = 1.02;
	double zEnd = 0.5;
	int indentSteps = 26;
	// slide (multiples of lambda*L0)
	double slideZ = 0.5;
	int downSteps = 8;
	double slideXEnd = 7.0;
	int slideSteps = 60;
};

struct ScenarioConfig {
	std::string scenario; // inflate | indent | slide
	double L0 = 1.0;
	double R = 1.0;
	double mu = 1.0;
	double E0 = 0.0;       // defaults to 3*mu
	double penalty0 = 0.0; // defaults to 10*E0/L0
	double preStretch = 0.0; // scenario default when 0
	int degree = 0;          // scenario default when 0
	int meshX = 0, meshY = 0;
	int quadrature = 0;
	AdaptiveParams adaptive;
	StepSchedule steps;
	std::uint64_t seed = 0;
};

ScenarioConfig loadConfig(const std::string& path);
ScenarioConfig parseConfig(const std::string& jsonText);
std::string resolvedConfigJson(const ScenarioConfig& cfg);

// Model factories. uniformDepth >= 0 pre-refines the whole mesh uniformly
// and disables adaptivity (the reference-run mode); penalty base lengths
// always refer to the coarse initial mesh.
MembraneModel makeInflateModel(const ScenarioConfig& cfg, int uniformDepth = -1);
MembraneModel makeIndentModel(const ScenarioConfig& cfg, int uniformDepth = -1);
MembraneModel makeSlideModel(const ScenarioConfig& cfg, int uniformDepth = -1);
ContactParams makeContactParams(const ScenarioConfig& cfg, const MembraneModel& model);

struct RunRow {
	int step = 0;
	double load = 0.0;
	double fN = 0.0, fT = 0.0;
	int dofs = 0;
	int events = 0;
	// inflate extras
	double vOverV0 = 0.0, pNum = 0.0, pAnalytic = 0.0;
	// slide/indent extras
	double refinedCx = 0.0, refinedCy = 0.0;
	int refinedElements = 0;
	double sphereX = 0.0, sphereY = 0.0, sphereZ = 0.0;
	double minGap = 0.0;
	int activeElements = 0;
	int iterations = 0;
	double residual = 0.0;
};

struct RunReport {
	std::vector<RunRow> rows;
	std::vector<AdaptiveEvent> events;
	bool failed = false;
	std::string failure;
	int finalDofs = 0;
	double maxPressureError = 0.0; // inflate
	double wallSetup = 0.0, wallRun = 0.0, wallOutput = 0.0;
};

// 2((V0/V)^(1/3) - (V0/V)^(7/3))
double analyticInflationPressure(double vOverV0);

RunReport runInflate(const ScenarioConfig& cfg, const std::string& outDir,
                     int uniformDepth = -1);
RunReport runIndent(const ScenarioConfig& cfg, const std::string& outDir,
                    int uniformDepth = -1);
RunReport runSlide(const ScenarioConfig& cfg, const std::string& outDir,
                   int uniformDepth = -1);
RunReport runScenario(const ScenarioConfig& cfg, const std::string& outDir,
                      int uniformDepth = -1);

struct CompareRow {
	int step = 0;
	double load = 0.0;
	double fN = 0.0, fNRef = 0.0, eN = 0.0;
	double fT = 0.0, fTRef = 0.0, eT = 0.0;
	double dofRatio = 0.0;
};

struct CompareReport {
	std::vector<CompareRow> rows;
	double maxEN = 0.0, maxET = 0.0;
	double maxDofRatio = 0.0, meanDofRatio = 0.0;
};

CompareReport compareRuns(const RunReport& run, const RunReport& ref);
// Directory-based variant reading forces.csv; writes compare.csv and
// compare.json when outDir is non-empty.
CompareReport compareRunDirs(const std::string& runDir, const std::string& refDir,
                             const std::string& outDir);

RunReport readRunDir(const std::string& dir);

} // namespace lrs
