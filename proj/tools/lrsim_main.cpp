#include "lrs/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

int main(int argc, char** argv) {
	CLI::App app{"LR NURBS membrane contact simulator"};
	app.require_subcommand(1);

	std::string configPath, outDir, runDir, refDir;
	int uniformDepth = -1;
	std::uint64_t seed = 0;
	bool seedSet = false;

	auto addRunOptions = [&](CLI::App* cmd) {
		cmd->add_option("--config", configPath, "scenario configuration (JSON)")->required();
		cmd->add_option("--out", outDir, "output directory")->required();
		cmd->add_option("--uniform-depth", uniformDepth,
		                "uniformly pre-refine this many times and disable adaptivity");
		cmd->add_option("--seed", seed, "override the config seed")
			->each([&](const std::string&) { seedSet = true; });
	};

	CLI::App* inflate = app.add_subcommand("inflate", "hemisphere inflation study");
	CLI::App* indent = app.add_subcommand("indent", "rigid sphere on a membrane sheet");
	CLI::App* slide = app.add_subcommand("slide", "frictionless sliding with a cushion");
	addRunOptions(inflate);
	addRunOptions(indent);
	addRunOptions(slide);

	CLI::App* compare = app.add_subcommand("compare", "per-step error table of two runs");
	compare->add_option("run", runDir, "run output directory")->required();
	compare->add_option("ref", refDir, "reference output directory")->required();
	compare->add_option("--out", outDir, "output directory")->required();

	CLI11_PARSE(app, argc, argv);

	try {
		if (compare->parsed()) {
			lrs::CompareReport rep = lrs::compareRunDirs(runDir, refDir, outDir);
			std::printf("steps %zu  max e_n %.6g  max e_t %.6g  mean dof ratio %.4g\n",
			            rep.rows.size(), rep.maxEN, rep.maxET, rep.meanDofRatio);
			return 0;
		}

		lrs::ScenarioConfig cfg = lrs::loadConfig(configPath);
		std::string want = app.get_subcommands().front()->get_name();
		if (cfg.scenario != want)
			throw lrs::config_error("config declares scenario \"" + cfg.scenario +
			                        "\" but the \"" + want + "\" subcommand was invoked");
		if (seedSet)
			cfg.seed = seed;

		lrs::RunReport rep = lrs::runScenario(cfg, outDir, uniformDepth);
		if (rep.failed) {
			std::fprintf(stderr, "run failed: %s\n", rep.failure.c_str());
			return 1;
		}
		std::printf("%zu steps, %d dofs, %zu adaptive events", rep.rows.size(),
		            rep.finalDofs, rep.events.size());
		if (cfg.scenario == "inflate")
			std::printf(", max pressure error %.3e", rep.maxPressureError);
		std::printf("\n");
		return 0;
	} catch (const std::exception& e) {
		std::fprintf(stderr, "error: %s\n", e.what());
		return 1;
	}
}
