#include "lrs/mesh_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace lrs {

using nlohmann::json;

std::string meshToJson(const LRMesh& mesh) {
	json doc;
	doc["format"] = "lr-mesh";
	doc["version"] = 1;
	doc["degrees"] = {mesh.degreeX(), mesh.degreeY()};
	doc["domain"] = {mesh.xmin(), mesh.xmax(), mesh.ymin(), mesh.ymax()};

	json lines = json::array();
	for (const Meshline& l : mesh.meshlines()) {
		lines.push_back({{"dir", l.dir == LineDir::Vertical ? "vertical" : "horizontal"},
		                 {"fixed", l.fixed},
		                 {"span", {l.start, l.stop}},
		                 {"multiplicity", l.multiplicity}});
	}
	doc["meshlines"] = std::move(lines);

	json fns = json::array();
	for (const LRFunction& f : mesh.functions()) {
		json jf;
		jf["kv_xi"] = f.kx.knots();
		jf["kv_eta"] = f.ky.knots();
		jf["gamma"] = f.gamma;
		jf["cp_hom"] = {f.cps[0].x, f.cps[0].y, f.cps[0].z, f.cps[0].w};
		if (f.cps.size() > 1)
			jf["cp_hom_current"] = {f.cps[1].x, f.cps[1].y, f.cps[1].z, f.cps[1].w};
		fns.push_back(std::move(jf));
	}
	doc["functions"] = std::move(fns);
	return doc.dump(1, '\t');
}

LRMesh meshFromJson(const std::string& text) {
	json doc = json::parse(text);
	if (doc.at("format") != "lr-mesh" || doc.at("version") != 1)
		throw invariant_error("mesh json: unsupported format/version");
	int p = doc.at("degrees")[0], q = doc.at("degrees")[1];
	auto dom = doc.at("domain");

	std::vector<Meshline> lines;
	for (const auto& jl : doc.at("meshlines")) {
		Meshline l;
		l.dir = (jl.at("dir") == "vertical") ? LineDir::Vertical : LineDir::Horizontal;
		l.fixed = jl.at("fixed");
		l.start = jl.at("span")[0];
		l.stop = jl.at("span")[1];
		l.multiplicity = jl.at("multiplicity");
		lines.push_back(l);
	}

	std::vector<LRFunction> fns;
	for (const auto& jf : doc.at("functions")) {
		LRFunction f;
		f.kx = LocalKnotVector(jf.at("kv_xi").get<std::vector<double>>(), p);
		f.ky = LocalKnotVector(jf.at("kv_eta").get<std::vector<double>>(), q);
		f.gamma = jf.at("gamma");
		auto cp = jf.at("cp_hom");
		f.cps.push_back({cp[0], cp[1], cp[2], cp[3]});
		if (jf.contains("cp_hom_current")) {
			auto cc = jf.at("cp_hom_current");
			f.cps.push_back({cc[0], cc[1], cc[2], cc[3]});
		}
		fns.push_back(std::move(f));
	}
	return LRMesh::fromParts(p, q, dom[0], dom[1], dom[2], dom[3],
	                         std::move(lines), std::move(fns));
}

void writeMeshJson(const LRMesh& mesh, const std::string& path) {
	std::ofstream os(path);
	if (!os)
		throw std::runtime_error("cannot write " + path);
	os << meshToJson(mesh) << "\n";
}

LRMesh readMeshJson(const std::string& path) {
	std::ifstream is(path);
	if (!is)
		throw std::runtime_error("cannot read " + path);
	std::stringstream ss;
	ss << is.rdbuf();
	return meshFromJson(ss.str());
}

void writeMeshVtk(const LRMesh& mesh, const std::string& path, int channel, int samples) {
	std::ofstream os(path);
	if (!os)
		throw std::runtime_error("cannot write " + path);
	const int s = samples;
	const int nel = mesh.numElements();
	const int ptsPerEl = (s + 1) * (s + 1);

	os << "# vtk DataFile Version 2.0\n"
	   << "lr nurbs surface\n"
	   << "ASCII\n"
	   << "DATASET UNSTRUCTURED_GRID\n";
	os << "POINTS " << nel * ptsPerEl << " double\n";
	char buf[128];
	for (int ei = 0; ei < nel; ei++) {
		const ElementBox& e = mesh.element(ei);
		for (int j = 0; j <= s; j++)
			for (int i = 0; i <= s; i++) {
				double xi = e.x0 + e.lenX() * i / s;
				double eta = e.y0 + e.lenY() * j / s;
				Vec3 x = mesh.surfacePoint(xi, eta, channel);
				std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", x.x, x.y, x.z);
				os << buf;
			}
	}
	int ncell = nel * s * s;
	os << "CELLS " << ncell << " " << ncell * 5 << "\n";
	for (int ei = 0; ei < nel; ei++) {
		int base = ei * ptsPerEl;
		for (int j = 0; j < s; j++)
			for (int i = 0; i < s; i++) {
				int a = base + j * (s + 1) + i;
				os << "4 " << a << " " << a + 1 << " " << a + s + 2 << " " << a + s + 1 << "\n";
			}
	}
	os << "CELL_TYPES " << ncell << "\n";
	for (int c = 0; c < ncell; c++)
		os << "9\n";
}

} // namespace lrs
