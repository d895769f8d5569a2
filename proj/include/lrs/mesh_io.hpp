#pragma once

#include "lrs/lr_mesh.hpp"

#include <string>

namespace lrs {

// Versioned JSON document: degrees, meshlines, functions (knot vectors,
// homogeneous control points per channel, gamma). Round-trips bit-stable
// for dyadic knots.
std::string meshToJson(const LRMesh& mesh);
LRMesh meshFromJson(const std::string& text);

void writeMeshJson(const LRMesh& mesh, const std::string& path);
LRMesh readMeshJson(const std::string& path);

// Legacy-VTK ASCII dump of the surface (channel selects the geometry;
// each element is sampled on a (samples+1)^2 grid of quads).
void writeMeshVtk(const LRMesh& mesh, const std::string& path,
                  int channel = 0, int samples = 2);

} // namespace lrs
