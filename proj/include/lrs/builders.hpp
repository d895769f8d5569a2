#pragma once

#include "lrs/lr_mesh.hpp"

namespace lrs {

// Flat sheet in the z=0 plane spanning [0,lx] x [0,ly], parametrized by
// physical coordinates (knot values carry length units). All weights 1.
LRMesh buildSheetPatch(int degree, int nelX, int nelY, double lx, double ly);

// Exact hemisphere of the given radius over the z=0 plane as a single
// biquadratic rational patch of revolution: a full circle (9 control
// points, weights 1 and sqrt(2)/2) swept by the quarter-circle profile.
// Parametric domain [0,4] x [0,1]; the eta=1 edge degenerates to the pole.
LRMesh buildHemispherePatch(double radius);

// Unit sphere octant as a degenerate biquadratic rational patch.
LRMesh buildSphereOctantPatch();

// Inserts full-span midlines splitting every element in both directions
// `times` times (classical uniform refinement).
void uniformRefine(LRMesh& mesh, int times);

// Inserts full-span lines until the mesh has nx x ny elements (counts must
// be multiples of the current element counts, factor a power of two in x
// for meshes with repeated interior knots).
void setUniformResolution(LRMesh& mesh, int nx, int ny);

} // namespace lrs
