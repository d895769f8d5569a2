#pragma once

#include "lrs/local_knots.hpp"
#include "lrs/vec.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lrs {

// Direction a meshline runs along. A vertical line sits at constant xi and
// spans an eta interval; it inserts xi-knots into the functions it traverses.
enum class LineDir { Horizontal, Vertical };

struct Meshline {
	LineDir dir = LineDir::Vertical;
	double fixed = 0.0;
	double start = 0.0;
	double stop = 0.0;
	int multiplicity = 1;
};

struct ElementBox {
	double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

	double midX() const { return 0.5 * (x0 + x1); }
	double midY() const { return 0.5 * (y0 + y1); }
	double lenX() const { return x1 - x0; }
	double lenY() const { return y1 - y0; }
	bool contains(double x, double y) const {
		return x0 <= x && x <= x1 && y0 <= y && y <= y1;
	}
};

// Bivariate scaled rational basis function. Control points are stored in
// homogeneous form at all times; one Vec4 per channel (channel 0 is the
// reference geometry, an optional channel 1 carries the deformed geometry).
struct LRFunction {
	LocalKnotVector kx, ky;
	double gamma = 1.0;
	std::vector<Vec4> cps;

	double weight() const { return cps[0].w; }
	double grevilleX() const { return kx.greville(); }
	double grevilleY() const { return ky.greville(); }
};

struct insertion_error : std::runtime_error {
	using std::runtime_error::runtime_error;
};

// Single knot insertion into one direction of a function's local knot
// vector: produces the two children with gamma_j = alpha_j * gamma and the
// parent's control points copied.
struct SplitResult {
	LRFunction child1, child2;
	double alpha1 = 1.0, alpha2 = 1.0;
};
SplitResult splitLRFunction(const LRFunction& f, LineDir dir, double xhat);

struct WeightedPoint {
	Vec3 x;
	double w = 1.0;
};

class LRMesh {
public:
	LRMesh() = default;

	// Tensor-product constructor. knotsX has nx+p+1 entries, knotsY ny+q+1;
	// control points are indexed cp[j*nx+i] (i fastest, along xi).
	static LRMesh tensor(int degX, int degY,
	                     const std::vector<double>& knotsX,
	                     const std::vector<double>& knotsY,
	                     const std::vector<Vec4>& cps);

	// Rebuilds a mesh from serialized parts. The element partition is
	// recovered from the meshlines (boxes are split until no line crosses
	// an interior, which has a unique fixpoint).
	static LRMesh fromParts(int degX, int degY,
	                        double xmin, double xmax, double ymin, double ymax,
	                        std::vector<Meshline> meshlines,
	                        std::vector<LRFunction> functions);

	int degreeX() const { return degX_; }
	int degreeY() const { return degY_; }
	double xmin() const { return xmin_; }
	double xmax() const { return xmax_; }
	double ymin() const { return ymin_; }
	double ymax() const { return ymax_; }

	int numFunctions() const { return static_cast<int>(functions_.size()); }
	int numElements() const { return static_cast<int>(elements_.size()); }
	int numChannels() const { return numChannels_; }
	const LRFunction& function(int i) const { return functions_[i]; }
	const ElementBox& element(int i) const { return elements_[i]; }
	const std::vector<LRFunction>& functions() const { return functions_; }
	const std::vector<ElementBox>& elements() const { return elements_; }
	const std::vector<Meshline>& meshlines() const { return meshlines_; }
	std::uint64_t version() const { return version_; }

	// Adds a control point channel initialized as a copy of channel 0.
	int addChannel();
	void setControlPoint(int fn, int channel, const Vec4& cp);
	void setGamma(int fn, double gamma) { functions_[fn].gamma = gamma; }

	// Inserts a primitive meshline extension and restores all mesh
	// invariants (two-step split/merge loop run to fixpoint). Throws
	// insertion_error on non-primitive or misaligned lines. Inserting a
	// line that is already fully covered is a no-op.
	void insertMeshline(Meshline line);

	bool hasMinimalSupport(const LRFunction& f) const;
	bool lineTraversesSupport(const Meshline& line, const LRFunction& f) const;

	// |sum_i gamma_i B_i - 1| at a parameter point.
	double partitionOfUnityError(double xi, double eta) const;

	// Full homogeneous sum sum_i gamma_i B_i(xi,eta) cp_i.
	Vec4 homogeneousPoint(double xi, double eta, int channel = 0) const;
	Vec3 surfacePoint(double xi, double eta, int channel = 0,
	                  Vec3* dXi = nullptr, Vec3* dEta = nullptr) const;

	int findElement(double xi, double eta) const;
	// Function indices with support on each element, cached per version.
	const std::vector<std::vector<int>>& elementSupports() const;

	// Canonical boundary coordinates (sorted, unique) per axis.
	const std::vector<double>& boundariesX() const { return coordsX_; }
	const std::vector<double>& boundariesY() const { return coordsY_; }
	bool isBoundaryCoord(LineDir axisOfLine, double v) const;

	// Index of the function with the given knot-vector pair, or -1.
	int findFunction(const LocalKnotVector& kx, const LocalKnotVector& ky) const;

	static constexpr double kTol = 1e-12;

private:
	int degX_ = 0, degY_ = 0;
	double xmin_ = 0, xmax_ = 0, ymin_ = 0, ymax_ = 0;
	int numChannels_ = 1;
	std::vector<LRFunction> functions_;
	std::vector<ElementBox> elements_;
	std::vector<Meshline> meshlines_;
	std::vector<double> coordsX_, coordsY_;
	std::uint64_t version_ = 0;

	mutable std::vector<std::vector<int>> supportCache_;
	mutable std::uint64_t supportCacheVersion_ = ~0ull;

	double snapCoord(std::vector<double>& reg, double v) const;
	void registerCoord(std::vector<double>& reg, double v);
	bool lineCrossesElement(const Meshline& line, const ElementBox& e) const;
	void splitFunction(const LRFunction& f, LineDir dir, double xhat,
	                   std::vector<LRFunction>& out) const;
	// process-unique so caches keyed on it never confuse distinct meshes
	void bumpVersion();
};

// Round-trip between homogeneous storage and Cartesian+weight form.
std::vector<WeightedPoint> fromProjective(const LRMesh& mesh, int channel = 0);
void toProjective(LRMesh& mesh, const std::vector<WeightedPoint>& pts, int channel = 0);

// Diagnostic: assembles a collocation matrix of all scaled basis functions
// (one interior sample per function/support-element pair plus Greville
// points) and reports full column rank with pivot tolerance 1e-10.
bool checkLinearIndependence(const LRMesh& mesh);

// Meshline through the midline of an element spanning the smallest (most
// centered on ties) support of the functions living on it. Such lines are
// primitive by construction.
Meshline minspanLine(const LRMesh& mesh, int element, LineDir dir);

} // namespace lrs
