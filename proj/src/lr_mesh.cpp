#include "lrs/lr_mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <map>
#include <string>

namespace lrs {

void LRMesh::bumpVersion() {
	static std::atomic<std::uint64_t> stamp{0};
	version_ = ++stamp;
}

namespace {

// Exact key for function identity. All knot coordinates are snapped to the
// per-axis registries on creation, so bitwise equality implements the
// 1e-12 matching rule without tolerance scans.
struct FnKey {
	std::vector<double> k;

	FnKey(const LocalKnotVector& kx, const LocalKnotVector& ky) {
		k.reserve(kx.size() + ky.size() + 1);
		for (int i = 0; i < kx.size(); i++)
			k.push_back(kx[i]);
		k.push_back(std::nan("")); // separator; NaN != NaN avoided via memcmp ordering
		for (int i = 0; i < ky.size(); i++)
			k.push_back(ky[i]);
	}
	bool operator<(const FnKey& o) const {
		if (k.size() != o.k.size())
			return k.size() < o.k.size();
		int c = std::memcmp(k.data(), o.k.data(), k.size() * sizeof(double));
		return c < 0;
	}
};

} // namespace

LRMesh LRMesh::tensor(int degX, int degY,
                      const std::vector<double>& knotsX,
                      const std::vector<double>& knotsY,
                      const std::vector<Vec4>& cps) {
	LRMesh m;
	m.degX_ = degX;
	m.degY_ = degY;
	const int nx = static_cast<int>(knotsX.size()) - degX - 1;
	const int ny = static_cast<int>(knotsY.size()) - degY - 1;
	if (nx < 1 || ny < 1)
		throw invariant_error("tensor mesh: too few knots for degree");
	if (static_cast<int>(cps.size()) != nx * ny)
		throw invariant_error("tensor mesh: control point count mismatch");

	m.xmin_ = knotsX.front();
	m.xmax_ = knotsX.back();
	m.ymin_ = knotsY.front();
	m.ymax_ = knotsY.back();

	auto distinct = [](const std::vector<double>& ks) {
		std::vector<double> d;
		for (double v : ks)
			if (d.empty() || v > d.back())
				d.push_back(v);
		return d;
	};
	m.coordsX_ = distinct(knotsX);
	m.coordsY_ = distinct(knotsY);

	for (size_t i = 0; i + 1 < m.coordsX_.size(); i++)
		for (size_t j = 0; j + 1 < m.coordsY_.size(); j++)
			m.elements_.push_back({m.coordsX_[i], m.coordsX_[i + 1],
			                       m.coordsY_[j], m.coordsY_[j + 1]});

	// interior knot values become full-span meshlines at their multiplicity
	auto addLines = [&](const std::vector<double>& ks, LineDir dir, double lo, double hi) {
		size_t i = degX + 1; // skip the open head; recomputed below per axis
		(void)i;
		std::map<double, int> mult;
		for (double v : ks)
			if (v > ks.front() && v < ks.back())
				mult[v]++;
		for (auto& [v, c] : mult)
			m.meshlines_.push_back({dir, v, lo, hi, c});
	};
	addLines(knotsX, LineDir::Vertical, m.ymin_, m.ymax_);
	addLines(knotsY, LineDir::Horizontal, m.xmin_, m.xmax_);

	for (int j = 0; j < ny; j++)
		for (int i = 0; i < nx; i++) {
			LRFunction f;
			f.kx = LocalKnotVector(
				std::vector<double>(knotsX.begin() + i, knotsX.begin() + i + degX + 2), degX);
			f.ky = LocalKnotVector(
				std::vector<double>(knotsY.begin() + j, knotsY.begin() + j + degY + 2), degY);
			f.gamma = 1.0;
			f.cps = {cps[j * nx + i]};
			m.functions_.push_back(std::move(f));
		}
	m.bumpVersion();
	return m;
}

int LRMesh::addChannel() {
	for (auto& f : functions_)
		f.cps.push_back(f.cps[0]);
	return numChannels_++;
}

void LRMesh::setControlPoint(int fn, int channel, const Vec4& cp) {
	functions_[fn].cps[channel] = cp;
}

double LRMesh::snapCoord(std::vector<double>& reg, double v) const {
	auto it = std::lower_bound(reg.begin(), reg.end(), v - kTol);
	if (it != reg.end() && std::abs(*it - v) <= kTol)
		return *it;
	return v;
}

void LRMesh::registerCoord(std::vector<double>& reg, double v) {
	auto it = std::lower_bound(reg.begin(), reg.end(), v);
	if (it == reg.end() || *it != v)
		reg.insert(it, v);
}

bool LRMesh::isBoundaryCoord(LineDir axisOfLine, double v) const {
	const std::vector<double>& reg = (axisOfLine == LineDir::Vertical) ? coordsY_ : coordsX_;
	auto it = std::lower_bound(reg.begin(), reg.end(), v - kTol);
	return it != reg.end() && std::abs(*it - v) <= kTol;
}

bool LRMesh::lineTraversesSupport(const Meshline& line, const LRFunction& f) const {
	if (line.dir == LineDir::Vertical) {
		return f.kx.supportMin() < line.fixed - kTol &&
		       line.fixed < f.kx.supportMax() - kTol &&
		       line.start <= f.ky.supportMin() + kTol &&
		       f.ky.supportMax() <= line.stop + kTol;
	}
	return f.ky.supportMin() < line.fixed - kTol &&
	       line.fixed < f.ky.supportMax() - kTol &&
	       line.start <= f.kx.supportMin() + kTol &&
	       f.kx.supportMax() <= line.stop + kTol;
}

bool LRMesh::lineCrossesElement(const Meshline& line, const ElementBox& e) const {
	if (line.dir == LineDir::Vertical) {
		return e.x0 < line.fixed - kTol && line.fixed < e.x1 - kTol &&
		       line.start <= e.y0 + kTol && e.y1 <= line.stop + kTol;
	}
	return e.y0 < line.fixed - kTol && line.fixed < e.y1 - kTol &&
	       line.start <= e.x0 + kTol && e.x1 <= line.stop + kTol;
}

bool LRMesh::hasMinimalSupport(const LRFunction& f) const {
	for (const Meshline& l : meshlines_) {
		if (!lineTraversesSupport(l, f))
			continue;
		const LocalKnotVector& kv = (l.dir == LineDir::Vertical) ? f.kx : f.ky;
		if (kv.multiplicityOf(l.fixed, kTol) < l.multiplicity)
			return false;
	}
	return true;
}

SplitResult splitLRFunction(const LRFunction& f, LineDir dir, double xhat) {
	const LocalKnotVector& kv = (dir == LineDir::Vertical) ? f.kx : f.ky;
	const int p = kv.degree();
	if (!(xhat > kv[0] + LRMesh::kTol && xhat < kv[p + 1] - LRMesh::kTol))
		throw insertion_error("split: knot outside open support");

	std::vector<double> enlarged = kv.knots();
	enlarged.insert(std::upper_bound(enlarged.begin(), enlarged.end(), xhat), xhat);

	SplitResult r;
	r.alpha1 = (xhat >= kv[p]) ? 1.0 : (xhat - kv[0]) / (kv[p] - kv[0]);
	r.alpha2 = (xhat <= kv[1]) ? 1.0 : (kv[p + 1] - xhat) / (kv[p + 1] - kv[1]);

	LocalKnotVector kv1(std::vector<double>(enlarged.begin(), enlarged.end() - 1), p);
	LocalKnotVector kv2(std::vector<double>(enlarged.begin() + 1, enlarged.end()), p);

	r.child1.kx = (dir == LineDir::Vertical) ? kv1 : f.kx;
	r.child1.ky = (dir == LineDir::Vertical) ? f.ky : kv1;
	r.child1.gamma = r.alpha1 * f.gamma;
	r.child1.cps = f.cps;
	r.child2.kx = (dir == LineDir::Vertical) ? kv2 : f.kx;
	r.child2.ky = (dir == LineDir::Vertical) ? f.ky : kv2;
	r.child2.gamma = r.alpha2 * f.gamma;
	r.child2.cps = f.cps;
	return r;
}

void LRMesh::splitFunction(const LRFunction& f, LineDir dir, double xhat,
                           std::vector<LRFunction>& out) const {
	SplitResult r = splitLRFunction(f, dir, xhat);
	out.push_back(std::move(r.child1));
	out.push_back(std::move(r.child2));
}

void LRMesh::insertMeshline(Meshline line) {
	// snap all coordinates to the registries
	std::vector<double>& runReg = (line.dir == LineDir::Vertical) ? coordsY_ : coordsX_;
	std::vector<double>& fixReg = (line.dir == LineDir::Vertical) ? coordsX_ : coordsY_;
	line.fixed = snapCoord(fixReg, line.fixed);
	line.start = snapCoord(runReg, line.start);
	line.stop = snapCoord(runReg, line.stop);

	const double fixLo = (line.dir == LineDir::Vertical) ? xmin_ : ymin_;
	const double fixHi = (line.dir == LineDir::Vertical) ? xmax_ : ymax_;
	if (line.multiplicity < 1)
		throw insertion_error("meshline: multiplicity must be positive");
	if (!(line.fixed > fixLo + kTol && line.fixed < fixHi - kTol))
		throw insertion_error("meshline: fixed coordinate not strictly inside the domain");
	if (!(line.stop > line.start + kTol))
		throw insertion_error("meshline: empty span");
	// span endpoints must coincide with existing element boundaries
	auto onReg = [&](double v) {
		auto it = std::lower_bound(runReg.begin(), runReg.end(), v - kTol);
		return it != runReg.end() && std::abs(*it - v) <= kTol;
	};
	if (!onReg(line.start) || !onReg(line.stop))
		throw insertion_error("meshline: span endpoint not aligned to element boundaries");

	// merge with collinear overlapping/touching lines
	Meshline merged = line;
	bool elongation = false, raise = false;
	std::vector<size_t> remove;
	for (size_t i = 0; i < meshlines_.size(); i++) {
		const Meshline& L = meshlines_[i];
		if (L.dir != line.dir || std::abs(L.fixed - line.fixed) > kTol)
			continue;
		if (L.start <= merged.start + kTol && merged.stop <= L.stop + kTol) {
			// fully covered by an existing line
			if (merged.multiplicity <= L.multiplicity)
				return; // line already exists
			if (std::abs(L.start - merged.start) > kTol || std::abs(L.stop - merged.stop) > kTol)
				throw insertion_error(
					"meshline: combined elongation and multiplicity raise is not primitive; "
					"insert as two separate lines");
			raise = true;
			remove.push_back(i);
		} else if (L.start <= merged.stop + kTol && merged.start <= L.stop + kTol) {
			// overlap or touch: elongation / merging of lines
			if (L.multiplicity != merged.multiplicity)
				throw insertion_error(
					"meshline: combined elongation and multiplicity raise is not primitive; "
					"insert as two separate lines");
			merged.start = std::min(merged.start, L.start);
			merged.stop = std::max(merged.stop, L.stop);
			elongation = true;
			remove.push_back(i);
		}
	}

	if (!elongation && !raise) {
		// A fresh line is primitive iff it fully traverses the support of at
		// least one existing function, i.e. it spans at least p+1 element
		// widths (fewer near open boundaries where knots repeat).
		bool traversesAny = false;
		for (const LRFunction& f : functions_)
			if (lineTraversesSupport(merged, f)) {
				traversesAny = true;
				break;
			}
		if (!traversesAny)
			throw insertion_error("meshline: not primitive (must span p+1 elements, "
			                      "elongate an existing line, or raise multiplicity)");
	}

	for (auto it = remove.rbegin(); it != remove.rend(); ++it)
		meshlines_.erase(meshlines_.begin() + *it);
	meshlines_.push_back(merged);
	registerCoord(fixReg, merged.fixed);

	// Step 1: split every function whose support the merged line fully
	// traverses and that lacks the knot at the line's multiplicity.
	std::vector<LRFunction> pending;
	std::vector<LRFunction> survivors;
	survivors.reserve(functions_.size());
	for (LRFunction& f : functions_) {
		const LocalKnotVector& orth = (merged.dir == LineDir::Vertical) ? f.kx : f.ky;
		if (lineTraversesSupport(merged, f) &&
		    orth.multiplicityOf(merged.fixed, kTol) < merged.multiplicity)
			splitFunction(f, merged.dir, merged.fixed, pending);
		else
			survivors.push_back(std::move(f));
	}
	functions_ = std::move(survivors);

	// split the elements the line crosses
	size_t nel = elements_.size();
	for (size_t i = 0; i < nel; i++) {
		if (!lineCrossesElement(merged, elements_[i]))
			continue;
		ElementBox a = elements_[i], b = elements_[i];
		if (merged.dir == LineDir::Vertical) {
			a.x1 = merged.fixed;
			b.x0 = merged.fixed;
		} else {
			a.y1 = merged.fixed;
			b.y0 = merged.fixed;
		}
		elements_[i] = a;
		elements_.push_back(b);
	}

	// Step 2: check every newly created function against all meshlines and
	// split further until the basis has minimal support; merge duplicates.
	std::map<FnKey, int> index;
	for (int i = 0; i < numFunctions(); i++)
		index.emplace(FnKey(functions_[i].kx, functions_[i].ky), i);

	auto mergeInto = [&](LRFunction& target, const LRFunction& piece) {
		double g = target.gamma + piece.gamma;
		for (int c = 0; c < numChannels_; c++)
			target.cps[c] = (target.cps[c] * target.gamma + piece.cps[c] * piece.gamma) * (1.0 / g);
		target.gamma = g;
	};

	while (!pending.empty()) {
		LRFunction b = std::move(pending.back());
		pending.pop_back();

		// merge with an identical existing function
		auto it = index.find(FnKey(b.kx, b.ky));
		if (it != index.end()) {
			mergeInto(functions_[it->second], b);
			continue;
		}

		bool splitMore = false;
		for (const Meshline& l : meshlines_) {
			if (!lineTraversesSupport(l, b))
				continue;
			const LocalKnotVector& orth = (l.dir == LineDir::Vertical) ? b.kx : b.ky;
			if (orth.multiplicityOf(l.fixed, kTol) < l.multiplicity) {
				splitFunction(b, l.dir, l.fixed, pending);
				splitMore = true;
				break;
			}
		}
		if (!splitMore) {
			// new functions may appear twice in pending; merge those too
			index.emplace(FnKey(b.kx, b.ky), numFunctions());
			functions_.push_back(std::move(b));
		}
	}

	// pending pieces may have merged into each other via the index inserted
	// late; resolve any duplicates defensively
	for (int i = 0; i < numFunctions(); i++) {
		if (functions_[i].gamma > 1.0 + 1e-9)
			throw invariant_error("insertion produced gamma > 1");
		functions_[i].gamma = std::min(functions_[i].gamma, 1.0);
	}
	bumpVersion();
}

double LRMesh::partitionOfUnityError(double xi, double eta) const {
	double s = 0.0;
	for (const LRFunction& f : functions_) {
		double nx, dnx, ny, dny;
		f.kx.evaluate(xi, nx, dnx);
		f.ky.evaluate(eta, ny, dny);
		s += f.gamma * nx * ny;
	}
	return std::abs(s - 1.0);
}

Vec4 LRMesh::homogeneousPoint(double xi, double eta, int channel) const {
	Vec4 s{};
	for (const LRFunction& f : functions_) {
		double nx, dnx, ny, dny;
		f.kx.evaluate(xi, nx, dnx);
		f.ky.evaluate(eta, ny, dny);
		double b = f.gamma * nx * ny;
		if (b != 0.0)
			s += f.cps[channel] * b;
	}
	return s;
}

Vec3 LRMesh::surfacePoint(double xi, double eta, int channel,
                          Vec3* dXi, Vec3* dEta) const {
	Vec4 s{}, sx{}, sy{};
	for (const LRFunction& f : functions_) {
		double nx, dnx, ny, dny;
		f.kx.evaluate(xi, nx, dnx);
		f.ky.evaluate(eta, ny, dny);
		double b = f.gamma * nx * ny;
		s += f.cps[channel] * b;
		if (dXi)
			sx += f.cps[channel] * (f.gamma * dnx * ny);
		if (dEta)
			sy += f.cps[channel] * (f.gamma * nx * dny);
	}
	if (std::abs(s.w) < 1e-14)
		throw invariant_error("surface point: zero weight sum (singular geometry)");
	Vec3 x{s.x / s.w, s.y / s.w, s.z / s.w};
	if (dXi)
		*dXi = Vec3{sx.x - x.x * sx.w, sx.y - x.y * sx.w, sx.z - x.z * sx.w} / s.w;
	if (dEta)
		*dEta = Vec3{sy.x - x.x * sy.w, sy.y - x.y * sy.w, sy.z - x.z * sy.w} / s.w;
	return x;
}

int LRMesh::findElement(double xi, double eta) const {
	for (int i = 0; i < numElements(); i++)
		if (elements_[i].contains(xi, eta))
			return i;
	return -1;
}

const std::vector<std::vector<int>>& LRMesh::elementSupports() const {
	if (supportCacheVersion_ == version_)
		return supportCache_;
	supportCache_.assign(elements_.size(), {});
	for (int fi = 0; fi < numFunctions(); fi++) {
		const LRFunction& f = functions_[fi];
		for (int ei = 0; ei < numElements(); ei++) {
			const ElementBox& e = elements_[ei];
			if (f.kx.supportMin() <= e.x0 + kTol && e.x1 <= f.kx.supportMax() + kTol &&
			    f.ky.supportMin() <= e.y0 + kTol && e.y1 <= f.ky.supportMax() + kTol)
				supportCache_[ei].push_back(fi);
		}
	}
	supportCacheVersion_ = version_;
	return supportCache_;
}

int LRMesh::findFunction(const LocalKnotVector& kx, const LocalKnotVector& ky) const {
	for (int i = 0; i < numFunctions(); i++) {
		const LRFunction& f = functions_[i];
		if (f.kx.size() != kx.size() || f.ky.size() != ky.size())
			continue;
		bool same = true;
		for (int k = 0; same && k < kx.size(); k++)
			same = std::abs(f.kx[k] - kx[k]) <= kTol;
		for (int k = 0; same && k < ky.size(); k++)
			same = std::abs(f.ky[k] - ky[k]) <= kTol;
		if (same)
			return i;
	}
	return -1;
}

LRMesh LRMesh::fromParts(int degX, int degY,
                         double xmin, double xmax, double ymin, double ymax,
                         std::vector<Meshline> meshlines,
                         std::vector<LRFunction> functions) {
	LRMesh m;
	m.degX_ = degX;
	m.degY_ = degY;
	m.xmin_ = xmin;
	m.xmax_ = xmax;
	m.ymin_ = ymin;
	m.ymax_ = ymax;
	m.meshlines_ = std::move(meshlines);
	m.functions_ = std::move(functions);
	m.numChannels_ = m.functions_.empty() ? 1
	                 : static_cast<int>(m.functions_[0].cps.size());

	m.registerCoord(m.coordsX_, xmin);
	m.registerCoord(m.coordsX_, xmax);
	m.registerCoord(m.coordsY_, ymin);
	m.registerCoord(m.coordsY_, ymax);
	for (const Meshline& l : m.meshlines_) {
		m.registerCoord(l.dir == LineDir::Vertical ? m.coordsX_ : m.coordsY_, l.fixed);
		m.registerCoord(l.dir == LineDir::Vertical ? m.coordsY_ : m.coordsX_, l.start);
		m.registerCoord(l.dir == LineDir::Vertical ? m.coordsY_ : m.coordsX_, l.stop);
	}

	m.elements_.push_back({xmin, xmax, ymin, ymax});
	bool changed = true;
	while (changed) {
		changed = false;
		size_t n = m.elements_.size();
		for (size_t i = 0; i < n; i++) {
			for (const Meshline& l : m.meshlines_) {
				if (!m.lineCrossesElement(l, m.elements_[i]))
					continue;
				ElementBox a = m.elements_[i], b = m.elements_[i];
				if (l.dir == LineDir::Vertical) {
					a.x1 = l.fixed;
					b.x0 = l.fixed;
				} else {
					a.y1 = l.fixed;
					b.y0 = l.fixed;
				}
				m.elements_[i] = a;
				m.elements_.push_back(b);
				changed = true;
				break;
			}
		}
	}
	m.bumpVersion();
	return m;
}

std::vector<WeightedPoint> fromProjective(const LRMesh& mesh, int channel) {
	std::vector<WeightedPoint> out;
	out.reserve(mesh.numFunctions());
	for (const LRFunction& f : mesh.functions()) {
		const Vec4& h = f.cps[channel];
		if (!(h.w > 0.0))
			throw invariant_error("from_projective: non-positive weight");
		out.push_back({h.spatial(), h.w});
	}
	return out;
}

void toProjective(LRMesh& mesh, const std::vector<WeightedPoint>& pts, int channel) {
	if (static_cast<int>(pts.size()) != mesh.numFunctions())
		throw invariant_error("to_projective: size mismatch");
	for (int i = 0; i < mesh.numFunctions(); i++) {
		if (!(pts[i].w > 0.0))
			throw invariant_error("to_projective: non-positive weight");
		mesh.setControlPoint(i, channel, homogeneous(pts[i].x, pts[i].w));
	}
}

bool checkLinearIndependence(const LRMesh& mesh) {
	const auto& supports = mesh.elementSupports();
	std::vector<std::pair<double, double>> samples;
	for (const LRFunction& f : mesh.functions())
		samples.emplace_back(f.grevilleX(), f.grevilleY());
	for (int ei = 0; ei < mesh.numElements(); ei++) {
		const ElementBox& e = mesh.element(ei);
		int n = static_cast<int>(supports[ei].size());
		// one interior point per (function, element) pair, spread on a
		// diagonal so repeated functions get distinct rows
		for (int k = 0; k < n; k++) {
			double t = (k + 1.0) / (n + 1.0);
			samples.emplace_back(e.x0 + t * e.lenX(), e.y0 + t * e.lenY());
		}
	}

	Eigen::MatrixXd M(static_cast<int>(samples.size()), mesh.numFunctions());
	for (int r = 0; r < M.rows(); r++)
		for (int c = 0; c < M.cols(); c++) {
			const LRFunction& f = mesh.function(c);
			double nx, dnx, ny, dny;
			f.kx.evaluate(samples[r].first, nx, dnx);
			f.ky.evaluate(samples[r].second, ny, dny);
			M(r, c) = f.gamma * nx * ny;
		}

	Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
	qr.setThreshold(1e-10);
	return qr.rank() == M.cols();
}

Meshline minspanLine(const LRMesh& mesh, int element, LineDir dir) {
	const ElementBox& e = mesh.element(element);
	Meshline line;
	line.dir = dir;
	line.fixed = (dir == LineDir::Vertical) ? e.midX() : e.midY();
	line.multiplicity = 1;

	double elLo = (dir == LineDir::Vertical) ? e.y0 : e.x0;
	double elHi = (dir == LineDir::Vertical) ? e.y1 : e.x1;
	double elMid = 0.5 * (elLo + elHi);

	double bestWidth = 0.0, bestOff = 0.0;
	bool first = true;
	for (int fi : mesh.elementSupports()[element]) {
		const LRFunction& f = mesh.function(fi);
		const LocalKnotVector& kv = (dir == LineDir::Vertical) ? f.ky : f.kx;
		double w = kv.supportMax() - kv.supportMin();
		double off = std::abs(0.5 * (kv.supportMin() + kv.supportMax()) - elMid);
		if (first || w < bestWidth - LRMesh::kTol ||
		    (w < bestWidth + LRMesh::kTol && off < bestOff - LRMesh::kTol)) {
			first = false;
			bestWidth = w;
			bestOff = off;
			line.start = kv.supportMin();
			line.stop = kv.supportMax();
		}
	}
	return line;
}

} // namespace lrs
