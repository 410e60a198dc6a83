#pragma once

#include "carnot/group.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace carnot {

enum class LatticeKind {
    // Same spacing h in every coordinate; cell volume h^N.
    uniform,
    // delta_h(Z^N): spacing h^i in layer i; cell volume h^M.
    graded,
};

struct LatticeOptions {
    LatticeKind kind = LatticeKind::uniform;
    // Keep only offsets z with inner_radius <= |z|.
    double inner_radius = 0.0;
    std::size_t max_points = 4'000'000;
};

namespace detail {
struct GridIndex;
}

// Finite carrier of Haar measure: sample points with the volume each one represents
// and the metric scale below which the sample does not resolve balls.
class PointCloud {
public:
    PointCloud(GroupSpec g, std::vector<double> coords, std::vector<double> volumes,
               std::vector<double> resolution, GPoint center, double radius);
    // sublattice_scale[i]: resolution of the coarsest nested sub-lattice containing
    // sample i (+inf for unstructured samples or the lattice origin).
    PointCloud(GroupSpec g, std::vector<double> coords, std::vector<double> volumes,
               std::vector<double> resolution, std::vector<double> sublattice_scale, GPoint center,
               double radius);

    const GroupSpec& group() const { return g_; }
    std::size_t size() const { return volumes_.size(); }
    bool empty() const { return volumes_.empty(); }
    int dim() const { return g_.N(); }

    std::span<const double> point(std::size_t i) const
    {
        return {coords_.data() + i * static_cast<std::size_t>(g_.N()), static_cast<std::size_t>(g_.N())};
    }
    GPoint gpoint(std::size_t i) const { return GPoint(point(i)); }
    std::span<const double> coords() const { return coords_; }

    double volume(std::size_t i) const { return volumes_[i]; }
    std::span<const double> volumes() const { return volumes_; }
    double resolution(std::size_t i) const { return resolution_[i]; }
    std::span<const double> resolutions() const { return resolution_; }
    double sublattice_scale(std::size_t i) const { return sublattice_[i]; }
    std::span<const double> sublattice_scales() const { return sublattice_; }

    // True when every sample carries the same volume.
    bool uniform_volume() const { return uniform_; }
    // Common sample volume; throws InvalidParams for nonuniform clouds.
    double cell_volume() const;
    double total_volume() const { return total_volume_; }

    const GPoint& center() const { return center_; }
    double radius() const { return radius_; }

    // Indices i with rho(x, p_i) < t, ascending.
    std::vector<std::size_t> ball_query(std::span<const double> x, double t) const;
    void ball_query_into(std::span<const double> x, double t, std::vector<std::size_t>& out) const;
    // Nearest sample (lowest index on ties); dist receives rho.
    std::size_t nearest(std::span<const double> x, double* dist = nullptr) const;

private:
    GroupSpec g_;
    std::vector<double> coords_;
    std::vector<double> volumes_;
    std::vector<double> resolution_;
    std::vector<double> sublattice_;
    GPoint center_;
    double radius_ = 0.0;
    double total_volume_ = 0.0;
    bool uniform_ = true;
    std::shared_ptr<const detail::GridIndex> index_;
};

// Lattice offsets z inside the open ball B_radius(e), placed at center * z.
// Points are ordered coarse-to-fine by the 2-adic level of their integer
// coordinates, so the cloud at spacing 2h is a prefix of the cloud at spacing h.
PointCloud lattice_cloud(const GroupSpec& g, const GPoint& center, double radius, double spacing,
                         const LatticeOptions& options = {});

// Image of the cloud under x -> c * delta_t(c^{-1} x) with c the cloud center.
PointCloud dilate_cloud(const PointCloud& cloud, double t);

// Appends dilated copies of the outer half-annulus {radius/2 <= rho(c, x)} of the cloud
// by factors 2, 4, ... until the radius reaches outer_radius.
PointCloud with_dyadic_shells(const PointCloud& core, double outer_radius);

// Concatenation of clouds over the same group; the bounding ball is the first cloud's
// center with the smallest radius containing every point.
PointCloud merge_clouds(const std::vector<const PointCloud*>& parts);

// rho-scale below which a lattice with the given per-layer coordinate spacing does not resolve balls.
double lattice_resolution(const GroupSpec& g, double spacing, LatticeKind kind);

} // namespace carnot
