#include "carnot/cloud.hpp"

#include "carnot/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace carnot {

namespace detail {

// Uniform bucket grid over the coordinate bounding box, CSR layout.
struct GridIndex {
    int N = 0;
    std::vector<double> lo;
    std::vector<double> width;
    std::vector<long> cells;
    std::vector<std::size_t> start; // size total_cells + 1
    std::vector<std::uint32_t> order;
    std::size_t total_cells = 1;

    long cell_of(int k, double v) const
    {
        const long c = static_cast<long>(std::floor((v - lo[k]) / width[k]));
        return std::clamp(c, 0L, cells[k] - 1);
    }
};

} // namespace detail

namespace {

std::shared_ptr<const detail::GridIndex> build_index(int N, const std::vector<double>& coords, std::size_t n)
{
    auto idx = std::make_shared<detail::GridIndex>();
    idx->N = N;
    idx->lo.assign(N, std::numeric_limits<double>::infinity());
    std::vector<double> hi(N, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < N; ++k) {
            idx->lo[k] = std::min(idx->lo[k], coords[i * N + k]);
            hi[k] = std::max(hi[k], coords[i * N + k]);
        }
    const double target = std::max(1.0, static_cast<double>(n) / 4.0);
    double logvol = 0.0;
    int spread = 0;
    for (int k = 0; k < N; ++k)
        if (hi[k] > idx->lo[k]) {
            logvol += std::log(hi[k] - idx->lo[k]);
            ++spread;
        }
    const double g = spread ? std::exp((logvol - std::log(target)) / spread) : 1.0;
    idx->cells.resize(N);
    idx->width.resize(N);
    for (int k = 0; k < N; ++k) {
        const double ext = hi[k] - idx->lo[k];
        long c = ext > 0 ? static_cast<long>(std::ceil(ext / g)) : 1;
        c = std::clamp(c, 1L, static_cast<long>(4 * target) + 1);
        idx->cells[k] = c;
        idx->width[k] = ext > 0 ? ext / c * (1.0 + 1e-12) : 1.0;
        idx->total_cells *= static_cast<std::size_t>(c);
    }
    std::vector<std::size_t> cell_id(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t id = 0;
        for (int k = 0; k < N; ++k)
            id = id * idx->cells[k] + idx->cell_of(k, coords[i * N + k]);
        cell_id[i] = id;
    }
    idx->start.assign(idx->total_cells + 1, 0);
    for (std::size_t id : cell_id)
        ++idx->start[id + 1];
    std::partial_sum(idx->start.begin(), idx->start.end(), idx->start.begin());
    idx->order.resize(n);
    std::vector<std::size_t> fill(idx->start.begin(), idx->start.end() - 1);
    for (std::size_t i = 0; i < n; ++i)
        idx->order[fill[cell_id[i]]++] = static_cast<std::uint32_t>(i);
    return idx;
}

} // namespace

PointCloud::PointCloud(GroupSpec g, std::vector<double> coords, std::vector<double> volumes,
                       std::vector<double> resolution, GPoint center, double radius)
    : PointCloud(std::move(g), std::move(coords), std::move(volumes), std::move(resolution), {},
                 std::move(center), radius)
{
}

PointCloud::PointCloud(GroupSpec g, std::vector<double> coords, std::vector<double> volumes,
                       std::vector<double> resolution, std::vector<double> sublattice_scale, GPoint center,
                       double radius)
    : g_(std::move(g)), coords_(std::move(coords)), volumes_(std::move(volumes)),
      resolution_(std::move(resolution)), sublattice_(std::move(sublattice_scale)), center_(std::move(center)),
      radius_(radius)
{
    const std::size_t N = g_.N();
    check_shape(g_, center_.coords());
    if (sublattice_.empty())
        sublattice_.assign(volumes_.size(), std::numeric_limits<double>::infinity());
    if (coords_.size() != volumes_.size() * N || resolution_.size() != volumes_.size() ||
        sublattice_.size() != volumes_.size())
        throw ShapeMismatch("cloud arrays have inconsistent lengths");
    if (!(radius_ > 0.0))
        throw NonpositiveScale("cloud radius must be positive");
    for (std::size_t i = 0; i < volumes_.size(); ++i) {
        if (!(volumes_[i] > 0.0) || !(resolution_[i] > 0.0))
            throw InvalidParams("sample volumes and resolutions must be positive");
        if (kernel::qdist(g_, center_.coords(), point(i)) > radius_ * (1.0 + 1e-9))
            throw InvalidParams("sample point lies outside the bounding ball");
        if (volumes_[i] != volumes_.front())
            uniform_ = false;
        total_volume_ += volumes_[i];
    }
    index_ = build_index(g_.N(), coords_, volumes_.size());
}

double PointCloud::cell_volume() const
{
    if (!uniform_ || empty())
        throw InvalidParams("cloud has no common cell volume");
    return volumes_.front();
}

std::vector<std::size_t> PointCloud::ball_query(std::span<const double> x, double t) const
{
    std::vector<std::size_t> out;
    ball_query_into(x, t, out);
    return out;
}

void PointCloud::ball_query_into(std::span<const double> x, double t, std::vector<std::size_t>& out) const
{
    out.clear();
    if (!(t > 0.0) || empty())
        return;
    const int N = g_.N();
    const detail::GridIndex& idx = *index_;
    std::vector<double> rad(N), hw(N);
    for (int k = 0; k < N; ++k)
        rad[k] = std::pow(t, g_.weights()[k]);
    kernel::translate_bound(g_, x, rad, hw);
    std::vector<long> lo(N), hi(N);
    double span_cells = 1.0;
    for (int k = 0; k < N; ++k) {
        lo[k] = idx.cell_of(k, x[k] - hw[k] * (1 + 1e-12));
        hi[k] = idx.cell_of(k, x[k] + hw[k] * (1 + 1e-12));
        span_cells *= static_cast<double>(hi[k] - lo[k] + 1);
    }
    if (span_cells * 2.0 > static_cast<double>(size())) {
        for (std::size_t i = 0; i < size(); ++i)
            if (kernel::qdist(g_, x, point(i)) < t)
                out.push_back(i);
        return;
    }
    std::vector<long> cur(lo);
    while (true) {
        std::size_t id = 0;
        for (int k = 0; k < N; ++k)
            id = id * idx.cells[k] + cur[k];
        for (std::size_t s = idx.start[id]; s < idx.start[id + 1]; ++s) {
            const std::size_t i = idx.order[s];
            if (kernel::qdist(g_, x, point(i)) < t)
                out.push_back(i);
        }
        int k = N - 1;
        while (k >= 0 && cur[k] == hi[k]) {
            cur[k] = lo[k];
            --k;
        }
        if (k < 0)
            break;
        ++cur[k];
    }
    std::sort(out.begin(), out.end());
}

std::size_t PointCloud::nearest(std::span<const double> x, double* dist) const
{
    if (empty())
        throw EmptyCloud("nearest() on an empty cloud");
    double t = *std::min_element(resolution_.begin(), resolution_.end());
    std::vector<std::size_t> hits;
    const double far = kernel::qdist(g_, center_.coords(), x) + radius_;
    while (true) {
        ball_query_into(x, t, hits);
        if (!hits.empty() || t > 1e3 * far + 1.0)
            break;
        t *= 2.0;
    }
    if (hits.empty()) {
        hits.resize(size());
        std::iota(hits.begin(), hits.end(), std::size_t(0));
    }
    std::size_t best = hits.front();
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i : hits) {
        const double d = kernel::qdist(g_, x, point(i));
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    if (dist)
        *dist = bd;
    return best;
}

double lattice_resolution(const GroupSpec& g, double spacing, LatticeKind kind)
{
    if (kind == LatticeKind::graded)
        return spacing;
    double res = 0.0;
    for (int w = 1; w <= g.step(); ++w)
        res = std::max(res, std::pow(spacing, 1.0 / w));
    return res;
}

PointCloud lattice_cloud(const GroupSpec& g, const GPoint& center, double radius, double spacing,
                         const LatticeOptions& options)
{
    check_shape(g, center.coords());
    if (!(spacing > 0.0) || !(radius > 0.0))
        throw NonpositiveScale("lattice spacing and radius must be positive");
    const int N = g.N();
    std::vector<double> step(N);
    std::vector<long> bound(N);
    double cell = 1.0;
    for (int k = 0; k < N; ++k) {
        const int w = g.weights()[k];
        step[k] = options.kind == LatticeKind::graded ? std::pow(spacing, w) : spacing;
        cell *= step[k];
        const double extent = std::pow(radius, w) / step[k];
        if (extent > 1e9)
            throw TooManyPoints("lattice extent too large");
        bound[k] = static_cast<long>(std::floor(extent));
    }

    struct Site {
        int level;
        std::vector<long> k;
    };
    std::vector<Site> sites;
    std::vector<long> k(N);
    for (int d = 0; d < N; ++d)
        k[d] = -bound[d];
    std::vector<double> z(N);
    while (true) {
        for (int d = 0; d < N; ++d)
            z[d] = step[d] * static_cast<double>(k[d]);
        const double r = kernel::hnorm(g, z);
        if (r < radius && r >= options.inner_radius) {
            int level = 64;
            for (int d = 0; d < N; ++d)
                if (k[d] != 0) {
                    const int tz = std::countr_zero(static_cast<unsigned long>(std::abs(k[d])));
                    level = std::min(level, options.kind == LatticeKind::graded ? tz / g.weights()[d] : tz);
                }
            sites.push_back({level, k});
            if (sites.size() > options.max_points)
                throw TooManyPoints("lattice cloud exceeds " + std::to_string(options.max_points) + " points");
        }
        int d = N - 1;
        while (d >= 0 && k[d] == bound[d]) {
            k[d] = -bound[d];
            --d;
        }
        if (d < 0)
            break;
        ++k[d];
    }
    std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) {
        if (a.level != b.level)
            return a.level > b.level;
        return a.k < b.k;
    });

    std::vector<double> coords(sites.size() * N);
    for (std::size_t i = 0; i < sites.size(); ++i) {
        for (int d = 0; d < N; ++d)
            z[d] = step[d] * static_cast<double>(sites[i].k[d]);
        kernel::multiply(g, center.coords(), z, {coords.data() + i * N, static_cast<std::size_t>(N)});
    }
    const double res = lattice_resolution(g, spacing, options.kind);
    std::vector<double> sub(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i)
        sub[i] = sites[i].level >= 60 ? std::numeric_limits<double>::infinity()
                                      : lattice_resolution(g, std::ldexp(spacing, sites[i].level), options.kind);
    return PointCloud(g, std::move(coords), std::vector<double>(sites.size(), cell),
                      std::vector<double>(sites.size(), res), std::move(sub), center, radius);
}

namespace {

void conjugate_dilate(const GroupSpec& g, std::span<const double> c, double t, std::span<const double> x,
                      std::span<double> out)
{
    const std::size_t N = g.N();
    std::vector<double> neg(N), rel(N), dil(N);
    for (std::size_t k = 0; k < N; ++k)
        neg[k] = -c[k];
    kernel::multiply(g, neg, x, rel);
    kernel::dilate(g, t, rel, dil);
    kernel::multiply(g, c, dil, out);
}

} // namespace

PointCloud dilate_cloud(const PointCloud& cloud, double t)
{
    if (!(t > 0.0))
        throw NonpositiveScale("dilation factor must be positive");
    const GroupSpec& g = cloud.group();
    const std::size_t N = g.N();
    const double jac = std::pow(t, g.M());
    std::vector<double> coords(cloud.size() * N), vol(cloud.size()), res(cloud.size()), sub(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        conjugate_dilate(g, cloud.center().coords(), t, cloud.point(i), {coords.data() + i * N, N});
        vol[i] = cloud.volume(i) * jac;
        res[i] = cloud.resolution(i) * t;
        sub[i] = cloud.sublattice_scale(i) * t;
    }
    return PointCloud(g, std::move(coords), std::move(vol), std::move(res), std::move(sub), cloud.center(),
                      cloud.radius() * t);
}

PointCloud with_dyadic_shells(const PointCloud& core, double outer_radius)
{
    const GroupSpec& g = core.group();
    const std::size_t N = g.N();
    std::vector<double> coords(core.coords().begin(), core.coords().end());
    std::vector<double> vol(core.volumes().begin(), core.volumes().end());
    std::vector<double> res(core.resolutions().begin(), core.resolutions().end());
    std::vector<double> sub(core.sublattice_scales().begin(), core.sublattice_scales().end());
    std::vector<std::size_t> annulus;
    for (std::size_t i = 0; i < core.size(); ++i)
        if (kernel::qdist(g, core.center().coords(), core.point(i)) >= core.radius() / 2)
            annulus.push_back(i);
    double radius = core.radius();
    double t = 1.0;
    std::vector<double> p(N);
    while (radius < outer_radius) {
        t *= 2.0;
        radius = core.radius() * t;
        const double jac = std::pow(t, g.M());
        for (std::size_t i : annulus) {
            conjugate_dilate(g, core.center().coords(), t, core.point(i), p);
            coords.insert(coords.end(), p.begin(), p.end());
            vol.push_back(core.volume(i) * jac);
            res.push_back(core.resolution(i) * t);
            sub.push_back(core.sublattice_scale(i) * t);
        }
    }
    return PointCloud(g, std::move(coords), std::move(vol), std::move(res), std::move(sub), core.center(), radius);
}

PointCloud merge_clouds(const std::vector<const PointCloud*>& parts)
{
    if (parts.empty())
        throw EmptyCloud("merge_clouds needs at least one cloud");
    const GroupSpec& g = parts.front()->group();
    const GPoint& c = parts.front()->center();
    std::vector<double> coords, vol, res, sub;
    double radius = 0.0;
    for (const PointCloud* part : parts) {
        if (!part->group().same_as(g))
            throw ShapeMismatch("clouds belong to different groups");
        coords.insert(coords.end(), part->coords().begin(), part->coords().end());
        vol.insert(vol.end(), part->volumes().begin(), part->volumes().end());
        res.insert(res.end(), part->resolutions().begin(), part->resolutions().end());
        sub.insert(sub.end(), part->sublattice_scales().begin(), part->sublattice_scales().end());
        for (std::size_t i = 0; i < part->size(); ++i)
            radius = std::max(radius, kernel::qdist(g, c.coords(), part->point(i)));
    }
    radius = radius > 0.0 ? radius * (1.0 + 1e-9) : parts.front()->radius();
    return PointCloud(g, std::move(coords), std::move(vol), std::move(res), std::move(sub), c, radius);
}

} // namespace carnot
