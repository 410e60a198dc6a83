#include "carnot/dyadic.hpp"

#include "carnot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace carnot {

namespace {

// Net centers bucketed on a coordinate grid sized to the separation scale.
class CenterGrid {
public:
    CenterGrid(const PointCloud& cloud, double scale) : cloud_(cloud), g_(cloud.group()), scale_(scale)
    {
        const int N = g_.N();
        width_.resize(N);
        for (int k = 0; k < N; ++k)
            width_[k] = std::pow(scale, g_.weights()[k]);
    }

    void insert(std::size_t point)
    {
        const std::size_t slot = centers_.size();
        centers_.push_back(point);
        buckets_[key(cell(cloud_.point(point)))].push_back(slot);
    }

    std::size_t size() const { return centers_.size(); }
    std::size_t center(std::size_t slot) const { return centers_[slot]; }

    // Calls f(slot, distance) for every center with distance < t; stops when f returns true.
    template <class F>
    void visit(std::span<const double> x, double t, F&& f) const
    {
        const int N = g_.N();
        std::vector<double> rad(N), hw(N);
        for (int k = 0; k < N; ++k)
            rad[k] = std::pow(t, g_.weights()[k]);
        kernel::translate_bound(g_, x, rad, hw);
        std::vector<long> lo(N), hi(N);
        double cells = 1.0;
        for (int k = 0; k < N; ++k) {
            lo[k] = static_cast<long>(std::floor((x[k] - hw[k]) / width_[k]));
            hi[k] = static_cast<long>(std::floor((x[k] + hw[k]) / width_[k]));
            cells *= static_cast<double>(hi[k] - lo[k] + 1);
        }
        if (cells > static_cast<double>(buckets_.size()) || cells > 4096.0) {
            for (std::size_t s = 0; s < centers_.size(); ++s) {
                const double d = kernel::qdist(g_, x, cloud_.point(centers_[s]));
                if (d < t && f(s, d))
                    return;
            }
            return;
        }
        std::vector<long> cur(lo);
        while (true) {
            auto it = buckets_.find(key(cur));
            if (it != buckets_.end())
                for (std::size_t s : it->second) {
                    const double d = kernel::qdist(g_, x, cloud_.point(centers_[s]));
                    if (d < t && f(s, d))
                        return;
                }
            int k = N - 1;
            while (k >= 0 && cur[k] == hi[k]) {
                cur[k] = lo[k];
                --k;
            }
            if (k < 0)
                return;
            ++cur[k];
        }
    }

    bool any_within(std::span<const double> x, double t) const
    {
        bool found = false;
        visit(x, t, [&](std::size_t, double) { return found = true; });
        return found;
    }

    // Nearest center slot, searching outward from radius t.
    std::size_t nearest_any(std::span<const double> x, double t) const
    {
        while (true) {
            const std::size_t s = nearest(x, t);
            if (s != npos || centers_.empty())
                return s;
            t *= 2.0;
        }
    }

    // Nearest center slot within t, lowest slot on ties; npos when none.
    std::size_t nearest(std::span<const double> x, double t) const
    {
        std::size_t best = npos;
        double bd = std::numeric_limits<double>::infinity();
        visit(x, t, [&](std::size_t s, double d) {
            if (d < bd || (d == bd && s < best)) {
                bd = d;
                best = s;
            }
            return false;
        });
        return best;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<long> cell(std::span<const double> x) const
    {
        std::vector<long> c(x.size());
        for (std::size_t k = 0; k < x.size(); ++k)
            c[k] = static_cast<long>(std::floor(x[k] / width_[k]));
        return c;
    }

    static std::uint64_t key(const std::vector<long>& c)
    {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (long v : c) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            h *= 0xbf58476d1ce4e5b9ull;
        }
        return h;
    }

    const PointCloud& cloud_;
    const GroupSpec& g_;
    double scale_;
    std::vector<double> width_;
    std::vector<std::size_t> centers_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

} // namespace

class FamilyAccess {
public:
    static DyadicFamily make(std::shared_ptr<const PointCloud> cloud, int m, int k_top, double lambda, double sep,
                             std::vector<std::vector<std::size_t>> centers,
                             std::vector<std::vector<std::int64_t>> parents, std::vector<std::uint32_t> base)
    {
        DyadicFamily f;
        f.cloud_ = std::move(cloud);
        f.m_ = m;
        f.k_top_ = k_top;
        f.lambda_ = lambda;
        f.sep_ = sep;
        const std::size_t L = static_cast<std::size_t>(k_top - m + 1);
        const std::size_t n = f.cloud_->size();
        f.cubes_.resize(L);
        f.assignment_.assign(L, std::vector<std::uint32_t>(n));
        for (std::size_t l = 0; l < L; ++l)
            f.cubes_[l].resize(centers[l].size());
        for (std::size_t l = 0; l < L; ++l) {
            for (std::size_t j = 0; j < centers[l].size(); ++j) {
                f.cubes_[l][j].center = centers[l][j];
                f.cubes_[l][j].parent = l + 1 < L ? parents[l][j] : -1;
                if (l + 1 < L)
                    f.cubes_[l + 1][parents[l][j]].children.push_back(j);
            }
        }
        f.assignment_[0] = std::move(base);
        for (std::size_t l = 1; l < L; ++l)
            for (std::size_t i = 0; i < n; ++i)
                f.assignment_[l][i] = static_cast<std::uint32_t>(f.cubes_[l - 1][f.assignment_[l - 1][i]].parent);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t i = 0; i < n; ++i)
                f.cubes_[l][f.assignment_[l][i]].members.push_back(i);
        f.report_ = certify(f);
        return f;
    }
};

double DyadicFamily::side_length(int level) const { return std::pow(lambda_, level); }

std::span<const Cube> DyadicFamily::level(int k) const
{
    if (k < m_ || k > k_top_)
        throw ScaleOutOfRange("level " + std::to_string(k) + " outside the family");
    return cubes_[k - m_];
}

const Cube& DyadicFamily::cube(CubeRef q) const { return level(q.level)[q.index]; }

std::size_t DyadicFamily::cube_count() const
{
    std::size_t n = 0;
    for (const auto& l : cubes_)
        n += l.size();
    return n;
}

std::size_t DyadicFamily::cube_of(std::size_t point, int k) const
{
    if (k < m_ || k > k_top_)
        throw ScaleOutOfRange("level " + std::to_string(k) + " outside the family");
    return assignment_[k - m_][point];
}

std::vector<CubeRef> DyadicFamily::all_cubes() const
{
    std::vector<CubeRef> out;
    for (int k = m_; k <= k_top_; ++k)
        for (std::size_t j = 0; j < cubes_[k - m_].size(); ++j)
            out.push_back({k, j});
    return out;
}

std::vector<CubeRef> DyadicFamily::descendants(CubeRef P) const
{
    std::vector<CubeRef> out{P};
    for (std::size_t head = 0; head < out.size(); ++head) {
        const CubeRef q = out[head];
        if (q.level == m_)
            continue;
        for (std::size_t c : cube(q).children)
            out.push_back({q.level - 1, c});
    }
    std::reverse(out.begin(), out.end());
    return out;
}

double DyadicFamily::volume(CubeRef q, VolumeModel model) const
{
    if (model == VolumeModel::nominal)
        return cloud_->group().unit_ball_volume() * std::pow(side_length(q.level), cloud_->group().M());
    double v = 0.0;
    for (std::size_t i : cube(q).members)
        v += cloud_->volume(i);
    return v;
}

DyadicFamily build_family(std::shared_ptr<const PointCloud> cloud, int m, int k_top, const DyadicOptions& options)
{
    if (!cloud || cloud->empty())
        throw EmptyCloud("cannot build a dyadic family on an empty cloud");
    if (!(options.lambda > 1.0))
        throw InvalidParams("lambda must exceed 1");
    if (m > k_top || k_top - m > 64)
        throw ScaleOutOfRange("levels must satisfy m <= k_top with at most 65 levels");
    if (cloud->size() > 1 && std::pow(options.lambda, m) > 2.0 * cloud->radius())
        throw ScaleOutOfRange("base scale lambda^m exceeds the cloud diameter scale");
    const double sep = options.separation > 0.0 ? options.separation : options.lambda / 2.0;
    const PointCloud& pc = *cloud;
    const std::size_t n = pc.size();
    const std::size_t L = static_cast<std::size_t>(k_top - m + 1);

    std::vector<std::vector<std::size_t>> centers(L);
    std::vector<std::vector<std::int64_t>> parents(L);
    std::unique_ptr<CenterGrid> upper;
    for (int k = k_top; k >= m; --k) {
        const std::size_t l = static_cast<std::size_t>(k - m);
        const double S = sep * std::pow(options.lambda, k);
        auto grid = std::make_unique<CenterGrid>(pc, S);
        if (upper)
            for (std::size_t s = 0; s < upper->size(); ++s)
                grid->insert(upper->center(s));
        const double tau = options.candidate_ratio > 0.0 ? S / options.candidate_ratio : 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (pc.sublattice_scale(i) >= tau && !grid->any_within(pc.point(i), S))
                grid->insert(i);
        centers[l].resize(grid->size());
        for (std::size_t s = 0; s < grid->size(); ++s)
            centers[l][s] = grid->center(s);
        if (upper) {
            const double Su = sep * std::pow(options.lambda, k + 1);
            parents[l].resize(grid->size());
            for (std::size_t s = 0; s < grid->size(); ++s) {
                const std::size_t p = s < upper->size() ? s : upper->nearest_any(pc.point(grid->center(s)), Su);
                if (p == CenterGrid::npos)
                    throw Error("net center without an upper center within the separation radius");
                parents[l][s] = static_cast<std::int64_t>(p);
            }
        }
        upper = std::move(grid);
    }

    const double Sm = sep * std::pow(options.lambda, m);
    std::vector<std::uint32_t> base(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = upper->nearest_any(pc.point(i), Sm);
        if (s == CenterGrid::npos)
            throw Error("sample point without a base center within the separation radius");
        base[i] = static_cast<std::uint32_t>(s);
    }
    return FamilyAccess::make(std::move(cloud), m, k_top, options.lambda, sep, std::move(centers),
                              std::move(parents), std::move(base));
}

DyadicFamily assemble_family(std::shared_ptr<const PointCloud> cloud, int m, int k_top, double lambda,
                             double separation, const std::vector<std::vector<std::size_t>>& centers,
                             const std::vector<std::vector<std::int64_t>>& parents,
                             const std::vector<std::size_t>& base_assignment)
{
    if (!cloud || cloud->empty())
        throw EmptyCloud("cannot assemble a family on an empty cloud");
    const std::size_t L = static_cast<std::size_t>(k_top - m + 1);
    if (centers.size() != L || parents.size() != L || base_assignment.size() != cloud->size())
        throw ShapeMismatch("family records do not match the level range or cloud size");
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t c : centers[l])
            if (c >= cloud->size())
                throw ShapeMismatch("cube center outside the cloud");
        if (l + 1 < L) {
            if (parents[l].size() != centers[l].size())
                throw ShapeMismatch("parent list length mismatch");
            for (std::int64_t p : parents[l])
                if (p < 0 || static_cast<std::size_t>(p) >= centers[l + 1].size())
                    throw ShapeMismatch("parent index out of range");
        }
    }
    std::vector<std::uint32_t> base(base_assignment.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base_assignment[i] >= centers[0].size())
            throw ShapeMismatch("base assignment out of range");
        base[i] = static_cast<std::uint32_t>(base_assignment[i]);
    }
    return FamilyAccess::make(std::move(cloud), m, k_top, lambda, separation, centers, parents, std::move(base));
}

SandwichReport certify(const DyadicFamily& f)
{
    SandwichReport rep;
    const PointCloud& pc = f.cloud();
    const GroupSpec& g = pc.group();
    const std::size_t n = pc.size();
    std::vector<std::size_t> hits;
    for (int k = f.base_level(); k <= f.top_level(); ++k) {
        const auto cubes = f.level(k);
        std::vector<int> seen(n, 0);
        std::size_t total = 0;
        for (std::size_t j = 0; j < cubes.size(); ++j) {
            total += cubes[j].members.size();
            for (std::size_t i : cubes[j].members) {
                ++seen[i];
                if (f.cube_of(i, k) != j)
                    rep.partition = false;
            }
        }
        if (total != n || std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
            rep.partition = false;

        const double outer = f.side_length(k + 1);
        const double inner = f.side_length(k);
        for (std::size_t j = 0; j < cubes.size(); ++j) {
            const Cube& q = cubes[j];
            const auto c = pc.point(q.center);
            if (f.cube_of(q.center, k) != j)
                rep.partition = false;
            for (std::size_t i : q.members) {
                const double d = kernel::qdist(g, c, pc.point(i));
                rep.outer_fill = std::max(rep.outer_fill, d / outer);
                if (!(d < outer)) {
                    rep.outer = false;
                    ++rep.outer_violations;
                }
                if (k < f.top_level() && f.cube_of(i, k + 1) != static_cast<std::size_t>(q.parent))
                    rep.nesting = false;
            }
            pc.ball_query_into(c, inner, hits);
            for (std::size_t i : hits)
                if (f.cube_of(i, k) != j) {
                    rep.inner = false;
                    ++rep.inner_violations;
                }
        }
    }
    return rep;
}

std::size_t overlap_count(const DyadicFamily& f, CubeRef q)
{
    const PointCloud& pc = f.cloud();
    const auto hits = pc.ball_query(pc.point(f.cube(q).center), 2.0 * f.side_length(q.level + 2));
    std::vector<std::size_t> ids;
    ids.reserve(hits.size());
    for (std::size_t i : hits)
        ids.push_back(f.cube_of(i, q.level));
    std::sort(ids.begin(), ids.end());
    return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

OverlapSummary overlap_summary(const DyadicFamily& f)
{
    OverlapSummary s;
    for (int k = f.base_level(); k <= f.top_level(); ++k) {
        std::size_t mx = 0;
        for (std::size_t j = 0; j < f.level(k).size(); ++j)
            mx = std::max(mx, overlap_count(f, {k, j}));
        s.per_level.push_back(mx);
        s.max = std::max(s.max, mx);
    }
    return s;
}

} // namespace carnot
