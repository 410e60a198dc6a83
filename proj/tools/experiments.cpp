#include "experiments.hpp"

#include "carnot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace carnot::experiments {

std::size_t Table::index(std::string_view column) const
{
    const auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end())
        throw InvalidParams("no column named " + std::string(column));
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> Table::column(std::string_view name) const { return column(name, 0, rows.size()); }

std::vector<double> Table::column(std::string_view name, std::size_t begin, std::size_t end) const
{
    const std::size_t c = index(name);
    std::vector<double> out;
    for (std::size_t i = begin; i < std::min(end, rows.size()); ++i)
        out.push_back(rows[i][c]);
    return out;
}

double quantile(std::vector<double> v, double q)
{
    if (v.empty())
        throw InvalidParams("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    if (v[hi] == v[lo])
        return v[lo];
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Interval calibrate(std::span<const double> values, double kappa)
{
    if (values.empty())
        throw InvalidParams("calibration needs at least one value");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {*lo / kappa, *hi * kappa};
}

std::size_t count_outside(const Interval& band, std::span<const double> values)
{
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [&](double v) { return !band.contains(v); }));
}

std::vector<double> random_bumps(const PointCloud& cloud, std::mt19937_64& rng, double r_min, double r_max)
{
    const GroupSpec& g = cloud.group();
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> dens(cloud.size(), 0.0);
    const int bumps = 1 + static_cast<int>(rng() % 3);
    for (int b = 0; b < bumps; ++b) {
        std::vector<double> c(static_cast<std::size_t>(g.N()));
        for (int k = 0; k < g.N(); ++k)
            c[static_cast<std::size_t>(k)] = (U(rng) - 0.5) * 0.6 * std::pow(0.5, g.weights()[k] - 1);
        const double radius = r_min + (r_max - r_min) * U(rng);
        const double amp = 0.5 + U(rng);
        for (std::size_t i : cloud.ball_query(c, radius))
            dens[i] += amp;
    }
    return dens;
}

namespace {

std::shared_ptr<const PointCloud> graded_cloud(const GroupSpec& g, double radius, double spacing)
{
    LatticeOptions lo;
    lo.kind = LatticeKind::graded;
    return std::make_shared<const PointCloud>(lattice_cloud(g, identity(g), radius, spacing, lo));
}

double ratio_or_inf(double a, double b) { return safe_ratio(a, b); }

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

ChainSetup chain_setup(const GroupSpec& g, const ChainOptions& o)
{
    ChainSetup s;
    s.cloud = graded_cloud(g, o.radius, o.spacing);
    DyadicOptions d;
    d.lambda = o.lambda;
    for (int m : o.base_levels)
        s.families.push_back(build_family(s.cloud, m, o.top, d));
    return s;
}

Table a_chain_trials(const ChainSetup& setup, std::size_t trials, std::uint64_t seed, double s)
{
    Table t;
    t.columns = {"trial", "base_level", "A1", "A2", "A3", "r12", "r23", "r31", "directions"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const PointCloud& cloud = *setup.cloud;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const DyadicFamily& f = setup.families[trial % setup.families.size()];
        // sigma: volume weighted by random bumps, so some cubes carry no mass.
        const std::vector<double> bumps = random_bumps(cloud, rng, 0.4, 1.2);
        std::vector<double> sigma(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i)
            sigma[i] = bumps[i] * cloud.volume(i);
        const CubeValues sig = cube_sums(f, sigma);
        LambdaAssignment lambda(f);
        const double on = 0.2 + 0.6 * U(rng);
        const double power = 0.5 + U(rng);
        double total = 0.0;
        for (int k = f.base_level(); k <= f.top_level(); ++k)
            for (std::size_t j = 0; j < f.level(k).size(); ++j) {
                const double sg = sig[static_cast<std::size_t>(k - f.base_level())][j];
                if (sg > 0.0 && U(rng) < on) {
                    lambda[{k, j}] = std::pow(sg, power) * (0.1 + U(rng));
                    total += lambda[{k, j}];
                }
            }
        if (total == 0.0) {
            --trial;
            continue;
        }
        const AChain a = a_functionals(f, sigma, lambda, s);
        const double r12 = ratio_or_inf(a.A1, a.A2);
        const double r23 = ratio_or_inf(a.A2, a.A3);
        const double r31 = ratio_or_inf(a.A3, a.A1);
        const bool ok = finite_positive(a.A1) && finite_positive(a.A2) && finite_positive(a.A3);
        t.rows.push_back({static_cast<double>(trial), static_cast<double>(f.base_level()), a.A1, a.A2, a.A3, r12, r23,
                          r31, ok ? 1.0 : 0.0});
    }
    return t;
}

Table b_chain_trials(const ChainSetup& setup, std::size_t trials, std::uint64_t seed, double alpha, double p, double q,
                     bool double_star)
{
    Table t;
    t.columns = {"trial", "base_level", "B1", "B2", "B3", "r12", "r23", "r31", "directions"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const PointCloud& cloud = *setup.cloud;
    BOptions opts;
    opts.double_star = double_star;
    constexpr double slack = 1e-12;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const DyadicFamily& f = setup.families[trial % setup.families.size()];
        const std::vector<double> bumps = random_bumps(cloud, rng, 0.3, 1.0);
        std::vector<double> mu(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i)
            mu[i] = bumps[i] * cloud.volume(i);
        if (U(rng) < 0.5) {
            const int atoms = 1 + static_cast<int>(rng() % 4);
            for (int a = 0; a < atoms; ++a)
                mu[rng() % cloud.size()] += 0.05 * U(rng);
        }
        const int level = f.top_level() - static_cast<int>(rng() % 2);
        const CubeRef P{level, static_cast<std::size_t>(rng() % f.level(level).size())};
        const BChain b = b_functionals(f, P, mu, alpha, p, q, opts);
        if (b.B1 == 0.0 && b.B2 == 0.0 && b.B3 == 0.0) {
            --trial;
            continue;
        }
        bool ok = finite_positive(b.B1) && finite_positive(b.B2) && finite_positive(b.B3);
        ok = ok && b.B1 <= b.B3 * (1.0 + slack);
        if (p <= 2.0)
            ok = ok && b.B2 <= b.B3 * (1.0 + slack);
        t.rows.push_back({static_cast<double>(trial), static_cast<double>(f.base_level()), b.B1, b.B2, b.B3,
                          ratio_or_inf(b.B1, b.B2), ratio_or_inf(b.B2, b.B3), ratio_or_inf(b.B3, b.B1),
                          ok ? 1.0 : 0.0});
    }
    return t;
}

Table dze_trials(const GroupSpec& g, const DzeOptions& o, std::size_t trials, std::uint64_t seed)
{
    Table t;
    t.columns = {"trial", "wolff", "lower_sum", "lower_ratio", "band", "upper_sum", "upper_ratio"};
    const auto cloud = graded_cloud(g, o.radius, o.spacing);
    DyadicOptions d;
    d.lambda = o.lambda;
    const DyadicFamily f = build_family(cloud, o.base, o.top, d);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const std::vector<std::size_t> inner = cloud->ball_query(identity(g).coords(), 0.5);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::vector<double> dens = random_bumps(*cloud, rng, 0.3, 1.0);
        std::vector<std::size_t> support;
        for (std::size_t i : inner)
            if (dens[i] > 0.0)
                support.push_back(i);
        if (support.empty()) {
            --trial;
            continue;
        }
        const std::span<const double> x = cloud->point(support[rng() % support.size()]);
        Measure mu(GridDensity(cloud, std::move(dens)));
        const DzeResult r = dze_check(x, mu, f, o.r, o.alpha, o.p);
        t.rows.push_back(
            {static_cast<double>(trial), r.wolff, r.lower_sum, r.lower_ratio, r.band, r.upper_sum, r.upper_ratio});
    }
    return t;
}

Table energy_trials(const GroupSpec& g, const EnergyOptions& o, std::size_t trials, std::uint64_t seed)
{
    Table t;
    t.columns = {"trial", "continuous", "discrete_a", "discrete_b", "ratio_a", "ratio_b"};
    const auto cloud = graded_cloud(g, o.radius, o.spacing);
    DyadicOptions d;
    d.lambda = o.lambda;
    std::map<int, DyadicFamily> families;
    for (const auto* sched : {&o.schedule_a, &o.schedule_b})
        for (int m : *sched)
            if (!families.contains(m))
                families.emplace(m, build_family(cloud, m, o.top, d));
    auto schedule = [&](const std::vector<int>& levels) {
        std::vector<const DyadicFamily*> out;
        for (int m : levels)
            out.push_back(&families.at(m));
        return out;
    };
    const auto sa = schedule(o.schedule_a);
    const auto sb = schedule(o.schedule_b);
    std::mt19937_64 rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Measure mu(GridDensity(cloud, random_bumps(*cloud, rng, o.bump_min, o.bump_max)));
        const double cont = continuous_energy(mu, o.r, o.alpha, o.p, o.q, *cloud);
        const std::vector<double> masses = carrier_masses(*cloud, mu);
        auto sup = [&](const std::vector<const DyadicFamily*>& s) {
            double v = 0.0;
            for (const DyadicFamily* f : s)
                v = std::max(v, discrete_energy(*f, masses, o.r, o.alpha, o.p, o.q));
            return v;
        };
        const double da = sup(sa);
        const double db = sup(sb);
        t.rows.push_back({static_cast<double>(trial), cont, da, db, safe_ratio(cont, da), safe_ratio(cont, db)});
    }
    return t;
}

} // namespace carnot::experiments
