#include "carnot/calculus.hpp"

#include "carnot/errors.hpp"
#include "carnot/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace carnot {

namespace {

std::size_t slot(const DyadicFamily& f, int k) { return static_cast<std::size_t>(k - f.base_level()); }

CubeValues zeros(const DyadicFamily& f)
{
    CubeValues v(static_cast<std::size_t>(f.top_level() - f.base_level() + 1));
    for (int k = f.base_level(); k <= f.top_level(); ++k)
        v[slot(f, k)].assign(f.level(k).size(), 0.0);
    return v;
}

CubeValues cube_volumes(const DyadicFamily& f, VolumeModel model)
{
    if (model == VolumeModel::empirical)
        return cube_sums(f, f.cloud().volumes());
    CubeValues v = zeros(f);
    for (int k = f.base_level(); k <= f.top_level(); ++k)
        std::fill(v[slot(f, k)].begin(), v[slot(f, k)].end(), f.volume({k, 0}, model));
    return v;
}

bool within(double side, double r) { return side <= r * (1.0 + 1e-12); }

// Integer part of log_lambda(r), robust to rounding at exact powers.
int floor_log(double r, double lambda)
{
    const double v = std::log(r) / std::log(lambda);
    const double n = std::nearbyint(v);
    return std::abs(v - n) < 1e-10 ? static_cast<int>(n) : static_cast<int>(std::floor(v));
}

} // namespace

std::vector<double> carrier_masses(const PointCloud& cloud, const Measure& mu)
{
    if (!cloud.group().same_as(mu.group()))
        throw ShapeMismatch("measure and cloud live on different groups");
    std::vector<double> out(cloud.size(), 0.0);
    const AtomicMeasure& A = mu.atoms();
    for (std::size_t i = 0; i < A.size(); ++i)
        if (A.mass(i) > 0.0)
            out[cloud.nearest(A.point(i))] += A.mass(i);
    if (const GridDensity* D = mu.density()) {
        if (&D->cloud() == &cloud) {
            for (std::size_t i = 0; i < cloud.size(); ++i)
                out[i] += D->mass(i);
        } else {
            for (std::size_t i = 0; i < D->cloud().size(); ++i)
                if (D->mass(i) > 0.0)
                    out[cloud.nearest(D->cloud().point(i))] += D->mass(i);
        }
    }
    return out;
}

CubeValues cube_sums(const DyadicFamily& f, std::span<const double> values)
{
    if (values.size() != f.cloud().size())
        throw ShapeMismatch("sample values do not match the family's cloud");
    CubeValues v = zeros(f);
    const std::span<const Cube> base = f.level(f.base_level());
    for (std::size_t j = 0; j < base.size(); ++j)
        for (std::size_t i : base[j].members)
            v[0][j] += values[i];
    for (int k = f.base_level() + 1; k <= f.top_level(); ++k) {
        const std::span<const Cube> cubes = f.level(k);
        for (std::size_t j = 0; j < cubes.size(); ++j)
            for (std::size_t c : cubes[j].children)
                v[slot(f, k)][j] += v[slot(f, k - 1)][c];
    }
    return v;
}

CubeValues double_star_masses(const DyadicFamily& f, std::span<const double> masses, std::span<const CubeRef> cubes)
{
    if (masses.size() != f.cloud().size())
        throw ShapeMismatch("sample masses do not match the family's cloud");
    CubeValues v = zeros(f);
    parallel_for(cubes.size(), [&](std::size_t b, std::size_t e) {
        std::vector<std::size_t> hits;
        for (std::size_t j = b; j < e; ++j) {
            const CubeRef Q = cubes[j];
            f.cloud().ball_query_into(f.cloud().point(f.cube(Q).center), 2.0 * f.side_length(Q.level + 2), hits);
            double m = 0.0;
            for (std::size_t i : hits)
                m += masses[i];
            v[slot(f, Q.level)][Q.index] = m;
        }
    }, 8);
    return v;
}

CubeValues double_star_masses(const DyadicFamily& f, std::span<const double> masses)
{
    return double_star_masses(f, masses, f.all_cubes());
}

double safe_ratio(double num, double den)
{
    if (num == 0.0 && den == 0.0)
        return 1.0;
    if (den == 0.0)
        return kInfinity;
    return num / den;
}

LambdaAssignment::LambdaAssignment(const DyadicFamily& family) : m_(family.base_level()), values_(zeros(family)) {}

AChain a_functionals(const DyadicFamily& f, std::span<const double> sigma, const LambdaAssignment& lambda, double s)
{
    if (!(s > 1.0))
        throw InvalidExponents("s must exceed 1");
    const CubeValues& lam = lambda.values();
    if (lambda.base_level() != f.base_level() || lam.size() != static_cast<std::size_t>(f.top_level() - f.base_level() + 1))
        throw ShapeMismatch("lambda assignment does not match the family");
    const CubeValues sig = cube_sums(f, sigma);
    CubeValues sub = zeros(f);
    for (int k = f.base_level(); k <= f.top_level(); ++k) {
        const std::span<const Cube> cubes = f.level(k);
        if (lam[slot(f, k)].size() != cubes.size())
            throw ShapeMismatch("lambda assignment does not match the family");
        for (std::size_t j = 0; j < cubes.size(); ++j) {
            const double l = lam[slot(f, k)][j];
            if (l < 0.0)
                throw InvalidParams("lambda_Q must be nonnegative");
            if (l > 0.0 && !(sig[slot(f, k)][j] > 0.0))
                throw ZeroMassCube("lambda_Q > 0 on a cube with sigma(Q) = 0");
            double v = l;
            if (k > f.base_level())
                for (std::size_t c : cubes[j].children)
                    v += sub[slot(f, k - 1)][c];
            sub[slot(f, k)][j] = v;
        }
    }
    AChain out;
    // Top-down chains: sum of lambda_Q / sigma(Q) and sup of the averaged subtree sums.
    CubeValues chain_sum = zeros(f);
    CubeValues chain_max = zeros(f);
    for (int k = f.top_level(); k >= f.base_level(); --k) {
        const std::span<const Cube> cubes = f.level(k);
        for (std::size_t j = 0; j < cubes.size(); ++j) {
            const double sg = sig[slot(f, k)][j];
            const double l = lam[slot(f, k)][j];
            const double avg = sg > 0.0 ? sub[slot(f, k)][j] / sg : 0.0;
            double cs = sg > 0.0 ? l / sg : 0.0;
            double cm = std::pow(avg, s);
            if (cubes[j].parent >= 0) {
                const auto pj = static_cast<std::size_t>(cubes[j].parent);
                cs += chain_sum[slot(f, k + 1)][pj];
                cm = std::max(cm, chain_max[slot(f, k + 1)][pj]);
            }
            chain_sum[slot(f, k)][j] = cs;
            chain_max[slot(f, k)][j] = cm;
            if (l > 0.0)
                out.A2 += l * std::pow(avg, s - 1.0);
        }
    }
    for (std::size_t j = 0; j < f.level(f.base_level()).size(); ++j) {
        const double sg = sig[0][j];
        if (!(sg > 0.0))
            continue;
        out.A1 += sg * std::pow(chain_sum[0][j], s);
        out.A3 += sg * chain_max[0][j];
    }
    return out;
}

void check_exponents(double alpha, double p, double q)
{
    if (!(alpha > 0.0))
        throw InvalidExponents("alpha must be positive");
    if (!(p > 1.0))
        throw InvalidExponents("p must exceed 1");
    if (!(q > p - 1.0))
        throw InvalidExponents("q must exceed p - 1");
}

BChain b_functionals(const DyadicFamily& f, CubeRef P, std::span<const double> mu_samples, double alpha, double p,
                     double q, const BOptions& options)
{
    check_exponents(alpha, p, q);
    if (P.level < f.base_level() || P.level > f.top_level() || P.index >= f.level(P.level).size())
        throw InvalidParams("cube is not in the family");
    const int M = f.cloud().group().M();
    const double e = 1.0 - alpha * p / M;
    const double a = 1.0 / (p - 1.0);
    const std::vector<CubeRef> cubes = f.descendants(P);
    const CubeValues mass = options.double_star ? double_star_masses(f, mu_samples, cubes) : cube_sums(f, mu_samples);
    const CubeValues vol = cube_volumes(f, options.volume);
    const CubeValues emp = options.volume == VolumeModel::empirical ? vol : cube_volumes(f, VolumeModel::empirical);
    CubeValues c2 = zeros(f);
    CubeValues c3 = zeros(f);
    BChain out;
    for (auto it = cubes.rbegin(); it != cubes.rend(); ++it) {
        const CubeRef Q = *it;
        const std::size_t ks = slot(f, Q.level);
        const double mu = mass[ks][Q.index];
        const double V = vol[ks][Q.index];
        const double t3 = mu / std::pow(V, e);
        const double t2 = std::pow(mu, a) / std::pow(V, e * a);
        out.B1 += std::pow(t3, q * a) * V;
        double v2 = t2;
        double v3 = t3;
        if (!(Q == P)) {
            const auto pj = static_cast<std::size_t>(f.cube(Q).parent);
            v2 += c2[ks + 1][pj];
            v3 += c3[ks + 1][pj];
        }
        c2[ks][Q.index] = v2;
        c3[ks][Q.index] = v3;
        if (Q.level == f.base_level()) {
            out.B2 += emp[0][Q.index] * std::pow(v2, q);
            out.B3 += emp[0][Q.index] * std::pow(v3, q * a);
        }
    }
    return out;
}

BChain b_functionals(const DyadicFamily& f, CubeRef P, const Measure& mu, double alpha, double p, double q,
                     const BOptions& options)
{
    return b_functionals(f, P, carrier_masses(f.cloud(), mu), alpha, p, q, options);
}

std::vector<double> dyadic_maximal(std::span<const double> fvals, const AtomicMeasure& mu, const DyadicFamily& f)
{
    if (fvals.size() != mu.size())
        throw ShapeMismatch("f must have one value per atom");
    const PointCloud& cloud = f.cloud();
    std::vector<std::size_t> base(mu.size());
    std::vector<double> fm(cloud.size(), 0.0);
    std::vector<double> m(cloud.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const std::size_t s = cloud.nearest(mu.point(i));
        base[i] = f.cube_of(s, f.base_level());
        fm[s] += fvals[i] * mu.mass(i);
        m[s] += mu.mass(i);
    }
    const CubeValues F = cube_sums(f, fm);
    const CubeValues W = cube_sums(f, m);
    CubeValues best = zeros(f);
    for (int k = f.top_level(); k >= f.base_level(); --k) {
        const std::span<const Cube> cubes = f.level(k);
        for (std::size_t j = 0; j < cubes.size(); ++j) {
            const double w = W[slot(f, k)][j];
            double v = w > 0.0 ? F[slot(f, k)][j] / w : 0.0;
            if (cubes[j].parent >= 0)
                v = std::max(v, best[slot(f, k + 1)][static_cast<std::size_t>(cubes[j].parent)]);
            best[slot(f, k)][j] = v;
        }
    }
    std::vector<double> out(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        out[i] = best[0][base[i]];
    return out;
}

DzeResult dze_check(std::span<const double> x, const Measure& mu, const DyadicFamily& f, double r, double alpha,
                    double p, VolumeModel volume, const WolffParams& quadrature)
{
    check_shape(mu.group(), x);
    if (!(r > 0.0) || !(alpha > 0.0) || !(p > 1.0))
        throw InvalidParams("dze_check needs r > 0, alpha > 0, p > 1");
    const double lambda = f.lambda();
    const int j = floor_log(r, lambda);
    if (f.base_level() > j - 3)
        throw ScaleMismatch("family base level too coarse for r: need l(Q) <= lambda^-3 r");
    const int M = mu.group().M();
    const double e = 1.0 - alpha * p / M;
    const double a = 1.0 / (p - 1.0);
    const std::vector<double> masses = carrier_masses(f.cloud(), mu);
    const std::size_t s = f.cloud().nearest(x);

    DzeResult out;
    WolffParams P = quadrature;
    P.alpha = alpha;
    P.p = p;
    P.R = r;
    out.wolff = wolff(mu, x, P);
    out.band = wolff_band(mu, x, P, std::pow(lambda, f.base_level() - j) * r, r);
    std::vector<std::size_t> hits;
    for (int k = f.base_level(); k <= f.top_level(); ++k) {
        const double side = f.side_length(k);
        if (!within(side, r))
            break;
        const CubeRef Q{k, f.cube_of(s, k)};
        const double V = f.volume(Q, volume);
        if (within(side, std::pow(lambda, -3.0) * r)) {
            double m = 0.0;
            for (std::size_t i : f.cube(Q).members)
                m += masses[i];
            out.lower_sum += std::pow(m / std::pow(V, e), a);
        }
        f.cloud().ball_query_into(f.cloud().point(f.cube(Q).center), 2.0 * f.side_length(k + 2), hits);
        double m2 = 0.0;
        for (std::size_t i : hits)
            m2 += masses[i];
        out.upper_sum += std::pow(m2 / std::pow(V, e), a);
    }
    out.lower_ratio = safe_ratio(out.wolff, out.lower_sum);
    out.upper_ratio = safe_ratio(out.band, out.upper_sum);
    return out;
}

double discrete_energy(const DyadicFamily& f, std::span<const double> mu_samples, double r, double alpha, double p,
                       double q, VolumeModel volume)
{
    check_exponents(alpha, p, q);
    const int M = f.cloud().group().M();
    const double e = 1.0 - alpha * p / M;
    const double a = 1.0 / (p - 1.0);
    const CubeValues mass = cube_sums(f, mu_samples);
    const CubeValues vol = cube_volumes(f, volume);
    double total = 0.0;
    for (int k = f.base_level(); k <= f.top_level(); ++k) {
        if (!within(f.side_length(k), r))
            break;
        for (std::size_t j = 0; j < mass[slot(f, k)].size(); ++j) {
            const double V = vol[slot(f, k)][j];
            total += std::pow(mass[slot(f, k)][j] / std::pow(V, e), q * a) * V;
        }
    }
    return total;
}

double continuous_energy(const Measure& mu, double r, double alpha, double p, double q, const PointCloud& cloud,
                         const WolffParams& quadrature)
{
    check_exponents(alpha, p, q);
    WolffParams P = quadrature;
    P.alpha = alpha;
    P.p = p;
    P.R = r;
    const std::vector<double> w = wolff_field(mu, cloud, P);
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0)
            total += cloud.volume(i) * std::pow(w[i], q);
    return total;
}

EnergyResult energy_equivalence(const Measure& mu, std::span<const DyadicFamily* const> schedule, double r,
                                double alpha, double p, double q, const PointCloud& cloud, VolumeModel volume,
                                const WolffParams& quadrature)
{
    check_exponents(alpha, p, q);
    if (!(r > 0.0))
        throw InvalidParams("r must be positive");
    if (schedule.empty())
        throw InvalidParams("empty family schedule");
    EnergyResult out;
    out.continuous = continuous_energy(mu, r, alpha, p, q, cloud, quadrature);
    for (const DyadicFamily* f : schedule) {
        const std::vector<double> masses = carrier_masses(f->cloud(), mu);
        out.discrete.push_back(discrete_energy(*f, masses, r, alpha, p, q, volume));
        out.discrete_sup = std::max(out.discrete_sup, out.discrete.back());
    }
    out.ratio = safe_ratio(out.continuous, out.discrete_sup);
    return out;
}

bool atom_energy_finite(int M, double alpha, double p, double q)
{
    return q * (M - alpha * p) / (p - 1.0) < M;
}

} // namespace carnot
