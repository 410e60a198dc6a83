#include "carnot/wolff.hpp"

#include "carnot/errors.hpp"
#include "carnot/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace carnot {

namespace {

constexpr std::ptrdiff_t kNoHint = -1;
// Shells with at most this many samples, or whose mass grows by more than kMaxGrowth,
// are integrated exactly instead of by log-log interpolation.
constexpr std::size_t kExactBucket = 2048;
constexpr double kMaxGrowth = 1.05;

struct Item {
    double d;
    double m;
};

// int_lo^hi t^{-beta-1} dt for 0 < lo < hi <= inf.
double power_piece(double lo, double hi, double beta)
{
    if (std::isinf(hi))
        return beta > 0.0 ? std::pow(lo, -beta) / beta : kInfinity;
    const double L = std::log(hi / lo);
    if (beta == 0.0)
        return L;
    return std::pow(lo, -beta) * (-std::expm1(-beta * L)) / beta;
}

// F(t) with F' = -t^{-beta-1}.
double antiderivative(double t, double beta) { return beta == 0.0 ? -std::log(t) : std::pow(t, -beta) / beta; }

// expm1(y) / y, continuous at 0.
double rel_expm1(double y) { return std::abs(y) < 1e-12 ? 1.0 + 0.5 * y : std::expm1(y) / y; }

double exact_band(std::vector<Item>& items, double a, double beta, double lo, double hi)
{
    std::sort(items.begin(), items.end(), [](const Item& u, const Item& v) { return u.d < v.d; });
    double total = 0.0;
    for (const Item& it : items)
        total += it.m;
    if (!(total > 0.0))
        return 0.0;
    if (std::isinf(hi) && beta <= 0.0)
        return kInfinity;
    double value = 0.0;
    double S = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        const double d = items[i].d;
        while (i < items.size() && items[i].d == d)
            S += items[i++].m;
        if (!(S > 0.0))
            continue;
        const double next = i < items.size() ? items[i].d : kInfinity;
        const double plo = std::max(d, lo);
        const double phi = std::min(next, hi);
        if (!(phi > plo))
            continue;
        if (plo == 0.0) {
            if (beta >= 0.0)
                return kInfinity;
            value += std::pow(S, a) * std::pow(phi, -beta) / (-beta);
            continue;
        }
        value += std::pow(S, a) * power_piece(plo, phi, beta);
    }
    return value;
}

struct Local {
    double f = 0.0;     // density at x
    double t_min = 0.0; // start of the quadrature region
};

double quadrature_band(std::vector<Item>& items, const Local& loc, double a, double beta, double ratio,
                       double unit_ball, double alpha_p, double lo, double hi)
{
    double total = 0.0;
    double dmax = 0.0;
    for (const Item& it : items) {
        total += it.m;
        dmax = std::max(dmax, it.d);
    }
    double value = 0.0;
    const double gamma = alpha_p * a;
    // Sub-resolution part with mu(B_t) = f |B_1| t^M.
    if (lo < loc.t_min && loc.f > 0.0) {
        const double u = std::min(hi, loc.t_min);
        value += std::pow(loc.f * unit_ball, a) * (std::pow(u, gamma) - std::pow(lo, gamma)) / gamma;
    }
    double top = hi;
    if (std::isinf(hi)) {
        if (total > 0.0 && beta <= 0.0)
            return kInfinity;
        top = std::max(dmax * (1.0 + 1e-9), loc.t_min);
        if (total > 0.0 && top > lo)
            value += std::pow(total, a) * power_piece(std::max(top, lo), kInfinity, beta);
    }
    const double qlo = std::max(lo, loc.t_min);
    if (!(top > qlo) || !(total > 0.0))
        return value;

    if (a == 1.0) {
        // mu(B_t) enters linearly: each sample contributes m (F(max(d, qlo)) - F(top)).
        const double Ftop = antiderivative(top, beta);
        const double Fq = antiderivative(qlo, beta);
        for (const Item& it : items)
            if (it.d < top)
                value += it.m * ((it.d <= qlo ? Fq : antiderivative(it.d, beta)) - Ftop);
        return value;
    }
    const double lr = -std::log(ratio);
    const std::size_t K = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(top / qlo) / lr - 1e-12)));
    auto node = [&](std::size_t k) {
        if (k == 0)
            return top;
        return k == K ? qlo : top * std::pow(ratio, static_cast<double>(k));
    };
    // Bucket k < K holds d in [t_{k+1}, t_k); bucket K holds d < qlo.
    thread_local std::vector<double> mass;
    thread_local std::vector<std::size_t> start;
    thread_local std::vector<Item> sorted;
    mass.assign(K + 1, 0.0);
    start.assign(K + 2, 0);
    thread_local std::vector<std::uint32_t> bucket;
    bucket.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        const Item& it = items[i];
        std::size_t b = K + 1;
        if (it.d < qlo)
            b = K;
        else if (it.d < top)
            b = std::min(static_cast<std::size_t>(std::log(top / it.d) / lr), K - 1);
        bucket[i] = static_cast<std::uint32_t>(b);
        if (b <= K) {
            mass[b] += it.m;
            ++start[b + 1];
        }
    }
    for (std::size_t k = 0; k <= K; ++k)
        start[k + 1] += start[k];
    sorted.resize(start[K + 1]);
    {
        thread_local std::vector<std::size_t> fill;
        fill.assign(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < items.size(); ++i)
            if (bucket[i] <= K)
                sorted[fill[bucket[i]]++] = items[i];
    }
    // mu_k = mu(B_{t_k}), accumulated from the inside out.
    double mu_in = mass[K];
    for (std::size_t k = K; k-- > 0;) {
        const double mu_out = mu_in + mass[k];
        const double t_hi = node(k);
        const double t_lo = node(k + 1);
        const std::size_t count = start[k + 1] - start[k];
        if (count == 0) {
            if (mu_in > 0.0)
                value += std::pow(mu_in, a) * power_piece(t_lo, t_hi, beta);
        } else if (mu_in > 0.0 && count > kExactBucket && mu_out < kMaxGrowth * mu_in) {
            const double L = std::log(t_hi / t_lo);
            const double c = a * std::log(mu_out / mu_in) / L - beta;
            value += std::pow(mu_in, a) * std::pow(t_lo, -beta) * L * rel_expm1(c * L);
        } else {
            // Sparse or newly populated shell: integrate the step function exactly.
            auto first = sorted.begin() + static_cast<std::ptrdiff_t>(start[k]);
            auto last = sorted.begin() + static_cast<std::ptrdiff_t>(start[k + 1]);
            std::sort(first, last, [](const Item& u, const Item& v) { return u.d < v.d; });
            // sum over pieces of S^a (F(t) - F(d)) with F an antiderivative of -t^{-beta-1}.
            double S = mu_in;
            double Ft = antiderivative(t_lo, beta);
            for (auto it = first; it != last;) {
                const double d = std::max(it->d, t_lo);
                double add = 0.0;
                while (it != last && std::max(it->d, t_lo) == d)
                    add += (it++)->m;
                const double Fd = antiderivative(d, beta);
                if (S > 0.0)
                    value += (a == 1.0 ? S : std::pow(S, a)) * (Ft - Fd);
                Ft = Fd;
                S += add;
            }
            if (S > 0.0)
                value += (a == 1.0 ? S : std::pow(S, a)) * (Ft - antiderivative(t_hi, beta));
        }
        mu_in = mu_out;
    }
    return value;
}

class Evaluator {
public:
    Evaluator(const Measure& mu, const WolffParams& params) : mu_(mu), P_(params)
    {
        validate(params);
        const GroupSpec& g = mu.group();
        a_ = 1.0 / (params.p - 1.0);
        beta_ = (g.M() - params.alpha * params.p) / (params.p - 1.0);
        if (const GridDensity* d = mu.density()) {
            for (std::size_t i = 0; i < d->cloud().size(); ++i)
                if (d->density(i) > 0.0)
                    cells_.push_back(i);
            unit_ball_ = g.unit_ball_volume();
        }
        for (std::size_t i = 0; i < mu.atoms().size(); ++i)
            if (mu.atoms().mass(i) > 0.0)
                atoms_.push_back(i);
    }

    double band(std::span<const double> x, double lo, double hi, std::ptrdiff_t self = kNoHint) const
    {
        const GroupSpec& g = mu_.group();
        thread_local std::vector<Item> items;
        items.clear();
        const AtomicMeasure& A = mu_.atoms();
        for (std::size_t i : atoms_)
            items.push_back({kernel::qdist(g, x, A.point(i)), A.mass(i)});
        const GridDensity* D = mu_.density();
        if (!D)
            return exact_band(items, a_, beta_, lo, hi);
        if (lo == 0.0 && beta_ >= 0.0)
            for (const Item& it : items)
                if (it.d == 0.0)
                    return kInfinity;
        for (std::size_t i : cells_)
            items.push_back({kernel::qdist(g, x, D->cloud().point(i)), D->mass(i)});
        Local loc;
        std::size_t near;
        double dn = 0.0;
        if (self >= 0) {
            near = static_cast<std::size_t>(self);
        } else {
            near = D->cloud().nearest(x, &dn);
        }
        const double res = D->cloud().resolution(near);
        loc.t_min = P_.resolution_factor * res;
        if (dn < res)
            loc.f = D->density(near);
        return quadrature_band(items, loc, a_, beta_, P_.quad_ratio, unit_ball_, P_.alpha * P_.p, lo, hi);
    }

private:
    const Measure& mu_;
    WolffParams P_;
    double a_ = 1.0;
    double beta_ = 0.0;
    double unit_ball_ = 0.0;
    std::vector<std::size_t> cells_;
    std::vector<std::size_t> atoms_;
};

std::ptrdiff_t self_hint(const Measure& mu, const PointCloud& points, std::size_t i)
{
    const GridDensity* d = mu.density();
    return d && &d->cloud() == &points ? static_cast<std::ptrdiff_t>(i) : kNoHint;
}

} // namespace

void validate(const WolffParams& P)
{
    if (!(P.alpha > 0.0))
        throw InvalidParams("alpha must be positive");
    if (!(P.p > 1.0))
        throw InvalidParams("p must exceed 1");
    if (!(P.R > 0.0))
        throw InvalidParams("R must be positive");
    if (!(P.quad_ratio > 0.0 && P.quad_ratio < 1.0))
        throw InvalidParams("quad_ratio must lie in (0, 1)");
    if (!(P.resolution_factor > 0.0))
        throw InvalidParams("resolution_factor must be positive");
}

double wolff(const Measure& mu, std::span<const double> x, const WolffParams& params)
{
    check_shape(mu.group(), x);
    return Evaluator(mu, params).band(x, 0.0, params.R);
}

double wolff_band(const Measure& mu, std::span<const double> x, const WolffParams& params, double lo, double hi)
{
    check_shape(mu.group(), x);
    if (!(lo >= 0.0) || !(hi >= lo))
        throw InvalidParams("band must satisfy 0 <= lo <= hi");
    WolffParams P = params;
    P.R = 1.0;
    if (hi == lo)
        return 0.0;
    return Evaluator(mu, P).band(x, lo, hi);
}

std::vector<double> wolff_field(const Measure& mu, std::span<const GPoint> points, const WolffParams& params)
{
    for (const GPoint& x : points)
        check_shape(mu.group(), x.coords());
    const Evaluator ev(mu, params);
    std::vector<double> out(points.size());
    parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            out[i] = ev.band(points[i].coords(), 0.0, params.R);
    });
    return out;
}

std::vector<double> wolff_field(const Measure& mu, const PointCloud& points, std::span<const std::size_t> subset,
                                const WolffParams& params)
{
    if (!points.group().same_as(mu.group()))
        throw ShapeMismatch("evaluation cloud and measure live on different groups");
    const Evaluator ev(mu, params);
    std::vector<double> out(subset.size());
    parallel_for(subset.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
            const std::size_t i = subset[j];
            out[j] = ev.band(points.point(i), 0.0, params.R, self_hint(mu, points, i));
        }
    });
    return out;
}

std::vector<double> wolff_field(const Measure& mu, const PointCloud& points, const WolffParams& params)
{
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    return wolff_field(mu, points, all, params);
}

namespace {

double riesz_at(const Measure& mu, std::span<const double> x, double alpha, std::ptrdiff_t self)
{
    const GroupSpec& g = mu.group();
    const double e = alpha - g.M();
    double v = 0.0;
    const AtomicMeasure& A = mu.atoms();
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (!(A.mass(i) > 0.0))
            continue;
        const double d = kernel::qdist(g, x, A.point(i));
        if (d == 0.0)
            return kInfinity;
        v += A.mass(i) * std::pow(d, e);
    }
    if (const GridDensity* D = mu.density()) {
        std::size_t skip = static_cast<std::size_t>(-1);
        if (self >= 0) {
            skip = static_cast<std::size_t>(self);
        } else {
            double dn = 0.0;
            const std::size_t near = D->cloud().nearest(x, &dn);
            if (dn < 0.5 * D->cloud().resolution(near))
                skip = near;
        }
        for (std::size_t i = 0; i < D->cloud().size(); ++i) {
            if (i == skip || !(D->density(i) > 0.0))
                continue;
            const double d = kernel::qdist(g, x, D->cloud().point(i));
            if (d == 0.0)
                continue;
            v += D->mass(i) * std::pow(d, e);
        }
    }
    return v;
}

void check_alpha(const GroupSpec& g, double alpha)
{
    if (!(alpha > 0.0 && alpha < g.M()))
        throw InvalidAlpha("Riesz order must satisfy 0 < alpha < M");
}

} // namespace

double riesz(const Measure& mu, std::span<const double> x, double alpha)
{
    check_shape(mu.group(), x);
    check_alpha(mu.group(), alpha);
    return riesz_at(mu, x, alpha, kNoHint);
}

std::vector<double> riesz_field(const Measure& mu, const PointCloud& points, double alpha)
{
    check_alpha(mu.group(), alpha);
    std::vector<double> out(points.size());
    parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            out[i] = riesz_at(mu, points.point(i), alpha, self_hint(mu, points, i));
    });
    return out;
}

double wolff_single_atom(int M, double mass, double d, double alpha, double p, double R)
{
    if (!(mass > 0.0) || !(R > d))
        return 0.0;
    const double a = 1.0 / (p - 1.0);
    const double beta = (M - alpha * p) / (p - 1.0);
    if (d == 0.0)
        return beta >= 0.0 ? kInfinity : std::pow(mass, a) * std::pow(R, -beta) / (-beta);
    return std::pow(mass, a) * power_piece(d, R, beta);
}

} // namespace carnot
