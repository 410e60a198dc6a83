#include "carnot/lane_emden.hpp"

#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"

#include <algorithm>
#include <cmath>

namespace carnot {

namespace {

void check_pq(double p, double q)
{
    if (!(p > 1.0))
        throw InvalidExponents("p must exceed 1");
    if (!(q > p - 1.0))
        throw InvalidExponents("q must exceed p - 1");
}

WolffParams potential(double p, double R, const WolffParams& quadrature)
{
    WolffParams P = quadrature;
    P.alpha = 1.0;
    P.p = p;
    P.R = 2.0 * R;
    return P;
}

bool has_atoms(const Measure& mu)
{
    for (double m : mu.atoms().masses())
        if (m > 0.0)
            return true;
    return false;
}

} // namespace

double recursion_factor(double A, double p)
{
    const double pp = p / (p - 1.0);
    return A * std::max(1.0, std::pow(2.0, pp - 2.0));
}

double recursion_bound(double A, double p, double q)
{
    return recursion_factor(A, p) * q / (q - p + 1.0);
}

double cond_c0(double A, double p, double q)
{
    check_pq(p, q);
    if (!(A > 0.0))
        throw InvalidParams("A must be positive");
    const double pp = p / (p - 1.0);
    const double f = recursion_factor(A, p);
    return std::pow((q - p + 1.0) / (q * f), q * (pp - 1.0)) * ((p - 1.0) / (q - p + 1.0));
}

RecursionResult constant_recursion(double A, double p, double q, double C, std::size_t k_max, double tol)
{
    check_pq(p, q);
    if (!(A > 0.0) || !(C >= 0.0))
        throw InvalidParams("constant recursion needs A > 0 and C >= 0");
    const double f = recursion_factor(A, p);
    const double gamma = q / (p - 1.0); // q (p' - 1)
    auto phi = [&](double c) { return f * (std::pow(c, gamma) * C + 1.0); };
    RecursionResult out;
    double c = A;
    out.c.push_back(c);
    double sup = c;
    for (std::size_t k = 2; k <= k_max; ++k) {
        c = phi(c);
        out.c.push_back(c);
        sup = std::max(sup, c);
        if (!(c < 1e300))
            break;
    }
    out.bounded = sup <= recursion_bound(A, p, q) + tol;

    // h(c) = phi(c) - c is convex; its least root above c_1 is the limit of the sequence.
    const double c1 = A;
    auto h = [&](double x) { return phi(x) - x; };
    out.limit = kInfinity;
    if (C == 0.0) {
        out.fixed_point = true;
        out.limit = f;
        return out;
    }
    if (h(c1) <= 0.0) {
        out.fixed_point = true;
        out.limit = c1;
        return out;
    }
    const double cm = std::pow(1.0 / (f * C * gamma), 1.0 / (gamma - 1.0));
    if (!(cm > c1))
        return out;
    const double hm = h(cm);
    if (hm > 0.0)
        return out;
    out.fixed_point = true;
    if (hm == 0.0) {
        out.limit = cm;
        return out;
    }
    double lo = c1;
    double hi = cm;
    for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) > 0.0 ? lo : hi) = mid;
    }
    out.limit = hi;
    return out;
}

double liouville_threshold(int M, double p)
{
    if (!(p > 1.0) || !(p < M))
        throw InvalidExponents("Liouville threshold needs 1 < p < M");
    return M * (p - 1.0) / (M - p);
}

bool atom_source_nonintegrable(int M, double p, double q)
{
    return q * (M - p) / (p - 1.0) >= M;
}

ConditionV check_condition_v(const Measure& omega, double R, double p, double q, std::span<const std::size_t> eval,
                             std::shared_ptr<const PointCloud> cloud, const WolffParams& quadrature)
{
    check_pq(p, q);
    if (!(R > 0.0))
        throw InvalidParams("R must be positive");
    if (omega.is_zero())
        throw ZeroMeasure("condition (v) needs a nonzero measure");
    for (std::size_t i : eval)
        if (i >= cloud->size())
            throw InvalidParams("evaluation index outside the cloud");
    ConditionV out;
    const WolffParams P = potential(p, R, quadrature);
    out.v = wolff_field(omega, *cloud, P);
    if (has_atoms(omega) && atom_source_nonintegrable(omega.group().M(), p, q)) {
        out.analytic_divergence = true;
        out.ratio.assign(eval.size(), kInfinity);
        out.sup_ratio = kInfinity;
        return out;
    }
    std::vector<double> vq(out.v.size());
    for (std::size_t i = 0; i < vq.size(); ++i)
        vq[i] = std::pow(out.v[i], q);
    const Measure source(GridDensity(cloud, std::move(vq)));
    const std::vector<double> W = wolff_field(source, *cloud, eval, P);
    out.ratio.resize(eval.size());
    for (std::size_t j = 0; j < eval.size(); ++j) {
        out.ratio[j] = safe_ratio(W[j], out.v[eval[j]]);
        out.sup_ratio = std::max(out.sup_ratio, out.ratio[j]);
    }
    return out;
}

ConditionIV check_condition_iv(const Measure& omega, double R, double p, double q, std::span<const BallSpec> balls,
                               std::shared_ptr<const PointCloud> cloud, const WolffParams& quadrature)
{
    check_pq(p, q);
    if (!(R > 0.0))
        throw InvalidParams("R must be positive");
    const WolffParams P = potential(p, R, quadrature);
    ConditionIV out;
    for (std::size_t b = 0; b < balls.size(); ++b) {
        const BallSpec& B = balls[b];
        const Measure wb = restrict_to_ball(omega, B.center, B.radius);
        const double mass = wb.total_mass();
        if (!(mass > 0.0)) {
            out.ratio.push_back(0.0);
            out.skipped.push_back(true);
            out.log.push_back("ball " + std::to_string(b) + ": omega(B) = 0, skipped");
            continue;
        }
        const std::vector<std::size_t> inside = cloud->ball_query(B.center.coords(), B.radius);
        const std::vector<double> W = wolff_field(wb, *cloud, inside, P);
        double integral = 0.0;
        for (std::size_t j = 0; j < inside.size(); ++j)
            if (W[j] > 0.0)
                integral += cloud->volume(inside[j]) * std::pow(W[j], q);
        const double r = integral / mass;
        out.ratio.push_back(r);
        out.skipped.push_back(false);
        out.max_ratio = std::max(out.max_ratio, r);
    }
    return out;
}

void validate(const SolveConfig& c)
{
    check_pq(c.p, c.q);
    if (!(c.A > 0.0))
        throw InvalidParams("A must be positive");
    if (!(c.R > 0.0))
        throw InvalidParams("R must be positive");
    if (!(c.blowup_factor > 1.0))
        throw InvalidParams("blowup_factor must exceed 1");
    if (!(c.tol_rel > 0.0))
        throw InvalidParams("tol_rel must be positive");
    if (c.max_iter == 0)
        throw InvalidParams("max_iter must be positive");
}

std::string_view to_string(SolveVerdict v)
{
    switch (v) {
    case SolveVerdict::converged:
        return "converged";
    case SolveVerdict::diverged:
        return "diverged";
    case SolveVerdict::max_iter:
        break;
    }
    return "max_iter";
}

PicardResult picard_solve(const Measure& omega, const SolveConfig& config, std::shared_ptr<const PointCloud> cloud)
{
    validate(config);
    if (!cloud || cloud->empty())
        throw EmptyCloud("solver cloud is empty");
    const std::size_t n = cloud->size();
    PicardResult out;
    out.kappa = recursion_bound(config.A, config.p, config.q);
    IterDiagnostics& d = out.diagnostics;
    if (omega.is_zero()) {
        out.u.assign(n, 0.0);
        out.w.assign(n, 0.0);
        d.sup_norm.push_back(0.0);
        d.increment.push_back(0.0);
        d.verdict = SolveVerdict::converged;
        out.upper_bound_holds = out.lower_bound_holds = true;
        return out;
    }
    const WolffParams P = potential(config.p, config.R, config.quadrature);
    out.w = wolff_field(omega, *cloud, P);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i)
        u[i] = config.A * out.w[i];
    const double sup1 = *std::max_element(u.begin(), u.end());
    d.sup_norm.push_back(sup1);
    d.increment.push_back(1.0);
    if (has_atoms(omega) && atom_source_nonintegrable(omega.group().M(), config.p, config.q)) {
        d.verdict = SolveVerdict::diverged;
        d.note = "u^q is not integrable near an atom of omega";
        out.u = std::move(u);
        return out;
    }
    for (std::size_t k = 2; k <= config.max_iter; ++k) {
        std::vector<double> uq(n);
        for (std::size_t i = 0; i < n; ++i)
            uq[i] = std::pow(u[i], config.q);
        const Measure mk = Measure(GridDensity(cloud, std::move(uq))) + omega;
        std::vector<double> next = wolff_field(mk, *cloud, P);
        double sup = 0.0;
        double inc = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] *= config.A;
            if (!std::isfinite(next[i]))
                finite = false;
            if (next[i] < u[i] * (1.0 - 1e-12)) {
                d.monotone = false;
                ++d.monotone_violations;
            }
            sup = std::max(sup, next[i]);
            if (next[i] > 0.0)
                inc = std::max(inc, (next[i] - u[i]) / next[i]);
        }
        u = std::move(next);
        d.sup_norm.push_back(sup);
        d.increment.push_back(inc);
        if (!finite || sup > config.blowup_factor * sup1) {
            d.verdict = SolveVerdict::diverged;
            d.note = "sup u exceeded blowup_factor * sup u^(1)";
            break;
        }
        if (inc < config.tol_rel) {
            d.verdict = SolveVerdict::converged;
            break;
        }
    }
    out.u = std::move(u);
    if (d.verdict == SolveVerdict::converged) {
        out.upper_bound_holds = out.lower_bound_holds = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (out.w[i] > 0.0)
                out.max_u_over_w = std::max(out.max_u_over_w, out.u[i] / out.w[i]);
            if (out.u[i] > out.kappa * out.w[i] * (1.0 + 1e-9))
                out.upper_bound_holds = false;
            if (out.u[i] < config.A * out.w[i] * (1.0 - 1e-12))
                out.lower_bound_holds = false;
        }
    }
    return out;
}

ThresholdResult condition_v_threshold(const Measure& omega, double R, double p, double q, double target,
                                      std::span<const std::size_t> eval, std::shared_ptr<const PointCloud> cloud,
                                      const WolffParams& quadrature)
{
    if (!(target > 0.0))
        throw InvalidParams("target ratio must be positive");
    ThresholdResult out;
    out.ratio_at_unit = check_condition_v(omega, R, p, q, eval, cloud, quadrature).sup_ratio;
    if (!std::isfinite(out.ratio_at_unit) || !(out.ratio_at_unit > 0.0))
        throw InvalidParams("condition (v) ratio is not finite and positive");
    out.exponent = (q - p + 1.0) / ((p - 1.0) * (p - 1.0));
    auto f = [&](double lc) { return out.exponent * lc + std::log(out.ratio_at_unit) - std::log(target); };
    double lo = -1.0;
    double hi = 1.0;
    while (f(lo) > 0.0)
        lo *= 2.0;
    while (f(hi) < 0.0)
        hi *= 2.0;
    while (hi - lo > 1e-13 * std::max(1.0, std::abs(lo)) && out.bisection_steps < 200) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
        ++out.bisection_steps;
    }
    out.c_star = std::exp(0.5 * (lo + hi));
    out.ratio_at_c_star = check_condition_v(omega.scaled(out.c_star), R, p, q, eval, cloud, quadrature).sup_ratio;
    return out;
}

std::string_view to_string(LiouvilleVerdict v)
{
    switch (v) {
    case LiouvilleVerdict::blows_up:
        return "blows_up";
    case LiouvilleVerdict::stabilizes:
        return "stabilizes";
    case LiouvilleVerdict::inconclusive:
        break;
    }
    return "inconclusive";
}

std::shared_ptr<const PointCloud> shell_cloud(const GroupSpec& g, double core_radius, double spacing,
                                              double outer_radius)
{
    LatticeOptions lo;
    lo.kind = LatticeKind::graded;
    PointCloud core = lattice_cloud(g, identity(g), core_radius, spacing, lo);
    if (outer_radius <= core_radius)
        return std::make_shared<const PointCloud>(std::move(core));
    return std::make_shared<const PointCloud>(with_dyadic_shells(core, outer_radius));
}

LiouvilleResult liouville_probe(const GroupSpec& g, const LiouvilleConfig& c)
{
    check_pq(c.p, c.q);
    if (!(c.p < g.M()))
        throw InvalidExponents("Liouville probe needs p < M");
    if (c.R_schedule.empty() || c.eval_points == 0)
        throw InvalidParams("Liouville probe needs a radius schedule and evaluation points");
    LiouvilleResult out;
    out.c0 = cond_c0(1.0, c.p, c.q);
    const GPoint e = identity(g);
    for (double R : c.R_schedule) {
        if (!(R > 0.0))
            throw InvalidParams("radii must be positive");
        auto cloud = shell_cloud(g, c.core_radius, c.spacing, 2.0 * R + 2.0);
        const Measure omega = c.omega ? c.omega(cloud) : Measure(uniform_on_ball(cloud, e, 1.0));
        std::vector<std::size_t> inside = cloud->ball_query(e.coords(), 0.5 * R);
        std::vector<std::size_t> eval;
        const double stride = std::max(1.0, static_cast<double>(inside.size()) / static_cast<double>(c.eval_points));
        for (double t = 0.0; t < static_cast<double>(inside.size()); t += stride)
            eval.push_back(inside[static_cast<std::size_t>(t)]);
        const ConditionV v = check_condition_v(omega, R, c.p, c.q, eval, cloud, c.quadrature);
        out.R.push_back(R);
        out.ratio.push_back(v.sup_ratio);
        out.cloud_size.push_back(cloud->size());
    }
    const std::vector<double>& r = out.ratio;
    const std::size_t n = r.size();
    auto change = [&](std::size_t i) { return std::abs(r[i] / r[i - 1] - 1.0); };
    if (n >= 3 && change(n - 1) < c.stable_tol && change(n - 2) < c.stable_tol) {
        out.verdict = LiouvilleVerdict::stabilizes;
        return out;
    }
    bool increasing = n >= 2;
    for (std::size_t i = 1; i < n; ++i)
        increasing = increasing && r[i] > r[i - 1];
    if (increasing && r.back() > out.c0)
        out.verdict = LiouvilleVerdict::blows_up;
    return out;
}

} // namespace carnot
