#include "carnot/calculus.hpp"
#include "carnot/capacity.hpp"
#include "carnot/dyadic.hpp"
#include "carnot/group.hpp"
#include "carnot/lane_emden.hpp"
#include "carnot/wolff.hpp"
#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace carnot;

namespace {

// Tolerances and budgets.
constexpr double kAxiomTol = 1e-12;
constexpr double kSlopeTarget = 4.0;
constexpr double kSlopeTol = 0.08;
constexpr std::size_t kVolumeSamples = 1'000'000;
constexpr double kWolffRelTol = 0.005;
constexpr double kClosedFormTol = 1e-9;
constexpr double kCalibrationKappa = 2.0;
constexpr double kEnergyStability = 0.10;
constexpr double kRecursionTol = 1e-9;
constexpr double kCapacityTol = 0.03;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
    // Expected to fail: the iterates at a double root converge like 4/k. A pass here is reported as unexpected.
    bool unattainable = false;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::shared_ptr<const PointCloud> graded_cloud(const GroupSpec& g, double radius, double spacing,
                                               const GPoint& center)
{
    LatticeOptions lo;
    lo.kind = LatticeKind::graded;
    return std::make_shared<const PointCloud>(lattice_cloud(g, center, radius, spacing, lo));
}

GPoint random_point(const GroupSpec& g, std::mt19937_64& rng, double box)
{
    std::uniform_real_distribution<double> u(-box, box);
    std::vector<double> x(static_cast<std::size_t>(g.N()));
    for (double& v : x)
        v = u(rng);
    return GPoint(std::move(x));
}

std::vector<std::size_t> every(std::size_t n, std::size_t stride)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; i += stride)
        out.push_back(i);
    return out;
}

// ---- 1 ----------------------------------------------------------------------

Outcome run_group_axioms()
{
    double worst = 0.0;
    std::string names;
    for (const GroupSpec& g : {euclidean(3), heisenberg(), engel()}) {
        const AxiomReport r = check_axioms(g, 1000, 1);
        worst = std::max(worst, r.worst());
        names += g.name() + " ";
    }
    return {worst <= kAxiomTol, fmt("%smax error %.3g (tol %.0e)", names.c_str(), worst, kAxiomTol)};
}

// ---- 2 ----------------------------------------------------------------------

Outcome run_homogeneous_dimension()
{
    const std::vector<double> radii{0.5, 1.0, 2.0, 4.0};
    const BallVolumeFit fit = ball_volume_fit(heisenberg(), radii, kVolumeSamples, 2);
    return {std::abs(fit.slope - kSlopeTarget) <= kSlopeTol,
            fmt("slope %.4f, target %.2f +- %.2f", fit.slope, kSlopeTarget, kSlopeTol)};
}

// ---- 3 ----------------------------------------------------------------------

Outcome run_dyadic_properties()
{
    const GroupSpec h = heisenberg();
    DyadicOptions o;
    o.lambda = 8.0;
    struct Run {
        std::size_t points;
        SandwichReport cert;
        std::size_t overlap;
    };
    auto build = [&](double spacing) {
        const auto cloud = graded_cloud(h, 0.8, spacing, identity(h));
        const DyadicFamily f = build_family(cloud, -1, 2, o);
        return Run{cloud->size(), f.certificate(), overlap_summary(f).max};
    };
    const Run coarse = build(0.12);
    const Run fine = build(0.06);
    auto ok = [](const SandwichReport& c) { return c.partition && c.nesting && c.inner && c.outer; };
    const bool pass = coarse.points >= 10'000 && ok(coarse.cert) && ok(fine.cert) && coarse.overlap == fine.overlap;
    return {pass, fmt("%zu and %zu points, certificates %s/%s, overlap max %zu -> %zu", coarse.points, fine.points,
                      ok(coarse.cert) ? "ok" : "FAIL", ok(fine.cert) ? "ok" : "FAIL", coarse.overlap, fine.overlap)};
}

// ---- 4 ----------------------------------------------------------------------

Outcome run_wolff_atom_oracle()
{
    const GroupSpec h = heisenberg();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const std::vector<double> ps{1.5, 2.0, 3.0};
    const double eps = 0.001;
    double worst_quad = 0.0;
    double worst_exact = 0.0;
    for (int i = 0; i < 100; ++i) {
        const GPoint atom = random_point(h, rng, 0.5);
        GPoint x = random_point(h, rng, 1.0);
        while (qdist(h, x, atom) < 0.3)
            x = random_point(h, rng, 1.0);
        const double d = qdist(h, x, atom);
        const double mass = 0.5 + u01(rng);
        WolffParams P;
        P.alpha = 0.5 + u01(rng);
        P.p = ps[static_cast<std::size_t>(i) % ps.size()];
        P.R = d * (1.5 + 2.5 * u01(rng));

        const double closed = wolff_single_atom(h.M(), mass, d, P.alpha, P.p, P.R);
        AtomicMeasure a(h);
        a.add(atom, mass);
        worst_exact = std::max(worst_exact, rel_err(wolff(Measure(a), x, P), closed));

        // The same mass spread uniformly over a small ball goes through the density quadrature.
        const auto cloud = graded_cloud(h, eps, eps / 8.0, atom);
        const GridDensity g = uniform_on_ball(cloud, atom, eps);
        const Measure smeared = Measure(g).scaled(mass / g.total_mass());
        worst_quad = std::max(worst_quad, rel_err(wolff(smeared, x, P), closed));
    }
    const double fixed = wolff_single_atom(4, 1.0, 1.0, 1.0, 2.0, 2.0);
    AtomicMeasure e(h);
    e.add(identity(h), 1.0);
    WolffParams P;
    P.R = 2.0;
    const double fixed_path = wolff(Measure(e), GPoint{1, 0, 0}, P);
    const bool pass = worst_quad <= kWolffRelTol && worst_exact <= kWolffRelTol &&
                      std::abs(fixed - 0.375) <= kClosedFormTol && std::abs(fixed_path - 0.375) <= kClosedFormTol;
    return {pass, fmt("quadrature rel err %.2e, exact path rel err %.2e, fixed case %.12f", worst_quad, worst_exact,
                      fixed_path)};
}

// ---- 5 ----------------------------------------------------------------------

struct Held {
    bool directions = true;
    std::size_t violations = 0;
};

Held held_out(const experiments::Table& t)
{
    Held r;
    for (double d : t.column("directions"))
        r.directions = r.directions && d == 1.0;
    const std::size_t half = t.rows.size() / 2;
    for (const char* col : {"r12", "r23", "r31"}) {
        const auto band = experiments::calibrate(t.column(col, 0, half), kCalibrationKappa);
        r.violations += experiments::count_outside(band, t.column(col, half, t.rows.size()));
    }
    return r;
}

Outcome run_chains()
{
    const experiments::ChainSetup setup = experiments::chain_setup(heisenberg());
    const Held a = held_out(experiments::a_chain_trials(setup, 200, 51, 2.0));
    const Held b = held_out(experiments::b_chain_trials(setup, 200, 52, 1.0, 2.0, 3.0, false));
    // mu(Q**) needs one ball query of radius 8 l(Q) per cube, so the finest base level is dropped.
    experiments::ChainOptions coarse;
    coarse.base_levels = {-1, 0};
    const experiments::ChainSetup star = experiments::chain_setup(heisenberg(), coarse);
    const Held bs = held_out(experiments::b_chain_trials(star, 200, 53, 1.0, 2.0, 3.0, true));
    const bool pass = a.directions && b.directions && bs.directions && a.violations + b.violations + bs.violations == 0;
    return {pass, fmt("directions A %s B %s B** %s; held-out violations %zu/%zu/%zu (kappa %.1f)",
                      a.directions ? "ok" : "FAIL", b.directions ? "ok" : "FAIL", bs.directions ? "ok" : "FAIL",
                      a.violations, b.violations, bs.violations, kCalibrationKappa)};
}

// ---- 6 ----------------------------------------------------------------------

// Smallest C with every value in [1/C, C].
double symmetric_constant(const std::vector<double>& v)
{
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return std::max(*hi, 1.0 / *lo);
}

Outcome run_energy_equivalence()
{
    const experiments::Table t = experiments::energy_trials(heisenberg(), {}, 50, 6);
    const std::vector<double> ra = t.column("ratio_a");
    const std::vector<double> rb = t.column("ratio_b");
    bool finite = true;
    for (const auto* v : {&ra, &rb})
        for (double r : *v)
            finite = finite && std::isfinite(r) && r > 0.0;
    if (!finite)
        return {false, "nonfinite ratio"};
    const double Ca = symmetric_constant(ra);
    const double Cb = symmetric_constant(rb);
    const double drift = std::abs(Cb / Ca - 1.0);
    const std::size_t half = ra.size() / 2;
    const auto band = experiments::calibrate(t.column("ratio_a", 0, half), kCalibrationKappa);
    const std::size_t v = experiments::count_outside(band, t.column("ratio_a", half, ra.size()));
    return {drift <= kEnergyStability && v == 0,
            fmt("C_a %.4f, C_b %.4f, drift %.3f (tol %.2f), held-out violations %zu", Ca, Cb, drift, kEnergyStability,
                v)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome run_recursion()
{
    const RecursionResult r = constant_recursion(1.0, 2.0, 2.0, 0.25, 200);
    const RecursionResult d = constant_recursion(1.0, 2.0, 2.0, 0.5, 200);
    const double err = std::abs(r.c.back() - 2.0);
    bool grid = true;
    std::size_t cases = 0;
    for (const auto& [A, p, q] : {std::tuple{1.0, 2.0, 2.0}, std::tuple{1.0, 2.0, 3.0}, std::tuple{0.5, 1.5, 2.0},
                                  std::tuple{2.0, 3.0, 4.0}}) {
        const double c0 = cond_c0(A, p, q);
        for (int k = 0; k < 20; ++k) {
            const double t = std::pow(10.0, -1.0 + 2.0 * (k + 0.5) / 20.0);
            // Verdict from the iterates alone: all k_max of them stay below the bound.
            const std::size_t k_max = 4000;
            const RecursionResult g = constant_recursion(A, p, q, t * c0, k_max);
            const bool stays = g.c.size() == k_max && g.c.back() <= recursion_bound(A, p, q) * (1.0 + 1e-12);
            grid = grid && stays == (t <= 1.0);
            ++cases;
        }
    }
    const bool pass = r.fixed_point && r.c.size() <= 200 && err <= kRecursionTol && !d.fixed_point &&
                      std::isinf(d.limit) && grid;
    return {pass, fmt("|c_200 - 2| = %.2e (root of the fixed-point equation %.12f), C=0.5 %s, grid %zu cases %s",
                      err, r.limit, d.fixed_point ? "bounded" : "diverges", cases, grid ? "match" : "MISMATCH")};
}

// ---- 8 ----------------------------------------------------------------------

Outcome run_solver_dichotomy()
{
    const GroupSpec h = heisenberg();
    const auto cloud = graded_cloud(h, 1.5, 0.25, identity(h));
    const Measure omega(uniform_on_ball(cloud, identity(h), 1.0));
    SolveConfig cfg;
    cfg.A = 1.0;
    cfg.p = 2.0;
    cfg.q = 2.0;
    cfg.R = 1.0;
    const auto eval = every(cloud->size(), 2);
    const ThresholdResult t =
        condition_v_threshold(omega, cfg.R, cfg.p, cfg.q, cond_c0(cfg.A, cfg.p, cfg.q), eval, cloud);
    const PicardResult small = picard_solve(omega.scaled(0.25 * t.c_star), cfg, cloud);
    const PicardResult big = picard_solve(omega.scaled(100.0 * t.c_star), cfg, cloud);
    bool increasing = true;
    for (std::size_t k = 1; k < big.diagnostics.sup_norm.size(); ++k)
        increasing = increasing && big.diagnostics.sup_norm[k] > big.diagnostics.sup_norm[k - 1];
    const bool pass = small.diagnostics.verdict == SolveVerdict::converged && small.max_u_over_w <= 2.0 &&
                      big.diagnostics.verdict == SolveVerdict::diverged && big.diagnostics.monotone && increasing;
    return {pass, fmt("%zu points, c* %.4g; 0.25c* %s with max u/w %.4f; 100c* %s after %zu iterates", cloud->size(),
                      t.c_star, std::string(to_string(small.diagnostics.verdict)).c_str(), small.max_u_over_w,
                      std::string(to_string(big.diagnostics.verdict)).c_str(), big.diagnostics.sup_norm.size())};
}

// ---- 9 ----------------------------------------------------------------------

// Bisection for the q at which pred changes value on [lo, hi].
double flip_point(const std::function<bool(double)>& pred, double lo, double hi)
{
    const bool at_lo = pred(lo);
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        (pred(mid) == at_lo ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome run_liouville_consistency()
{
    const GroupSpec h = heisenberg();
    LiouvilleConfig cfg;
    cfg.p = 2.0;
    cfg.R_schedule = {2, 4, 8, 16, 32, 64};
    cfg.q = 2.0;
    const LiouvilleResult two = liouville_probe(h, cfg);
    cfg.q = 3.0;
    const LiouvilleResult three = liouville_probe(h, cfg);

    const int M = h.M();
    const double q_star = liouville_threshold(M, 2.0);
    const double q_rem =
        flip_point([&](double q) { return removability_verdict(2.0, q, M) == Removability::removable_points; }, 1.2,
                   7.0);
    const double q_deg = flip_point(
        [&](double q) { return degeneracy_verdict({2.0, q / (q - 1.0)}, M) == Degeneracy::nondegenerate; }, 1.2, 7.0);
    const bool pass = two.verdict == LiouvilleVerdict::blows_up && three.verdict == LiouvilleVerdict::stabilizes &&
                      std::abs(q_star - 2.0) <= 1e-12 && std::abs(q_rem - q_star) <= 1e-9 &&
                      std::abs(q_deg - q_star) <= 1e-9;
    return {pass, fmt("q=2 %s, q=3 %s; q* %.6f, removability flip %.9f, degeneracy boundary %.9f",
                      std::string(to_string(two.verdict)).c_str(), std::string(to_string(three.verdict)).c_str(), q_star, q_rem, q_deg)};
}

// ---- 10 ---------------------------------------------------------------------

// ||I_alpha delta_e||_{s'}^{s'} on the capacity discretization: lattice sum over the core
// without the origin cell plus the radial integral beyond it.
double singleton_norm(const GroupSpec& g, double alpha, double sp, double core, double spacing)
{
    const auto c = graded_cloud(g, core, spacing, identity(g));
    const int M = g.M();
    double N = 0.0;
    for (std::size_t i = 0; i < c->size(); ++i) {
        const double d = hnorm(g, c->gpoint(i));
        if (d > 0.0)
            N += c->volume(i) * std::pow(d, (alpha - M) * sp);
    }
    const double decay = (M - alpha) * sp - M;
    return N + M * g.unit_ball_volume() * std::pow(core, -decay) / decay;
}

Outcome run_capacity_ascent()
{
    const GroupSpec h = heisenberg();
    const CapacityParams P{1.0, 2.0};
    const CompactSet one(h, {identity(h)}, identity(h), 1.0);
    const CapacityResult single = capacity_lower(one, P, capacity_cloud(one));
    const double direct = std::pow(singleton_norm(h, P.alpha, P.s_conjugate(), 2.0, 0.25), -P.s / P.s_conjugate());
    const double single_err = rel_err(single.value, direct);

    const CompactSet E(h, {GPoint{0.5, 0, 0}, GPoint{0, 0.5, 0}, GPoint{0, 0, 0.25}}, identity(h), 1.0);
    CapacityCloudOptions co;
    co.spacing = 0.3;
    const double t = 2.0;
    const CapacityResult a = capacity_lower(E, P, capacity_cloud(E, co));
    const CompactSet D = E.dilated(t);
    const CapacityResult b = capacity_lower(D, P, capacity_cloud(D, co));
    const double exponent = std::log(b.value / a.value) / std::log(t);
    const double expected = h.M() - P.alpha * P.s;
    const double exp_err = std::abs(exponent - expected) / expected;

    const CapacityParams degenerate{2.0, 2.0};
    bool decays = true;
    double last = kInfinity;
    for (double domain : {4.0, 8.0, 16.0, 32.0}) {
        CapacityCloudOptions dc;
        dc.domain_factor = domain;
        const double v = dual_objective(one, std::vector<double>{1.0}, degenerate, capacity_cloud(one, dc), false);
        decays = decays && v > 0.0 && v < last;
        last = v;
    }
    const bool pass = single.value > 0.0 && single_err <= kCapacityTol && exp_err <= kCapacityTol && decays;
    return {pass, fmt("singleton %.5g vs %.5g (rel %.2e), exponent %.4f vs %.1f, degenerate objective %s",
                      single.value, direct, single_err, exponent, expected, decays ? "decays" : "NOT monotone")};
}

} // namespace

// Optional arguments restrict the run to the listed criterion numbers.
int main(int argc, char** argv)
{
    std::vector<int> only;
    for (int i = 1; i < argc; ++i)
        only.push_back(std::atoi(argv[i]));
    const std::vector<Criterion> criteria{
        {1, "group axioms", 5, run_group_axioms},
        {2, "homogeneous dimension", 30, run_homogeneous_dimension},
        {3, "dyadic properties", 60, run_dyadic_properties},
        {4, "wolff atom oracle", 10, run_wolff_atom_oracle},
        {5, "A and B chains", 60, run_chains},
        {6, "energy equivalence", 120, run_energy_equivalence},
        {7, "constant recursion", 1, run_recursion, true},
        {8, "solver dichotomy", 120, run_solver_dichotomy},
        {9, "liouville threshold", 120, run_liouville_consistency},
        {10, "capacity dual ascent", 60, run_capacity_ascent},
    };
    int failed = 0;
    int ran = 0;
    int expected = 0;
    int unexpected_pass = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end())
            continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass)
            ++(c.unattainable ? expected : failed);
        else if (c.unattainable)
            ++unexpected_pass;
        std::printf("[%s] %2d %-22s %7.2fs/%3.0fs  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                    o.detail.c_str(), c.unattainable ? " (known unattainable)" : "");
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed, %d known unattainable failed, %d other failures, %d unexpected passes\n",
                ran - failed - expected, ran, expected, failed, unexpected_pass);
    return failed == 0 && unexpected_pass == 0 ? 0 : 1;
}
