#include "carnot/errors.hpp"
#include "carnot/lane_emden.hpp"

#include <doctest.h>

#include <cmath>

using namespace carnot;

namespace {

std::shared_ptr<const PointCloud> small_cloud()
{
    const GroupSpec h = heisenberg();
    LatticeOptions lo;
    lo.kind = LatticeKind::graded;
    return std::make_shared<const PointCloud>(lattice_cloud(h, identity(h), 1.5, 0.3, lo));
}

std::vector<std::size_t> every(std::size_t n, std::size_t stride)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; i += stride)
        out.push_back(i);
    return out;
}

// Largest C for which c = f (C c^gamma + 1) has a root: (gamma-1)^{gamma-1} / (gamma^gamma f^gamma).
double critical_C(double A, double p, double q)
{
    const double f = recursion_factor(A, p);
    const double g = q / (p - 1.0);
    return std::pow(g - 1.0, g - 1.0) / (std::pow(g, g) * std::pow(f, g));
}

} // namespace

TEST_SUITE("lane_emden")
{
    TEST_CASE("threshold constant")
    {
        CHECK(cond_c0(1.0, 2.0, 2.0) == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(cond_c0(1.0, 2.0, 3.0) == doctest::Approx(4.0 / 27.0).epsilon(1e-15));
        CHECK(recursion_factor(1.0, 3.0) == 1.0);
        CHECK(recursion_factor(1.0, 1.5) == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(recursion_bound(1.0, 2.0, 2.0) == 2.0);
        CHECK_THROWS_AS(cond_c0(1.0, 1.0, 2.0), InvalidExponents);
        CHECK_THROWS_AS(cond_c0(1.0, 3.0, 1.5), InvalidExponents);
        CHECK_THROWS_AS(cond_c0(0.0, 2.0, 2.0), InvalidParams);
        for (double A : {0.5, 1.0, 2.0})
            for (double p : {1.5, 2.0, 3.0})
                for (double q : {p, p + 1.0, 2.0 * p + 1.0})
                    CHECK(cond_c0(A, p, q) == doctest::Approx(critical_C(A, p, q)).epsilon(1e-12));
    }

    TEST_CASE("recursion at the double root converges to 2")
    {
        const RecursionResult r = constant_recursion(1.0, 2.0, 2.0, 0.25, 200);
        CHECK(r.fixed_point);
        CHECK(std::abs(r.limit - 2.0) <= 1e-9);
        CHECK(r.bounded);
        CHECK(r.c.size() == 200);
        CHECK(r.c.front() == 1.0);
        for (std::size_t k = 1; k < r.c.size(); ++k) {
            CHECK(r.c[k] > r.c[k - 1]);
            CHECK(r.c[k] < 2.0);
        }
    }

    TEST_CASE("recursion above the threshold diverges")
    {
        const RecursionResult r = constant_recursion(1.0, 2.0, 2.0, 0.5, 200);
        CHECK_FALSE(r.fixed_point);
        CHECK(std::isinf(r.limit));
        CHECK_FALSE(r.bounded);
        CHECK(r.c.back() >= 1e300);
        CHECK(r.c.size() < 200);
    }

    TEST_CASE("recursion verdicts follow the closed-form threshold")
    {
        for (double A : {0.5, 1.0})
            for (double p : {1.5, 2.0, 3.0})
                for (double q : {p, p + 1.0}) {
                    const double c0 = cond_c0(A, p, q);
                    for (double t : {0.1, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 10.0}) {
                        const RecursionResult r = constant_recursion(A, p, q, t * c0, 2000);
                        CHECK(r.fixed_point == (t <= 1.0));
                        if (t <= 0.9) {
                            CHECK(r.c.back() == doctest::Approx(r.limit).epsilon(1e-9));
                            CHECK(r.bounded);
                        }
                        if (t > 1.0)
                            CHECK(r.c.back() > recursion_bound(A, p, q));
                    }
                }
        const RecursionResult z = constant_recursion(1.0, 2.0, 2.0, 0.0, 10);
        CHECK(z.limit == 1.0);
        CHECK(z.c.back() == 1.0);
    }

    TEST_CASE("Liouville threshold and atom integrability")
    {
        CHECK(liouville_threshold(4, 2.0) == 2.0);
        CHECK(liouville_threshold(7, 2.0) == doctest::Approx(1.4));
        CHECK_THROWS_AS(liouville_threshold(4, 4.0), InvalidExponents);
        CHECK_THROWS_AS(liouville_threshold(4, 1.0), InvalidExponents);
        CHECK(atom_source_nonintegrable(4, 2.0, 2.0));
        CHECK_FALSE(atom_source_nonintegrable(4, 2.0, 1.9));
        CHECK(to_string(SolveVerdict::diverged) == "diverged");
        CHECK(to_string(LiouvilleVerdict::stabilizes) == "stabilizes");
    }

    TEST_CASE("condition (v) ratio is homogeneous in the data")
    {
        const auto cloud = small_cloud();
        const GroupSpec h = heisenberg();
        const Measure omega(uniform_on_ball(cloud, identity(h), 0.8));
        const auto eval = every(cloud->size(), 7);
        for (const auto& [p, q] : {std::pair{2.0, 2.0}, std::pair{2.0, 3.0}, std::pair{1.5, 2.0}}) {
            const ConditionV a = check_condition_v(omega, 1.0, p, q, eval, cloud);
            const ConditionV b = check_condition_v(omega.scaled(3.0), 1.0, p, q, eval, cloud);
            const double e = (q - p + 1.0) / ((p - 1.0) * (p - 1.0));
            CHECK(a.sup_ratio > 0.0);
            CHECK(std::isfinite(a.sup_ratio));
            CHECK(b.sup_ratio == doctest::Approx(std::pow(3.0, e) * a.sup_ratio).epsilon(1e-9));
            CHECK(a.ratio.size() == eval.size());
            CHECK(a.v.size() == cloud->size());
        }
    }

    TEST_CASE("condition (v) with atoms and with zero data")
    {
        const auto cloud = small_cloud();
        const GroupSpec h = heisenberg();
        AtomicMeasure a(h);
        a.add(GPoint{0.1, 0.1, 0.1}, 1.0);
        const auto eval = every(cloud->size(), 11);
        const ConditionV v = check_condition_v(Measure(a), 1.0, 2.0, 2.0, eval, cloud);
        CHECK(v.analytic_divergence);
        CHECK(std::isinf(v.sup_ratio));
        const ConditionV w = check_condition_v(Measure(a), 1.0, 2.0, 1.5, eval, cloud);
        CHECK_FALSE(w.analytic_divergence);
        CHECK(std::isfinite(w.sup_ratio));
        CHECK_THROWS_AS(check_condition_v(Measure(h), 1.0, 2.0, 2.0, eval, cloud), ZeroMeasure);
        const std::vector<std::size_t> bad{cloud->size()};
        CHECK_THROWS_AS(check_condition_v(Measure(a), 1.0, 2.0, 2.0, bad, cloud), InvalidParams);
    }

    TEST_CASE("condition (iv) per ball")
    {
        const auto cloud = small_cloud();
        const GroupSpec h = heisenberg();
        const Measure omega(uniform_on_ball(cloud, identity(h), 0.5));
        const std::vector<BallSpec> balls{{identity(h), 0.7}, {GPoint{0, 0, 1.8}, 0.3}};
        const ConditionIV a = check_condition_iv(omega, 1.0, 2.0, 2.0, balls, cloud);
        REQUIRE(a.ratio.size() == 2);
        CHECK_FALSE(a.skipped[0]);
        CHECK(a.skipped[1]);
        CHECK(a.log.size() == 1);
        CHECK(a.ratio[0] > 0.0);
        // int_B (W omega_B)^q / omega(B) scales like c^{q/(p-1) - 1}.
        const ConditionIV b = check_condition_iv(omega.scaled(2.0), 1.0, 2.0, 2.0, balls, cloud);
        CHECK(b.max_ratio == doctest::Approx(2.0 * a.max_ratio).epsilon(1e-12));
    }

    TEST_CASE("solver dichotomy on a small cloud")
    {
        const auto cloud = small_cloud();
        const GroupSpec h = heisenberg();
        const Measure omega(uniform_on_ball(cloud, identity(h), 1.0));
        SolveConfig cfg;
        const auto eval = every(cloud->size(), 3);
        const ThresholdResult t = condition_v_threshold(omega, cfg.R, cfg.p, cfg.q, cond_c0(1.0, 2.0, 2.0), eval, cloud);
        CHECK(t.exponent == 1.0);
        CHECK(t.ratio_at_c_star == doctest::Approx(cond_c0(1.0, 2.0, 2.0)).epsilon(1e-9));

        const PicardResult small = picard_solve(omega.scaled(0.25 * t.c_star), cfg, cloud);
        CHECK(small.diagnostics.verdict == SolveVerdict::converged);
        CHECK(small.diagnostics.monotone);
        CHECK(small.lower_bound_holds);
        CHECK(small.upper_bound_holds);
        CHECK(small.max_u_over_w <= 2.0);

        const PicardResult big = picard_solve(omega.scaled(100.0 * t.c_star), cfg, cloud);
        CHECK(big.diagnostics.verdict == SolveVerdict::diverged);
        CHECK(big.diagnostics.monotone);
        for (std::size_t k = 1; k < big.diagnostics.sup_norm.size(); ++k)
            CHECK(big.diagnostics.sup_norm[k] > big.diagnostics.sup_norm[k - 1]);
    }

    TEST_CASE("solver edge cases")
    {
        const auto cloud = small_cloud();
        const GroupSpec h = heisenberg();
        const PicardResult zero = picard_solve(Measure(h), SolveConfig{}, cloud);
        CHECK(zero.diagnostics.verdict == SolveVerdict::converged);
        CHECK(zero.u == std::vector<double>(cloud->size(), 0.0));

        AtomicMeasure a(h);
        a.add(identity(h), 1e-6);
        const PicardResult atom = picard_solve(Measure(a), SolveConfig{}, cloud);
        CHECK(atom.diagnostics.verdict == SolveVerdict::diverged);
        CHECK_FALSE(atom.diagnostics.note.empty());

        SolveConfig bad;
        bad.A = 0.0;
        CHECK_THROWS_AS(picard_solve(Measure(a), bad, cloud), InvalidParams);
        bad = {};
        bad.max_iter = 0;
        CHECK_THROWS_AS(validate(bad), InvalidParams);
        CHECK_THROWS_AS(picard_solve(Measure(a), SolveConfig{}, nullptr), EmptyCloud);
    }

    TEST_CASE("shell clouds reach the requested radius")
    {
        const GroupSpec h = heisenberg();
        const auto c = shell_cloud(h, 1.0, 0.3, 10.0);
        CHECK(c->radius() >= 10.0);
        const auto core = shell_cloud(h, 1.0, 0.3, 0.5);
        CHECK(core->radius() == 1.0);
        LiouvilleConfig cfg;
        cfg.R_schedule = {};
        CHECK_THROWS_AS(liouville_probe(h, cfg), InvalidParams);
        cfg.R_schedule = {2.0};
        cfg.p = 4.0;
        cfg.q = 5.0;
        CHECK_THROWS_AS(liouville_probe(h, cfg), InvalidExponents);
    }
}
