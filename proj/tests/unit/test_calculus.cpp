#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace carnot;

namespace {

struct Fixture {
    GroupSpec g = heisenberg();
    std::shared_ptr<const PointCloud> cloud;
    DyadicFamily family;
    std::vector<double> sigma;

    Fixture()
        : cloud(make_cloud(g)), family(make_family(cloud)), sigma(cloud->size())
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (std::size_t i = 0; i < sigma.size(); ++i)
            sigma[i] = cloud->volume(i) * (U(rng) < 0.7 ? 0.5 + U(rng) : 0.0);
    }

    static std::shared_ptr<const PointCloud> make_cloud(const GroupSpec& g)
    {
        LatticeOptions lo;
        lo.kind = LatticeKind::graded;
        return std::make_shared<const PointCloud>(lattice_cloud(g, identity(g), 1.2, 0.2, lo));
    }
    static DyadicFamily make_family(std::shared_ptr<const PointCloud> c)
    {
        DyadicOptions o;
        o.lambda = 2.0;
        return build_family(std::move(c), -2, 0, o);
    }

    double mass(CubeRef q, std::span<const double> w) const
    {
        double m = 0.0;
        for (std::size_t i : family.cube(q).members)
            m += w[i];
        return m;
    }
    bool contains(CubeRef q, std::size_t i) const
    {
        const auto& mem = family.cube(q).members;
        return std::binary_search(mem.begin(), mem.end(), i);
    }
    bool inside(CubeRef a, CubeRef b) const
    {
        const auto& A = family.cube(a).members;
        const auto& B = family.cube(b).members;
        return a.level <= b.level && std::includes(B.begin(), B.end(), A.begin(), A.end());
    }

    LambdaAssignment random_lambda(std::uint64_t seed) const
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        LambdaAssignment L(family);
        for (const CubeRef q : family.all_cubes())
            if (mass(q, sigma) > 0.0 && U(rng) < 0.5)
                L[q] = U(rng);
        return L;
    }
};

// Literal evaluation of the three functionals, sample by sample and cube by cube.
AChain a_by_definition(const Fixture& F, const LambdaAssignment& L, double s)
{
    AChain out;
    const auto cubes = F.family.all_cubes();
    // inner[c]: sum of lambda_R over cubes R inside cubes[c].
    std::vector<double> inner(cubes.size(), 0.0), sq(cubes.size());
    for (std::size_t c = 0; c < cubes.size(); ++c) {
        sq[c] = F.mass(cubes[c], F.sigma);
        for (const CubeRef R : cubes)
            if (F.inside(R, cubes[c]))
                inner[c] += L[R];
    }
    for (std::size_t i = 0; i < F.sigma.size(); ++i) {
        if (!(F.sigma[i] > 0.0))
            continue;
        double sum = 0.0;
        double sup = 0.0;
        for (std::size_t c = 0; c < cubes.size(); ++c) {
            if (!F.contains(cubes[c], i))
                continue;
            sum += L[cubes[c]] / sq[c];
            sup = std::max(sup, std::pow(inner[c] / sq[c], s));
        }
        out.A1 += F.sigma[i] * std::pow(sum, s);
        out.A3 += F.sigma[i] * sup;
    }
    for (std::size_t c = 0; c < cubes.size(); ++c)
        if (L[cubes[c]] > 0.0)
            out.A2 += L[cubes[c]] * std::pow(inner[c] / sq[c], s - 1.0);
    return out;
}

BChain b_by_definition(const Fixture& F, CubeRef P, std::span<const double> mu, double alpha, double p, double q)
{
    const double e = 1.0 - alpha * p / F.g.M();
    const double a = 1.0 / (p - 1.0);
    const auto vol = F.cloud->volumes();
    BChain out;
    const auto cubes = F.family.descendants(P);
    for (const CubeRef Q : cubes) {
        const double V = F.mass(Q, vol);
        out.B1 += std::pow(F.mass(Q, mu) / std::pow(V, e), q * a) * V;
    }
    for (std::size_t i : F.family.cube(P).members) {
        double s2 = 0.0, s3 = 0.0;
        for (const CubeRef Q : cubes)
            if (F.contains(Q, i)) {
                const double V = F.mass(Q, vol);
                const double m = F.mass(Q, mu);
                s2 += std::pow(m / std::pow(V, e), a);
                s3 += m / std::pow(V, e);
            }
        out.B2 += vol[i] * std::pow(s2, q);
        out.B3 += vol[i] * std::pow(s3, q * a);
    }
    return out;
}

} // namespace

TEST_SUITE("calculus")
{
    TEST_CASE("A functionals match their definitions")
    {
        const Fixture F;
        for (double s : {1.5, 2.0, 3.0}) {
            const LambdaAssignment L = F.random_lambda(static_cast<std::uint64_t>(s * 10));
            const AChain fast = a_functionals(F.family, F.sigma, L, s);
            const AChain slow = a_by_definition(F, L, s);
            CHECK(fast.A1 == doctest::Approx(slow.A1).epsilon(1e-12));
            CHECK(fast.A2 == doctest::Approx(slow.A2).epsilon(1e-12));
            CHECK(fast.A3 == doctest::Approx(slow.A3).epsilon(1e-12));
        }
    }

    TEST_CASE("for s = 2 the first functional is twice the second minus the diagonal")
    {
        const Fixture F;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const LambdaAssignment L = F.random_lambda(seed);
            const AChain A = a_functionals(F.family, F.sigma, L, 2.0);
            double diag = 0.0;
            for (const CubeRef q : F.family.all_cubes())
                if (L[q] > 0.0)
                    diag += L[q] * L[q] / F.mass(q, F.sigma);
            CHECK(A.A1 == doctest::Approx(2.0 * A.A2 - diag).epsilon(1e-12));
            CHECK(A.A2 <= A.A1 * (1 + 1e-12));
            CHECK(A.A1 <= 2.0 * A.A2 * (1 + 1e-12));
        }
    }

    TEST_CASE("A functionals are homogeneous")
    {
        const Fixture F;
        const double s = 2.5;
        const LambdaAssignment L = F.random_lambda(77);
        LambdaAssignment L3(F.family);
        for (const CubeRef q : F.family.all_cubes())
            L3[q] = 3.0 * L[q];
        std::vector<double> sigma2 = F.sigma;
        for (double& v : sigma2)
            v *= 2.0;
        const AChain A = a_functionals(F.family, F.sigma, L, s);
        const AChain B = a_functionals(F.family, F.sigma, L3, s);
        const AChain C = a_functionals(F.family, sigma2, L, s);
        const double c3 = std::pow(3.0, s);
        const double c2 = std::pow(2.0, 1.0 - s);
        CHECK(B.A1 == doctest::Approx(c3 * A.A1).epsilon(1e-12));
        CHECK(B.A2 == doctest::Approx(c3 * A.A2).epsilon(1e-12));
        CHECK(B.A3 == doctest::Approx(c3 * A.A3).epsilon(1e-12));
        CHECK(C.A1 == doctest::Approx(c2 * A.A1).epsilon(1e-12));
        CHECK(C.A2 == doctest::Approx(c2 * A.A2).epsilon(1e-12));
        CHECK(C.A3 == doctest::Approx(c2 * A.A3).epsilon(1e-12));
    }

    TEST_CASE("A functional errors")
    {
        const Fixture F;
        LambdaAssignment L(F.family);
        CHECK_THROWS_AS(a_functionals(F.family, F.sigma, L, 1.0), InvalidExponents);
        std::vector<double> zero(F.sigma.size(), 0.0);
        L[{0, 0}] = 1.0;
        CHECK_THROWS_AS(a_functionals(F.family, zero, L, 2.0), ZeroMassCube);
        const AChain A = a_functionals(F.family, zero, LambdaAssignment(F.family), 2.0);
        CHECK(A.A1 == 0.0);
        CHECK(A.A2 == 0.0);
        CHECK(A.A3 == 0.0);
    }

    TEST_CASE("B functionals match their definitions")
    {
        const Fixture F;
        for (const auto& [alpha, p, q] : {std::tuple{1.0, 2.0, 3.0}, std::tuple{0.5, 1.5, 2.0}, std::tuple{1.0, 3.0, 2.5}}) {
            const CubeRef P{0, 0};
            const BChain fast = b_functionals(F.family, P, F.sigma, alpha, p, q);
            const BChain slow = b_by_definition(F, P, F.sigma, alpha, p, q);
            CHECK(fast.B1 == doctest::Approx(slow.B1).epsilon(1e-12));
            CHECK(fast.B2 == doctest::Approx(slow.B2).epsilon(1e-12));
            CHECK(fast.B3 == doctest::Approx(slow.B3).epsilon(1e-12));
            CHECK(fast.B1 <= fast.B3 * (1 + 1e-12));
            if (p <= 2.0)
                CHECK(fast.B2 <= fast.B3 * (1 + 1e-12));
        }
    }

    TEST_CASE("B functionals are homogeneous in the measure")
    {
        const Fixture F;
        std::vector<double> mu2 = F.sigma;
        for (double& v : mu2)
            v *= 2.0;
        const double alpha = 1.0, p = 1.5, q = 2.0;
        const BChain a = b_functionals(F.family, {0, 0}, F.sigma, alpha, p, q);
        const BChain b = b_functionals(F.family, {0, 0}, mu2, alpha, p, q);
        const double c = std::pow(2.0, q / (p - 1.0));
        CHECK(b.B1 == doctest::Approx(c * a.B1).epsilon(1e-12));
        CHECK(b.B2 == doctest::Approx(c * a.B2).epsilon(1e-12));
        CHECK(b.B3 == doctest::Approx(c * a.B3).epsilon(1e-12));
    }

    TEST_CASE("double star masses dominate cube masses")
    {
        const Fixture F;
        const CubeValues plain = cube_sums(F.family, F.sigma);
        const CubeValues star = double_star_masses(F.family, F.sigma);
        for (std::size_t k = 0; k < plain.size(); ++k)
            for (std::size_t j = 0; j < plain[k].size(); ++j)
                CHECK(star[k][j] >= plain[k][j] * (1 - 1e-12));
        const CubeRef P{-1, 0};
        const std::vector<CubeRef> sub = F.family.descendants(P);
        const CubeValues part = double_star_masses(F.family, F.sigma, sub);
        for (const CubeRef Q : F.family.all_cubes()) {
            const auto k = static_cast<std::size_t>(Q.level - F.family.base_level());
            const bool listed = std::find(sub.begin(), sub.end(), Q) != sub.end();
            CHECK(part[k][Q.index] == (listed ? star[k][Q.index] : 0.0));
        }
        BOptions o;
        o.double_star = true;
        const BChain b = b_functionals(F.family, {0, 0}, F.sigma, 1.0, 2.0, 3.0, o);
        const BChain a = b_functionals(F.family, {0, 0}, F.sigma, 1.0, 2.0, 3.0);
        CHECK(b.B1 >= a.B1);
        CHECK(b.B3 >= a.B3);
    }

    TEST_CASE("exponent checks")
    {
        CHECK_THROWS_AS(check_exponents(0.0, 2.0, 3.0), InvalidExponents);
        CHECK_THROWS_AS(check_exponents(1.0, 1.0, 3.0), InvalidExponents);
        CHECK_THROWS_AS(check_exponents(1.0, 3.0, 2.0), InvalidExponents);
        CHECK_NOTHROW(check_exponents(1.0, 3.0, 2.5));
        CHECK(safe_ratio(0.0, 0.0) == 1.0);
        CHECK(std::isinf(safe_ratio(1.0, 0.0)));
        CHECK(safe_ratio(0.0, 2.0) == 0.0);
    }

    TEST_CASE("dyadic maximal function against a brute force sup")
    {
        const Fixture F;
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> U(-0.8, 0.8), W(0.1, 1.0);
        AtomicMeasure mu(F.g);
        std::vector<double> f;
        for (int i = 0; i < 40; ++i) {
            mu.add({U(rng), U(rng), U(rng)}, W(rng));
            f.push_back(W(rng) * 10.0);
        }
        const std::vector<double> Mf = dyadic_maximal(f, mu, F.family);
        std::vector<std::size_t> near(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i)
            near[i] = F.cloud->nearest(mu.point(i));
        for (std::size_t i = 0; i < mu.size(); ++i) {
            double best = 0.0;
            for (const CubeRef Q : F.family.all_cubes()) {
                if (!F.contains(Q, near[i]))
                    continue;
                double num = 0.0, den = 0.0;
                for (std::size_t j = 0; j < mu.size(); ++j)
                    if (F.contains(Q, near[j])) {
                        num += f[j] * mu.mass(j);
                        den += mu.mass(j);
                    }
                best = std::max(best, num / den);
            }
            CHECK(Mf[i] == doctest::Approx(best).epsilon(1e-12));
        }
        CHECK_THROWS_AS(dyadic_maximal(std::vector<double>{1.0}, mu, F.family), ShapeMismatch);
    }

    TEST_CASE("carrier masses conserve total mass")
    {
        const Fixture F;
        AtomicMeasure a(F.g);
        a.add({0.1, 0.2, 0.3}, 2.0);
        a.add({5.0, 5.0, 5.0}, 1.0);
        const std::vector<double> m = carrier_masses(*F.cloud, Measure(a));
        double total = 0.0;
        for (double v : m)
            total += v;
        CHECK(total == 3.0);
        CHECK_THROWS_AS(carrier_masses(*F.cloud, Measure(euclidean(3))), ShapeMismatch);
    }

    TEST_CASE("discrete energy against its definition")
    {
        const Fixture F;
        const double alpha = 1.0, p = 2.0, q = 3.0;
        for (double r : {0.25, 0.5, 1.0}) {
            double expected = 0.0;
            for (const CubeRef Q : F.family.all_cubes()) {
                if (F.family.side_length(Q.level) > r * (1 + 1e-12))
                    continue;
                const double V = F.mass(Q, F.cloud->volumes());
                expected += std::pow(F.mass(Q, F.sigma) / std::pow(V, 1.0 - alpha * p / 4.0), q / (p - 1.0)) * V;
            }
            CHECK(discrete_energy(F.family, F.sigma, r, alpha, p, q) == doctest::Approx(expected).epsilon(1e-12));
        }
    }

    TEST_CASE("continuous energy and the equivalence driver")
    {
        const Fixture F;
        const Measure mu(GridDensity(F.cloud, [&] {
            std::vector<double> d(F.sigma.size());
            for (std::size_t i = 0; i < d.size(); ++i)
                d[i] = F.sigma[i] / F.cloud->volume(i);
            return d;
        }()));
        WolffParams P;
        P.alpha = 1.0;
        P.p = 2.0;
        P.R = 1.0;
        const std::vector<double> w = wolff_field(mu, *F.cloud, P);
        double expected = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            expected += F.cloud->volume(i) * std::pow(w[i], 3.0);
        const DyadicFamily* sched[] = {&F.family};
        const EnergyResult E = energy_equivalence(mu, sched, 1.0, 1.0, 2.0, 3.0, *F.cloud);
        CHECK(E.continuous == doctest::Approx(expected).epsilon(1e-12));
        CHECK(E.discrete.size() == 1);
        CHECK(E.discrete_sup == doctest::Approx(discrete_energy(F.family, F.sigma, 1.0, 1.0, 2.0, 3.0)).epsilon(1e-12));
        CHECK(E.ratio == doctest::Approx(E.continuous / E.discrete_sup));
        CHECK(std::isfinite(E.ratio));
        CHECK(E.ratio > 0.0);
        CHECK_THROWS_AS(energy_equivalence(mu, {}, 1.0, 1.0, 2.0, 3.0, *F.cloud), InvalidParams);
    }

    TEST_CASE("atom energy finiteness")
    {
        CHECK_FALSE(atom_energy_finite(4, 1.0, 2.0, 3.0));
        CHECK(atom_energy_finite(4, 1.0, 2.0, 1.5));
        CHECK_FALSE(atom_energy_finite(4, 1.0, 2.0, 2.0));
        CHECK(atom_energy_finite(4, 2.0, 2.0, 5.0));
    }

    TEST_CASE("pointwise discretization sums")
    {
        const GroupSpec h = heisenberg();
        LatticeOptions lo;
        lo.kind = LatticeKind::graded;
        auto c = std::make_shared<const PointCloud>(lattice_cloud(h, identity(h), 2.0, 0.25, lo));
        DyadicOptions o;
        o.lambda = 2.0;
        const DyadicFamily f = build_family(c, -3, 1, o);
        const Measure mu(uniform_on_ball(c, identity(h), 1.0));
        const DzeResult d = dze_check(identity(h).coords(), mu, f, 1.0, 1.0, 2.0);
        CHECK(d.wolff > 0.0);
        CHECK(d.lower_sum > 0.0);
        CHECK(d.upper_sum > 0.0);
        CHECK(d.band <= d.wolff);
        CHECK(d.lower_ratio == doctest::Approx(d.wolff / d.lower_sum));
        CHECK(d.upper_ratio == doctest::Approx(d.band / d.upper_sum));
        CHECK_THROWS_AS(dze_check(identity(h).coords(), mu, f, 0.25, 1.0, 2.0), ScaleMismatch);
    }
}
