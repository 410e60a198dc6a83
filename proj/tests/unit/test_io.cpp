#include "carnot/errors.hpp"
#include "carnot/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

using namespace carnot;

namespace {

const std::filesystem::path kSamples{CARNOT_SAMPLES_DIR};

std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("carnot_io_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string parse_error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("io")
{
    TEST_CASE("group spec files reproduce the builtins")
    {
        const GroupSpec e = io::load_group(kSamples / "engel.txt");
        const GroupSpec ref = engel();
        CHECK(e.name() == "engel-file");
        CHECK(e.M() == ref.M());
        for (int i = 0; i < e.N(); ++i)
            for (int j = 0; j < e.N(); ++j)
                for (int k = 0; k < e.N(); ++k)
                    CHECK(e.structure_constant(i, j, k) == ref.structure_constant(i, j, k));
        CHECK(io::resolve_group("H1").M() == 4);
        CHECK(io::resolve_group((kSamples / "heisenberg.txt").string()).name() == "heisenberg-file");
        CHECK_THROWS_AS(io::resolve_group("no-such-group"), UnknownName);
    }

    TEST_CASE("group specs round trip")
    {
        const GroupSpec g = make_group(io::parse_group_spec("name g\nlayers 2 1 1\nbracket 1 1 1 2 -> 2 1 1/2\n"
                                                            "bracket 1 1 2 1 -> 3 1 -3\n"));
        std::ostringstream out;
        io::write_group_spec(out, g);
        const GroupSpec back = make_group(io::parse_group_spec(out.str()));
        CHECK(back.name() == "g");
        CHECK(back.structure_constant(0, 1, 2) == Rational(1, 2));
        CHECK(back.structure_constant(0, 2, 3) == Rational(-3));
    }

    TEST_CASE("group spec parse errors carry line numbers")
    {
        CHECK(parse_error_of([] { io::parse_group_spec("layers 2 1\nbracket 1 1 1 2 2 1 1\n"); })
                  .starts_with("line 2"));
        CHECK(parse_error_of([] { io::parse_group_spec("# c\nlayers 2 x\n"); }).starts_with("line 2"));
        CHECK(parse_error_of([] { io::parse_group_spec("layers 2\nfrobnicate\n"); }).starts_with("line 2"));
        CHECK_THROWS_AS(io::parse_group_spec("name nothing\n"), ParseError);
        CHECK_THROWS_AS(io::load_group("/nonexistent/spec.txt"), ParseError);
    }

    TEST_CASE("points")
    {
        const GroupSpec h = heisenberg();
        std::istringstream in("# two points\n1 2 3\n\n0.5 -0.5 1e-3\n");
        const auto pts = io::read_points(in, h);
        REQUIRE(pts.size() == 2);
        CHECK(pts[1] == GPoint{0.5, -0.5, 1e-3});
        std::istringstream bad("1 2\n");
        CHECK(parse_error_of([&] { io::read_points(bad, h); }).starts_with("line 1"));
    }

    TEST_CASE("clouds round trip exactly")
    {
        const GroupSpec h = heisenberg();
        LatticeOptions lo;
        lo.kind = LatticeKind::graded;
        const PointCloud c = dilate_cloud(lattice_cloud(h, GPoint{0.1, 0.2, 0.3}, 1.0, 0.3, lo), 1.7);
        std::stringstream s;
        io::write_cloud(s, c);
        const PointCloud back = io::read_cloud(s, h);
        REQUIRE(back.size() == c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(back.gpoint(i) == c.gpoint(i));
            CHECK(back.volume(i) == c.volume(i));
            CHECK(back.resolution(i) == c.resolution(i));
            CHECK(back.sublattice_scale(i) == c.sublattice_scale(i));
        }
        CHECK(back.center() == c.center());
        CHECK(back.radius() == c.radius());
        std::stringstream wrong;
        io::write_cloud(wrong, c);
        CHECK_THROWS_AS(io::read_cloud(wrong, engel()), Error);
    }

    TEST_CASE("families round trip")
    {
        const GroupSpec h = heisenberg();
        LatticeOptions lo;
        lo.kind = LatticeKind::graded;
        auto c = std::make_shared<const PointCloud>(lattice_cloud(h, identity(h), 1.5, 0.2, lo));
        DyadicOptions o;
        o.lambda = 2.0;
        const DyadicFamily f = build_family(c, -2, 0, o);
        std::stringstream s;
        io::write_family(s, f);
        const DyadicFamily back = io::read_family(s, c);
        CHECK(back.base_level() == f.base_level());
        CHECK(back.top_level() == f.top_level());
        CHECK(back.lambda() == f.lambda());
        CHECK(back.separation() == f.separation());
        for (const CubeRef q : f.all_cubes()) {
            CHECK(back.cube(q).center == f.cube(q).center);
            CHECK(back.cube(q).parent == f.cube(q).parent);
            CHECK(back.cube(q).members == f.cube(q).members);
            CHECK(back.cube(q).children == f.cube(q).children);
        }
        CHECK(back.certificate().partition == f.certificate().partition);
        CHECK(back.certificate().inner_violations == f.certificate().inner_violations);
    }

    TEST_CASE("measures round trip with a density file")
    {
        const GroupSpec h = heisenberg();
        const auto dir = scratch_dir("measure");
        LatticeOptions lo;
        lo.kind = LatticeKind::graded;
        auto c = std::make_shared<const PointCloud>(lattice_cloud(h, identity(h), 1.0, 0.25, lo));
        {
            std::ofstream out(dir / "cloud.txt");
            io::write_cloud(out, *c);
        }
        AtomicMeasure a(h);
        a.add({0.1, 0.2, 0.3}, 0.75);
        const Measure mu(a, uniform_on_ball(c, identity(h), 0.6, 2.5));
        {
            std::ofstream out(dir / "mu.txt");
            io::write_measure(out, mu, "cloud.txt");
        }
        const io::MeasureFile file = io::load_measure(dir / "mu.txt", h);
        REQUIRE(file.cloud_path);
        CHECK(std::filesystem::equivalent(*file.cloud_path, dir / "cloud.txt"));
        auto carrier = std::make_shared<const PointCloud>(io::load_cloud(*file.cloud_path, h));
        const Measure back = io::realize(file, h, carrier);
        CHECK(back.atoms().size() == 1);
        CHECK(back.atoms().mass(0) == 0.75);
        REQUIRE(back.density());
        for (std::size_t i = 0; i < c->size(); ++i)
            CHECK(back.density()->density(i) == mu.density()->density(i));
        CHECK(back.total_mass() == doctest::Approx(mu.total_mass()).epsilon(1e-15));

        std::ostringstream no_path;
        CHECK_THROWS_AS(io::write_measure(no_path, mu), InvalidParams);
        CHECK_THROWS_AS(io::realize(file, h, nullptr), InvalidParams);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("ball densities are realized on the given carrier")
    {
        const GroupSpec h = heisenberg();
        const io::MeasureFile file = io::load_measure(kSamples / "unit_ball.txt", h);
        CHECK(file.has_density());
        CHECK(file.balls.size() == 1);
        LatticeOptions lo;
        lo.kind = LatticeKind::graded;
        auto c = std::make_shared<const PointCloud>(lattice_cloud(h, identity(h), 1.5, 0.2, lo));
        const Measure mu = io::realize(file, h, c);
        CHECK(mu.total_mass() == doctest::Approx(uniform_on_ball(c, identity(h), 1.0).total_mass()));

        const io::MeasureFile atom = io::load_measure(kSamples / "atom.txt", h);
        CHECK_FALSE(atom.has_density());
        CHECK(io::realize(atom, h, nullptr).total_mass() == 1.0);
    }

    TEST_CASE("measure parse errors")
    {
        const GroupSpec h = heisenberg();
        std::istringstream header("carnot-set 1\n");
        CHECK_THROWS_AS(io::read_measure(header, h), ParseError);
        std::istringstream neg("carnot-measure 1\natom 0 0 0 -1\n");
        CHECK(parse_error_of([&] { io::read_measure(neg, h); }).starts_with("line 2"));
        std::istringstream shape("carnot-measure 1\n\natom 0 0 1\n");
        CHECK(parse_error_of([&] { io::read_measure(shape, h); }).starts_with("line 3"));
    }

    TEST_CASE("sets round trip")
    {
        const GroupSpec h = heisenberg();
        const CompactSet E = io::load_set(kSamples / "ring.txt", h);
        CHECK(E.size() == 6);
        CHECK(E.radius() == 1.0);
        std::stringstream s;
        io::write_set(s, E);
        const CompactSet back = io::read_set(s, h);
        CHECK(back.points() == E.points());
        CHECK(back.center() == E.center());
        std::istringstream noball("carnot-set 1\npoint 0 0 0\n");
        CHECK_THROWS_AS(io::read_set(noball, h), Error);
    }
}
