#include "carnot/io.hpp"

#include "carnot/errors.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace carnot::io {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what)
{
    throw ParseError("line " + std::to_string(line) + ": " + what);
}

// Reads non-comment lines as token lists.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::vector<std::string>& toks)
    {
        std::string text;
        while (std::getline(in_, text)) {
            ++line_;
            if (const auto hash = text.find('#'); hash != std::string::npos)
                text.resize(hash);
            std::istringstream ls(text);
            toks.clear();
            std::string t;
            while (ls >> t)
                toks.push_back(t);
            if (!toks.empty())
                return true;
        }
        return false;
    }

    std::size_t line() const { return line_; }

    double number(const std::string& tok) const
    {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used == tok.size())
                return v;
        } catch (const std::logic_error&) {
        }
        if (tok == "inf")
            return std::numeric_limits<double>::infinity();
        fail(line_, "expected a number, got '" + tok + "'");
    }

    std::size_t index(const std::string& tok) const
    {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(tok, &used);
            if (used == tok.size() && tok[0] != '-')
                return static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
        }
        fail(line_, "expected an index, got '" + tok + "'");
    }

    long long integer(const std::string& tok) const
    {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used == tok.size())
                return v;
        } catch (const std::logic_error&) {
        }
        fail(line_, "expected an integer, got '" + tok + "'");
    }

    GPoint point(const std::vector<std::string>& toks, std::size_t from, int N) const
    {
        if (toks.size() < from + static_cast<std::size_t>(N))
            fail(line_, "expected " + std::to_string(N) + " coordinates");
        std::vector<double> c(static_cast<std::size_t>(N));
        for (int k = 0; k < N; ++k)
            c[static_cast<std::size_t>(k)] = number(toks[from + static_cast<std::size_t>(k)]);
        return GPoint(std::move(c));
    }

    void arity(const std::vector<std::string>& toks, std::size_t n) const
    {
        if (toks.size() != n)
            fail(line_, "'" + toks[0] + "' expects " + std::to_string(n - 1) + " values, got " +
                            std::to_string(toks.size() - 1));
    }

    void header(const std::string& magic)
    {
        std::vector<std::string> toks;
        if (!next(toks) || toks[0] != magic)
            fail(line_, "missing '" + magic + "' header");
        if (toks.size() != 2 || toks[1] != "1")
            fail(line_, "unsupported " + magic + " version");
    }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

std::ofstream::fmtflags full_precision(std::ostream& out)
{
    const auto flags = out.flags();
    out << std::setprecision(17);
    return flags;
}

void write_coords(std::ostream& out, std::span<const double> x)
{
    for (std::size_t k = 0; k < x.size(); ++k)
        out << (k ? " " : "") << x[k];
}

std::ifstream open(const std::filesystem::path& path, const char* what)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError(std::string("cannot open ") + what + " " + path.string());
    return in;
}

} // namespace

std::vector<GPoint> read_points(std::istream& in, const GroupSpec& g)
{
    LineReader r(in);
    std::vector<GPoint> out;
    std::vector<std::string> toks;
    while (r.next(toks)) {
        r.arity(toks, static_cast<std::size_t>(g.N()));
        out.push_back(r.point(toks, 0, g.N()));
    }
    return out;
}

std::vector<GPoint> load_points(const std::filesystem::path& path, const GroupSpec& g)
{
    auto in = open(path, "point file");
    return read_points(in, g);
}

void write_cloud(std::ostream& out, const PointCloud& cloud)
{
    const auto flags = full_precision(out);
    const GroupSpec& g = cloud.group();
    out << "carnot-cloud 1\n";
    out << "group " << (g.name().empty() ? "custom" : g.name()) << '\n';
    out << "dim " << g.N() << '\n';
    out << "center ";
    write_coords(out, cloud.center().coords());
    out << "\nradius " << cloud.radius() << '\n';
    out << "points " << cloud.size() << '\n';
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out << "p ";
        write_coords(out, cloud.point(i));
        out << ' ' << cloud.volume(i) << ' ' << cloud.resolution(i) << ' ' << cloud.sublattice_scale(i) << '\n';
    }
    out.flags(flags);
}

PointCloud read_cloud(std::istream& in, const GroupSpec& g)
{
    LineReader r(in);
    r.header("carnot-cloud");
    const int N = g.N();
    std::vector<std::string> toks;
    std::optional<GPoint> center;
    double radius = 0.0;
    std::size_t expected = 0;
    std::vector<double> coords, vol, res, sub;
    while (r.next(toks)) {
        const std::string& key = toks[0];
        if (key == "group") {
            continue;
        } else if (key == "dim") {
            r.arity(toks, 2);
            if (r.integer(toks[1]) != N)
                fail(r.line(), "cloud dimension does not match the group");
        } else if (key == "center") {
            r.arity(toks, static_cast<std::size_t>(N) + 1);
            center = r.point(toks, 1, N);
        } else if (key == "radius") {
            r.arity(toks, 2);
            radius = r.number(toks[1]);
        } else if (key == "points") {
            r.arity(toks, 2);
            expected = r.index(toks[1]);
            coords.reserve(expected * static_cast<std::size_t>(N));
        } else if (key == "p") {
            r.arity(toks, static_cast<std::size_t>(N) + 4);
            for (int k = 0; k < N; ++k)
                coords.push_back(r.number(toks[1 + static_cast<std::size_t>(k)]));
            vol.push_back(r.number(toks[static_cast<std::size_t>(N) + 1]));
            res.push_back(r.number(toks[static_cast<std::size_t>(N) + 2]));
            sub.push_back(r.number(toks[static_cast<std::size_t>(N) + 3]));
        } else {
            fail(r.line(), "unknown keyword '" + key + "'");
        }
    }
    if (!center)
        throw ParseError("cloud file has no center line");
    if (vol.size() != expected)
        throw ParseError("cloud file declares " + std::to_string(expected) + " points but lists " +
                         std::to_string(vol.size()));
    return PointCloud(g, std::move(coords), std::move(vol), std::move(res), std::move(sub), *center, radius);
}

PointCloud load_cloud(const std::filesystem::path& path, const GroupSpec& g)
{
    auto in = open(path, "cloud file");
    return read_cloud(in, g);
}

void write_family(std::ostream& out, const DyadicFamily& f)
{
    const auto flags = full_precision(out);
    out << "carnot-family 1\n";
    out << "levels " << f.base_level() << ' ' << f.top_level() << '\n';
    out << "lambda " << f.lambda() << '\n';
    out << "separation " << f.separation() << '\n';
    out << "# cube level index center parent members\n";
    for (int k = f.base_level(); k <= f.top_level(); ++k) {
        const std::span<const Cube> cubes = f.level(k);
        for (std::size_t j = 0; j < cubes.size(); ++j)
            out << "cube " << k << ' ' << j << ' ' << cubes[j].center << ' ' << cubes[j].parent << ' '
                << cubes[j].members.size() << '\n';
    }
    out << "# base cube of every sample, in sample order\n";
    const std::size_t n = f.cloud().size();
    for (std::size_t i = 0; i < n; ++i)
        out << "a " << f.cube_of(i, f.base_level()) << '\n';
    out.flags(flags);
}

DyadicFamily read_family(std::istream& in, std::shared_ptr<const PointCloud> cloud)
{
    LineReader r(in);
    r.header("carnot-family");
    std::vector<std::string> toks;
    int m = 0;
    int top = -1;
    bool have_levels = false;
    double lambda = 0.0;
    double separation = 0.0;
    std::vector<std::vector<std::size_t>> centers;
    std::vector<std::vector<std::int64_t>> parents;
    std::vector<std::size_t> base;
    while (r.next(toks)) {
        const std::string& key = toks[0];
        if (key == "levels") {
            r.arity(toks, 3);
            m = static_cast<int>(r.integer(toks[1]));
            top = static_cast<int>(r.integer(toks[2]));
            if (top < m)
                fail(r.line(), "top level below base level");
            have_levels = true;
            centers.assign(static_cast<std::size_t>(top - m + 1), {});
            parents.assign(centers.size(), {});
        } else if (key == "lambda") {
            r.arity(toks, 2);
            lambda = r.number(toks[1]);
        } else if (key == "separation") {
            r.arity(toks, 2);
            separation = r.number(toks[1]);
        } else if (key == "cube") {
            if (!have_levels)
                fail(r.line(), "cube record before the levels line");
            r.arity(toks, 6);
            const long long k = r.integer(toks[1]);
            if (k < m || k > top)
                fail(r.line(), "cube level outside the declared range");
            auto& c = centers[static_cast<std::size_t>(k - m)];
            if (r.index(toks[2]) != c.size())
                fail(r.line(), "cube records must be listed in index order");
            c.push_back(r.index(toks[3]));
            parents[static_cast<std::size_t>(k - m)].push_back(r.integer(toks[4]));
        } else if (key == "a") {
            r.arity(toks, 2);
            base.push_back(r.index(toks[1]));
        } else {
            fail(r.line(), "unknown keyword '" + key + "'");
        }
    }
    if (!have_levels)
        throw ParseError("family file has no levels line");
    return assemble_family(std::move(cloud), m, top, lambda, separation, centers, parents, base);
}

MeasureFile read_measure(std::istream& in, const GroupSpec& g)
{
    LineReader r(in);
    r.header("carnot-measure");
    const int N = g.N();
    MeasureFile out;
    std::vector<std::string> toks;
    while (r.next(toks)) {
        const std::string& key = toks[0];
        if (key == "atom") {
            r.arity(toks, static_cast<std::size_t>(N) + 2);
            out.atoms.push_back(r.point(toks, 1, N));
            const double m = r.number(toks.back());
            if (!(m >= 0.0))
                fail(r.line(), "atom mass must be nonnegative");
            out.masses.push_back(m);
        } else if (key == "cloud") {
            r.arity(toks, 2);
            out.cloud_path = toks[1];
        } else if (key == "d") {
            r.arity(toks, 3);
            const double v = r.number(toks[2]);
            if (!(v >= 0.0))
                fail(r.line(), "density must be nonnegative");
            out.density.emplace_back(r.index(toks[1]), v);
        } else if (key == "ball") {
            r.arity(toks, static_cast<std::size_t>(N) + 3);
            BallDensity b;
            b.value = r.number(toks[1]);
            b.radius = r.number(toks[2]);
            b.center = r.point(toks, 3, N);
            if (!(b.value >= 0.0) || !(b.radius > 0.0))
                fail(r.line(), "ball needs value >= 0 and radius > 0");
            out.balls.push_back(std::move(b));
        } else {
            fail(r.line(), "unknown keyword '" + key + "'");
        }
    }
    if (!out.density.empty() && !out.cloud_path)
        throw ParseError("density values given without a cloud line");
    return out;
}

MeasureFile load_measure(const std::filesystem::path& path, const GroupSpec& g)
{
    auto in = open(path, "measure file");
    MeasureFile f = read_measure(in, g);
    if (f.cloud_path && f.cloud_path->is_relative())
        f.cloud_path = path.parent_path() / *f.cloud_path;
    return f;
}

Measure realize(const MeasureFile& file, const GroupSpec& g, std::shared_ptr<const PointCloud> cloud)
{
    AtomicMeasure atoms(g, file.atoms, file.masses);
    if (!file.has_density())
        return Measure(std::move(atoms));
    if (!cloud)
        throw InvalidParams("measure has a density part but no carrier cloud was given");
    std::vector<double> dens(cloud->size(), 0.0);
    for (const auto& [i, v] : file.density) {
        if (i >= cloud->size())
            throw ParseError("density index " + std::to_string(i) + " outside the cloud");
        dens[i] += v;
    }
    for (const BallDensity& b : file.balls) {
        const GridDensity part = uniform_on_ball(cloud, b.center, b.radius, b.value);
        for (std::size_t i = 0; i < dens.size(); ++i)
            dens[i] += part.density(i);
    }
    return Measure(std::move(atoms), GridDensity(std::move(cloud), std::move(dens)));
}

void write_measure(std::ostream& out, const Measure& mu, const std::string& cloud_path)
{
    const auto flags = full_precision(out);
    out << "carnot-measure 1\n";
    const AtomicMeasure& A = mu.atoms();
    for (std::size_t i = 0; i < A.size(); ++i) {
        out << "atom ";
        write_coords(out, A.point(i));
        out << ' ' << A.mass(i) << '\n';
    }
    if (const GridDensity* D = mu.density()) {
        if (cloud_path.empty())
            throw InvalidParams("writing a density needs the path of its cloud file");
        out << "cloud " << cloud_path << '\n';
        for (std::size_t i = 0; i < D->cloud().size(); ++i)
            if (D->density(i) != 0.0)
                out << "d " << i << ' ' << D->density(i) << '\n';
    }
    out.flags(flags);
}

CompactSet read_set(std::istream& in, const GroupSpec& g)
{
    LineReader r(in);
    r.header("carnot-set");
    const int N = g.N();
    std::vector<std::string> toks;
    std::vector<GPoint> pts;
    std::optional<GPoint> center;
    double radius = 0.0;
    while (r.next(toks)) {
        if (toks[0] == "point") {
            r.arity(toks, static_cast<std::size_t>(N) + 1);
            pts.push_back(r.point(toks, 1, N));
        } else if (toks[0] == "ball") {
            r.arity(toks, static_cast<std::size_t>(N) + 2);
            radius = r.number(toks[1]);
            center = r.point(toks, 2, N);
        } else {
            fail(r.line(), "unknown keyword '" + toks[0] + "'");
        }
    }
    if (!center)
        throw ParseError("set file has no ball line");
    return CompactSet(g, std::move(pts), *center, radius);
}

CompactSet load_set(const std::filesystem::path& path, const GroupSpec& g)
{
    auto in = open(path, "set file");
    return read_set(in, g);
}

void write_set(std::ostream& out, const CompactSet& E)
{
    const auto flags = full_precision(out);
    out << "carnot-set 1\nball " << E.radius() << ' ';
    write_coords(out, E.center().coords());
    out << '\n';
    for (const GPoint& x : E.points()) {
        out << "point ";
        write_coords(out, x.coords());
        out << '\n';
    }
    out.flags(flags);
}

} // namespace carnot::io
