#pragma once

#include "carnot/capacity.hpp"
#include "carnot/dyadic.hpp"
#include "carnot/group.hpp"
#include "carnot/measure.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Line-oriented text formats; see docs/FORMATS.md. Blank lines and '#' comments are ignored.
// Parse failures throw ParseError with the offending line number.
namespace carnot::io {

// name <text>
// layers d1 d2 ... dr
// bracket i a j b -> k l c [k l c ...]     ([X_{i,a}, X_{j,b}] = sum c X_{k,l}, c rational)
StrataSpec parse_group_spec(std::istream& in);
StrataSpec parse_group_spec(std::string_view text);
void write_group_spec(std::ostream& out, const GroupSpec& g);
GroupSpec load_group(const std::filesystem::path& path);
// Builtin name (H1, Engel, R3, ...) or path to a spec file.
GroupSpec resolve_group(std::string_view name_or_path);

// One point per line, coordinates in layer order.
std::vector<GPoint> read_points(std::istream& in, const GroupSpec& g);
std::vector<GPoint> load_points(const std::filesystem::path& path, const GroupSpec& g);

void write_cloud(std::ostream& out, const PointCloud& cloud);
PointCloud read_cloud(std::istream& in, const GroupSpec& g);
PointCloud load_cloud(const std::filesystem::path& path, const GroupSpec& g);

void write_family(std::ostream& out, const DyadicFamily& family);
DyadicFamily read_family(std::istream& in, std::shared_ptr<const PointCloud> cloud);

// Uniform density on a ball, realized on whatever cloud carries the measure.
struct BallDensity {
    GPoint center;
    double radius = 1.0;
    double value = 1.0;
};

struct MeasureFile {
    std::vector<GPoint> atoms;
    std::vector<double> masses;
    std::optional<std::filesystem::path> cloud_path; // density carrier, relative to the file
    std::vector<std::pair<std::size_t, double>> density;
    std::vector<BallDensity> balls;
    bool has_density() const { return cloud_path.has_value() || !balls.empty(); }
};

MeasureFile read_measure(std::istream& in, const GroupSpec& g);
MeasureFile load_measure(const std::filesystem::path& path, const GroupSpec& g);
// Atoms plus the density part carried by cloud (required when has_density()). Explicit density
// values need the file's own cloud, so cloud must then have been loaded from cloud_path.
Measure realize(const MeasureFile& file, const GroupSpec& g, std::shared_ptr<const PointCloud> cloud);
void write_measure(std::ostream& out, const Measure& mu, const std::string& cloud_path = {});

// ball radius c1 .. cN
// point x1 .. xN
CompactSet read_set(std::istream& in, const GroupSpec& g);
CompactSet load_set(const std::filesystem::path& path, const GroupSpec& g);
void write_set(std::ostream& out, const CompactSet& E);

} // namespace carnot::io
