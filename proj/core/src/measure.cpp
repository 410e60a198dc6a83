#include "carnot/measure.hpp"

#include "carnot/errors.hpp"

#include <cmath>
#include <numeric>

namespace carnot {

AtomicMeasure::AtomicMeasure(GroupSpec g, const std::vector<GPoint>& atoms, std::vector<double> masses)
    : g_(std::move(g))
{
    if (atoms.size() != masses.size())
        throw ShapeMismatch("atom and mass lists differ in length");
    for (std::size_t i = 0; i < atoms.size(); ++i)
        add(atoms[i], masses[i]);
}

void AtomicMeasure::add(const GPoint& atom, double mass)
{
    check_shape(g_, atom.coords());
    if (!(mass >= 0.0) || !std::isfinite(mass))
        throw InvalidParams("atom masses must be finite and nonnegative");
    coords_.insert(coords_.end(), atom.vec().begin(), atom.vec().end());
    masses_.push_back(mass);
}

double AtomicMeasure::total_mass() const { return std::accumulate(masses_.begin(), masses_.end(), 0.0); }

GridDensity::GridDensity(std::shared_ptr<const PointCloud> cloud, std::vector<double> density)
    : cloud_(std::move(cloud)), density_(std::move(density))
{
    if (!cloud_)
        throw EmptyCloud("density needs a cloud");
    if (density_.size() != cloud_->size())
        throw ShapeMismatch("density length does not match the cloud");
    for (double v : density_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidParams("densities must be finite and nonnegative");
}

double GridDensity::total_mass() const
{
    double m = 0.0;
    for (std::size_t i = 0; i < density_.size(); ++i)
        m += mass(i);
    return m;
}

Measure::Measure(AtomicMeasure atoms, std::optional<GridDensity> density)
    : atoms_(std::move(atoms)), density_(std::move(density))
{
    if (density_ && !density_->group().same_as(atoms_.group()))
        throw ShapeMismatch("atomic and density parts live on different groups");
}

double Measure::total_mass() const { return atoms_.total_mass() + (density_ ? density_->total_mass() : 0.0); }

Measure Measure::scaled(double c) const
{
    if (!(c >= 0.0))
        throw InvalidParams("measures can only be scaled by nonnegative factors");
    AtomicMeasure a(group());
    for (std::size_t i = 0; i < atoms_.size(); ++i)
        a.add(GPoint(atoms_.point(i)), atoms_.mass(i) * c);
    std::optional<GridDensity> d;
    if (density_) {
        std::vector<double> v(density_->density().begin(), density_->density().end());
        for (double& x : v)
            x *= c;
        d.emplace(density_->cloud_ptr(), std::move(v));
    }
    return Measure(std::move(a), std::move(d));
}

Measure operator+(const Measure& a, const Measure& b)
{
    if (!a.group().same_as(b.group()))
        throw ShapeMismatch("cannot add measures on different groups");
    AtomicMeasure atoms(a.group());
    for (const Measure* m : {&a, &b})
        for (std::size_t i = 0; i < m->atoms().size(); ++i)
            atoms.add(GPoint(m->atoms().point(i)), m->atoms().mass(i));
    std::optional<GridDensity> d;
    if (a.density() && b.density()) {
        if (a.density()->cloud_ptr() != b.density()->cloud_ptr())
            throw ShapeMismatch("densities must share a cloud to be added");
        std::vector<double> v(a.density()->density().begin(), a.density()->density().end());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] += b.density()->density(i);
        d.emplace(a.density()->cloud_ptr(), std::move(v));
    } else if (a.density()) {
        d = *a.density();
    } else if (b.density()) {
        d = *b.density();
    }
    return Measure(std::move(atoms), std::move(d));
}

double ball_mass(const Measure& mu, std::span<const double> x, double t)
{
    if (!(t >= 0.0))
        throw InvalidParams("ball radius must be nonnegative");
    const GroupSpec& g = mu.group();
    check_shape(g, x);
    double m = 0.0;
    const AtomicMeasure& a = mu.atoms();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.mass(i) > 0.0 && kernel::qdist(g, x, a.point(i)) < t)
            m += a.mass(i);
    if (const GridDensity* d = mu.density())
        for (std::size_t i : d->cloud().ball_query(x, t))
            m += d->mass(i);
    return m;
}

Measure restrict_to_ball(const Measure& mu, const GPoint& center, double radius)
{
    if (!(radius > 0.0))
        throw NonpositiveScale("restriction radius must be positive");
    const GroupSpec& g = mu.group();
    check_shape(g, center.coords());
    AtomicMeasure atoms(g);
    const AtomicMeasure& a = mu.atoms();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (kernel::qdist(g, center.coords(), a.point(i)) < radius)
            atoms.add(GPoint(a.point(i)), a.mass(i));
    std::optional<GridDensity> dens;
    if (const GridDensity* d = mu.density()) {
        std::vector<double> v(d->cloud().size(), 0.0);
        for (std::size_t i : d->cloud().ball_query(center.coords(), radius))
            v[i] = d->density(i);
        dens.emplace(d->cloud_ptr(), std::move(v));
    }
    return Measure(std::move(atoms), std::move(dens));
}

GridDensity uniform_on_ball(std::shared_ptr<const PointCloud> cloud, const GPoint& center, double radius,
                            double value)
{
    std::vector<double> v(cloud->size(), 0.0);
    for (std::size_t i : cloud->ball_query(center.coords(), radius))
        v[i] = value;
    return GridDensity(std::move(cloud), std::move(v));
}

} // namespace carnot
