#pragma once

#include "carnot/cloud.hpp"
#include "carnot/group.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace carnot {

class AtomicMeasure {
public:
    explicit AtomicMeasure(GroupSpec g) : g_(std::move(g)) {}
    AtomicMeasure(GroupSpec g, const std::vector<GPoint>& atoms, std::vector<double> masses);

    void add(const GPoint& atom, double mass);

    const GroupSpec& group() const { return g_; }
    std::size_t size() const { return masses_.size(); }
    std::span<const double> point(std::size_t i) const
    {
        return {coords_.data() + i * static_cast<std::size_t>(g_.N()), static_cast<std::size_t>(g_.N())};
    }
    double mass(std::size_t i) const { return masses_[i]; }
    std::span<const double> masses() const { return masses_; }
    double total_mass() const;

private:
    GroupSpec g_;
    std::vector<double> coords_;
    std::vector<double> masses_;
};

// Absolutely continuous measure density * dx carried by a cloud.
class GridDensity {
public:
    GridDensity(std::shared_ptr<const PointCloud> cloud, std::vector<double> density);

    const PointCloud& cloud() const { return *cloud_; }
    std::shared_ptr<const PointCloud> cloud_ptr() const { return cloud_; }
    const GroupSpec& group() const { return cloud_->group(); }
    std::span<const double> density() const { return density_; }
    double density(std::size_t i) const { return density_[i]; }
    double mass(std::size_t i) const { return density_[i] * cloud_->volume(i); }
    double total_mass() const;

private:
    std::shared_ptr<const PointCloud> cloud_;
    std::vector<double> density_;
};

// Atomic part plus optional density part.
class Measure {
public:
    explicit Measure(GroupSpec g) : atoms_(std::move(g)) {}
    Measure(AtomicMeasure atoms) : atoms_(std::move(atoms)) {}
    Measure(GridDensity density) : atoms_(density.group()), density_(std::move(density)) {}
    Measure(AtomicMeasure atoms, std::optional<GridDensity> density);

    const GroupSpec& group() const { return atoms_.group(); }
    const AtomicMeasure& atoms() const { return atoms_; }
    const GridDensity* density() const { return density_ ? &*density_ : nullptr; }
    bool purely_atomic() const { return !density_; }

    double total_mass() const;
    bool is_zero() const { return !(total_mass() > 0.0); }

    Measure scaled(double c) const;
    // Densities must share the same cloud.
    friend Measure operator+(const Measure& a, const Measure& b);

private:
    AtomicMeasure atoms_;
    std::optional<GridDensity> density_;
};

// mu({y : rho(x, y) < t}).
double ball_mass(const Measure& mu, std::span<const double> x, double t);
inline double ball_mass(const Measure& mu, const GPoint& x, double t) { return ball_mass(mu, x.coords(), t); }

// Atoms and density outside the open ball are dropped.
Measure restrict_to_ball(const Measure& mu, const GPoint& center, double radius);

// Uniform density on the open ball B_radius(center) carried by the cloud.
GridDensity uniform_on_ball(std::shared_ptr<const PointCloud> cloud, const GPoint& center, double radius,
                            double value = 1.0);

} // namespace carnot
