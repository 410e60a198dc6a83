#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace carnot {

using Rational = boost::rational<std::int64_t>;

// Basis vector X_{layer,index}; both 1-based.
struct BasisRef {
    int layer = 1;
    int index = 1;
    friend bool operator==(const BasisRef&, const BasisRef&) = default;
};

// [X_lhs, X_rhs] = sum of coeff * X_basis over terms.
struct BracketRule {
    BasisRef lhs;
    BasisRef rhs;
    std::vector<std::pair<BasisRef, Rational>> terms;
};

struct StrataSpec {
    std::vector<int> layer_dims;
    std::vector<BracketRule> brackets;
    std::string name;
};

namespace detail {
struct GroupImpl;
}

// Validated Carnot group of step r <= 4. Cheap to copy, immutable.
class GroupSpec {
public:
    int N() const;
    int M() const;
    int step() const;
    const std::string& name() const;
    const StrataSpec& strata() const;

    // Layer (1-based) of each flat coordinate.
    std::span<const int> weights() const;
    std::span<const int> layer_dims() const;
    // Flat offset of the first coordinate of a 1-based layer.
    int offset(int layer) const;
    int flat_index(BasisRef b) const;

    // Structure constant c such that [X_i, X_j] has coefficient c on X_k (flat indices).
    Rational structure_constant(int i, int j, int k) const;

    // Haar volume of the unit ball {|x| < 1}, computed once per group.
    double unit_ball_volume() const;

    bool same_as(const GroupSpec& other) const;

    const detail::GroupImpl& impl() const { return *impl_; }

private:
    friend GroupSpec make_group(StrataSpec spec);
    explicit GroupSpec(std::shared_ptr<const detail::GroupImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const detail::GroupImpl> impl_;
};

class GPoint {
public:
    GPoint() = default;
    explicit GPoint(std::vector<double> coords) : c_(std::move(coords)) {}
    GPoint(std::initializer_list<double> coords) : c_(coords) {}
    explicit GPoint(std::span<const double> coords) : c_(coords.begin(), coords.end()) {}

    std::size_t size() const { return c_.size(); }
    double operator[](std::size_t i) const { return c_[i]; }
    double& operator[](std::size_t i) { return c_[i]; }
    std::span<const double> coords() const { return c_; }
    std::span<double> coords() { return c_; }
    const std::vector<double>& vec() const { return c_; }

    friend bool operator==(const GPoint&, const GPoint&) = default;

private:
    std::vector<double> c_;
};

GroupSpec make_group(StrataSpec spec);

GroupSpec euclidean(int n);
GroupSpec heisenberg();
GroupSpec engel();
// Accepts euclidean(n), euclidean<n>, R<n>, E<n>, heisenberg, H1, engel.
GroupSpec builtin(std::string_view name);

GPoint identity(const GroupSpec& g);
GPoint multiply(const GroupSpec& g, const GPoint& a, const GPoint& b);
GPoint inverse(const GroupSpec& g, const GPoint& a);
GPoint dilate(const GroupSpec& g, double t, const GPoint& a);
double hnorm(const GroupSpec& g, const GPoint& a);
double qdist(const GroupSpec& g, const GPoint& a, const GPoint& b);

// Exact reference product in rational arithmetic.
std::vector<Rational> multiply_exact(const GroupSpec& g, std::span<const Rational> a,
                                     std::span<const Rational> b);

void check_shape(const GroupSpec& g, std::span<const double> a);

// Unchecked span kernels used in hot loops. Output may not alias inputs.
namespace kernel {
void multiply(const GroupSpec& g, std::span<const double> a, std::span<const double> b,
              std::span<double> out);
void dilate(const GroupSpec& g, double t, std::span<const double> a, std::span<double> out);
double hnorm(const GroupSpec& g, std::span<const double> a);
double qdist(const GroupSpec& g, std::span<const double> a, std::span<const double> b);
// Bound on |(a z)_k - a_k| over all z with |z_j| <= radius_j.
void translate_bound(const GroupSpec& g, std::span<const double> a,
                     std::span<const double> radius, std::span<double> out);
} // namespace kernel

struct AxiomReport {
    std::size_t samples = 0;
    // Largest coordinate error, relative to max(1, |coordinate|).
    double associativity = 0.0;
    double identity = 0.0;
    double inverse = 0.0;
    double dilation = 0.0;      // delta_t(ab) against delta_t(a) delta_t(b)
    double homogeneity = 0.0;   // |delta_t x| against t |x|, relative
    double worst() const;
    bool ok(double tol) const { return worst() <= tol; }
};

// Group law, dilation and norm identities on random samples with coordinates in [-1, 1]
// and dilation factors in [1/4, 4].
AxiomReport check_axioms(const GroupSpec& g, std::size_t samples, std::uint64_t seed);

// Largest observed ratio rho(a,c) / (rho(a,b) + rho(b,c)) over random triples.
double quasi_triangle_constant(const GroupSpec& g, std::size_t samples, std::uint64_t seed);

struct BallVolumeFit {
    std::vector<double> radii;
    std::vector<double> volumes;
    double slope = 0.0;
    double log_constant = 0.0;
};

// Monte Carlo Haar volume of {rho(e, .) < R}, sampled in the box |x_ij| <= R^i.
BallVolumeFit ball_volume_fit(const GroupSpec& g, std::span<const double> radii,
                              std::size_t samples_per_radius, std::uint64_t seed);

// Least-squares slope and intercept of log y against log x.
std::pair<double, double> loglog_fit(std::span<const double> x, std::span<const double> y);

} // namespace carnot
