#pragma once

#include "carnot/cloud.hpp"
#include "carnot/measure.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace carnot {

struct CapacityParams {
    double alpha = 1.0;
    double s = 2.0;
    double s_conjugate() const { return s / (s - 1.0); }
};

// Throws InvalidParams unless alpha > 0 and s > 1.
void validate(const CapacityParams& params);

// Candidate support atoms of a compact set together with an enclosing ball.
class CompactSet {
public:
    // Throws InvalidParams when empty, when radius <= 0 or when a point lies outside the ball.
    CompactSet(GroupSpec g, std::vector<GPoint> points, GPoint center, double radius);

    const GroupSpec& group() const { return g_; }
    std::size_t size() const { return points_.size(); }
    const GPoint& point(std::size_t i) const { return points_[i]; }
    const std::vector<GPoint>& points() const { return points_; }
    const GPoint& center() const { return center_; }
    double radius() const { return radius_; }

    // Image under x -> c * delta_t(c^{-1} x) with c the ball center.
    CompactSet dilated(double t) const;
    // Points of both sets; the ball is the smallest one about this set's center containing both.
    CompactSet united(const CompactSet& other) const;

private:
    GroupSpec g_;
    std::vector<GPoint> points_;
    GPoint center_;
    double radius_;
};

enum class Degeneracy { identically_zero, nondegenerate };
enum class Removability { removable_points, non_removable_points };

std::string_view to_string(Degeneracy d);
std::string_view to_string(Removability r);

// identically_zero iff alpha s >= M.
Degeneracy degeneracy_verdict(const CapacityParams& params, int M);

// Point sets are removable iff p q / (q - p + 1) <= M. Throws InvalidExponents unless q > p - 1 > 0 and p < M.
Removability removability_verdict(double p, double q, int M);

struct CapacityCloudOptions {
    double spacing = 0.25;      // lattice spacing of the core, in units of the set radius
    double core_factor = 2.0;   // core lattice radius / set radius
    double domain_factor = 8.0; // quadrature domain radius / set radius
    LatticeKind kind = LatticeKind::graded;
};

// Core lattice about the set center plus dilated shells, scaled with the set radius so that
// dilating the set dilates the quadrature exactly.
PointCloud capacity_cloud(const CompactSet& E, const CapacityCloudOptions& options = {});

struct CapacityOptions {
    std::size_t max_iter = 500;
    double tol = 1e-8;          // relative objective change that stops the ascent
    bool include_tail = true;   // analytic tail beyond the cloud radius
    std::optional<std::vector<double>> initial; // warm start, one weight per atom
};

struct CapacityResult {
    double value = 0.0;           // (mu(E) / ||I_alpha mu||_{s'})^s at the best iterate
    std::vector<double> weights;  // best iterate, sum 1
    AtomicMeasure witness;        // value * weights, the normalized extremal candidate
    std::size_t iterations = 0;
    bool converged = false;       // false when the iteration cap was hit
    std::vector<double> trace;    // accepted objective values, nondecreasing
    double tail_fraction = 0.0;   // share of ||I_alpha mu||^{s'} from the analytic tail

    explicit CapacityResult(GroupSpec g) : witness(std::move(g)) {}
};

// Multiplicative-update ascent on the dual objective over atom weights on E.
// Throws DegenerateParams when alpha s >= M.
CapacityResult capacity_lower(const CompactSet& E, const CapacityParams& params, const PointCloud& cloud,
                              const CapacityOptions& options = {});

// (sum w / ||I_alpha mu_w||_{s'})^s for fixed weights; with include_tail = false the norm is
// restricted to the cloud, which is what a finite domain sees in the degenerate regime.
double dual_objective(const CompactSet& E, std::span<const double> weights, const CapacityParams& params,
                      const PointCloud& cloud, bool include_tail = true);

struct ExtremalReport {
    std::vector<double> values; // I_p[(I_p mu)^{(q-p+1)/(p-1)}] at each atom
    double max_value = 0.0;
    bool within = true;         // max_value <= 1 + tol
};

// Riesz form of the extremal inequality with alpha = p and s = q / (q - p + 1).
ExtremalReport extremal_inequality_check(const AtomicMeasure& mu, double p, double q, double tol,
                                         const PointCloud& cloud, bool include_tail = true);

} // namespace carnot
