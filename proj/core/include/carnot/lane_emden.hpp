#pragma once

#include "carnot/measure.hpp"
#include "carnot/wolff.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carnot {

// Threshold on the data constant below which the potential iteration stays bounded:
// ((q-p+1) / (q A max{1, 2^{p'-2}}))^{q(p'-1)} (p-1)/(q-p+1), p' = p/(p-1).
// Throws InvalidExponents unless q > p - 1 > 0.
double cond_c0(double A, double p, double q);

// A max{1, 2^{p'-2}}.
double recursion_factor(double A, double p);

// Bound A max{1, 2^{p'-2}} q / (q - p + 1) on the constants of the recursion.
double recursion_bound(double A, double p, double q);

struct RecursionResult {
    std::vector<double> c;      // c_1 .. c_n (stops early once c exceeds 1e300)
    bool bounded = false;       // sup c_k <= recursion_bound + tol
    bool fixed_point = false;   // c = A f (c^{q(p'-1)} C + 1) has a root >= c_1
    double limit = 0.0;         // least such root, +inf when there is none
};

// c_1 = A, c_k = A f (c_{k-1}^{q(p'-1)} C + 1). The limit is solved for directly since the
// sequence converges only algebraically at a double root.
RecursionResult constant_recursion(double A, double p, double q, double C, std::size_t k_max, double tol = 1e-9);

// M (p - 1) / (M - p); throws InvalidExponents unless 1 < p < M.
double liouville_threshold(int M, double p);

// Near an atom (W^{2R} delta)^q is not locally integrable: q (M - p) / (p - 1) >= M.
bool atom_source_nonintegrable(int M, double p, double q);

struct ConditionV {
    double sup_ratio = 0.0;
    std::vector<double> ratio; // per evaluation point
    std::vector<double> v;     // W^{2R}_{1,p} omega on the whole cloud
    bool analytic_divergence = false;
};

// sup over eval of W^{2R}[(W^{2R} omega)^q dx] / W^{2R} omega with v^q carried by the cloud.
// Throws ZeroMeasure when omega vanishes.
ConditionV check_condition_v(const Measure& omega, double R, double p, double q,
                             std::span<const std::size_t> eval, std::shared_ptr<const PointCloud> cloud,
                             const WolffParams& quadrature = {});

struct BallSpec {
    GPoint center;
    double radius = 1.0;
};

struct ConditionIV {
    double max_ratio = 0.0;
    std::vector<double> ratio;   // per ball, 0 for skipped balls
    std::vector<bool> skipped;   // omega(B) = 0
    std::vector<std::string> log;
};

ConditionIV check_condition_iv(const Measure& omega, double R, double p, double q, std::span<const BallSpec> balls,
                               std::shared_ptr<const PointCloud> cloud, const WolffParams& quadrature = {});

struct SolveConfig {
    double A = 1.0;
    double p = 2.0;
    double q = 2.0;
    double R = 1.0; // potentials use 2R
    std::size_t max_iter = 500;
    double tol_rel = 1e-6;
    double blowup_factor = 1e6;
    WolffParams quadrature{};
};

void validate(const SolveConfig& config);

enum class SolveVerdict { converged, diverged, max_iter };
std::string_view to_string(SolveVerdict v);

struct IterDiagnostics {
    std::vector<double> sup_norm;     // sup u^(k)
    std::vector<double> increment;    // sup (u^(k) - u^(k-1)) / u^(k)
    SolveVerdict verdict = SolveVerdict::max_iter;
    bool monotone = true;             // u^(k) >= u^(k-1) everywhere
    std::size_t monotone_violations = 0;
    std::string note;
};

struct PicardResult {
    std::vector<double> u;
    std::vector<double> w;            // W^{2R}_{1,p} omega
    IterDiagnostics diagnostics;
    double kappa = 0.0;               // recursion_bound(A, p, q)
    double max_u_over_w = 0.0;        // sup u / w where w > 0
    bool upper_bound_holds = false;   // u <= kappa w (checked on convergence)
    bool lower_bound_holds = false;   // u >= A w
};

// u^(1) = A W^{2R} omega, u^(k) = A W^{2R}((u^(k-1))^q dx + omega) on the cloud.
PicardResult picard_solve(const Measure& omega, const SolveConfig& config, std::shared_ptr<const PointCloud> cloud);

struct ThresholdResult {
    double ratio_at_unit = 0.0;  // (v)-ratio for omega as given
    double exponent = 0.0;       // (q - p + 1) / (p - 1)^2
    double c_star = 0.0;         // scale at which the ratio equals target
    double ratio_at_c_star = 0.0;
    std::size_t bisection_steps = 0;
};

// Scale c* of omega at which the (v)-ratio crosses target, bisected in log c on the
// homogeneity law ratio(c omega) = c^{(q-p+1)/(p-1)^2} ratio(omega) and confirmed by one
// recomputation at c*.
ThresholdResult condition_v_threshold(const Measure& omega, double R, double p, double q, double target,
                                      std::span<const std::size_t> eval, std::shared_ptr<const PointCloud> cloud,
                                      const WolffParams& quadrature = {});

enum class LiouvilleVerdict { blows_up, stabilizes, inconclusive };
std::string_view to_string(LiouvilleVerdict v);

struct LiouvilleConfig {
    double p = 2.0;
    double q = 2.0;
    std::vector<double> R_schedule{2, 4, 8, 16, 32, 64};
    double core_radius = 2.0;
    double spacing = 0.3;            // graded lattice spacing of the core
    std::size_t eval_points = 300;   // subsample of B_{R/2}
    double stable_tol = 0.05;
    // omega on a given cloud; defaults to density 1 on the unit ball about the identity.
    std::function<Measure(std::shared_ptr<const PointCloud>)> omega;
    WolffParams quadrature{};
};

struct LiouvilleResult {
    std::vector<double> R;
    std::vector<double> ratio;
    std::vector<std::size_t> cloud_size;
    double c0 = 0.0;
    LiouvilleVerdict verdict = LiouvilleVerdict::inconclusive;
};

LiouvilleResult liouville_probe(const GroupSpec& g, const LiouvilleConfig& config);

// Core lattice of the given radius about the identity plus dyadic shells out to outer_radius.
std::shared_ptr<const PointCloud> shell_cloud(const GroupSpec& g, double core_radius, double spacing,
                                              double outer_radius);

} // namespace carnot
