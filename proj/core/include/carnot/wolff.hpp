#pragma once

#include "carnot/measure.hpp"

#include <limits>
#include <span>
#include <vector>

namespace carnot {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct WolffParams {
    double alpha = 1.0;
    double p = 2.0;
    double R = 1.0; // kInfinity for the untruncated potential
    double quad_ratio = 0.75;
    // Below resolution_factor times the local sample resolution the density is treated as constant.
    double resolution_factor = 2.0;
};

// Throws InvalidParams unless alpha > 0, p > 1, R > 0, 0 < quad_ratio < 1.
void validate(const WolffParams& params);

// W^R_{alpha,p} mu(x) = int_0^R [mu(B_t(x)) / t^{M - alpha p}]^{1/(p-1)} dt / t.
// Purely atomic measures are integrated exactly; densities use geometric nodes
// t_k = R q^k with log-log interpolation of mu(B_t) between nodes.
double wolff(const Measure& mu, std::span<const double> x, const WolffParams& params);
inline double wolff(const Measure& mu, const GPoint& x, const WolffParams& params)
{
    return wolff(mu, x.coords(), params);
}

// The same integrand over [lo, hi]; params.R is ignored.
double wolff_band(const Measure& mu, std::span<const double> x, const WolffParams& params, double lo, double hi);

std::vector<double> wolff_field(const Measure& mu, std::span<const GPoint> points, const WolffParams& params);
std::vector<double> wolff_field(const Measure& mu, const PointCloud& points, const WolffParams& params);
// Evaluation at a subset of cloud points.
std::vector<double> wolff_field(const Measure& mu, const PointCloud& points, std::span<const std::size_t> subset,
                                const WolffParams& params);

// I_alpha mu(x) = int rho(x, y)^{alpha - M} dmu(y), excluding the cell containing x for densities.
double riesz(const Measure& mu, std::span<const double> x, double alpha);
inline double riesz(const Measure& mu, const GPoint& x, double alpha) { return riesz(mu, x.coords(), alpha); }
std::vector<double> riesz_field(const Measure& mu, const PointCloud& points, double alpha);

// Closed form of W^R for a single atom of mass m at distance d > 0 (R may be infinite).
double wolff_single_atom(int M, double mass, double d, double alpha, double p, double R);

} // namespace carnot
