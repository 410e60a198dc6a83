#pragma once

#include "carnot/dyadic.hpp"
#include "carnot/measure.hpp"
#include "carnot/wolff.hpp"

#include <span>
#include <vector>

namespace carnot {

// Per-cube values over every level of a family, indexed [k - m][j].
using CubeValues = std::vector<std::vector<double>>;

// mu transported to the samples of the cloud: atoms and foreign density cells go to the
// nearest sample, a density on the same cloud keeps its cell masses.
std::vector<double> carrier_masses(const PointCloud& cloud, const Measure& mu);

// Sum of sample values over the members of every cube.
CubeValues cube_sums(const DyadicFamily& family, std::span<const double> sample_values);

// mu(Q**) with Q** = B_{2 lambda^{k+2}}(x_Q), from sample masses.
CubeValues double_star_masses(const DyadicFamily& family, std::span<const double> sample_masses);
// The same for the listed cubes only; other entries are zero.
CubeValues double_star_masses(const DyadicFamily& family, std::span<const double> sample_masses,
                              std::span<const CubeRef> cubes);

// num / den with 0 / 0 read as 1; 0 / x and x / 0 are returned as computed.
double safe_ratio(double num, double den);

class LambdaAssignment {
public:
    explicit LambdaAssignment(const DyadicFamily& family);
    double& operator[](CubeRef q) { return values_[static_cast<std::size_t>(q.level - m_)][q.index]; }
    double operator[](CubeRef q) const { return values_[static_cast<std::size_t>(q.level - m_)][q.index]; }
    const CubeValues& values() const { return values_; }
    int base_level() const { return m_; }

private:
    int m_;
    CubeValues values_;
};

struct AChain {
    double A1 = 0.0;
    double A2 = 0.0;
    double A3 = 0.0;
};

// sigma is given by its sample masses on the family's cloud. Throws ZeroMassCube when
// lambda_Q > 0 on a cube with sigma(Q) = 0.
AChain a_functionals(const DyadicFamily& family, std::span<const double> sigma, const LambdaAssignment& lambda,
                     double s);

struct BChain {
    double B1 = 0.0;
    double B2 = 0.0;
    double B3 = 0.0;
};

struct BOptions {
    bool double_star = false; // use mu(Q**) in place of mu(Q)
    VolumeModel volume = VolumeModel::empirical;
};

// Throws InvalidExponents unless alpha > 0, p > 1, q > p - 1.
void check_exponents(double alpha, double p, double q);

BChain b_functionals(const DyadicFamily& family, CubeRef P, std::span<const double> mu_samples, double alpha,
                     double p, double q, const BOptions& options = {});
BChain b_functionals(const DyadicFamily& family, CubeRef P, const Measure& mu, double alpha, double p, double q,
                     const BOptions& options = {});

// sup over cubes Q containing each atom of (int_Q f dmu) / mu(Q); cubes with mu(Q) = 0 are skipped.
std::vector<double> dyadic_maximal(std::span<const double> f, const AtomicMeasure& mu, const DyadicFamily& family);

struct DzeResult {
    double wolff = 0.0;       // W^r mu(x)
    double lower_sum = 0.0;   // sum over Q containing x with l(Q) <= lambda^-3 r
    double lower_ratio = 1.0; // wolff / lower_sum
    double band = 0.0;        // integral over [lambda^j r, r] with j = m - [log_lambda r]
    double upper_sum = 0.0;   // Q** sum over Q containing x with l(Q) <= r
    double upper_ratio = 1.0; // band / upper_sum
};

// Throws ScaleMismatch when the family has no cube with l(Q) <= lambda^-3 r or when its
// base level is not below [log_lambda r].
DzeResult dze_check(std::span<const double> x, const Measure& mu, const DyadicFamily& family, double r,
                    double alpha, double p, VolumeModel volume = VolumeModel::empirical,
                    const WolffParams& quadrature = {});

// sum over Q with l(Q) <= r of [mu(Q) / |Q|^{1 - alpha p / M}]^{q/(p-1)} |Q|.
double discrete_energy(const DyadicFamily& family, std::span<const double> mu_samples, double r, double alpha,
                       double p, double q, VolumeModel volume = VolumeModel::empirical);

struct EnergyResult {
    double continuous = 0.0;
    double discrete_sup = 0.0;
    double ratio = 1.0;
    std::vector<double> discrete; // per family of the schedule
};

// sum_i vol_i (W^r mu(x_i))^q over the cloud.
double continuous_energy(const Measure& mu, double r, double alpha, double p, double q, const PointCloud& cloud,
                         const WolffParams& quadrature = {});

// continuous = sum_i vol_i (W^r mu(x_i))^q over the cloud; discrete_sup = max over the schedule.
EnergyResult energy_equivalence(const Measure& mu, std::span<const DyadicFamily* const> schedule, double r,
                                double alpha, double p, double q, const PointCloud& cloud,
                                VolumeModel volume = VolumeModel::empirical, const WolffParams& quadrature = {});

// Whether int (W^r delta)^q dx is finite near a point mass: q (M - alpha p) / (p - 1) < M.
bool atom_energy_finite(int M, double alpha, double p, double q);

} // namespace carnot
