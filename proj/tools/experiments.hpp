#pragma once

#include "carnot/calculus.hpp"
#include "carnot/dyadic.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Randomized instances behind `carnot equiv` and the acceptance run.
namespace carnot::experiments {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t index(std::string_view column) const;
    std::vector<double> column(std::string_view name) const;
    std::vector<double> column(std::string_view name, std::size_t begin, std::size_t end) const;
};

// Linear interpolation between order statistics, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// [min / kappa, max * kappa] over the values.
Interval calibrate(std::span<const double> values, double kappa);
std::size_t count_outside(const Interval& band, std::span<const double> values);

// Uniform densities on 1 to 3 random balls of radius in [r_min, r_max] near the identity.
std::vector<double> random_bumps(const PointCloud& cloud, std::mt19937_64& rng, double r_min, double r_max);

struct ChainSetup {
    std::shared_ptr<const PointCloud> cloud;
    std::vector<DyadicFamily> families; // one per scale
};

struct ChainOptions {
    double radius = 1.5;
    double spacing = 0.2;
    double lambda = 2.0;
    int top = 1;
    std::vector<int> base_levels{-2, -1, 0};
};

ChainSetup chain_setup(const GroupSpec& g, const ChainOptions& options = {});

// Columns: trial, base_level, A1, A2, A3, r12, r23, r31, directions.
Table a_chain_trials(const ChainSetup& setup, std::size_t trials, std::uint64_t seed, double s);

// Columns: trial, base_level, B1, B2, B3, r12, r23, r31, directions.
// directions also covers the exact bounds B1 <= B3 and, for p <= 2, B2 <= B3.
Table b_chain_trials(const ChainSetup& setup, std::size_t trials, std::uint64_t seed, double alpha, double p, double q,
                     bool double_star);

struct DzeOptions {
    double radius = 2.0;
    double spacing = 0.25;
    double lambda = 2.0;
    int base = -3;
    int top = 1;
    double r = 1.0;
    double alpha = 1.0;
    double p = 2.0;
};

// Columns: trial, wolff, lower_sum, lower_ratio, band, upper_sum, upper_ratio.
Table dze_trials(const GroupSpec& g, const DzeOptions& options, std::size_t trials, std::uint64_t seed);

struct EnergyOptions {
    double radius = 2.2;
    double spacing = 0.25;
    double lambda = 2.0;
    int top = 1;
    // Two schedules of base levels sharing the coarsest entry.
    std::vector<int> schedule_a{-3, -1};
    std::vector<int> schedule_b{-2, -1};
    double r = 1.0;
    double alpha = 1.0;
    double p = 2.0;
    double q = 3.0;
    double bump_min = 0.5;
    double bump_max = 1.0;
};

// Columns: trial, continuous, discrete_a, discrete_b, ratio_a, ratio_b.
Table energy_trials(const GroupSpec& g, const EnergyOptions& options, std::size_t trials, std::uint64_t seed);

} // namespace carnot::experiments
