#pragma once

#include "carnot/cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace carnot {

struct CubeRef {
    int level = 0;
    std::size_t index = 0;
    friend bool operator==(const CubeRef&, const CubeRef&) = default;
};

struct Cube {
    std::size_t center = 0;                  // sample index of x_j^k
    std::int64_t parent = -1;                // index at level k+1, -1 on the top level
    std::vector<std::size_t> children;       // indices at level k-1
    std::vector<std::size_t> members;        // ascending sample indices
};

struct DyadicOptions {
    double lambda = 8.0;
    // Net separation at level k is separation * lambda^k; 0 selects lambda / 2.
    double separation = 0.0;
    // Level-k net centers are drawn from samples whose sublattice scale is at least
    // S_k / candidate_ratio, with S_k the level separation. 0 admits every sample.
    double candidate_ratio = 8.0;
};

enum class VolumeModel {
    empirical, // sum of sample volumes in Q
    nominal,   // |B_1| * l(Q)^M
};

struct SandwichReport {
    bool partition = true;
    bool nesting = true;
    bool inner = true;
    bool outer = true;
    std::size_t inner_violations = 0;
    std::size_t outer_violations = 0;
    // max over cubes of max_{y in Q} rho(x_Q, y) / lambda^{k+1}
    double outer_fill = 0.0;
    bool ok() const { return partition && nesting && inner && outer; }
};

class DyadicFamily {
public:
    const PointCloud& cloud() const { return *cloud_; }
    std::shared_ptr<const PointCloud> cloud_ptr() const { return cloud_; }
    int base_level() const { return m_; }
    int top_level() const { return k_top_; }
    double lambda() const { return lambda_; }
    double separation() const { return sep_; }
    double side_length(int level) const;

    std::span<const Cube> level(int k) const;
    const Cube& cube(CubeRef q) const;
    std::size_t cube_count() const;
    std::size_t cube_of(std::size_t point, int level) const;
    std::vector<CubeRef> all_cubes() const;
    // Cubes of the family contained in P, P included, finest level first.
    std::vector<CubeRef> descendants(CubeRef P) const;

    double volume(CubeRef q, VolumeModel model = VolumeModel::empirical) const;
    const SandwichReport& certificate() const { return report_; }

private:
    friend DyadicFamily build_family(std::shared_ptr<const PointCloud>, int, int, const DyadicOptions&);
    friend class FamilyAccess;
    std::shared_ptr<const PointCloud> cloud_;
    int m_ = 0;
    int k_top_ = 0;
    double lambda_ = 8.0;
    double sep_ = 4.0;
    std::vector<std::vector<Cube>> cubes_;               // [k - m]
    std::vector<std::vector<std::uint32_t>> assignment_; // [k - m][point]
    SandwichReport report_;
};

// Nested greedy nets, top level first, each level seeded with the one above.
DyadicFamily build_family(std::shared_ptr<const PointCloud> cloud, int m, int k_top,
                          const DyadicOptions& options = {});

// Recomputes partition, nesting and inner/outer ball containment against the sample.
SandwichReport certify(const DyadicFamily& family);

// Number of same-level cubes with a sample point in Q** = B_{2 lambda^{k+2}}(x_Q).
std::size_t overlap_count(const DyadicFamily& family, CubeRef q);

struct OverlapSummary {
    std::vector<std::size_t> per_level; // [k - m]
    std::size_t max = 0;
};
OverlapSummary overlap_summary(const DyadicFamily& family);

// Reassembles a family from serialized cube records and base-level assignment.
DyadicFamily assemble_family(std::shared_ptr<const PointCloud> cloud, int m, int k_top, double lambda,
                             double separation, const std::vector<std::vector<std::size_t>>& centers,
                             const std::vector<std::vector<std::int64_t>>& parents,
                             const std::vector<std::size_t>& base_assignment);

} // namespace carnot
