#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcfl/metrics.hpp"

namespace lcfl::clustering {

// Clustering result over M clients. Noise points (DBSCAN only) carry
// label -1 and a set noise_mask bit; all other labels are contiguous ids
// in [0, num_clusters).
struct ClusterAssignment {
    std::vector<int> labels;
    std::vector<int> medoids;      // k-medoids only, one client index per cluster
    int num_clusters = 0;
    std::vector<bool> noise_mask;  // empty when the method cannot produce noise

    bool is_noise(std::size_t i) const {
        return !noise_mask.empty() && noise_mask[i];
    }
    std::vector<std::vector<int>> members() const;
};

// Total distance of every client to its cluster's medoid.
double medoid_objective(const metrics::DistanceMatrix& dm, const std::vector<int>& labels,
                        const std::vector<int>& medoids);

// PAM-style alternating k-medoids from seeded random initial medoids, best
// of `restarts` runs. Nearest-medoid ties break toward the lowest medoid
// index; cluster ids are ranked by medoid index.
ClusterAssignment k_medoids(const metrics::DistanceMatrix& dm, std::size_t k,
                            std::uint64_t seed, std::size_t max_iters = 100,
                            std::size_t restarts = 5);

enum class Linkage { Single, Complete, Average };

Linkage linkage_from_string(const std::string& name);
std::string to_string(Linkage linkage);

// Exactly one of the two stop rules must be set.
struct AgglomerativeStop {
    std::optional<std::size_t> num_clusters;
    std::optional<double> distance_threshold;
};

struct MergeStep {
    int cluster_a = 0;  // smallest member id of each side, a < b
    int cluster_b = 0;
    double distance = 0.0;
};

struct AgglomerativeResult {
    ClusterAssignment assignment;
    std::vector<MergeStep> merges;
};

// Bottom-up merging with Lance-Williams distance updates. Merge ties break
// toward the lexicographically smallest representative pair. The threshold
// rule merges while the closest pair is within the threshold.
AgglomerativeResult agglomerative(const metrics::DistanceMatrix& dm, Linkage linkage,
                                  const AgglomerativeStop& stop);

// Classical core/border/noise labeling with the distance matrix as the
// neighborhood oracle; a point's neighborhood includes itself. Scan order
// (and therefore cluster numbering) follows client ids.
ClusterAssignment dbscan(const metrics::DistanceMatrix& dm, double eps, std::size_t min_pts);

// Median of the lower quartile of off-diagonal distances; the default eps
// when a config does not pin one.
double dbscan_default_eps(const metrics::DistanceMatrix& dm);

// Chance-corrected pair-counting agreement in [-1, 1]. Noise points are
// treated as singleton clusters unless excluded.
double adjusted_rand_index(const ClusterAssignment& pred, const std::vector<int>& truth,
                           bool exclude_noise = false);

// CSV export: client_id, cluster_id, is_noise.
void write_assignment_csv(const ClusterAssignment& assignment, std::ostream& os);

}  // namespace lcfl::clustering
