#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "lcfl/data.hpp"
#include "lcfl/model.hpp"

namespace lcfl::metrics {

enum class MetricKind { LossGap, ParamNorm, GradCosine, CrossLossDebug };

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& name);

// Symmetric nonnegative client-distance matrix with zero diagonal.
struct DistanceMatrix {
    std::size_t size = 0;
    MetricKind kind = MetricKind::LossGap;
    std::vector<double> entries;  // row-major size x size

    DistanceMatrix() = default;
    DistanceMatrix(std::size_t n, MetricKind k)
        : size(n), kind(k), entries(n * n, 0.0) {}

    double at(std::size_t i, std::size_t j) const { return entries[i * size + j]; }
    void set_symmetric(std::size_t i, std::size_t j, double v) {
        entries[i * size + j] = v;
        entries[j * size + i] = v;
    }
    double max_entry() const;
    // Throws unless symmetric with zero diagonal and finite nonnegative entries.
    void validate() const;
};

// One client's share of the split-and-sum exchange: the loss gap
// |L_i(w_j) - L_i(w_i)| computed entirely on client i's data.
struct HalfDistance {
    int from_client = 0;   // i
    int about_client = 0;  // j
    double value = 0.0;
};

HalfDistance half_distance(const model::ModelSpec& spec, const data::ClientDataset& dataset_i,
                           const model::ParamVector& w_i, int about_client,
                           const model::ParamVector& w_j);

// Server-side reduction: entries[i][j] = halves(i,j) + halves(j,i).
// Requires exactly one half per ordered pair.
DistanceMatrix assemble_loss_gap(std::size_t num_clients,
                                 const std::vector<HalfDistance>& halves);

// Full split-and-sum protocol run over a federation: every client evaluates
// every other client's warm-up parameters on its own data, the server sums.
DistanceMatrix loss_gap_matrix(const model::ModelSpec& spec,
                               const std::vector<data::ClientDataset>& datasets,
                               const std::vector<model::ParamVector>& params);

// Pairwise Euclidean distances between parameter vectors.
DistanceMatrix param_norm_matrix(const std::vector<model::ParamVector>& params);

struct GradCosineResult {
    DistanceMatrix matrix;                 // (1 - alpha_ij) / 2 in [0, 1]
    std::vector<int> zero_gradient_clients;  // alpha forced to 0 for these
};

// Cosine similarity of full-batch gradients at a shared reference point.
GradCosineResult grad_cosine_matrix(const model::ModelSpec& spec,
                                    const std::vector<data::ClientDataset>& datasets,
                                    const model::ParamVector& reference);

// Debug-only variant comparing different clients' losses at the same
// parameters: |L_i(w_i)-L_j(w_i)| + |L_i(w_j)-L_j(w_j)|. Kept for A/B
// inspection; it needs loss values exchanged between clients, which the
// default protocol avoids.
DistanceMatrix cross_loss_matrix(const model::ModelSpec& spec,
                                 const std::vector<data::ClientDataset>& datasets,
                                 const std::vector<model::ParamVector>& params);

// CSV export: header row of client ids, then row-major entries.
void write_matrix_csv(const DistanceMatrix& dm, std::ostream& os);

}  // namespace lcfl::metrics
