#pragma once

#include <cstdint>
#include <vector>

#include "lcfl/data.hpp"
#include "lcfl/model.hpp"

namespace lcfl::trainer {

struct TrainConfig {
    double init_lr = 0.01;
    double lr_decay_per_global_iter = 0.99;  // in (0, 1]
    std::size_t batch_size = 20;             // clipped to the client sample count
    std::size_t local_epochs = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

// Mini-batch SGD on one client: local_epochs passes of seeded-shuffled
// batches with step size init_lr * decay^global_iter. The shuffle stream
// depends only on (seed, client_id, epoch counter), so scheduling cannot
// reorder randomness.
model::ParamVector local_sgd(const model::ModelSpec& spec, const model::ParamVector& w_init,
                             const data::ClientDataset& dataset, const TrainConfig& cfg,
                             std::size_t global_iter);

// Exact minimizer of the empirical squared loss from empirical second
// moments (bias included via the constant-1 feature). Rejects moment
// matrices with condition number >= 1e12.
model::ParamVector closed_form_linear(const data::ClientDataset& dataset);

struct WarmupConfig {
    std::size_t steps = 10;    // T gradient steps per client
    double step_size = 0.01;   // gamma, fixed during warm-up
    bool per_client_init = false;
    std::uint64_t seed = 0;
};

// Independent warm-up: every client takes exactly T full-batch gradient
// steps from a shared seeded init (or per-client inits when requested).
// Results are ordered by client position.
std::vector<model::ParamVector> warmup_all(const model::ModelSpec& spec,
                                           const std::vector<data::ClientDataset>& datasets,
                                           const WarmupConfig& cfg);

}  // namespace lcfl::trainer
