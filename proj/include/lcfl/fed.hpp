#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lcfl/clustering.hpp"
#include "lcfl/data.hpp"
#include "lcfl/metrics.hpp"
#include "lcfl/model.hpp"
#include "lcfl/trainer.hpp"

namespace lcfl::fed {

struct FedConfig {
    double participation_rate = 1.0;  // (0, 1]; ceil(rate * group size) clients per round
    std::size_t global_iterations = 1;
    trainer::TrainConfig train;
    std::uint64_t seed = 0;
    bool weighted_accuracy_mean = false;  // weight client accuracies by test size

    void validate() const;
};

struct RunRecord {
    std::size_t iteration = 0;  // 1-based
    double accuracy_mean = 0.0;  // NaN for regression models
    double train_loss_mean = 0.0;
    std::vector<std::size_t> cluster_sizes;
    double wall_clock_sec = 0.0;  // in-memory only, never serialized
};

struct RunLog {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
    std::vector<std::string> events;
};

// A client's seeded 80/20 (by default) train/test partition.
struct ClientSplit {
    data::ClientDataset train;
    data::ClientDataset test;
};

std::vector<ClientSplit> split_federation(const std::vector<data::ClientDataset>& datasets,
                                          double test_fraction, std::uint64_t seed);

// Seed for an independent per-group RNG stream; depends only on the sorted
// member set, so cluster processing order cannot change results.
std::uint64_t group_seed(std::uint64_t base, std::span<const int> sorted_members);

struct FedAvgResult {
    model::ParamVector model;
    RunLog log;
};

// Plain federated averaging over one client group: sampled participants run
// local SGD from the shared model, the server keeps the sample-count-weighted
// average. Accuracy/loss are evaluated over every group member each round.
FedAvgResult fedavg(const model::ModelSpec& spec, const std::vector<ClientSplit>& group,
                    const model::ParamVector& w_init, const FedConfig& cfg);

struct KMedoidsParams {
    std::size_t k = 2;
    std::size_t restarts = 5;
    std::size_t max_iters = 100;
};
struct AgglomerativeParams {
    clustering::Linkage linkage = clustering::Linkage::Average;
    clustering::AgglomerativeStop stop;
};
struct DbscanParams {
    double eps = -1.0;  // <= 0 selects the lower-quartile-median default
    std::size_t min_pts = 2;
};
using ClusterMethod = std::variant<KMedoidsParams, AgglomerativeParams, DbscanParams>;

struct LcflConfig {
    trainer::WarmupConfig warmup;
    metrics::MetricKind metric = metrics::MetricKind::LossGap;
    ClusterMethod clusterer = KMedoidsParams{};
};

struct LcflResult {
    clustering::ClusterAssignment assignment;
    std::vector<model::ParamVector> cluster_models;
    RunLog log;
    metrics::DistanceMatrix matrix;
};

// Warm-up -> pairwise metric -> clustering -> independent FedAvg per cluster,
// each cluster starting from the weighted average of its members' warm-up
// parameters. DBSCAN noise clients train as singleton clusters.
LcflResult lcfl_pipeline(const model::ModelSpec& spec, const std::vector<ClientSplit>& clients,
                         const LcflConfig& alg_cfg, const FedConfig& fed_cfg);

struct IfcaResult {
    clustering::ClusterAssignment assignment;
    std::vector<model::ParamVector> models;
    RunLog log;
};

// Iterative clustering: every participant picks the model with minimal
// train loss (ties to the lowest index), trains it, and the server averages
// per chosen cluster. Clusters without participants carry their model over.
IfcaResult ifca(const model::ModelSpec& spec, const std::vector<ClientSplit>& clients,
                std::size_t k, const std::vector<model::ParamVector>& w_inits,
                const FedConfig& cfg);

struct LocalOnlyResult {
    std::vector<model::ParamVector> models;
    RunLog log;
};

// No communication: every client keeps training alone; the log mirrors the
// federated schedule (one record per equivalent global iteration).
LocalOnlyResult local_only(const model::ModelSpec& spec,
                           const std::vector<ClientSplit>& clients, const FedConfig& cfg);

// Serialize raw per-iteration records with the frozen schema
// iteration,algorithm,seed,accuracy_mean_over_clients,train_loss_mean,num_clusters.
void append_runlog_csv(const RunLog& log, std::ostream& os, bool header);

}  // namespace lcfl::fed
