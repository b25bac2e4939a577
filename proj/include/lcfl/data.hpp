#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lcfl::data {

// One client's local data. Features are row-major num_samples x input_dim.
// Labels are regression targets or integral class indices stored as double.
struct ClientDataset {
    std::size_t num_samples = 0;
    std::size_t input_dim = 0;
    std::vector<double> features;
    std::vector<double> labels;
    int true_cluster = -1;  // ground-truth cluster id, -1 when unknown
    int client_id = 0;

    std::span<const double> sample(std::size_t i) const {
        return {features.data() + i * input_dim, input_dim};
    }
    int label_class(std::size_t i) const { return static_cast<int>(labels[i]); }
};

// A pool of labeled samples that federation generators draw from.
// grid_side > 0 marks square-image features (input_dim == grid_side^2).
struct SamplePool {
    std::size_t input_dim = 0;
    std::size_t grid_side = 0;
    std::size_t num_classes = 0;
    std::size_t size = 0;
    std::vector<double> features;  // row-major size x input_dim
    std::vector<double> labels;

    std::span<const double> sample(std::size_t i) const {
        return {features.data() + i * input_dim, input_dim};
    }
};

struct LinearFamilyParams {
    std::size_t num_clusters = 1;                     // k
    std::size_t num_clients = 2;                      // M
    std::size_t samples_per_client = 1;               // m_i
    std::size_t input_dim = 1;
    std::vector<std::vector<double>> sigma_xy;        // k cross-covariance vectors
    double noise_std = 0.0;
    std::vector<double> sigma_xx;                     // optional d x d, identity when empty
    std::uint64_t seed = 0;
};

// Gaussian linear-regression family: features ~ N(0, Sigma_XX) shared across
// clusters, labels y = beta_c^T x + noise with beta_c = Sigma_XX^{-1} Sigma_Xy(c),
// so each cluster's population cross-covariance is exactly the requested vector.
// Clients are assigned to clusters round-robin (client i -> cluster i mod k).
std::vector<ClientDataset> gen_linear_family(const LinearFamilyParams& params);

struct RotatedParams {
    std::size_t num_rotations = 4;  // k, {2,4} for grid features
    std::size_t num_clients = 2;
    std::size_t samples_per_client = 1;
    std::uint64_t seed = 0;
};

// Deals pool samples to clients (seeded shuffle, consecutive chunks, cycling)
// and rotates each client's features by its cluster rotation: grid features
// use the 90-degree index permutation, 2-D features the rotation matrix.
std::vector<ClientDataset> gen_rotated(const SamplePool& pool, const RotatedParams& params);

// Rotate square-grid features clockwise by `times` quarter turns.
std::vector<double> rotate_grid(std::span<const double> features, std::size_t side,
                                std::size_t times);

struct LabelShardParams {
    std::size_t num_classes_total = 1;
    std::size_t classes_per_client = 1;
    std::size_t num_clients = 1;
    std::size_t samples_per_client = 1;
    std::uint64_t seed = 0;
};

// Each client draws samples only from a randomly chosen class subset.
// true_cluster is the canonical id of the sorted subset (lexicographic rank
// among the distinct subsets present).
std::vector<ClientDataset> gen_label_shard(const SamplePool& pool,
                                           const LabelShardParams& params);

// IDX-format ingestion (big-endian magic 0x00000803 images / 0x00000801
// labels). Pixels are scaled to [0,1].
SamplePool load_idx(const std::string& images_path, const std::string& labels_path);

// Centers every feature at the global (cross-client) mean and scales by the
// global per-feature std where positive; constant columns end up all zero.
std::vector<ClientDataset> normalize(const std::vector<ClientDataset>& datasets);

struct TrainTestPair {
    ClientDataset train;
    ClientDataset test;
};

// Seeded-shuffle split; test gets round(fraction * m) samples clamped to
// [1, m-1]. Requires at least two samples.
TrainTestPair train_test_split(const ClientDataset& dataset, double test_fraction,
                               std::uint64_t seed);

struct TemplateTaskParams {
    std::size_t grid_side = 4;
    std::size_t num_base_patterns = 2;
    // When set, the class set is closed under 90-degree rotation: classes are
    // the four rotations of each base pattern, so a rotated federation makes a
    // single global model face contradictory labelings (the "6 vs 9" effect).
    bool closed_under_rotation = false;
    std::size_t pool_size = 100;
    double noise_std = 0.5;
    std::uint64_t seed = 0;
};

// Synthetic classification pool: one random template per class, samples are
// template + Gaussian noise.
SamplePool make_template_task(const TemplateTaskParams& params);

struct BlobTaskParams {
    std::size_t input_dim = 2;
    std::size_t num_classes = 2;
    std::size_t pool_size = 100;
    double center_scale = 3.0;
    double noise_std = 1.0;
    std::uint64_t seed = 0;
};

// Gaussian blobs, one per class; used as base pool for label sharding.
SamplePool make_blob_task(const BlobTaskParams& params);

}  // namespace lcfl::data
