#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcfl/data.hpp"
#include "lcfl/random.hpp"

namespace lcfl::model {

enum class ModelKind { LinearRegression, Softmax, Mlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Describes a hypothesis set: a model family plus its dimensions. The
// optional weight_bound caps the parameter norm for the bounds machinery.
struct ModelSpec {
    ModelKind kind = ModelKind::LinearRegression;
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;             // classification only
    std::vector<std::size_t> hidden_dims;    // mlp only
    std::optional<double> weight_bound;      // norm bound B, if bounded

    void validate() const;
    bool is_classifier() const { return kind != ModelKind::LinearRegression; }
};

// Flat parameter vector. Biases are folded in: every layer consumes its
// input with a constant 1 appended, so a layer mapping a -> b stores a
// b x (a+1) row-major block.
struct ParamVector {
    std::vector<double> values;
    ModelKind kind = ModelKind::LinearRegression;
    std::vector<std::size_t> dims;  // io chain: [input_dim, hidden..., output]

    std::size_t size() const { return values.size(); }
    bool all_finite() const;
};

// The io chain implied by a spec ([input_dim, hidden..., output]).
std::vector<std::size_t> layer_dims(const ModelSpec& spec);
std::size_t param_count(const ModelSpec& spec);

ParamVector zero_params(const ModelSpec& spec);
// Per-layer N(0, 1/sqrt(fan_in)) weights, zero biases.
ParamVector init_params(const ModelSpec& spec, Rng& rng);

void check_shape(const ModelSpec& spec, const ParamVector& w);

// Regression: length-1 vector holding w^T [x;1]. Classification: length-K
// probability vector (entries >= 0, sum 1).
std::vector<double> predict(const ModelSpec& spec, const ParamVector& w,
                            std::span<const double> x);

// Mean loss over the dataset (or over `indices` when nonempty): squared
// error for regression, cross-entropy with probabilities clamped to
// [1e-12, 1] for classifiers.
double loss(const ModelSpec& spec, const ParamVector& w, const data::ClientDataset& dataset);
double loss(const ModelSpec& spec, const ParamVector& w, const data::ClientDataset& dataset,
            std::span<const std::size_t> indices);

// Gradient of the mean loss over `indices` (all samples when empty).
ParamVector gradient(const ModelSpec& spec, const ParamVector& w,
                     const data::ClientDataset& dataset);
ParamVector gradient(const ModelSpec& spec, const ParamVector& w,
                     const data::ClientDataset& dataset, std::span<const std::size_t> indices);

// sum_i sample_weights[i] * grad of sample i's loss; one weight per sample.
ParamVector gradient_weighted(const ModelSpec& spec, const ParamVector& w,
                              const data::ClientDataset& dataset,
                              std::span<const double> sample_weights);

// Fraction of samples whose argmax prediction matches the label; argmax
// ties resolve to the lowest class index. Classifiers only.
double accuracy(const ModelSpec& spec, const ParamVector& w, const data::ClientDataset& dataset);

// In-place parameter arithmetic used by aggregation and optimizers.
void add_scaled(ParamVector& w, const ParamVector& delta, double scale);
ParamVector weighted_average(const std::vector<ParamVector>& params,
                             const std::vector<double>& weights);

double l2_norm(const ParamVector& w);
double l2_distance(const ParamVector& a, const ParamVector& b);

}  // namespace lcfl::model
