#include "lcfl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lcfl/errors.hpp"

namespace lcfl::metrics {

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::LossGap: return "loss-gap";
        case MetricKind::ParamNorm: return "param-norm";
        case MetricKind::GradCosine: return "grad-cosine";
        case MetricKind::CrossLossDebug: return "cross-loss-debug";
    }
    return "?";
}

MetricKind metric_kind_from_string(const std::string& name) {
    if (name == "loss-gap") return MetricKind::LossGap;
    if (name == "param-norm") return MetricKind::ParamNorm;
    if (name == "grad-cosine") return MetricKind::GradCosine;
    if (name == "cross-loss-debug") return MetricKind::CrossLossDebug;
    throw ParameterError("unknown metric kind: " + name);
}

double DistanceMatrix::max_entry() const {
    double m = 0.0;
    for (double v : entries) m = std::max(m, v);
    return m;
}

void DistanceMatrix::validate() const {
    if (entries.size() != size * size) throw ShapeError("distance matrix storage mismatch");
    for (std::size_t i = 0; i < size; ++i) {
        if (at(i, i) != 0.0) throw ShapeError("distance matrix diagonal must be zero");
        for (std::size_t j = 0; j < size; ++j) {
            const double v = at(i, j);
            if (!std::isfinite(v) || v < 0.0)
                throw ShapeError("distance matrix entries must be finite and nonnegative");
            if (v != at(j, i)) throw ShapeError("distance matrix must be symmetric");
        }
    }
}

HalfDistance half_distance(const model::ModelSpec& spec, const data::ClientDataset& dataset_i,
                           const model::ParamVector& w_i, int about_client,
                           const model::ParamVector& w_j) {
    const double own = model::loss(spec, w_i, dataset_i);
    const double other = model::loss(spec, w_j, dataset_i);
    if (!std::isfinite(own) || !std::isfinite(other))
        throw DivergenceError("non-finite loss while computing half distance", 0,
                              dataset_i.client_id);
    return {dataset_i.client_id, about_client, std::abs(other - own)};
}

DistanceMatrix assemble_loss_gap(std::size_t num_clients,
                                 const std::vector<HalfDistance>& halves) {
    const std::size_t n = num_clients;
    std::vector<char> seen(n * n, 0);
    std::vector<double> value(n * n, 0.0);
    for (const auto& h : halves) {
        if (h.from_client < 0 || h.about_client < 0 ||
            static_cast<std::size_t>(h.from_client) >= n ||
            static_cast<std::size_t>(h.about_client) >= n)
            throw IncompleteProtocolError("half distance references unknown client");
        if (h.from_client == h.about_client)
            throw IncompleteProtocolError("half distance for a client about itself");
        const auto idx = static_cast<std::size_t>(h.from_client) * n +
                         static_cast<std::size_t>(h.about_client);
        if (seen[idx])
            throw IncompleteProtocolError("duplicate half distance for pair (" +
                                          std::to_string(h.from_client) + "," +
                                          std::to_string(h.about_client) + ")");
        seen[idx] = 1;
        value[idx] = h.value;
    }
    std::string missing;
    std::size_t missing_count = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || seen[i * n + j]) continue;
            ++missing_count;
            if (missing_count <= 8)
                missing += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
    if (missing_count > 0)
        throw IncompleteProtocolError("missing " + std::to_string(missing_count) +
                                      " half distances:" + missing +
                                      (missing_count > 8 ? " ..." : ""));

    DistanceMatrix dm(n, MetricKind::LossGap);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dm.set_symmetric(i, j, value[i * n + j] + value[j * n + i]);
    return dm;
}

DistanceMatrix loss_gap_matrix(const model::ModelSpec& spec,
                               const std::vector<data::ClientDataset>& datasets,
                               const std::vector<model::ParamVector>& params) {
    if (datasets.size() != params.size())
        throw ShapeError("one parameter vector per client required");
    const std::size_t n = datasets.size();
    std::vector<HalfDistance> halves;
    halves.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            auto h = half_distance(spec, datasets[i], params[i], static_cast<int>(j), params[j]);
            h.from_client = static_cast<int>(i);  // position, not client_id, keys the matrix
            halves.push_back(h);
        }
    return assemble_loss_gap(n, halves);
}

DistanceMatrix param_norm_matrix(const std::vector<model::ParamVector>& params) {
    const std::size_t n = params.size();
    DistanceMatrix dm(n, MetricKind::ParamNorm);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dm.set_symmetric(i, j, model::l2_distance(params[i], params[j]));
    return dm;
}

GradCosineResult grad_cosine_matrix(const model::ModelSpec& spec,
                                    const std::vector<data::ClientDataset>& datasets,
                                    const model::ParamVector& reference) {
    const std::size_t n = datasets.size();
    std::vector<model::ParamVector> grads;
    grads.reserve(n);
    std::vector<double> norms(n, 0.0);
    GradCosineResult result;
    for (std::size_t i = 0; i < n; ++i) {
        grads.push_back(model::gradient(spec, reference, datasets[i]));
        norms[i] = model::l2_norm(grads[i]);
        if (norms[i] < 1e-12) result.zero_gradient_clients.push_back(static_cast<int>(i));
    }
    result.matrix = DistanceMatrix(n, MetricKind::GradCosine);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double alpha = 0.0;  // convention for zero-gradient clients
            if (norms[i] >= 1e-12 && norms[j] >= 1e-12) {
                double dot = 0.0;
                for (std::size_t c = 0; c < grads[i].values.size(); ++c)
                    dot += grads[i].values[c] * grads[j].values[c];
                alpha = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
            }
            result.matrix.set_symmetric(i, j, (1.0 - alpha) / 2.0);
        }
    return result;
}

DistanceMatrix cross_loss_matrix(const model::ModelSpec& spec,
                                 const std::vector<data::ClientDataset>& datasets,
                                 const std::vector<model::ParamVector>& params) {
    if (datasets.size() != params.size())
        throw ShapeError("one parameter vector per client required");
    const std::size_t n = datasets.size();
    // L[i][j] = loss of client i's data under client j's parameters
    std::vector<double> losses(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            losses[i * n + j] = model::loss(spec, params[j], datasets[i]);
    DistanceMatrix dm(n, MetricKind::CrossLossDebug);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = std::abs(losses[i * n + i] - losses[j * n + i]) +
                             std::abs(losses[i * n + j] - losses[j * n + j]);
            dm.set_symmetric(i, j, v);
        }
    return dm;
}

void write_matrix_csv(const DistanceMatrix& dm, std::ostream& os) {
    for (std::size_t j = 0; j < dm.size; ++j) os << (j ? "," : "") << "client_" << j;
    os << "\n";
    os.precision(17);
    for (std::size_t i = 0; i < dm.size; ++i) {
        for (std::size_t j = 0; j < dm.size; ++j) os << (j ? "," : "") << dm.at(i, j);
        os << "\n";
    }
}

}  // namespace lcfl::metrics
