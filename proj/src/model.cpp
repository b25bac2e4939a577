#include "lcfl/model.hpp"

#include <algorithm>
#include <cmath>

#include "lcfl/errors.hpp"

namespace lcfl::model {

namespace {

constexpr double kProbClamp = 1e-12;

// Offset of layer l's weight block inside the flat parameter vector.
std::size_t layer_offset(const std::vector<std::size_t>& dims, std::size_t layer) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) off += (dims[l] + 1) * dims[l + 1];
    return off;
}

void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

// z = W [x;1] for one layer block.
void affine(const double* w, std::span<const double> x, std::size_t out_dim,
            std::vector<double>& z) {
    const std::size_t in_dim = x.size();
    z.assign(out_dim, 0.0);
    for (std::size_t o = 0; o < out_dim; ++o) {
        const double* row = w + o * (in_dim + 1);
        double acc = row[in_dim];  // bias column
        for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * x[i];
        z[o] = acc;
    }
}

struct MlpTrace {
    std::vector<std::vector<double>> activations;  // a_0 = x, tanh hiddens
    std::vector<double> probs;                     // softmax output
};

MlpTrace mlp_forward(const ModelSpec& spec, const ParamVector& w, std::span<const double> x) {
    const auto& dims = w.dims;
    MlpTrace trace;
    trace.activations.emplace_back(x.begin(), x.end());
    std::vector<double> z;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double* block = w.values.data() + layer_offset(dims, l);
        affine(block, trace.activations.back(), dims[l + 1], z);
        if (l + 2 < dims.size()) {
            for (double& v : z) v = std::tanh(v);
            trace.activations.push_back(z);
        } else {
            softmax_inplace(z);
            trace.probs = z;
        }
    }
    (void)spec;
    return trace;
}

int checked_label(const ModelSpec& spec, const data::ClientDataset& ds, std::size_t i) {
    const int y = ds.label_class(i);
    if (y < 0 || static_cast<std::size_t>(y) >= spec.num_classes)
        throw ShapeError("class label " + std::to_string(y) + " outside [0, " +
                         std::to_string(spec.num_classes) + ")");
    return y;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::LinearRegression: return "linear-regression";
        case ModelKind::Softmax: return "softmax";
        case ModelKind::Mlp: return "mlp";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "linear-regression") return ModelKind::LinearRegression;
    if (name == "softmax") return ModelKind::Softmax;
    if (name == "mlp") return ModelKind::Mlp;
    throw ParameterError("unknown model kind: " + name);
}

void ModelSpec::validate() const {
    if (input_dim == 0) throw ParameterError("model input_dim must be positive");
    if (kind == ModelKind::LinearRegression) {
        if (num_classes != 0)
            throw ParameterError("linear-regression model takes no num_classes");
    } else {
        if (num_classes < 2) throw ParameterError("classifier needs num_classes >= 2");
    }
    if (kind == ModelKind::Mlp) {
        if (hidden_dims.empty()) throw ParameterError("mlp needs at least one hidden layer");
        for (std::size_t h : hidden_dims)
            if (h == 0) throw ParameterError("mlp hidden dims must be positive");
    } else if (!hidden_dims.empty()) {
        throw ParameterError("hidden_dims only apply to mlp models");
    }
    if (weight_bound && *weight_bound <= 0.0)
        throw ParameterError("weight_bound must be > 0 when present");
}

bool ParamVector::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

std::vector<std::size_t> layer_dims(const ModelSpec& spec) {
    std::vector<std::size_t> dims{spec.input_dim};
    if (spec.kind == ModelKind::Mlp)
        dims.insert(dims.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
    dims.push_back(spec.kind == ModelKind::LinearRegression ? 1 : spec.num_classes);
    return dims;
}

std::size_t param_count(const ModelSpec& spec) {
    const auto dims = layer_dims(spec);
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += (dims[l] + 1) * dims[l + 1];
    return n;
}

ParamVector zero_params(const ModelSpec& spec) {
    spec.validate();
    ParamVector w;
    w.kind = spec.kind;
    w.dims = layer_dims(spec);
    w.values.assign(param_count(spec), 0.0);
    return w;
}

ParamVector init_params(const ModelSpec& spec, Rng& rng) {
    ParamVector w = zero_params(spec);
    const auto& dims = w.dims;
    std::size_t pos = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (std::size_t o = 0; o < dims[l + 1]; ++o) {
            for (std::size_t i = 0; i < dims[l]; ++i) w.values[pos + i] = scale * rng.normal();
            // bias entry stays zero
            pos += dims[l] + 1;
        }
    }
    return w;
}

void check_shape(const ModelSpec& spec, const ParamVector& w) {
    if (w.kind != spec.kind || w.dims != layer_dims(spec) ||
        w.values.size() != param_count(spec))
        throw ShapeError("parameter vector does not match model spec");
}

std::vector<double> predict(const ModelSpec& spec, const ParamVector& w,
                            std::span<const double> x) {
    check_shape(spec, w);
    if (x.size() != spec.input_dim)
        throw ShapeError("feature vector length " + std::to_string(x.size()) +
                         " != input_dim " + std::to_string(spec.input_dim));
    switch (spec.kind) {
        case ModelKind::LinearRegression: {
            std::vector<double> z;
            affine(w.values.data(), x, 1, z);
            return z;
        }
        case ModelKind::Softmax: {
            std::vector<double> z;
            affine(w.values.data(), x, spec.num_classes, z);
            softmax_inplace(z);
            return z;
        }
        case ModelKind::Mlp:
            return mlp_forward(spec, w, x).probs;
    }
    throw ParameterError("unreachable model kind");
}

double loss(const ModelSpec& spec, const ParamVector& w, const data::ClientDataset& dataset) {
    const auto idx = all_indices(dataset.num_samples);
    return loss(spec, w, dataset, idx);
}

double loss(const ModelSpec& spec, const ParamVector& w, const data::ClientDataset& dataset,
            std::span<const std::size_t> indices) {
    check_shape(spec, w);
    if (dataset.input_dim != spec.input_dim)
        throw ShapeError("dataset input_dim does not match model spec");
    if (indices.empty()) throw EmptyInputError("loss over an empty dataset");
    double total = 0.0;
    for (std::size_t i : indices) {
        const auto x = dataset.sample(i);
        if (spec.kind == ModelKind::LinearRegression) {
            std::vector<double> z;
            affine(w.values.data(), x, 1, z);
            const double r = z[0] - dataset.labels[i];
            total += r * r;
        } else {
            const auto p = predict(spec, w, x);
            const int y = checked_label(spec, dataset, i);
            total += -std::log(std::clamp(p[static_cast<std::size_t>(y)], kProbClamp, 1.0));
        }
    }
    return total / static_cast<double>(indices.size());
}

ParamVector gradient(const ModelSpec& spec, const ParamVector& w,
                     const data::ClientDataset& dataset) {
    const auto idx = all_indices(dataset.num_samples);
    return gradient(spec, w, dataset, idx);
}

namespace {

// Adds scale * grad of sample i's loss into g.
void add_sample_gradient(const ModelSpec& spec, const ParamVector& w,
                         const data::ClientDataset& dataset, std::size_t i, double scale,
                         ParamVector& g) {
    const auto& dims = w.dims;
    const auto x = dataset.sample(i);
    if (spec.kind == ModelKind::LinearRegression) {
        std::vector<double> z;
        affine(w.values.data(), x, 1, z);
        const double dz = 2.0 * (z[0] - dataset.labels[i]) * scale;
        for (std::size_t c = 0; c < spec.input_dim; ++c) g.values[c] += dz * x[c];
        g.values[spec.input_dim] += dz;
    } else if (spec.kind == ModelKind::Softmax) {
        auto p = predict(spec, w, x);
        const int y = checked_label(spec, dataset, i);
        p[static_cast<std::size_t>(y)] -= 1.0;
        for (std::size_t c = 0; c < spec.num_classes; ++c) {
            double* row = g.values.data() + c * (spec.input_dim + 1);
            const double dz = p[c] * scale;
            for (std::size_t j = 0; j < spec.input_dim; ++j) row[j] += dz * x[j];
            row[spec.input_dim] += dz;
        }
    } else {
        MlpTrace trace = mlp_forward(spec, w, x);
        const int y = checked_label(spec, dataset, i);
        std::vector<double> delta = trace.probs;
        delta[static_cast<std::size_t>(y)] -= 1.0;
        for (std::size_t l = dims.size() - 1; l-- > 0;) {
            const auto& a = trace.activations[l];
            const double* wblock = w.values.data() + layer_offset(dims, l);
            double* gblock = g.values.data() + layer_offset(dims, l);
            for (std::size_t o = 0; o < dims[l + 1]; ++o) {
                const double dz = delta[o] * scale;
                double* grow = gblock + o * (dims[l] + 1);
                for (std::size_t j = 0; j < dims[l]; ++j) grow[j] += dz * a[j];
                grow[dims[l]] += dz;
            }
            if (l == 0) break;
            std::vector<double> prev(dims[l], 0.0);
            for (std::size_t j = 0; j < dims[l]; ++j) {
                double acc = 0.0;
                for (std::size_t o = 0; o < dims[l + 1]; ++o)
                    acc += wblock[o * (dims[l] + 1) + j] * delta[o];
                prev[j] = acc * (1.0 - a[j] * a[j]);  // tanh'
            }
            delta = std::move(prev);
        }
    }
}

}  // namespace

ParamVector gradient(const ModelSpec& spec, const ParamVector& w,
                     const data::ClientDataset& dataset,
                     std::span<const std::size_t> indices) {
    check_shape(spec, w);
    if (dataset.input_dim != spec.input_dim)
        throw ShapeError("dataset input_dim does not match model spec");
    if (indices.empty()) throw EmptyInputError("gradient over an empty batch");

    ParamVector g = zero_params(spec);
    const double inv_m = 1.0 / static_cast<double>(indices.size());
    for (std::size_t i : indices) add_sample_gradient(spec, w, dataset, i, inv_m, g);
    return g;
}

ParamVector gradient_weighted(const ModelSpec& spec, const ParamVector& w,
                              const data::ClientDataset& dataset,
                              std::span<const double> sample_weights) {
    check_shape(spec, w);
    if (dataset.input_dim != spec.input_dim)
        throw ShapeError("dataset input_dim does not match model spec");
    if (sample_weights.size() != dataset.num_samples)
        throw ShapeError("one weight per sample required");
    ParamVector g = zero_params(spec);
    for (std::size_t i = 0; i < dataset.num_samples; ++i)
        add_sample_gradient(spec, w, dataset, i, sample_weights[i], g);
    return g;
}

double accuracy(const ModelSpec& spec, const ParamVector& w,
                const data::ClientDataset& dataset) {
    if (!spec.is_classifier())
        throw UnsupportedOperationError("accuracy is undefined for regression models");
    if (dataset.num_samples == 0) throw EmptyInputError("accuracy over an empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.num_samples; ++i) {
        const auto p = predict(spec, w, dataset.sample(i));
        std::size_t best = 0;
        for (std::size_t c = 1; c < p.size(); ++c)
            if (p[c] > p[best]) best = c;  // ties keep the lowest class
        if (static_cast<int>(best) == checked_label(spec, dataset, i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.num_samples);
}

void add_scaled(ParamVector& w, const ParamVector& delta, double scale) {
    if (w.values.size() != delta.values.size())
        throw ShapeError("parameter vectors differ in size");
    for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] += scale * delta.values[i];
}

ParamVector weighted_average(const std::vector<ParamVector>& params,
                             const std::vector<double>& weights) {
    if (params.empty() || params.size() != weights.size())
        throw ShapeError("weighted_average needs matching nonempty inputs");
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw ParameterError("weights must sum to a positive value");
    // anchor form: averaging identical vectors returns them bit-exactly
    ParamVector out = params.front();
    const auto& anchor = params.front().values;
    for (std::size_t k = 1; k < params.size(); ++k) {
        if (params[k].values.size() != out.values.size())
            throw ShapeError("parameter vectors differ in size");
        const double f = weights[k] / total;
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += f * (params[k].values[i] - anchor[i]);
    }
    return out;
}

double l2_norm(const ParamVector& w) {
    double s = 0.0;
    for (double v : w.values) s += v * v;
    return std::sqrt(s);
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
    if (a.values.size() != b.values.size())
        throw ShapeError("parameter vectors differ in size");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace lcfl::model
