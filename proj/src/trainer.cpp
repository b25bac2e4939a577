#include "lcfl/trainer.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "lcfl/errors.hpp"
#include "lcfl/random.hpp"

namespace lcfl::trainer {

void TrainConfig::validate() const {
    if (init_lr <= 0.0) throw ParameterError("init_lr must be positive");
    if (lr_decay_per_global_iter <= 0.0 || lr_decay_per_global_iter > 1.0)
        throw ParameterError("lr decay must be in (0, 1]");
    if (batch_size == 0) throw ParameterError("batch_size must be positive");
}

model::ParamVector local_sgd(const model::ModelSpec& spec, const model::ParamVector& w_init,
                             const data::ClientDataset& dataset, const TrainConfig& cfg,
                             std::size_t global_iter) {
    cfg.validate();
    if (dataset.num_samples == 0) throw EmptyInputError("local_sgd on an empty dataset");
    model::check_shape(spec, w_init);

    const double lr = cfg.init_lr * std::pow(cfg.lr_decay_per_global_iter,
                                             static_cast<double>(global_iter));
    const std::size_t batch = std::min(cfg.batch_size, dataset.num_samples);

    model::ParamVector w = w_init;
    std::vector<std::size_t> order(dataset.num_samples);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        const std::uint64_t epoch_counter = global_iter * cfg.local_epochs + epoch;
        Rng rng(seed_combine(cfg.seed, stream::kBatch,
                             static_cast<std::uint64_t>(dataset.client_id), epoch_counter));
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
            const std::size_t count = std::min(batch, order.size() - start);
            const auto g = model::gradient(spec, w, dataset,
                                           {order.data() + start, count});
            model::add_scaled(w, g, -lr);
            if (!w.all_finite())
                throw DivergenceError("non-finite parameters during local SGD", step,
                                      dataset.client_id);
        }
    }
    return w;
}

model::ParamVector closed_form_linear(const data::ClientDataset& dataset) {
    if (dataset.num_samples == 0) throw EmptyInputError("closed form on an empty dataset");
    const auto d = static_cast<Eigen::Index>(dataset.input_dim);
    const auto m = static_cast<double>(dataset.num_samples);

    // A = mean x~ x~^T, b = mean x~ y, with x~ = [x; 1]
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d + 1, d + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd xt(d + 1);
    for (std::size_t s = 0; s < dataset.num_samples; ++s) {
        const auto x = dataset.sample(s);
        for (Eigen::Index j = 0; j < d; ++j) xt(j) = x[static_cast<std::size_t>(j)];
        xt(d) = 1.0;
        a.noalias() += xt * xt.transpose();
        b.noalias() += xt * dataset.labels[s];
    }
    a /= m;
    b /= m;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 0.0 || hi / lo >= 1e12)
        throw SingularityError("moment matrix singular or ill-conditioned (cond ~ " +
                               std::to_string(lo > 0.0 ? hi / lo : INFINITY) + ")");

    const Eigen::VectorXd sol = a.ldlt().solve(b);
    model::ModelSpec spec{model::ModelKind::LinearRegression, dataset.input_dim};
    model::ParamVector w = model::zero_params(spec);
    for (Eigen::Index j = 0; j <= d; ++j) w.values[static_cast<std::size_t>(j)] = sol(j);
    return w;
}

std::vector<model::ParamVector> warmup_all(const model::ModelSpec& spec,
                                           const std::vector<data::ClientDataset>& datasets,
                                           const WarmupConfig& cfg) {
    if (datasets.empty()) throw EmptyInputError("warmup over no clients");
    if (cfg.step_size <= 0.0) throw ParameterError("warm-up step size must be positive");

    Rng shared_rng(seed_combine(cfg.seed, stream::kInit));
    const model::ParamVector shared_init = model::init_params(spec, shared_rng);

    std::vector<model::ParamVector> out;
    out.reserve(datasets.size());
    for (const auto& ds : datasets) {
        model::ParamVector w = shared_init;
        if (cfg.per_client_init) {
            Rng rng(seed_combine(cfg.seed, stream::kInit,
                                 static_cast<std::uint64_t>(ds.client_id)));
            w = model::init_params(spec, rng);
        }
        for (std::size_t t = 0; t < cfg.steps; ++t) {
            const auto g = model::gradient(spec, w, ds);
            model::add_scaled(w, g, -cfg.step_size);
            if (!w.all_finite())
                throw DivergenceError("non-finite parameters during warm-up", t, ds.client_id);
        }
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace lcfl::trainer
