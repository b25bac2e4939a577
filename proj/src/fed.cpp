#include "lcfl/fed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "lcfl/errors.hpp"
#include "lcfl/random.hpp"

namespace lcfl::fed {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> sample_participants(std::size_t group_size, double rate,
                                             std::uint64_t seed, std::size_t round) {
    const auto count = static_cast<std::size_t>(
        std::ceil(rate * static_cast<double>(group_size)));
    Rng rng(seed_combine(seed, stream::kParticipation, round));
    auto picks = rng.sample_without_replacement(group_size, std::max<std::size_t>(1, count));
    std::sort(picks.begin(), picks.end());
    return picks;
}

double client_accuracy(const model::ModelSpec& spec, const model::ParamVector& w,
                       const data::ClientDataset& test) {
    if (!spec.is_classifier()) return std::numeric_limits<double>::quiet_NaN();
    return model::accuracy(spec, w, test);
}

struct Eval {
    double accuracy_mean;
    double train_loss_mean;
};

// Mean accuracy/train-loss over clients, each under its own model.
Eval evaluate_clients(const model::ModelSpec& spec, const std::vector<ClientSplit>& clients,
                      const std::vector<const model::ParamVector*>& models,
                      const std::vector<bool>* excluded, bool weighted_acc) {
    double acc_sum = 0.0, acc_weight = 0.0, loss_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        if (excluded && (*excluded)[i]) continue;
        const double w = weighted_acc
                             ? static_cast<double>(clients[i].test.num_samples)
                             : 1.0;
        acc_sum += w * client_accuracy(spec, *models[i], clients[i].test);
        acc_weight += w;
        loss_sum += model::loss(spec, *models[i], clients[i].train);
        ++counted;
    }
    if (counted == 0) throw EmptyInputError("no clients left to evaluate");
    return {acc_sum / acc_weight, loss_sum / static_cast<double>(counted)};
}

}  // namespace

void FedConfig::validate() const {
    if (participation_rate <= 0.0 || participation_rate > 1.0)
        throw ParameterError("participation_rate must be in (0, 1]");
    if (global_iterations == 0) throw ParameterError("global_iterations must be positive");
    train.validate();
}

std::vector<ClientSplit> split_federation(const std::vector<data::ClientDataset>& datasets,
                                          double test_fraction, std::uint64_t seed) {
    std::vector<ClientSplit> out;
    out.reserve(datasets.size());
    for (const auto& ds : datasets) {
        auto pair = data::train_test_split(ds, test_fraction, seed);
        out.push_back({std::move(pair.train), std::move(pair.test)});
    }
    return out;
}

std::uint64_t group_seed(std::uint64_t base, std::span<const int> sorted_members) {
    std::uint64_t s = seed_combine(base, stream::kFed);
    for (int id : sorted_members) s = seed_combine(s, static_cast<std::uint64_t>(id));
    return s;
}

FedAvgResult fedavg(const model::ModelSpec& spec, const std::vector<ClientSplit>& group,
                    const model::ParamVector& w_init, const FedConfig& cfg) {
    cfg.validate();
    if (group.empty()) throw EmptyInputError("fedavg over an empty group");
    model::check_shape(spec, w_init);

    FedAvgResult result;
    result.model = w_init;
    result.log.algorithm = "fedavg";
    result.log.seed = cfg.seed;

    std::vector<const model::ParamVector*> views(group.size(), &result.model);
    for (std::size_t t = 0; t < cfg.global_iterations; ++t) {
        const auto start = Clock::now();
        const auto participants =
            sample_participants(group.size(), cfg.participation_rate, cfg.seed, t);
        std::vector<model::ParamVector> locals;
        std::vector<double> weights;
        locals.reserve(participants.size());
        for (std::size_t p : participants) {
            try {
                locals.push_back(trainer::local_sgd(spec, result.model, group[p].train,
                                                    cfg.train, t));
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string("fedavg round aborted: ") + e.what(), t,
                                      group[p].train.client_id);
            }
            weights.push_back(static_cast<double>(group[p].train.num_samples));
        }
        result.model = model::weighted_average(locals, weights);

        const Eval eval = evaluate_clients(spec, group, views, nullptr,
                                           cfg.weighted_accuracy_mean);
        result.log.records.push_back({t + 1, eval.accuracy_mean, eval.train_loss_mean,
                                      {group.size()}, seconds_since(start)});
    }
    return result;
}

LcflResult lcfl_pipeline(const model::ModelSpec& spec, const std::vector<ClientSplit>& clients,
                         const LcflConfig& alg_cfg, const FedConfig& fed_cfg) {
    fed_cfg.validate();
    if (clients.size() < 2) throw ParameterError("clustered pipeline needs at least 2 clients");

    std::vector<data::ClientDataset> train_sets;
    train_sets.reserve(clients.size());
    for (const auto& c : clients) train_sets.push_back(c.train);

    LcflResult result;
    result.log.algorithm = "lcfl";
    result.log.seed = fed_cfg.seed;

    const auto warm = trainer::warmup_all(spec, train_sets, alg_cfg.warmup);

    switch (alg_cfg.metric) {
        case metrics::MetricKind::LossGap:
            result.matrix = metrics::loss_gap_matrix(spec, train_sets, warm);
            break;
        case metrics::MetricKind::ParamNorm:
            result.matrix = metrics::param_norm_matrix(warm);
            break;
        case metrics::MetricKind::GradCosine: {
            const auto reference =
                model::weighted_average(warm, std::vector<double>(warm.size(), 1.0));
            auto gc = metrics::grad_cosine_matrix(spec, train_sets, reference);
            result.matrix = std::move(gc.matrix);
            for (int i : gc.zero_gradient_clients)
                result.log.events.push_back("zero gradient at reference for client " +
                                            std::to_string(i) + "; cosine forced to 0");
            break;
        }
        case metrics::MetricKind::CrossLossDebug:
            result.matrix = metrics::cross_loss_matrix(spec, train_sets, warm);
            result.log.events.push_back("debug metric in use: cross-loss-debug");
            break;
    }
    result.matrix.validate();

    if (const auto* km = std::get_if<KMedoidsParams>(&alg_cfg.clusterer)) {
        result.assignment = clustering::k_medoids(result.matrix, km->k, fed_cfg.seed,
                                                  km->max_iters, km->restarts);
    } else if (const auto* ag = std::get_if<AgglomerativeParams>(&alg_cfg.clusterer)) {
        result.assignment = clustering::agglomerative(result.matrix, ag->linkage, ag->stop)
                                .assignment;
    } else {
        const auto& db = std::get<DbscanParams>(alg_cfg.clusterer);
        double eps = db.eps;
        if (eps <= 0.0) {
            eps = clustering::dbscan_default_eps(result.matrix);
            result.log.events.push_back("dbscan eps defaulted to " + std::to_string(eps));
        }
        result.assignment = clustering::dbscan(result.matrix, eps, db.min_pts);
        // noise clients cannot stay unassigned: train them as singletons
        for (std::size_t i = 0; i < result.assignment.labels.size(); ++i) {
            if (!result.assignment.is_noise(i)) continue;
            result.assignment.labels[i] = result.assignment.num_clusters++;
            result.assignment.noise_mask[i] = false;
            result.log.events.push_back("client " + std::to_string(i) +
                                        " was dbscan noise; trained as a singleton cluster");
        }
    }

    const auto groups = result.assignment.members();
    std::vector<RunLog> cluster_logs;
    for (const auto& members : groups) {
        std::vector<ClientSplit> sub;
        std::vector<model::ParamVector> sub_warm;
        std::vector<double> weights;
        for (int m : members) {
            sub.push_back(clients[static_cast<std::size_t>(m)]);
            sub_warm.push_back(warm[static_cast<std::size_t>(m)]);
            weights.push_back(static_cast<double>(sub.back().train.num_samples));
        }
        // warm-up parameters double as the cluster's initialization
        const auto init = model::weighted_average(sub_warm, weights);
        FedConfig sub_cfg = fed_cfg;
        sub_cfg.seed = group_seed(fed_cfg.seed, members);
        auto sub_result = fedavg(spec, sub, init, sub_cfg);
        result.cluster_models.push_back(std::move(sub_result.model));
        cluster_logs.push_back(std::move(sub_result.log));
    }

    if (groups.size() == 1) {
        auto log = std::move(cluster_logs.front());
        log.algorithm = "lcfl";
        log.seed = fed_cfg.seed;
        log.events.insert(log.events.begin(), result.log.events.begin(),
                          result.log.events.end());
        result.log = std::move(log);
        return result;
    }

    std::vector<std::size_t> sizes;
    for (const auto& g : groups) sizes.push_back(g.size());
    const auto total = static_cast<double>(clients.size());
    for (std::size_t t = 0; t < fed_cfg.global_iterations; ++t) {
        RunRecord rec;
        rec.iteration = t + 1;
        rec.cluster_sizes = sizes;
        double acc_sum = 0.0, acc_weight = 0.0, loss_sum = 0.0;
        for (std::size_t c = 0; c < groups.size(); ++c) {
            const auto& r = cluster_logs[c].records[t];
            double w = static_cast<double>(sizes[c]);
            if (fed_cfg.weighted_accuracy_mean) {
                double tw = 0.0;
                for (int m : groups[c])
                    tw += static_cast<double>(clients[static_cast<std::size_t>(m)].test.num_samples);
                w = tw;
            }
            acc_sum += w * r.accuracy_mean;
            acc_weight += w;
            loss_sum += static_cast<double>(sizes[c]) * r.train_loss_mean;
            rec.wall_clock_sec += r.wall_clock_sec;
        }
        rec.accuracy_mean = acc_sum / acc_weight;
        rec.train_loss_mean = loss_sum / total;
        result.log.records.push_back(std::move(rec));
    }
    return result;
}

IfcaResult ifca(const model::ModelSpec& spec, const std::vector<ClientSplit>& clients,
                std::size_t k, const std::vector<model::ParamVector>& w_inits,
                const FedConfig& cfg) {
    cfg.validate();
    if (k == 0) throw ParameterError("ifca needs k >= 1");
    if (w_inits.size() != k) throw ParameterError("ifca needs exactly k initial models");
    if (clients.empty()) throw EmptyInputError("ifca over an empty federation");
    for (const auto& w : w_inits) model::check_shape(spec, w);

    IfcaResult result;
    result.models = w_inits;
    result.log.algorithm = "ifca";
    result.log.seed = cfg.seed;

    auto pick_cluster = [&](const data::ClientDataset& train, double* loss_out) {
        std::size_t best = 0;
        double best_loss = model::loss(spec, result.models[0], train);
        for (std::size_t j = 1; j < k; ++j) {
            const double l = model::loss(spec, result.models[j], train);
            if (l < best_loss) {  // ties keep the lowest index
                best_loss = l;
                best = j;
            }
        }
        if (loss_out) *loss_out = best_loss;
        return best;
    };

    std::vector<int> last_choices(clients.size(), 0);
    for (std::size_t t = 0; t < cfg.global_iterations; ++t) {
        const auto start = Clock::now();
        const auto participants =
            sample_participants(clients.size(), cfg.participation_rate, cfg.seed, t);
        std::vector<std::vector<model::ParamVector>> returns(k);
        std::vector<std::vector<double>> weights(k);
        for (std::size_t p : participants) {
            const std::size_t j = pick_cluster(clients[p].train, nullptr);
            try {
                returns[j].push_back(trainer::local_sgd(spec, result.models[j],
                                                        clients[p].train, cfg.train, t));
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string("ifca round aborted: ") + e.what(), t,
                                      clients[p].train.client_id);
            }
            weights[j].push_back(static_cast<double>(clients[p].train.num_samples));
        }
        for (std::size_t j = 0; j < k; ++j)
            if (!returns[j].empty())
                result.models[j] = model::weighted_average(returns[j], weights[j]);
            // else: cluster keeps its previous model

        // full evaluation pass: every client re-picks its cluster
        RunRecord rec;
        rec.iteration = t + 1;
        rec.cluster_sizes.assign(k, 0);
        rec.wall_clock_sec = 0.0;
        double acc_sum = 0.0, acc_weight = 0.0, loss_sum = 0.0;
        for (std::size_t i = 0; i < clients.size(); ++i) {
            double chosen_loss = 0.0;
            const std::size_t j = pick_cluster(clients[i].train, &chosen_loss);
            last_choices[i] = static_cast<int>(j);
            ++rec.cluster_sizes[j];
            const double w = cfg.weighted_accuracy_mean
                                 ? static_cast<double>(clients[i].test.num_samples)
                                 : 1.0;
            acc_sum += w * client_accuracy(spec, result.models[j], clients[i].test);
            acc_weight += w;
            loss_sum += chosen_loss;
        }
        rec.accuracy_mean = acc_sum / acc_weight;
        rec.train_loss_mean = loss_sum / static_cast<double>(clients.size());
        rec.wall_clock_sec = seconds_since(start);
        result.log.records.push_back(std::move(rec));
    }

    result.assignment.labels = last_choices;
    result.assignment.num_clusters = static_cast<int>(k);
    return result;
}

LocalOnlyResult local_only(const model::ModelSpec& spec,
                           const std::vector<ClientSplit>& clients, const FedConfig& cfg) {
    cfg.validate();
    if (clients.empty()) throw EmptyInputError("local training over an empty federation");

    LocalOnlyResult result;
    result.log.algorithm = "local";
    result.log.seed = cfg.seed;

    Rng init_rng(seed_combine(cfg.seed, stream::kInit));
    const auto shared_init = model::init_params(spec, init_rng);
    result.models.assign(clients.size(), shared_init);
    std::vector<bool> excluded(clients.size(), false);

    std::vector<const model::ParamVector*> views(clients.size());
    for (std::size_t i = 0; i < clients.size(); ++i) views[i] = &result.models[i];

    for (std::size_t t = 0; t < cfg.global_iterations; ++t) {
        const auto start = Clock::now();
        for (std::size_t i = 0; i < clients.size(); ++i) {
            if (excluded[i]) continue;
            try {
                result.models[i] =
                    trainer::local_sgd(spec, result.models[i], clients[i].train, cfg.train, t);
            } catch (const DivergenceError& e) {
                excluded[i] = true;
                result.log.events.push_back("client " + std::to_string(i) +
                                            " diverged and was excluded from means: " +
                                            e.what());
            }
        }
        const Eval eval =
            evaluate_clients(spec, clients, views, &excluded, cfg.weighted_accuracy_mean);
        result.log.records.push_back({t + 1, eval.accuracy_mean, eval.train_loss_mean,
                                      std::vector<std::size_t>(clients.size(), 1),
                                      seconds_since(start)});
    }
    return result;
}

void append_runlog_csv(const RunLog& log, std::ostream& os, bool header) {
    if (header)
        os << "iteration,algorithm,seed,accuracy_mean_over_clients,train_loss_mean,"
              "num_clusters\n";
    os.precision(17);
    for (const auto& r : log.records)
        os << r.iteration << "," << log.algorithm << "," << log.seed << "," << r.accuracy_mean
           << "," << r.train_loss_mean << "," << r.cluster_sizes.size() << "\n";
}

}  // namespace lcfl::fed
