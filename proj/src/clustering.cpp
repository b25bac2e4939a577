#include "lcfl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "lcfl/errors.hpp"
#include "lcfl/random.hpp"

namespace lcfl::clustering {

std::vector<std::vector<int>> ClusterAssignment::members() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(num_clusters));
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) out[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
    return out;
}

double medoid_objective(const metrics::DistanceMatrix& dm, const std::vector<int>& labels,
                        const std::vector<int>& medoids) {
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        total += dm.at(i, static_cast<std::size_t>(medoids[static_cast<std::size_t>(labels[i])]));
    return total;
}

namespace {

struct MedoidRun {
    std::vector<int> labels;
    std::vector<int> medoids;  // sorted ascending; cluster c's medoid is medoids[c]
    double objective = 0.0;
};

void assign_to_medoids(const metrics::DistanceMatrix& dm, const std::vector<int>& medoids,
                       std::vector<int>& labels) {
    for (std::size_t i = 0; i < dm.size; ++i) {
        int best = 0;
        double best_d = dm.at(i, static_cast<std::size_t>(medoids[0]));
        for (std::size_t c = 1; c < medoids.size(); ++c) {
            const double d = dm.at(i, static_cast<std::size_t>(medoids[c]));
            if (d < best_d) {  // strict: ties keep the lowest medoid index
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[i] = best;
    }
    // a medoid always belongs to its own cluster, even under zero-distance ties
    for (std::size_t c = 0; c < medoids.size(); ++c)
        labels[static_cast<std::size_t>(medoids[c])] = static_cast<int>(c);
}

MedoidRun k_medoids_once(const metrics::DistanceMatrix& dm, std::size_t k, Rng& rng,
                         std::size_t max_iters) {
    MedoidRun run;
    const auto picks = rng.sample_without_replacement(dm.size, k);
    run.medoids.reserve(k);
    for (std::size_t p : picks) run.medoids.push_back(static_cast<int>(p));
    std::sort(run.medoids.begin(), run.medoids.end());
    run.labels.assign(dm.size, 0);

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        assign_to_medoids(dm, run.medoids, run.labels);
        const double objective = medoid_objective(dm, run.labels, run.medoids);
        if (objective > prev + 1e-12)
            throw std::logic_error("k-medoids objective increased");
        prev = objective;

        // update: each cluster's medoid minimizes total distance to members
        std::vector<std::vector<int>> groups(k);
        for (std::size_t i = 0; i < dm.size; ++i)
            groups[static_cast<std::size_t>(run.labels[i])].push_back(static_cast<int>(i));
        std::vector<int> next(k);
        for (std::size_t c = 0; c < k; ++c) {
            int best = groups[c].front();
            double best_cost = std::numeric_limits<double>::infinity();
            for (int cand : groups[c]) {
                double cost = 0.0;
                for (int j : groups[c]) cost += dm.at(static_cast<std::size_t>(cand),
                                                      static_cast<std::size_t>(j));
                if (cost < best_cost) {  // ties keep the lowest index (sorted scan)
                    best_cost = cost;
                    best = cand;
                }
            }
            next[c] = best;
        }
        std::sort(next.begin(), next.end());
        if (next == run.medoids) break;
        run.medoids = next;
    }
    assign_to_medoids(dm, run.medoids, run.labels);
    run.objective = medoid_objective(dm, run.labels, run.medoids);
    return run;
}

}  // namespace

ClusterAssignment k_medoids(const metrics::DistanceMatrix& dm, std::size_t k,
                            std::uint64_t seed, std::size_t max_iters,
                            std::size_t restarts) {
    if (k == 0 || k > dm.size)
        throw ParameterError("k must be in [1, " + std::to_string(dm.size) + "]");
    if (restarts == 0) throw ParameterError("need at least one restart");

    MedoidRun best;
    best.objective = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(seed_combine(seed, stream::kCluster, r));
        MedoidRun run = k_medoids_once(dm, k, rng, max_iters);
        if (run.objective < best.objective) best = std::move(run);
    }

    ClusterAssignment out;
    out.labels = best.labels;
    out.medoids = best.medoids;
    out.num_clusters = static_cast<int>(k);
    return out;
}

Linkage linkage_from_string(const std::string& name) {
    if (name == "single") return Linkage::Single;
    if (name == "complete") return Linkage::Complete;
    if (name == "average") return Linkage::Average;
    throw ParameterError("unknown linkage: " + name);
}

std::string to_string(Linkage linkage) {
    switch (linkage) {
        case Linkage::Single: return "single";
        case Linkage::Complete: return "complete";
        case Linkage::Average: return "average";
    }
    return "?";
}

AgglomerativeResult agglomerative(const metrics::DistanceMatrix& dm, Linkage linkage,
                                  const AgglomerativeStop& stop) {
    const std::size_t n = dm.size;
    if (stop.num_clusters.has_value() == stop.distance_threshold.has_value())
        throw ParameterError("set exactly one agglomerative stop rule");
    if (stop.num_clusters && (*stop.num_clusters == 0 || *stop.num_clusters > n))
        throw ParameterError("num_clusters stop must be in [1, M]");
    if (stop.distance_threshold && *stop.distance_threshold < 0.0)
        throw ParameterError("distance threshold must be nonnegative");

    struct Cluster {
        std::vector<int> members;
        int rep;  // smallest member id
        std::size_t size() const { return members.size(); }
    };
    std::vector<Cluster> active(n);
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        active[i] = {{static_cast<int>(i)}, static_cast<int>(i)};
        for (std::size_t j = 0; j < n; ++j) dist[i][j] = dm.at(i, j);
    }

    AgglomerativeResult result;
    const std::size_t target = stop.num_clusters.value_or(1);
    while (active.size() > target) {
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < active.size(); ++i)
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const double d = dist[i][j];
                const auto rep = std::minmax(active[i].rep, active[j].rep);
                const auto best_rep = std::minmax(active[bi].rep, active[bj].rep);
                if (d < best || (d == best && rep < best_rep)) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        if (stop.distance_threshold && best > *stop.distance_threshold) break;

        const auto rep = std::minmax(active[bi].rep, active[bj].rep);
        result.merges.push_back({rep.first, rep.second, best});

        const double na = static_cast<double>(active[bi].size());
        const double nb = static_cast<double>(active[bj].size());
        for (std::size_t c = 0; c < active.size(); ++c) {
            if (c == bi || c == bj) continue;
            double d = 0.0;
            switch (linkage) {
                case Linkage::Single: d = std::min(dist[bi][c], dist[bj][c]); break;
                case Linkage::Complete: d = std::max(dist[bi][c], dist[bj][c]); break;
                case Linkage::Average:
                    d = (na * dist[bi][c] + nb * dist[bj][c]) / (na + nb);
                    break;
            }
            dist[bi][c] = dist[c][bi] = d;
        }
        auto& keep = active[bi];
        keep.members.insert(keep.members.end(), active[bj].members.begin(),
                            active[bj].members.end());
        keep.rep = rep.first;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        for (auto& row : dist) row.erase(row.begin() + static_cast<std::ptrdiff_t>(bj));
        dist.erase(dist.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    std::sort(active.begin(), active.end(),
              [](const Cluster& a, const Cluster& b) { return a.rep < b.rep; });
    result.assignment.labels.assign(n, 0);
    result.assignment.num_clusters = static_cast<int>(active.size());
    for (std::size_t c = 0; c < active.size(); ++c)
        for (int m : active[c].members)
            result.assignment.labels[static_cast<std::size_t>(m)] = static_cast<int>(c);
    return result;
}

ClusterAssignment dbscan(const metrics::DistanceMatrix& dm, double eps, std::size_t min_pts) {
    if (eps <= 0.0) throw ParameterError("eps must be positive");
    if (min_pts == 0) throw ParameterError("min_pts must be at least 1");
    const std::size_t n = dm.size;

    auto neighbors = [&](std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n; ++j)
            if (dm.at(i, j) <= eps) out.push_back(j);  // includes i itself
        return out;
    };

    constexpr int kUnvisited = -2, kNoise = -1;
    std::vector<int> labels(n, kUnvisited);
    int next_cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != kUnvisited) continue;
        auto nbrs = neighbors(i);
        if (nbrs.size() < min_pts) {
            labels[i] = kNoise;
            continue;
        }
        const int cluster = next_cluster++;
        labels[i] = cluster;
        std::deque<std::size_t> queue(nbrs.begin(), nbrs.end());
        while (!queue.empty()) {
            const std::size_t q = queue.front();
            queue.pop_front();
            if (labels[q] == kNoise) labels[q] = cluster;  // border point
            if (labels[q] != kUnvisited) continue;
            labels[q] = cluster;
            auto qn = neighbors(q);
            if (qn.size() >= min_pts) queue.insert(queue.end(), qn.begin(), qn.end());
        }
    }

    ClusterAssignment out;
    out.labels = labels;
    out.num_clusters = next_cluster;
    out.noise_mask.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) out.noise_mask[i] = labels[i] == kNoise;
    return out;
}

double dbscan_default_eps(const metrics::DistanceMatrix& dm) {
    std::vector<double> dists;
    for (std::size_t i = 0; i < dm.size; ++i)
        for (std::size_t j = i + 1; j < dm.size; ++j) dists.push_back(dm.at(i, j));
    if (dists.empty()) throw ParameterError("matrix too small for an eps heuristic");
    std::sort(dists.begin(), dists.end());
    const std::size_t quartile = std::max<std::size_t>(1, dists.size() / 4);
    return dists[quartile / 2];
}

double adjusted_rand_index(const ClusterAssignment& pred, const std::vector<int>& truth,
                           bool exclude_noise) {
    if (pred.labels.size() != truth.size())
        throw ShapeError("prediction and truth lengths differ");

    std::vector<std::pair<int, int>> pairs;  // (pred label, truth label)
    int synth = pred.num_clusters;           // fresh labels for noise-as-singletons
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (pred.is_noise(i)) {
            if (exclude_noise) continue;
            pairs.emplace_back(synth++, truth[i]);
        } else {
            pairs.emplace_back(pred.labels[i], truth[i]);
        }
    }
    const auto n = static_cast<double>(pairs.size());
    if (pairs.size() < 2) return 1.0;

    std::map<std::pair<int, int>, double> cont;
    std::map<int, double> row, col;
    for (const auto& pr : pairs) {
        cont[pr] += 1.0;
        row[pr.first] += 1.0;
        col[pr.second] += 1.0;
    }
    auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, c] : cont) index += comb2(c);
    for (const auto& [key, c] : row) sum_a += comb2(c);
    for (const auto& [key, c] : col) sum_b += comb2(c);
    const double expected = sum_a * sum_b / comb2(n);
    const double max_index = (sum_a + sum_b) / 2.0;
    if (max_index == expected) return 1.0;  // both partitions trivially identical
    return (index - expected) / (max_index - expected);
}

void write_assignment_csv(const ClusterAssignment& assignment, std::ostream& os) {
    os << "client_id,cluster_id,is_noise\n";
    for (std::size_t i = 0; i < assignment.labels.size(); ++i)
        os << i << "," << assignment.labels[i] << "," << (assignment.is_noise(i) ? 1 : 0)
           << "\n";
}

}  // namespace lcfl::clustering
