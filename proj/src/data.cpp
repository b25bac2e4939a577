#include "lcfl/data.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "lcfl/errors.hpp"
#include "lcfl/random.hpp"

namespace lcfl::data {

namespace {

Eigen::MatrixXd sigma_xx_matrix(const LinearFamilyParams& p) {
    const auto d = static_cast<Eigen::Index>(p.input_dim);
    if (p.sigma_xx.empty()) return Eigen::MatrixXd::Identity(d, d);
    if (p.sigma_xx.size() != p.input_dim * p.input_dim)
        throw ShapeError("sigma_xx must be input_dim x input_dim");
    Eigen::MatrixXd s(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
            s(r, c) = p.sigma_xx[static_cast<std::size_t>(r * d + c)];
    if (!s.isApprox(s.transpose(), 1e-12))
        throw ParameterError("sigma_xx must be symmetric");
    return s;
}

std::uint32_t read_be32(std::ifstream& f, const std::string& path, std::size_t offset) {
    unsigned char buf[4];
    if (!f.read(reinterpret_cast<char*>(buf), 4))
        throw FormatError(path + ": truncated header", offset);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

std::vector<ClientDataset> gen_linear_family(const LinearFamilyParams& p) {
    if (p.num_clients < 2) throw ParameterError("linear family needs at least 2 clients");
    if (p.num_clusters == 0 || p.num_clusters > p.num_clients)
        throw ParameterError("cluster count must be in [1, num_clients]");
    if (p.samples_per_client == 0) throw ParameterError("samples_per_client must be positive");
    if (p.noise_std < 0.0) throw ParameterError("noise_std must be nonnegative");
    if (p.sigma_xy.size() != p.num_clusters)
        throw ParameterError("need one sigma_xy vector per cluster");
    for (const auto& v : p.sigma_xy)
        if (v.size() != p.input_dim) throw ShapeError("sigma_xy dimension mismatch");
    for (std::size_t a = 0; a < p.sigma_xy.size(); ++a)
        for (std::size_t b = a + 1; b < p.sigma_xy.size(); ++b)
            if (p.sigma_xy[a] == p.sigma_xy[b])
                throw DegenerateFamilyError("duplicate sigma_xy vectors (clusters " +
                                            std::to_string(a) + ", " + std::to_string(b) + ")");

    const auto d = static_cast<Eigen::Index>(p.input_dim);
    const Eigen::MatrixXd sxx = sigma_xx_matrix(p);
    Eigen::LLT<Eigen::MatrixXd> llt(sxx);
    if (llt.info() != Eigen::Success)
        throw ParameterError("sigma_xx is not positive definite");
    const Eigen::MatrixXd chol = llt.matrixL();

    std::vector<Eigen::VectorXd> betas(p.num_clusters);
    for (std::size_t c = 0; c < p.num_clusters; ++c) {
        Eigen::VectorXd sxy(d);
        for (Eigen::Index i = 0; i < d; ++i) sxy(i) = p.sigma_xy[c][static_cast<std::size_t>(i)];
        betas[c] = llt.solve(sxy);
    }

    std::vector<ClientDataset> out(p.num_clients);
    for (std::size_t i = 0; i < p.num_clients; ++i) {
        const std::size_t cluster = i % p.num_clusters;
        ClientDataset& ds = out[i];
        ds.client_id = static_cast<int>(i);
        ds.true_cluster = static_cast<int>(cluster);
        ds.input_dim = p.input_dim;
        ds.num_samples = p.samples_per_client;
        ds.features.resize(p.samples_per_client * p.input_dim);
        ds.labels.resize(p.samples_per_client);

        Rng rng(seed_combine(p.seed, stream::kData, i));
        Eigen::VectorXd z(d);
        for (std::size_t s = 0; s < p.samples_per_client; ++s) {
            for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
            const Eigen::VectorXd x = chol * z;
            for (Eigen::Index j = 0; j < d; ++j)
                ds.features[s * p.input_dim + static_cast<std::size_t>(j)] = x(j);
            ds.labels[s] = betas[cluster].dot(x) + p.noise_std * rng.normal();
        }
    }
    return out;
}

std::vector<double> rotate_grid(std::span<const double> features, std::size_t side,
                                std::size_t times) {
    if (features.size() != side * side) throw ShapeError("grid features must be side^2 long");
    std::vector<double> cur(features.begin(), features.end());
    std::vector<double> next(cur.size());
    for (std::size_t t = 0; t < times % 4; ++t) {
        // clockwise quarter turn: out(r,c) = in(side-1-c, r)
        for (std::size_t r = 0; r < side; ++r)
            for (std::size_t c = 0; c < side; ++c)
                next[r * side + c] = cur[(side - 1 - c) * side + r];
        std::swap(cur, next);
    }
    return cur;
}

std::vector<ClientDataset> gen_rotated(const SamplePool& pool, const RotatedParams& p) {
    if (pool.size == 0) throw EmptyInputError("empty sample pool");
    if (p.num_clients < 2) throw ParameterError("rotated federation needs at least 2 clients");
    if (p.num_rotations == 0 || p.num_rotations > p.num_clients)
        throw ParameterError("rotation count must be in [1, num_clients]");
    if (p.samples_per_client == 0) throw ParameterError("samples_per_client must be positive");

    const bool grid = pool.grid_side > 0;
    if (grid && p.num_rotations != 2 && p.num_rotations != 4)
        throw ParameterError("grid features support 2 or 4 rotations only");
    if (!grid && pool.input_dim != 2)
        throw ShapeError("non-grid rotation needs 2-D features");

    std::vector<std::size_t> order(pool.size);
    for (std::size_t i = 0; i < pool.size; ++i) order[i] = i;
    Rng rng(seed_combine(p.seed, stream::kData));
    rng.shuffle(order);

    std::vector<ClientDataset> out(p.num_clients);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < p.num_clients; ++i) {
        const std::size_t rot = i % p.num_rotations;
        ClientDataset& ds = out[i];
        ds.client_id = static_cast<int>(i);
        ds.true_cluster = static_cast<int>(rot);
        ds.input_dim = pool.input_dim;
        ds.num_samples = p.samples_per_client;
        ds.features.resize(p.samples_per_client * pool.input_dim);
        ds.labels.resize(p.samples_per_client);
        for (std::size_t s = 0; s < p.samples_per_client; ++s) {
            const std::size_t src = order[cursor];
            cursor = (cursor + 1) % pool.size;
            const auto x = pool.sample(src);
            if (grid) {
                const std::size_t quarter_turns = rot * (4 / p.num_rotations);
                const auto rotated = rotate_grid(x, pool.grid_side, quarter_turns);
                std::copy(rotated.begin(), rotated.end(),
                          ds.features.begin() + s * pool.input_dim);
            } else {
                const double angle = 2.0 * M_PI * static_cast<double>(rot) /
                                     static_cast<double>(p.num_rotations);
                const double ca = std::cos(angle), sa = std::sin(angle);
                ds.features[s * 2] = ca * x[0] - sa * x[1];
                ds.features[s * 2 + 1] = sa * x[0] + ca * x[1];
            }
            ds.labels[s] = pool.labels[src];
        }
    }
    return out;
}

std::vector<ClientDataset> gen_label_shard(const SamplePool& pool, const LabelShardParams& p) {
    if (pool.size == 0) throw EmptyInputError("empty sample pool");
    if (p.num_clients == 0) throw ParameterError("need at least one client");
    if (p.samples_per_client == 0) throw ParameterError("samples_per_client must be positive");
    if (p.classes_per_client == 0 || p.classes_per_client > p.num_classes_total)
        throw ParameterError("classes_per_client must be in [1, num_classes_total]");

    std::vector<std::vector<std::size_t>> by_class(p.num_classes_total);
    for (std::size_t i = 0; i < pool.size; ++i) {
        const auto cls = static_cast<std::size_t>(pool.labels[i]);
        if (cls < p.num_classes_total) by_class[cls].push_back(i);
    }

    std::vector<std::vector<std::size_t>> subsets(p.num_clients);
    for (std::size_t i = 0; i < p.num_clients; ++i) {
        Rng rng(seed_combine(p.seed, stream::kData, i));
        subsets[i] = rng.sample_without_replacement(p.num_classes_total, p.classes_per_client);
        std::sort(subsets[i].begin(), subsets[i].end());
        for (std::size_t cls : subsets[i])
            if (by_class[cls].empty())
                throw InsufficientPoolError("pool has no samples of class " +
                                            std::to_string(cls));
    }

    // canonical cluster ids: lexicographic rank among distinct subsets
    std::map<std::vector<std::size_t>, int> subset_id;
    for (const auto& s : subsets) subset_id.emplace(s, 0);
    int next_id = 0;
    for (auto& [subset, id] : subset_id) id = next_id++;

    std::vector<ClientDataset> out(p.num_clients);
    for (std::size_t i = 0; i < p.num_clients; ++i) {
        ClientDataset& ds = out[i];
        ds.client_id = static_cast<int>(i);
        ds.true_cluster = subset_id.at(subsets[i]);
        ds.input_dim = pool.input_dim;
        ds.num_samples = p.samples_per_client;
        ds.features.resize(p.samples_per_client * pool.input_dim);
        ds.labels.resize(p.samples_per_client);
        Rng rng(seed_combine(p.seed, stream::kData, i, 1));
        for (std::size_t s = 0; s < p.samples_per_client; ++s) {
            const std::size_t cls = subsets[i][rng.uniform_index(subsets[i].size())];
            const auto& candidates = by_class[cls];
            const std::size_t src = candidates[rng.uniform_index(candidates.size())];
            const auto x = pool.sample(src);
            std::copy(x.begin(), x.end(), ds.features.begin() + s * pool.input_dim);
            ds.labels[s] = pool.labels[src];
        }
    }
    return out;
}

SamplePool load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw FormatError(images_path + ": cannot open", 0);
    std::size_t off = 0;
    const std::uint32_t img_magic = read_be32(imgs, images_path, off);
    if (img_magic != 0x00000803u)
        throw FormatError(images_path + ": bad image magic", 0);
    off = 4;
    const std::uint32_t count = read_be32(imgs, images_path, off);
    off = 8;
    const std::uint32_t rows = read_be32(imgs, images_path, off);
    off = 12;
    const std::uint32_t cols = read_be32(imgs, images_path, off);
    off = 16;

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw FormatError(labels_path + ": cannot open", 0);
    const std::uint32_t lab_magic = read_be32(labs, labels_path, 0);
    if (lab_magic != 0x00000801u)
        throw FormatError(labels_path + ": bad label magic", 0);
    const std::uint32_t lab_count = read_be32(labs, labels_path, 4);
    if (lab_count != count)
        throw FormatError(labels_path + ": label count " + std::to_string(lab_count) +
                              " != image count " + std::to_string(count),
                          4);

    SamplePool pool;
    pool.input_dim = static_cast<std::size_t>(rows) * cols;
    pool.grid_side = (rows == cols) ? rows : 0;
    pool.size = count;
    pool.features.resize(pool.size * pool.input_dim);
    pool.labels.resize(pool.size);

    std::vector<unsigned char> buf(pool.input_dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!imgs.read(reinterpret_cast<char*>(buf.data()),
                       static_cast<std::streamsize>(buf.size())))
            throw FormatError(images_path + ": truncated image data", off);
        for (std::size_t j = 0; j < pool.input_dim; ++j)
            pool.features[i * pool.input_dim + j] = buf[j] / 255.0;
        off += buf.size();
    }
    std::size_t lab_off = 8;
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        unsigned char b;
        if (!labs.read(reinterpret_cast<char*>(&b), 1))
            throw FormatError(labels_path + ": truncated label data", lab_off);
        pool.labels[i] = static_cast<double>(b);
        max_label = std::max(max_label, static_cast<int>(b));
        ++lab_off;
    }
    pool.num_classes = static_cast<std::size_t>(max_label) + 1;
    return pool;
}

std::vector<ClientDataset> normalize(const std::vector<ClientDataset>& datasets) {
    if (datasets.empty()) throw EmptyInputError("normalize over no datasets");
    const std::size_t d = datasets.front().input_dim;
    std::size_t total = 0;
    std::vector<double> mean(d, 0.0);
    for (const auto& ds : datasets) {
        if (ds.input_dim != d) throw ShapeError("datasets disagree on input_dim");
        total += ds.num_samples;
        for (std::size_t s = 0; s < ds.num_samples; ++s)
            for (std::size_t j = 0; j < d; ++j) mean[j] += ds.features[s * d + j];
    }
    if (total == 0) throw EmptyInputError("normalize over empty datasets");
    for (double& m : mean) m /= static_cast<double>(total);

    std::vector<double> var(d, 0.0);
    for (const auto& ds : datasets)
        for (std::size_t s = 0; s < ds.num_samples; ++s)
            for (std::size_t j = 0; j < d; ++j) {
                const double c = ds.features[s * d + j] - mean[j];
                var[j] += c * c;
            }
    std::vector<double> scale(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(total));
        if (sd > 0.0) scale[j] = 1.0 / sd;
    }

    std::vector<ClientDataset> out = datasets;
    for (auto& ds : out)
        for (std::size_t s = 0; s < ds.num_samples; ++s)
            for (std::size_t j = 0; j < d; ++j)
                ds.features[s * d + j] = (ds.features[s * d + j] - mean[j]) * scale[j];
    return out;
}

TrainTestPair train_test_split(const ClientDataset& dataset, double test_fraction,
                               std::uint64_t seed) {
    if (dataset.num_samples < 2)
        throw ParameterError("train/test split needs at least 2 samples");
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw ParameterError("test_fraction must be in (0,1)");
    std::vector<std::size_t> order(dataset.num_samples);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed_combine(seed, stream::kSplit, static_cast<std::uint64_t>(dataset.client_id)));
    rng.shuffle(order);

    auto test_count = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(dataset.num_samples)));
    test_count = std::clamp<std::size_t>(test_count, 1, dataset.num_samples - 1);

    auto take = [&](std::size_t begin, std::size_t end) {
        ClientDataset part;
        part.client_id = dataset.client_id;
        part.true_cluster = dataset.true_cluster;
        part.input_dim = dataset.input_dim;
        part.num_samples = end - begin;
        part.features.resize(part.num_samples * part.input_dim);
        part.labels.resize(part.num_samples);
        for (std::size_t i = begin; i < end; ++i) {
            const auto x = dataset.sample(order[i]);
            std::copy(x.begin(), x.end(), part.features.begin() + (i - begin) * part.input_dim);
            part.labels[i - begin] = dataset.labels[order[i]];
        }
        return part;
    };
    TrainTestPair pair;
    pair.train = take(0, dataset.num_samples - test_count);
    pair.test = take(dataset.num_samples - test_count, dataset.num_samples);
    return pair;
}

SamplePool make_template_task(const TemplateTaskParams& p) {
    if (p.grid_side == 0) throw ParameterError("grid_side must be positive");
    if (p.num_base_patterns == 0) throw ParameterError("need at least one base pattern");
    if (p.pool_size == 0) throw ParameterError("pool_size must be positive");

    const std::size_t d = p.grid_side * p.grid_side;
    Rng rng(seed_combine(p.seed, stream::kData, 2));

    std::vector<std::vector<double>> templates;
    for (std::size_t b = 0; b < p.num_base_patterns; ++b) {
        std::vector<double> base(d);
        for (double& v : base) v = rng.normal();
        if (p.closed_under_rotation) {
            for (std::size_t r = 0; r < 4; ++r) templates.push_back(rotate_grid(base, p.grid_side, r));
        } else {
            templates.push_back(std::move(base));
        }
    }

    SamplePool pool;
    pool.input_dim = d;
    pool.grid_side = p.grid_side;
    pool.num_classes = templates.size();
    pool.size = p.pool_size;
    pool.features.resize(pool.size * d);
    pool.labels.resize(pool.size);
    for (std::size_t i = 0; i < pool.size; ++i) {
        const std::size_t cls = i % templates.size();  // balanced classes
        pool.labels[i] = static_cast<double>(cls);
        for (std::size_t j = 0; j < d; ++j)
            pool.features[i * d + j] = templates[cls][j] + p.noise_std * rng.normal();
    }
    return pool;
}

SamplePool make_blob_task(const BlobTaskParams& p) {
    if (p.input_dim == 0 || p.num_classes == 0 || p.pool_size == 0)
        throw ParameterError("blob task dimensions must be positive");
    Rng rng(seed_combine(p.seed, stream::kData, 3));
    std::vector<std::vector<double>> centers(p.num_classes, std::vector<double>(p.input_dim));
    for (auto& c : centers)
        for (double& v : c) v = p.center_scale * rng.normal();

    SamplePool pool;
    pool.input_dim = p.input_dim;
    pool.num_classes = p.num_classes;
    pool.size = p.pool_size;
    pool.features.resize(pool.size * p.input_dim);
    pool.labels.resize(pool.size);
    for (std::size_t i = 0; i < pool.size; ++i) {
        const std::size_t cls = i % p.num_classes;
        pool.labels[i] = static_cast<double>(cls);
        for (std::size_t j = 0; j < p.input_dim; ++j)
            pool.features[i * p.input_dim + j] = centers[cls][j] + p.noise_std * rng.normal();
    }
    return pool;
}

}  // namespace lcfl::data
