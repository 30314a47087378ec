#include "finray/slipnet.hpp"

#include "finray/error.hpp"
#include "finray/parallel.hpp"
#include "finray/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace finray {

std::vector<Edge> build_edges(const GraphLayout& L) {
    if (L.arrays < 1 || L.rows < 1 || L.cols < 1) throw Error("BadLayout", "layout dimensions must be positive");
    const int per = L.rows * L.cols;
    std::vector<Edge> edges;
    for (int a = 0; a < L.arrays; ++a)
        for (int r = 0; r < L.rows; ++r)
            for (int c = 0; c < L.cols; ++c)
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (!dr && !dc) continue;
                        const int rr = r + dr, cc = c + dc;
                        if (rr < 0 || rr >= L.rows || cc < 0 || cc >= L.cols) continue;
                        edges.emplace_back(a * per + r * L.cols + c, a * per + rr * L.cols + cc);
                    }
    if (L.inter_array)
        for (int a = 0; a < L.arrays; ++a)
            for (int i = 0; i < per; ++i)
                for (int b = 0; b < L.arrays; ++b)
                    if (b != a) edges.emplace_back(a * per + i, b * per + i);
    return edges;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> normalize_adjacency(const std::vector<Edge>& edges, int n) {
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (auto [s, d] : edges) {
        if (s < 0 || s >= n || d < 0 || d >= n) throw Error("BadLayout", "edge references a missing node");
        adj[s][d] = 1;
    }
    for (int i = 0; i < n; ++i) adj[i][i] = 1;
    std::vector<double> deg(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) deg[i] += adj[i][j];
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (adj[i][j]) trip.emplace_back(i, j, 1.0 / std::sqrt(deg[i] * deg[j]));
    Eigen::SparseMatrix<double, Eigen::RowMajor> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

TactileGraph build_graph(const std::vector<double>& taxels, const GraphLayout& layout) {
    if (layout.arrays < 1 || layout.rows < 1 || layout.cols < 1 ||
        taxels.size() != static_cast<std::size_t>(layout.arrays * layout.rows * layout.cols))
        throw Error("BadLayout", "taxel count does not match the array layout");
    TactileGraph g;
    g.node_count = static_cast<int>(taxels.size());
    g.edges = build_edges(layout);
    g.a_hat = normalize_adjacency(g.edges, g.node_count);
    g.features = Eigen::Map<const Eigen::VectorXd>(taxels.data(), g.node_count);
    return g;
}

TactileGraph build_graph(const TactileFrame& frame) {
    return build_graph(std::vector<double>(frame.values.begin(), frame.values.end()));
}

TactileGraph with_features(const TactileGraph& topology, const Eigen::MatrixXd& features) {
    if (features.rows() != topology.node_count) throw Error("DimensionMismatch", "feature rows != node count");
    TactileGraph g = topology;
    g.features = features;
    return g;
}

Eigen::MatrixXd frame_features(const TactileFrame& frame, double scale) {
    Eigen::MatrixXd x(kTaxels, 1);
    for (int i = 0; i < kTaxels; ++i) x(i, 0) = scale * frame.values[i];
    return x;
}

std::vector<int> GcnParams::dims() const {
    std::vector<int> d;
    if (weights.empty()) return d;
    d.push_back(static_cast<int>(weights.front().rows()));
    for (const auto& w : weights) d.push_back(static_cast<int>(w.cols()));
    return d;
}

std::size_t GcnParams::parameter_count() const {
    std::size_t n = readout.size() + 1;
    for (const auto& w : weights) n += w.size();
    return n;
}

GcnParams init_params(const std::vector<int>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw Error("DimensionMismatch", "need at least input and one layer width");
    const CounterRng rng(seed, "slipnet/init");
    GcnParams p;
    std::uint64_t idx = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::MatrixXd w(dims[l], dims[l + 1]);
        const double s = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(idx++, 0, -s, s);
        p.weights.push_back(std::move(w));
    }
    p.readout = Eigen::VectorXd::Zero(dims.back());
    return p;
}

namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }

void check_dims(const GcnParams& p, const TactileGraph& g) {
    if (p.weights.empty()) throw Error("DimensionMismatch", "no layers");
    if (g.features.cols() != p.weights.front().rows())
        throw Error("DimensionMismatch", "feature width does not match the first layer");
    for (std::size_t l = 1; l < p.weights.size(); ++l)
        if (p.weights[l].rows() != p.weights[l - 1].cols())
            throw Error("DimensionMismatch", "layer widths do not chain");
    if (p.readout.size() != p.weights.back().cols())
        throw Error("DimensionMismatch", "readout width does not match the last layer");
}

// log(1 + e^x) without overflow
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

} // namespace

ForwardPass gcn_forward(const GcnParams& p, const TactileGraph& g) {
    check_dims(p, g);
    ForwardPass f;
    f.hidden.push_back(p.input_scale * g.features);
    for (const auto& w : p.weights) {
        Eigen::MatrixXd z = g.a_hat * (f.hidden.back() * w);
        f.hidden.push_back(z.unaryExpr(&relu));
        f.pre.push_back(std::move(z));
    }
    f.pooled = f.hidden.back().colwise().mean().transpose();
    f.logit = p.readout.dot(f.pooled) + p.bias;
    f.probability = 1.0 / (1.0 + std::exp(-f.logit));
    return f;
}

GcnGradients GcnGradients::zeros_like(const GcnParams& p) {
    GcnGradients g;
    for (const auto& w : p.weights) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    g.readout = Eigen::VectorXd::Zero(p.readout.size());
    return g;
}

GcnGradients& GcnGradients::operator+=(const GcnGradients& o) {
    for (std::size_t l = 0; l < weights.size(); ++l) weights[l] += o.weights[l];
    readout += o.readout;
    bias += o.bias;
    return *this;
}

GcnGradients& GcnGradients::operator*=(double s) {
    for (auto& w : weights) w *= s;
    readout *= s;
    bias *= s;
    return *this;
}

double sample_loss(const GcnParams& p, const TactileGraph& g, int label, GcnGradients* grad) {
    const ForwardPass f = gcn_forward(p, g);
    const double y = label ? 1.0 : 0.0;
    const double loss = softplus(f.logit) - y * f.logit;
    if (!grad) return loss;

    const double dlogit = f.probability - y;
    grad->readout += dlogit * f.pooled;
    grad->bias += dlogit;
    const int n = g.node_count;
    // d pooled / d H3 spreads evenly over the nodes
    Eigen::MatrixXd dh = Eigen::MatrixXd::Ones(n, 1) * (dlogit / n * p.readout.transpose());
    for (int l = static_cast<int>(p.weights.size()) - 1; l >= 0; --l) {
        const Eigen::MatrixXd dz = dh.cwiseProduct(f.pre[l].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        // Z = A H W with A symmetric
        const Eigen::MatrixXd adz = g.a_hat.transpose() * dz;
        grad->weights[l] += f.hidden[l].transpose() * adz;
        if (l > 0) dh = adz * p.weights[l].transpose();
    }
    return loss;
}

double grad_check(const GcnParams& p, const TactileGraph& g, int label, double epsilon) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) throw Error("InvalidArgument", "epsilon must lie in [1e-7, 1e-3]");
    GcnGradients an = GcnGradients::zeros_like(p);
    sample_loss(p, g, label, &an);
    GcnParams q = p;
    double worst = 0.0;
    auto compare = [&](double& slot, double analytic) {
        const double keep = slot;
        slot = keep + epsilon;
        const double up = sample_loss(q, g, label, nullptr);
        slot = keep - epsilon;
        const double down = sample_loss(q, g, label, nullptr);
        slot = keep;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };
    for (std::size_t l = 0; l < q.weights.size(); ++l)
        for (int i = 0; i < q.weights[l].rows(); ++i)
            for (int j = 0; j < q.weights[l].cols(); ++j) compare(q.weights[l](i, j), an.weights[l](i, j));
    for (int i = 0; i < q.readout.size(); ++i) compare(q.readout(i), an.readout(i));
    compare(q.bias, an.bias);
    return worst;
}

double dataset_loss(const GcnParams& p, const std::vector<SlipSample>& data, double l2, GcnGradients* grad,
                    int threads) {
    if (data.empty()) throw Error("EmptyInput", "dataset split is empty");
    const TactileGraph topo = build_graph(TactileFrame{});
    // fixed chunking keeps the floating-point sum independent of threads
    constexpr std::size_t chunk = 64;
    const std::size_t nchunks = (data.size() + chunk - 1) / chunk;
    std::vector<double> losses(nchunks, 0.0);
    std::vector<GcnGradients> parts(grad ? nchunks : 0, GcnGradients::zeros_like(p));
    parallel_for(nchunks, threads, [&](std::size_t c) {
        TactileGraph g = topo;
        for (std::size_t i = c * chunk; i < std::min(data.size(), (c + 1) * chunk); ++i) {
            g.features = frame_features(data[i].frame);
            losses[c] += sample_loss(p, g, data[i].label, grad ? &parts[c] : nullptr);
        }
    });
    const double inv = 1.0 / static_cast<double>(data.size());
    double loss = 0.0;
    for (double v : losses) loss += v;
    loss *= inv;
    double reg = 0.0;
    for (const auto& w : p.weights) reg += w.squaredNorm();
    reg += p.readout.squaredNorm();
    loss += l2 * reg;
    if (grad) {
        *grad = GcnGradients::zeros_like(p);
        for (const auto& part : parts) *grad += part;
        *grad *= inv;
        for (std::size_t l = 0; l < p.weights.size(); ++l) grad->weights[l] += 2.0 * l2 * p.weights[l];
        grad->readout += 2.0 * l2 * p.readout;
    }
    return loss;
}

TrainResult train(const std::vector<SlipSample>& data, const TrainConfig& cfg, GcnParams params) {
    if (data.empty()) throw Error("EmptyInput", "training split is empty");
    if (!(cfg.learning_rate >= 0.0)) throw Error("InvalidArgument", "learning_rate must be non-negative");
    if (cfg.epochs < 1) throw Error("InvalidArgument", "epochs must be >= 1");
    TrainResult r;
    GcnGradients velocity = GcnGradients::zeros_like(params);
    for (int e = 0; e < cfg.epochs; ++e) {
        GcnGradients g;
        const double loss = dataset_loss(params, data, cfg.l2_penalty, &g, cfg.threads);
        if (!std::isfinite(loss)) throw Error("Divergence", "loss became non-finite at epoch " + std::to_string(e));
        r.loss_history.push_back(loss);
        velocity *= cfg.momentum;
        g *= cfg.learning_rate;
        velocity += g;
        for (std::size_t l = 0; l < params.weights.size(); ++l) params.weights[l] -= velocity.weights[l];
        params.readout -= velocity.readout;
        params.bias -= velocity.bias;
    }
    r.params = std::move(params);
    return r;
}

TrainResult train(const std::vector<SlipSample>& data, const TrainConfig& cfg) {
    std::vector<int> dims{1};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    GcnParams p = init_params(dims, cfg.seed);
    // bring mean node force to order one
    double mean = 0.0;
    for (const auto& s : data) mean += mean_force(s.frame);
    if (!data.empty()) mean /= data.size();
    p.input_scale = mean > 0.0 ? 1.0 / mean : 1.0;
    return train(data, cfg, std::move(p));
}

double predict_probability(const GcnParams& p, const TactileFrame& frame) {
    static const TactileGraph topo = build_graph(TactileFrame{});
    TactileGraph g = topo;
    g.features = frame_features(frame);
    return gcn_forward(p, g).probability;
}

int predict(const GcnParams& p, const TactileFrame& frame) { return predict_probability(p, frame) > 0.5 ? 1 : 0; }

Evaluation evaluate(const GcnParams& p, const std::vector<SlipSample>& data) {
    if (data.empty()) throw Error("EmptyInput", "evaluation split is empty");
    Evaluation e;
    std::size_t hit = 0;
    for (const auto& s : data) {
        const int y = s.label ? 1 : 0;
        const int k = predict(p, s.frame);
        ++e.confusion[y][k];
        hit += (y == k);
    }
    e.accuracy = static_cast<double>(hit) / data.size();
    return e;
}

SlipDataset generate_dataset(const DatasetSpec& spec, SlipThresholdModel* calibration) {
    const SlipThresholdModel cal = calibrate_threshold(generate_trace(spec.base));
    if (calibration) *calibration = cal;
    const CounterRng rng(spec.seed, "slipnet/dataset");

    const int need0 = spec.train_size / 2 + spec.test_size / 2;
    const int need1 = (spec.train_size - spec.train_size / 2) + (spec.test_size - spec.test_size / 2);
    // candidates keyed by a random draw so selection is an unbiased shuffle
    std::vector<std::pair<std::uint64_t, SlipSample>> pool[2];
    constexpr int stride = 5;
    const double jitter = spec.force_jitter;
    for (std::uint64_t j = 0; j < 10000; ++j) {
        if (static_cast<int>(pool[0].size()) >= 4 * need0 && static_cast<int>(pool[1].size()) >= 4 * need1) break;
        RngCursor cur(rng, j);
        TraceSpec t = spec.base;
        t.seed = splitmix64(spec.seed ^ (j + 1));
        t.stable_force = spec.base.stable_force * cur.uniform(1.0 - jitter, 1.0 + jitter);
        t.oscillation_min = std::min(cal.f_min * cur.uniform(1.0 - jitter, 1.0 + jitter), 0.9 * t.stable_force);
        t.oscillation_amplitude = (t.stable_force - t.oscillation_min) * cur.uniform(1.2, 2.5);
        t.oscillation_period = cur.uniform(3.0, 8.0);
        t.noise_sigma = spec.base.noise_sigma * cur.uniform(0.25, 2.0);
        t.patch_row = cur.uniform(1.0, 2.0);
        t.patch_col = cur.uniform(1.0, 2.0);
        t.patch_sigma = cur.uniform(0.7, 1.4);
        const Trace filtered = lowpass(generate_trace(t), spec.filter_alpha);
        for (std::size_t k = 0; k < filtered.size(); k += stride) {
            const double agg = aggregate_force(filtered[k]);
            if (filtered[k].timestamp < t.pre_grasp_duration || !(agg > cal.noise_floor)) continue;
            const int label = agg < cal.f_min ? 0 : 1;
            pool[label].push_back({rng.bits(j, 1000 + static_cast<std::uint32_t>(k)), {filtered[k], label}});
        }
    }
    if (static_cast<int>(pool[0].size()) < need0 || static_cast<int>(pool[1].size()) < need1)
        throw Error("InsufficientSamples", "could not collect enough frames for both classes");
    for (auto& p : pool)
        std::stable_sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    SlipDataset d;
    const int tr0 = spec.train_size / 2, tr1 = spec.train_size - tr0;
    const int te0 = spec.test_size / 2, te1 = spec.test_size - te0;
    // interleave classes so a prefix of either split stays balanced
    for (int i = 0; i < std::max(tr0, tr1); ++i) {
        if (i < tr0) d.train.push_back(pool[0][i].second);
        if (i < tr1) d.train.push_back(pool[1][i].second);
    }
    for (int i = 0; i < std::max(te0, te1); ++i) {
        if (i < te0) d.test.push_back(pool[0][tr0 + i].second);
        if (i < te1) d.test.push_back(pool[1][tr1 + i].second);
    }
    return d;
}

} // namespace finray
