#pragma once

#include "finray/tactile.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace finray {

struct GraphLayout {
    int arrays = kArrays;
    int rows = kRows;
    int cols = kCols;
    bool inter_array = true;
};

using Edge = std::pair<int, int>; // (src, dst)

/// Directed edges: 8-neighbour pairs inside each array, plus each taxel
/// linked to the same-index taxel of every other array.
std::vector<Edge> build_edges(const GraphLayout& layout);

/// D^-1/2 (A + I) D^-1/2
Eigen::SparseMatrix<double, Eigen::RowMajor> normalize_adjacency(const std::vector<Edge>& edges, int node_count);

struct TactileGraph {
    int node_count = 0;
    Eigen::MatrixXd features; // node_count x d0
    std::vector<Edge> edges;
    Eigen::SparseMatrix<double, Eigen::RowMajor> a_hat;
};

/// Throws BadLayout unless taxels.size() matches the layout and the layout is
/// non-empty.
TactileGraph build_graph(const std::vector<double>& taxels, const GraphLayout& layout = {});
TactileGraph build_graph(const TactileFrame& frame);

/// Reuses a prebuilt topology with new node features.
TactileGraph with_features(const TactileGraph& topology, const Eigen::MatrixXd& features);
Eigen::MatrixXd frame_features(const TactileFrame& frame, double scale = 1.0);

struct GcnParams {
    std::vector<Eigen::MatrixXd> weights; // W1..W3
    Eigen::VectorXd readout;
    double bias = 0.0;
    // node features are multiplied by this before the first layer
    double input_scale = 1.0;

    std::vector<int> dims() const;
    std::size_t parameter_count() const;
};

GcnParams init_params(const std::vector<int>& dims, std::uint64_t seed);

struct ForwardPass {
    double logit = 0.0;
    double probability = 0.5;
    std::vector<Eigen::MatrixXd> pre;    // Z1..Z3
    std::vector<Eigen::MatrixXd> hidden; // H0..H3
    Eigen::VectorXd pooled;
};

ForwardPass gcn_forward(const GcnParams& p, const TactileGraph& g);

struct GcnGradients {
    std::vector<Eigen::MatrixXd> weights;
    Eigen::VectorXd readout;
    double bias = 0.0;

    static GcnGradients zeros_like(const GcnParams& p);
    GcnGradients& operator+=(const GcnGradients& o);
    GcnGradients& operator*=(double s);
};

/// Binary cross-entropy of one graph; adds its gradient into grad if given.
double sample_loss(const GcnParams& p, const TactileGraph& g, int label, GcnGradients* grad);

double grad_check(const GcnParams& p, const TactileGraph& g, int label, double epsilon);

struct SlipSample {
    TactileFrame frame;
    int label = 0;
};

struct SlipDataset {
    std::vector<SlipSample> train;
    std::vector<SlipSample> test;
};

struct TrainConfig {
    double learning_rate = 0.2;
    int epochs = 250;
    double l2_penalty = 1e-5;
    // heavy-ball momentum on the full-batch gradient; 0 gives plain descent
    double momentum = 0.9;
    std::uint64_t seed = 1;
    std::vector<int> hidden = {16, 16, 16};
    int threads = 1;
};

struct TrainResult {
    GcnParams params;
    std::vector<double> loss_history; // loss before each epoch's update
};

TrainResult train(const std::vector<SlipSample>& data, const TrainConfig& cfg);
TrainResult train(const std::vector<SlipSample>& data, const TrainConfig& cfg, GcnParams init);

double dataset_loss(const GcnParams& p, const std::vector<SlipSample>& data, double l2, GcnGradients* grad,
                    int threads = 1);

struct Evaluation {
    double accuracy = 0.0;
    // confusion[truth][predicted]
    std::array<std::array<std::size_t, 2>, 2> confusion{};
};

/// Probability 0.5 predicts class 0.
int predict(const GcnParams& p, const TactileFrame& frame);
double predict_probability(const GcnParams& p, const TactileFrame& frame);
Evaluation evaluate(const GcnParams& p, const std::vector<SlipSample>& data);

struct DatasetSpec {
    TraceSpec base;
    int train_size = 2100;
    int test_size = 700;
    // EMA applied to frames before labelling and as node features
    double filter_alpha = 0.2;
    // relative jitter applied to stable force and oscillation minimum
    double force_jitter = 0.35;
    std::uint64_t seed = 1;
};

/// Calibrates f_min on the base trace, then labels filtered frames from
/// jittered traces: below f_min -> 0, otherwise 1. Classes are balanced.
SlipDataset generate_dataset(const DatasetSpec& spec, SlipThresholdModel* calibration = nullptr);

} // namespace finray
