#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "halfratio/core.hpp"

namespace halfratio {

enum class Activation { Sigmoid, Relu };

enum class RvflSolver { Ridge, L1, L1MinusL2, IrlsLp, HalfOverTwo };

const char* rvfl_solver_name(RvflSolver s);
std::optional<RvflSolver> parse_rvfl_solver(const std::string& name);

/// Random-feature regression model: fixed random hidden weights/biases, a
/// direct input link, and trained output weights beta (one column per
/// target). Feature standardization statistics learned on the training
/// split are stored with the model.
struct RvflModel {
    MatrixXd W;        // d x L random hidden weights
    VectorXd b_hidden; // length L
    Activation activation = Activation::Sigmoid;
    MatrixXd beta;     // (L + d) x m output weights
    double lambda = 0.0;
    std::uint64_t seed = 0;

    VectorXd feat_mean; // length d, from the training split
    VectorXd feat_std;  // length d
    VectorXd target_mean;     // length m
    VectorXd feature_col_mean; // length L + d: train-split column means of H

    int hidden_nodes() const { return static_cast<int>(W.cols()); }
    int input_dim() const { return static_cast<int>(W.rows()); }
};

/// Hidden weights and biases drawn i.i.d. from U(-1, 1).
RvflModel make_rvfl_model(int input_dim, int hidden_nodes, Activation act, std::uint64_t seed);

struct Dataset {
    MatrixXd X; // N x d
    MatrixXd Y; // N x m
    std::vector<int> train_idx, test_idx;
    std::vector<std::vector<int>> folds; // CV folds over the training split

    Eigen::Index rows() const { return X.rows(); }
};

/// CSV ingestion: header row, numeric cells, last n_targets columns are the
/// targets. Rows with non-numeric cells are rejected with their line numbers.
Dataset load_csv_dataset(const std::string& path, int n_targets);

/// Deterministic shuffled split + k folds over the training part.
void split_dataset(Dataset& ds, double test_fraction, int folds, std::uint64_t seed);

/// Enhanced feature matrix [a(XW + 1 b^T) | X]; X must already be on the
/// model's standardized scale when the model carries statistics.
MatrixXd build_features(const MatrixXd& X, const RvflModel& model);

/// Learns the standardization statistics (input scale, target means, and
/// the train-split column means of H used for the centered regression)
/// from the rows in train_idx.
void fit_preprocessing(RvflModel& model, const Dataset& ds);
MatrixXd standardize(const MatrixXd& X, const RvflModel& model);

/// Trains output weights on the given rows by minimizing
/// ||H_c beta - Y_c||^2 + lambda R(beta) per target column, where H_c and
/// Y_c are column-centered with the training statistics (the centered
/// formulation of a model with an unpenalized intercept); the solvers reuse
/// the 0.5||.||^2 convention internally (zeta = lambda / 2).
MatrixXd train(const Dataset& ds, const std::vector<int>& rows, RvflModel& model, double lambda,
               RvflSolver solver);

/// Mean validation MSE over the folds per lambda; returns the grid argmin
/// (ties resolved toward the smaller lambda).
double cross_validate(const Dataset& ds, RvflModel& model, const std::vector<double>& lambda_grid,
                      RvflSolver solver);

/// Mean over rows and target columns of the squared prediction error.
double evaluate_mse(const RvflModel& model, const MatrixXd& X_raw, const MatrixXd& Y);

MatrixXd predict(const RvflModel& model, const MatrixXd& X_raw);

/// Plain-text model dump with a version header.
void save_rvfl_model(const RvflModel& model, const std::string& path);
RvflModel load_rvfl_model(const std::string& path);

/// Logarithmic default grid 1e-6 .. 10, 15 points.
std::vector<double> default_lambda_grid();

} // namespace halfratio
