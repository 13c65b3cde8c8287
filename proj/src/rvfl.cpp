#include "halfratio/rvfl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "halfratio/baselines.hpp"
#include "halfratio/rng.hpp"
#include "halfratio/solver.hpp"

namespace halfratio {

const char* rvfl_solver_name(RvflSolver s) {
    switch (s) {
        case RvflSolver::Ridge: return "ridge";
        case RvflSolver::L1: return "l1";
        case RvflSolver::L1MinusL2: return "l1-l2";
        case RvflSolver::IrlsLp: return "irls-lp";
        case RvflSolver::HalfOverTwo: return "l12-over-l2";
    }
    return "unknown";
}

std::optional<RvflSolver> parse_rvfl_solver(const std::string& name) {
    if (name == "ridge" || name == "l2") return RvflSolver::Ridge;
    if (name == "l1") return RvflSolver::L1;
    if (name == "l1-l2" || name == "l1-l2-dca") return RvflSolver::L1MinusL2;
    if (name == "irls-lp" || name == "irls") return RvflSolver::IrlsLp;
    if (name == "l12-over-l2" || name == "l12l2" || name == "proposed")
        return RvflSolver::HalfOverTwo;
    return std::nullopt;
}

RvflModel make_rvfl_model(int input_dim, int hidden_nodes, Activation act, std::uint64_t seed) {
    if (input_dim < 1 || hidden_nodes < 0)
        throw std::invalid_argument("make_rvfl_model: bad dimensions");
    RvflModel model;
    model.activation = act;
    model.seed = seed;
    Rng rng(Rng::derive(seed, 71));
    model.W.resize(input_dim, hidden_nodes);
    for (int j = 0; j < hidden_nodes; ++j)
        for (int i = 0; i < input_dim; ++i) model.W(i, j) = 2.0 * rng.next_double() - 1.0;
    model.b_hidden.resize(hidden_nodes);
    for (int j = 0; j < hidden_nodes; ++j) model.b_hidden[j] = 2.0 * rng.next_double() - 1.0;
    return model;
}

Dataset load_csv_dataset(const std::string& path, int n_targets) {
    if (n_targets < 1) throw std::invalid_argument("load_csv_dataset: n_targets must be positive");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur.push_back(ch);
            }
        }
        out.push_back(cur);
        return out;
    };
    const std::size_t n_cols = split(line).size();
    if (n_cols <= static_cast<std::size_t>(n_targets))
        throw std::runtime_error(path + ": need at least one feature column");

    std::vector<std::vector<double>> rows;
    std::vector<int> bad_lines;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
        if (blank) continue;
        const auto cells = split(line);
        if (cells.size() != n_cols) {
            bad_lines.push_back(lineno);
            continue;
        }
        std::vector<double> row(n_cols);
        bool ok = true;
        for (std::size_t j = 0; j < n_cols; ++j) {
            try {
                std::size_t used = 0;
                row[j] = std::stod(cells[j], &used);
                while (used < cells[j].size() &&
                       std::isspace(static_cast<unsigned char>(cells[j][used])))
                    ++used;
                if (used != cells[j].size()) ok = false;
            } catch (...) {
                ok = false;
            }
        }
        if (!ok) {
            bad_lines.push_back(lineno);
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (!bad_lines.empty()) {
        std::ostringstream os;
        os << path << ": non-numeric rows at lines";
        for (int l : bad_lines) os << ' ' << l;
        throw std::runtime_error(os.str());
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    Dataset ds;
    const int d = static_cast<int>(n_cols) - n_targets;
    ds.X.resize(rows.size(), d);
    ds.Y.resize(rows.size(), n_targets);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < d; ++j) ds.X(i, j) = rows[i][j];
        for (int j = 0; j < n_targets; ++j) ds.Y(i, j) = rows[i][d + j];
    }
    return ds;
}

void split_dataset(Dataset& ds, double test_fraction, int folds, std::uint64_t seed) {
    if (!(test_fraction >= 0 && test_fraction < 1))
        throw std::invalid_argument("split_dataset: test_fraction must lie in [0, 1)");
    if (folds < 2) throw std::invalid_argument("split_dataset: need at least 2 folds");
    const int N = static_cast<int>(ds.rows());
    std::vector<int> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(Rng::derive(seed, 97));
    for (int i = N - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.next_below(static_cast<std::uint64_t>(i) + 1)]);
    const int n_test = static_cast<int>(std::floor(test_fraction * N));
    ds.test_idx.assign(perm.begin(), perm.begin() + n_test);
    ds.train_idx.assign(perm.begin() + n_test, perm.end());
    if (static_cast<int>(ds.train_idx.size()) < folds)
        throw std::invalid_argument("split_dataset: fewer training rows than folds");
    ds.folds.assign(folds, {});
    for (std::size_t i = 0; i < ds.train_idx.size(); ++i)
        ds.folds[i % folds].push_back(ds.train_idx[i]);
}

namespace {

MatrixXd rows_of(const MatrixXd& M, const std::vector<int>& idx) {
    MatrixXd out(idx.size(), M.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = M.row(idx[i]);
    return out;
}

} // namespace

MatrixXd build_features(const MatrixXd& X, const RvflModel& model) {
    if (X.cols() != model.W.rows())
        throw std::invalid_argument("build_features: feature dimension mismatch");
    const Eigen::Index N = X.rows();
    const Eigen::Index L = model.W.cols();
    MatrixXd H(N, L + X.cols());
    if (L > 0) {
        MatrixXd Z = X * model.W;
        Z.rowwise() += model.b_hidden.transpose();
        if (model.activation == Activation::Sigmoid)
            H.leftCols(L) = (1.0 + (-Z.array()).exp()).inverse();
        else
            H.leftCols(L) = Z.array().max(0.0);
    }
    H.rightCols(X.cols()) = X;
    return H;
}

void fit_preprocessing(RvflModel& model, const Dataset& ds) {
    if (ds.train_idx.empty()) throw std::invalid_argument("fit_preprocessing: empty training split");
    const MatrixXd Xt = rows_of(ds.X, ds.train_idx);
    const MatrixXd Yt = rows_of(ds.Y, ds.train_idx);
    model.feat_mean = Xt.colwise().mean();
    model.feat_std.resize(Xt.cols());
    for (Eigen::Index j = 0; j < Xt.cols(); ++j) {
        const double var =
            (Xt.col(j).array() - model.feat_mean[j]).square().sum() / Xt.rows();
        model.feat_std[j] = var > 0 ? std::sqrt(var) : 1.0;
    }
    model.target_mean = Yt.colwise().mean();
    model.feature_col_mean = build_features(standardize(Xt, model), model).colwise().mean();
}

MatrixXd standardize(const MatrixXd& X, const RvflModel& model) {
    if (model.feat_mean.size() != X.cols())
        throw std::invalid_argument("standardize: model has no statistics for this width");
    MatrixXd out = X;
    out.rowwise() -= model.feat_mean.transpose();
    out.array().rowwise() /= model.feat_std.transpose().array();
    return out;
}

MatrixXd train(const Dataset& ds, const std::vector<int>& rows, RvflModel& model, double lambda,
               RvflSolver solver) {
    if (rows.empty()) throw std::invalid_argument("train: empty row set");
    if (!(lambda >= 0)) throw std::invalid_argument("train: lambda must be nonnegative");
    const MatrixXd X = standardize(rows_of(ds.X, rows), model);
    MatrixXd Y = rows_of(ds.Y, rows);
    Y.rowwise() -= model.target_mean.transpose();
    MatrixXd H = build_features(X, model);
    H.rowwise() -= model.feature_col_mean.transpose();
    const Eigen::Index q = H.cols();

    MatrixXd beta(q, Y.cols());
    // ||H beta - y||^2 + lambda R = 2 (0.5||H beta - y||^2 + (lambda/2) R)
    const double zeta = std::max(lambda / 2.0, 1e-12);
    SolverConfig cfg;
    cfg.zeta = zeta;
    // regression designs are small; give the iterative solvers room to
    // actually converge instead of the benchmark 5n budget
    cfg.max_total_iters = std::max(5000, static_cast<int>(5 * q));

    for (Eigen::Index col = 0; col < Y.cols(); ++col) {
        ProblemInstance inst;
        inst.A = H;
        inst.b = Y.col(col);
        switch (solver) {
            case RvflSolver::Ridge: {
                MatrixXd M = H.transpose() * H;
                M.diagonal().array() += lambda;
                beta.col(col) = M.ldlt().solve(H.transpose() * Y.col(col));
                break;
            }
            case RvflSolver::L1:
                beta.col(col) = solve_l1(inst, zeta, cfg).x;
                break;
            case RvflSolver::L1MinusL2:
                beta.col(col) =
                    solve_l1_minus_l2_dca(inst, zeta, cfg, solve_l1(inst, zeta, cfg).x).x;
                break;
            case RvflSolver::IrlsLp:
                beta.col(col) =
                    solve_irls_lp(inst, 0.5, cfg, std::nullopt, IrlsMode::Penalized).x;
                break;
            case RvflSolver::HalfOverTwo: {
                const VectorXd x0 =
                    solve_l1_minus_l2_dca(inst, zeta, cfg, solve_l1(inst, zeta, cfg).x).x;
                beta.col(col) = admm_solve(inst, cfg, x0, x0, VectorXd::Zero(q)).x;
                break;
            }
        }
    }
    model.beta = beta;
    model.lambda = lambda;
    return beta;
}

double cross_validate(const Dataset& ds, RvflModel& model, const std::vector<double>& lambda_grid,
                      RvflSolver solver) {
    if (lambda_grid.empty()) throw std::invalid_argument("cross_validate: empty lambda grid");
    if (ds.folds.size() < 2) throw std::invalid_argument("cross_validate: dataset has no folds");
    for (const auto& f : ds.folds)
        if (f.empty()) throw std::invalid_argument("cross_validate: empty fold");

    std::vector<double> grid = lambda_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    double best_lambda = grid.front();
    double best_mse = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        double mse_sum = 0.0;
        for (std::size_t f = 0; f < ds.folds.size(); ++f) {
            std::vector<int> train_rows;
            for (std::size_t g = 0; g < ds.folds.size(); ++g)
                if (g != f) train_rows.insert(train_rows.end(), ds.folds[g].begin(),
                                              ds.folds[g].end());
            RvflModel fold_model = model;
            train(ds, train_rows, fold_model, lambda, solver);
            mse_sum += evaluate_mse(fold_model, rows_of(ds.X, ds.folds[f]),
                                    rows_of(ds.Y, ds.folds[f]));
        }
        const double mse = mse_sum / ds.folds.size();
        if (mse < best_mse) {
            best_mse = mse;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

MatrixXd predict(const RvflModel& model, const MatrixXd& X_raw) {
    if (model.beta.size() == 0) throw std::invalid_argument("predict: model is not trained");
    MatrixXd H = build_features(standardize(X_raw, model), model);
    H.rowwise() -= model.feature_col_mean.transpose();
    MatrixXd Y = H * model.beta;
    Y.rowwise() += model.target_mean.transpose();
    return Y;
}

double evaluate_mse(const RvflModel& model, const MatrixXd& X_raw, const MatrixXd& Y) {
    if (X_raw.rows() == 0) throw std::invalid_argument("evaluate_mse: empty test set");
    if (X_raw.rows() != Y.rows()) throw std::invalid_argument("evaluate_mse: shape mismatch");
    const MatrixXd P = predict(model, X_raw);
    return (P - Y).squaredNorm() / static_cast<double>(Y.rows() * Y.cols());
}

namespace {

void write_matrix(std::FILE* f, const char* tag, const MatrixXd& M) {
    std::fprintf(f, "%s %lld %lld\n", tag, static_cast<long long>(M.rows()),
                 static_cast<long long>(M.cols()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            std::fprintf(f, j + 1 == M.cols() ? "%.17g\n" : "%.17g ", M(i, j));
}

MatrixXd read_matrix(std::istream& in, const std::string& expect_tag) {
    std::string tag;
    long long r = 0, c = 0;
    if (!(in >> tag >> r >> c) || tag != expect_tag)
        throw std::runtime_error("rvfl model: expected section " + expect_tag);
    MatrixXd M(r, c);
    for (long long i = 0; i < r; ++i)
        for (long long j = 0; j < c; ++j)
            if (!(in >> M(i, j))) throw std::runtime_error("rvfl model: truncated " + expect_tag);
    return M;
}

} // namespace

void save_rvfl_model(const RvflModel& model, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "rvfl-model v1\n");
    std::fprintf(f, "activation %s\n",
                 model.activation == Activation::Sigmoid ? "sigmoid" : "relu");
    std::fprintf(f, "lambda %.17g\n", model.lambda);
    std::fprintf(f, "seed %llu\n", static_cast<unsigned long long>(model.seed));
    write_matrix(f, "W", model.W);
    write_matrix(f, "b", model.b_hidden);
    write_matrix(f, "beta", model.beta);
    write_matrix(f, "feat_mean", model.feat_mean);
    write_matrix(f, "feat_std", model.feat_std);
    write_matrix(f, "target_mean", model.target_mean);
    write_matrix(f, "feature_col_mean", model.feature_col_mean);
    std::fclose(f);
}

RvflModel load_rvfl_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string word, version;
    if (!(in >> word >> version) || word != "rvfl-model" || version != "v1")
        throw std::runtime_error(path + ": not a v1 rvfl model file");
    RvflModel model;
    std::string key, act;
    if (!(in >> key >> act) || key != "activation")
        throw std::runtime_error(path + ": missing activation");
    model.activation = act == "relu" ? Activation::Relu : Activation::Sigmoid;
    if (!(in >> key >> model.lambda) || key != "lambda")
        throw std::runtime_error(path + ": missing lambda");
    unsigned long long seed = 0;
    if (!(in >> key >> seed) || key != "seed") throw std::runtime_error(path + ": missing seed");
    model.seed = seed;
    model.W = read_matrix(in, "W");
    model.b_hidden = read_matrix(in, "b");
    model.beta = read_matrix(in, "beta");
    model.feat_mean = read_matrix(in, "feat_mean");
    model.feat_std = read_matrix(in, "feat_std");
    model.target_mean = read_matrix(in, "target_mean");
    model.feature_col_mean = read_matrix(in, "feature_col_mean");
    return model;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 15; ++i) grid.push_back(std::pow(10.0, -6.0 + 0.5 * i));
    return grid;
}

} // namespace halfratio
