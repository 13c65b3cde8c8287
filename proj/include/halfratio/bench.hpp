#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "halfratio/core.hpp"
#include "halfratio/gen.hpp"

namespace halfratio {

enum class Method { L1, L1MinusL2Dca, IrlsLp, HalfOverTwo };

const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

enum class FailureClass { None, ModelFailure, AlgorithmFailure };

const char* failure_class_name(FailureClass f);

/// One (method, cell, trial) outcome.
struct TrialRecord {
    int cell_index = 0;
    double param = 0.0; // r or F of the cell
    int sparsity = 0;
    int trial_index = 0;
    std::uint64_t seed = 0;
    Method method = Method::HalfOverTwo;
    VectorXd x_hat;
    double rel_error = 0.0;
    bool success = false;
    FailureClass failure_class = FailureClass::None;
    double snr_db_metric = 0.0; // -inf on exact recovery
    double wall_time_s = 0.0;
    int iterations = 0;
    bool errored = false;
    std::string error;
};

/// Grid of benchmark cells: one generator family, a list of r/F values and
/// sparsity levels, a method set, and a master seed split per trial.
struct ExperimentSpec {
    MatrixKind kind = MatrixKind::Gaussian;
    std::vector<double> params = {0.2};
    int m = 64;
    int n = 512;
    std::vector<int> sparsities = {5};
    int min_separation = 15;
    std::optional<double> snr_db;
    int trials = 50;
    std::uint64_t master_seed = 0;
    std::optional<double> zeta_override;
    std::vector<Method> methods = {Method::L1, Method::L1MinusL2Dca, Method::IrlsLp,
                                   Method::HalfOverTwo};
    int threads = 1;

    /// Benchmark regularization weight: 1e-5 noiseless, 8e-4 noisy DCT,
    /// 8e-3 noisy Gaussian, unless overridden.
    double zeta() const;
    void validate() const;
};

/// ||x_true - x_hat|| / ||x_true||. Throws on zero ground truth.
double rel_error(const VectorXd& x_true, const VectorXd& x_hat);

/// 10 log10(||x_hat - x_true||^2 / ||x_true||^2); lower is better, -inf on
/// exact recovery.
double snr_metric(const VectorXd& x_true, const VectorXd& x_hat);

struct Classification {
    double rel_error = 0.0;
    bool success = false;
    FailureClass failure_class = FailureClass::None;
    double snr_db_metric = 0.0;
};

/// Success when rel_error <= 1e-3; otherwise model failure when
/// H(x_hat) < H(x_true) at the benchmark zeta, algorithm failure otherwise.
Classification classify_trial(const ProblemInstance& inst, const VectorXd& x_hat, double zeta);

/// Executes methods x cells x trials with per-trial derived seeds. Every
/// method inside one trial sees the identical instance, and the
/// initialization chain (zero -> l1 -> DCA; pseudoinverse -> IRLS) is
/// computed once per trial. Individual trial errors are recorded, not fatal.
std::vector<TrialRecord> run_sweep(const ExperimentSpec& spec);

struct RateRow {
    double param;
    int sparsity;
    Method method;
    int trials;
    int errors;
    double success_rate;
    double model_failure_rate;
    double algorithm_failure_rate;
    double mean_iterations;
};

struct RankRow {
    double param;
    int sparsity;
    Method method;
    double mean_rank;
};

struct WinRow {
    double param;
    int sparsity;
    Method method; // competitor
    int proposed_wins;
    int method_wins;
};

struct AggregateTables {
    std::vector<RateRow> rates;
    std::vector<RankRow> ranks; // noisy sweeps only
    std::vector<WinRow> wins;   // proposed vs competitor, noisy sweeps only
};

/// Order-independent fold over the records: per-cell success/failure rates;
/// for noisy sweeps also mean ranks (ascending snr metric, ties averaged)
/// and pairwise winning counts against the proposed method (lower snr wins,
/// ties go to the competitor).
AggregateTables aggregate(const std::vector<TrialRecord>& records, const ExperimentSpec& spec);

void write_rates_csv(const std::string& path, const AggregateTables& tables);
void write_ranks_csv(const std::string& path, const AggregateTables& tables);
void write_wins_csv(const std::string& path, const AggregateTables& tables);
/// x = sparsity, y = success rate, one column block per method.
void write_plotdata_csv(const std::string& path, const AggregateTables& tables);
/// Per-trial rows; includes wall time, so excluded from determinism checks.
void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& records);

/// Key-value experiment file: one "key = value" pair per line, '#' comments.
/// Keys: kind, params, m, n, sparsity, separation, snr_db, trials, seed,
/// zeta, methods, threads. Lists are comma-separated; sparsity accepts
/// lo:step:hi ranges.
ExperimentSpec parse_experiment_file(const std::string& path);
void apply_experiment_key(ExperimentSpec& spec, const std::string& key, const std::string& value);

} // namespace halfratio
