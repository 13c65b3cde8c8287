#include "halfratio/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "halfratio/analysis.hpp"
#include "halfratio/baselines.hpp"
#include "halfratio/bench.hpp"
#include "halfratio/core.hpp"
#include "halfratio/rvfl.hpp"
#include "halfratio/solver.hpp"

namespace fs = std::filesystem;

namespace halfratio::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("missing input file: " + path);
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

MatrixXd load_matrix_file(const std::string& path) {
    require_file(path);
    std::ifstream in(path);
    Eigen::Index m = 0, n = 0;
    if (!(in >> m >> n) || m < 1 || n < 1)
        throw std::runtime_error(path + ": expected header 'm n'");
    MatrixXd A(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (!(in >> A(i, j))) throw std::runtime_error(path + ": truncated matrix");
    return A;
}

struct GridSpec {
    double lo = -15.0, step = 0.01, hi = 25.0;
};

GridSpec parse_grid(const std::string& s) {
    GridSpec g;
    const auto c1 = s.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : s.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw UsageError("grid must be lo:step:hi, got " + s);
    g.lo = std::stod(s.substr(0, c1));
    g.step = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    g.hi = std::stod(s.substr(c2 + 1));
    return g;
}

std::vector<double> parse_family(const std::string& value, MatrixKind kind) {
    std::string v = value;
    const std::string prefix = kind == MatrixKind::Gaussian ? "r=" : "F=";
    if (v.rfind(prefix, 0) == 0) v = v.substr(prefix.size());
    std::vector<double> out;
    std::string cur;
    for (char ch : v + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (out.empty()) throw UsageError("empty parameter list: " + value);
    return out;
}

void print_solver_config(const SolverConfig& c) {
    std::printf("zeta %.10g\nrho0 %.10g\ngamma0 %.10g\neps_out %.10g\neps_inner %.10g\n"
                "max_outer %d\nmax_inner %d\nrel_change_tol %.10g\nmax_total_iters %s\n"
                "adaptive_penalty %s\ny_strategy %s\nwarm_start_inner %d\n",
                c.zeta, c.rho0, c.gamma0, c.eps_out, c.eps_inner, c.max_outer, c.max_inner,
                c.rel_change_tol, c.max_total_iters > 0 ? std::to_string(c.max_total_iters).c_str()
                                                        : "auto(5n)",
                c.adaptive_penalty ? "residual_balance" : "off",
                c.y_strategy == YStrategy::Auto
                    ? "auto"
                    : (c.y_strategy == YStrategy::SmwFactorization ? "smw" : "cg"),
                c.warm_start_inner ? 1 : 0);
}

void print_experiment_spec(const ExperimentSpec& s) {
    std::printf("kind %s\nparams", s.kind == MatrixKind::Gaussian ? "gaussian" : "dct");
    for (double p : s.params) std::printf(" %.10g", p);
    std::printf("\nm %d\nn %d\nsparsity", s.m, s.n);
    for (int v : s.sparsities) std::printf(" %d", v);
    std::printf("\nseparation %d\ntrials %d\nseed %llu\nzeta %.10g\nthreads %d\nmethods",
                s.min_separation, s.trials, static_cast<unsigned long long>(s.master_seed),
                s.zeta(), s.threads);
    for (Method m : s.methods) std::printf(" %s", method_name(m));
    if (s.snr_db) std::printf("\nsnr_db %.10g", *s.snr_db);
    std::printf("\n");
}

int cmd_solve(const std::string& instance_path, const std::string& method,
              SolverConfig cfg, bool adaptive_off, const std::string& out, bool print_config) {
    if (adaptive_off) cfg.adaptive_penalty.reset();
    if (print_config) {
        print_solver_config(cfg);
        return 0;
    }
    require_file(instance_path);
    const ProblemInstance inst = load_instance(instance_path);
    SolveResult sol;
    if (method == "l12-over-l2" || method == "proposed") {
        sol = admm_solve(inst, cfg);
    } else if (method == "l1") {
        sol = solve_l1(inst, cfg.zeta, cfg);
    } else if (method == "l1-l2-dca") {
        sol = solve_l1_minus_l2_dca(inst, cfg.zeta, cfg,
                                    solve_l1(inst, cfg.zeta, cfg).x);
    } else if (method == "irls-lp") {
        sol = solve_irls_lp(inst, 0.5, cfg);
    } else {
        throw UsageError("unknown method: " + method);
    }

    const int nnz = static_cast<int>((sol.x.array().abs() > 1e-6).count());
    std::printf("termination %s\nouter_iters %d\ninner_iters %d\nobjective %.10g\nnnz %d\n",
                to_string(sol.termination), sol.outer_iters, sol.total_inner_iters,
                objective_h(inst, cfg.zeta, sol.x), nnz);
    if (inst.ground_truth)
        std::printf("rel_error %.10g\n", rel_error(*inst.ground_truth, sol.x));

    if (!out.empty()) {
        const fs::path dir = ensure_out_dir(out);
        std::ofstream xs(dir / "solution.txt");
        xs.precision(17);
        for (Eigen::Index i = 0; i < sol.x.size(); ++i) xs << sol.x[i] << "\n";
        std::ofstream diag(dir / "diagnostics.txt");
        diag.precision(12);
        diag << "termination " << to_string(sol.termination) << "\n"
             << "outer_iters " << sol.outer_iters << "\n"
             << "total_inner_iters " << sol.total_inner_iters << "\n"
             << "objective " << objective_h(inst, cfg.zeta, sol.x) << "\n"
             << "nnz " << nnz << "\n";
        std::ofstream tr(dir / "objective_trace.csv");
        tr.precision(12);
        tr << "iter,objective,lagrangian\n";
        for (std::size_t k = 0; k < sol.objective_trace.size(); ++k)
            tr << (k + 1) << ',' << sol.objective_trace[k] << ','
               << sol.lagrangian_trace[k + 1] << "\n";
    }
    return 0;
}

int cmd_toy(const std::string& grid, const std::string& out) {
    const GridSpec g = parse_grid(grid);
    const ToyScanResult res = toy_example_scan(g.lo, g.step, g.hi);
    std::printf("best_sigma_ratio %.10g\nbest_sigma_l1 %.10g\nbest_sigma_l1_minus_l2 %.10g\n"
                "max_feasibility_violation %.3e\n",
                res.best_sigma_ratio, res.best_sigma_l1, res.best_sigma_l1_minus_l2,
                res.max_feasibility_violation);
    if (!out.empty()) {
        const fs::path dir = ensure_out_dir(out);
        std::ofstream csv(dir / "toy_scan.csv");
        csv.precision(12);
        csv << "sigma,ratio_half_over_two,l1,l1_minus_l2\n";
        for (const auto& row : res.table)
            csv << row.sigma << ',' << row.ratio_half_over_two << ',' << row.l1 << ','
                << row.l1_minus_l2 << "\n";
    }
    return 0;
}

int cmd_bench(ExperimentSpec spec, const std::string& out, bool print_config) {
    if (print_config) {
        print_experiment_spec(spec);
        return 0;
    }
    spec.validate();
    const auto records = run_sweep(spec);
    const auto tables = aggregate(records, spec);
    const fs::path dir = ensure_out_dir(out);
    write_rates_csv((dir / "rates.csv").string(), tables);
    write_plotdata_csv((dir / "plotdata.csv").string(), tables);
    if (spec.snr_db) {
        write_ranks_csv((dir / "ranks.csv").string(), tables);
        write_wins_csv((dir / "wins.csv").string(), tables);
    }
    write_trials_csv((dir / "trials.csv").string(), records);
    int errors = 0;
    for (const auto& r : records) errors += r.errored ? 1 : 0;
    std::printf("trials %zu errors %d -> %s\n", records.size(), errors, dir.string().c_str());
    return 0;
}

int cmd_nsp_check(const std::string& matrix_path, int s, double p, double c, int samples) {
    const MatrixXd A = load_matrix_file(matrix_path);
    const EnspCertificate cert = check_ensp(A, s, p, c, samples);
    std::printf("holds %d\nvacuous %d\nsampled %d\nworst_margin %.6e\n", cert.holds ? 1 : 0,
                cert.vacuous ? 1 : 0, cert.sampled ? 1 : 0, cert.worst_margin);
    if (cert.witness) {
        std::printf("witness_support");
        for (int i : cert.witness->second) std::printf(" %d", i);
        std::printf("\n");
    }
    return 0;
}

int cmd_rvfl_train(const std::string& data, int targets, int hidden, const std::string& solver,
                   double test_frac, int folds, std::uint64_t seed, double lambda,
                   const std::string& lambda_grid, const std::string& out) {
    require_file(data);
    const auto sv = parse_rvfl_solver(solver);
    if (!sv) throw UsageError("unknown rvfl solver: " + solver);
    Dataset ds = load_csv_dataset(data, targets);
    split_dataset(ds, test_frac, folds, seed);
    RvflModel model = make_rvfl_model(static_cast<int>(ds.X.cols()), hidden, Activation::Sigmoid,
                                      seed);
    fit_preprocessing(model, ds);

    double chosen = lambda;
    if (lambda < 0) {
        std::vector<double> grid;
        if (lambda_grid.empty()) {
            grid = default_lambda_grid();
        } else {
            std::string cur;
            for (char ch : lambda_grid + ",") {
                if (ch == ',') {
                    if (!cur.empty()) grid.push_back(std::stod(cur));
                    cur.clear();
                } else {
                    cur.push_back(ch);
                }
            }
        }
        chosen = cross_validate(ds, model, grid, *sv);
    }
    train(ds, ds.train_idx, model, chosen, *sv);

    const fs::path dir = ensure_out_dir(out);
    save_rvfl_model(model, (dir / "model.txt").string());
    double test_mse = std::numeric_limits<double>::quiet_NaN();
    if (!ds.test_idx.empty()) {
        MatrixXd Xt(ds.test_idx.size(), ds.X.cols()), Yt(ds.test_idx.size(), ds.Y.cols());
        for (std::size_t i = 0; i < ds.test_idx.size(); ++i) {
            Xt.row(i) = ds.X.row(ds.test_idx[i]);
            Yt.row(i) = ds.Y.row(ds.test_idx[i]);
        }
        test_mse = evaluate_mse(model, Xt, Yt);
    }
    const int nnz = static_cast<int>((model.beta.array().abs() > 1e-6).count());
    std::printf("lambda %.10g\nbeta_nnz %d\n", chosen, nnz);
    if (!std::isnan(test_mse)) std::printf("test_mse %.10g\n", test_mse);
    std::ofstream metrics(dir / "metrics.txt");
    metrics.precision(12);
    metrics << "solver " << rvfl_solver_name(*sv) << "\nlambda " << chosen << "\nbeta_nnz " << nnz
            << "\ntest_mse " << test_mse << "\n";
    return 0;
}

int cmd_rvfl_eval(const std::string& model_path, const std::string& data, int targets) {
    require_file(model_path);
    require_file(data);
    const RvflModel model = load_rvfl_model(model_path);
    const Dataset ds = load_csv_dataset(data, targets);
    std::printf("mse %.10g\n", evaluate_mse(model, ds.X, ds.Y));
    return 0;
}

} // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"scale-invariant l1/2-over-l2 sparse recovery toolkit"};
    app.require_subcommand(1);

    // solve
    auto* solve = app.add_subcommand("solve", "run one solver on an instance file");
    std::string instance_path, method = "l12-over-l2", solve_out;
    SolverConfig cfg;
    bool adaptive_off = false, print_cfg = false;
    solve->add_option("--instance", instance_path, "instance file (text format)");
    solve->add_option("--method", method, "l12-over-l2 | l1 | l1-l2-dca | irls-lp");
    solve->add_option("--zeta", cfg.zeta, "regularization weight");
    solve->add_option("--rho", cfg.rho0, "outer penalty");
    solve->add_option("--gamma", cfg.gamma0, "inner penalty");
    solve->add_option("--max-outer", cfg.max_outer, "outer iteration cap");
    solve->add_option("--max-inner", cfg.max_inner, "inner iteration cap");
    solve->add_option("--eps-out", cfg.eps_out, "outer tolerance");
    solve->add_option("--eps-inner", cfg.eps_inner, "inner tolerance");
    solve->add_flag("--no-adaptive", adaptive_off, "disable residual balancing");
    solve->add_option("--out", solve_out, "output directory");
    solve->add_flag("--print-config", print_cfg, "print effective defaults and exit");

    // toy
    auto* toy = app.add_subcommand("toy", "scan the demonstration family over sigma");
    std::string grid = "-15:0.01:25", toy_out;
    toy->add_option("--grid", grid, "lo:step:hi (must cover [-15, 25])");
    toy->add_option("--out", toy_out, "output directory");

    // bench
    ExperimentSpec bspec;
    std::string bench_out = "bench-out", gauss_param, dct_param, sparsity_range, methods_csv,
                config_file;
    double snr_db = 50.0;
    bool bench_print = false;
    const auto add_bench_opts = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_file, "experiment spec file (key = value)");
        cmd->add_option("--gaussian", gauss_param, "Gaussian family, e.g. r=0.2 or r=0.2,0.6");
        cmd->add_option("--dct", dct_param, "DCT family, e.g. F=10 or F=5,10,20");
        cmd->add_option("--sparsity", sparsity_range, "list or lo:step:hi");
        cmd->add_option("--m", bspec.m, "rows");
        cmd->add_option("--n", bspec.n, "columns");
        cmd->add_option("--separation", bspec.min_separation, "minimum support separation");
        cmd->add_option("--trials", bspec.trials, "trials per cell");
        cmd->add_option("--seed", bspec.master_seed, "master seed");
        cmd->add_option_function<double>(
            "--zeta", [&bspec](const double& v) { bspec.zeta_override = v; },
            "override the benchmark zeta");
        cmd->add_option("--methods", methods_csv, "comma list: l1,l1-l2-dca,irls-lp,l12-over-l2");
        cmd->add_option("--threads", bspec.threads, "worker threads");
        cmd->add_option("--out", bench_out, "output directory");
        cmd->add_flag("--print-config", bench_print, "print effective spec and exit");
    };
    auto* bench_nl = app.add_subcommand("bench-noiseless", "noiseless recovery sweep");
    add_bench_opts(bench_nl);
    auto* bench_ny = app.add_subcommand("bench-noisy", "noisy recovery sweep (snr metric)");
    add_bench_opts(bench_ny);
    bench_ny->add_option("--snr-db", snr_db, "measurement SNR in dB");

    // nsp-check
    auto* nsp = app.add_subcommand("nsp-check", "brute-force eNSP certificate");
    std::string matrix_path;
    int nsp_s = 1, nsp_samples = 20000;
    double nsp_p = 1.0, nsp_c = 0.5;
    nsp->add_option("--matrix", matrix_path, "matrix file: header 'm n' then rows")->required();
    nsp->add_option("--s", nsp_s, "order");
    nsp->add_option("--p", nsp_p, "exponent in (0, 1]");
    nsp->add_option("--c", nsp_c, "parameter in (0, 1)");
    nsp->add_option("--samples", nsp_samples, "kernel-sphere samples");

    // rvfl-train / rvfl-eval
    auto* rtrain = app.add_subcommand("rvfl-train", "train an RVFL regressor");
    std::string rvfl_data, rvfl_solver = "l12-over-l2", rvfl_out = "rvfl-out", lambda_grid_csv;
    int rvfl_targets = 1, rvfl_hidden = 100, rvfl_folds = 3;
    double rvfl_test_frac = 0.3, rvfl_lambda = -1.0;
    std::uint64_t rvfl_seed = 0;
    rtrain->add_option("--data", rvfl_data, "CSV with header; last columns are targets")
        ->required();
    rtrain->add_option("--targets", rvfl_targets, "number of target columns");
    rtrain->add_option("--hidden", rvfl_hidden, "hidden nodes");
    rtrain->add_option("--solver", rvfl_solver, "ridge | l1 | l1-l2 | irls-lp | l12-over-l2");
    rtrain->add_option("--test-frac", rvfl_test_frac, "held-out fraction");
    rtrain->add_option("--folds", rvfl_folds, "CV folds");
    rtrain->add_option("--seed", rvfl_seed, "seed");
    rtrain->add_option("--lambda", rvfl_lambda, "fixed lambda (skips CV)");
    rtrain->add_option("--lambda-grid", lambda_grid_csv, "comma list for CV");
    rtrain->add_option("--out", rvfl_out, "output directory");

    auto* reval = app.add_subcommand("rvfl-eval", "evaluate a saved RVFL model");
    std::string eval_model, eval_data;
    int eval_targets = 1;
    reval->add_option("--model", eval_model, "model file")->required();
    reval->add_option("--data", eval_data, "CSV dataset")->required();
    reval->add_option("--targets", eval_targets, "number of target columns");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed())
            return cmd_solve(instance_path, method, cfg, adaptive_off, solve_out, print_cfg);
        if (toy->parsed()) return cmd_toy(grid, toy_out);
        if (bench_nl->parsed() || bench_ny->parsed()) {
            if (!config_file.empty()) {
                require_file(config_file);
                bspec = parse_experiment_file(config_file);
            }
            if (!gauss_param.empty()) {
                bspec.kind = MatrixKind::Gaussian;
                bspec.params = parse_family(gauss_param, MatrixKind::Gaussian);
            }
            if (!dct_param.empty()) {
                bspec.kind = MatrixKind::OversampledDct;
                bspec.params = parse_family(dct_param, MatrixKind::OversampledDct);
            }
            if (!sparsity_range.empty()) apply_experiment_key(bspec, "sparsity", sparsity_range);
            if (!methods_csv.empty()) apply_experiment_key(bspec, "methods", methods_csv);
            if (bench_ny->parsed()) bspec.snr_db = snr_db;
            return cmd_bench(bspec, bench_out, bench_print);
        }
        if (nsp->parsed()) return cmd_nsp_check(matrix_path, nsp_s, nsp_p, nsp_c, nsp_samples);
        if (rtrain->parsed())
            return cmd_rvfl_train(rvfl_data, rvfl_targets, rvfl_hidden, rvfl_solver,
                                  rvfl_test_frac, rvfl_folds, rvfl_seed, rvfl_lambda,
                                  lambda_grid_csv, rvfl_out);
        if (reval->parsed()) return cmd_rvfl_eval(eval_model, eval_data, eval_targets);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}

} // namespace halfratio::cli
