#include "halfratio/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "halfratio/baselines.hpp"
#include "halfratio/rng.hpp"
#include "halfratio/solver.hpp"

namespace halfratio {

const char* method_name(Method m) {
    switch (m) {
        case Method::L1: return "l1";
        case Method::L1MinusL2Dca: return "l1-l2-dca";
        case Method::IrlsLp: return "irls-lp";
        case Method::HalfOverTwo: return "l12-over-l2";
    }
    return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
    if (name == "l1") return Method::L1;
    if (name == "l1-l2-dca" || name == "dca") return Method::L1MinusL2Dca;
    if (name == "irls-lp" || name == "irls") return Method::IrlsLp;
    if (name == "l12-over-l2" || name == "l12l2" || name == "proposed") return Method::HalfOverTwo;
    return std::nullopt;
}

const char* failure_class_name(FailureClass f) {
    switch (f) {
        case FailureClass::None: return "none";
        case FailureClass::ModelFailure: return "model_failure";
        case FailureClass::AlgorithmFailure: return "algorithm_failure";
    }
    return "unknown";
}

double ExperimentSpec::zeta() const {
    if (zeta_override) return *zeta_override;
    if (!snr_db) return 1e-5;
    return kind == MatrixKind::OversampledDct ? 8e-4 : 8e-3;
}

void ExperimentSpec::validate() const {
    if (params.empty() || sparsities.empty() || methods.empty())
        throw std::invalid_argument("ExperimentSpec: params, sparsities and methods must be nonempty");
    if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be positive");
    if (threads < 1) throw std::invalid_argument("ExperimentSpec: threads must be positive");
    for (int s : sparsities)
        if (static_cast<long long>(s) * min_separation > n)
            throw std::invalid_argument("ExperimentSpec: infeasible sparsity/separation cell");
}

double rel_error(const VectorXd& x_true, const VectorXd& x_hat) {
    const double nt = x_true.norm();
    if (nt == 0.0) throw std::invalid_argument("rel_error: zero ground truth");
    return (x_true - x_hat).norm() / nt;
}

double snr_metric(const VectorXd& x_true, const VectorXd& x_hat) {
    const double re = rel_error(x_true, x_hat);
    if (re == 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(re);
}

Classification classify_trial(const ProblemInstance& inst, const VectorXd& x_hat, double zeta) {
    if (!inst.ground_truth) throw std::invalid_argument("classify_trial: missing ground truth");
    const VectorXd& xt = *inst.ground_truth;
    Classification c;
    c.rel_error = rel_error(xt, x_hat);
    c.snr_db_metric = snr_metric(xt, x_hat);
    c.success = c.rel_error <= 1e-3;
    if (c.success) {
        c.failure_class = FailureClass::None;
    } else {
        const double h_hat = objective_h(inst, zeta, x_hat);
        const double h_true = objective_h(inst, zeta, xt);
        c.failure_class = h_hat < h_true ? FailureClass::ModelFailure : FailureClass::AlgorithmFailure;
    }
    return c;
}

namespace {

SolverConfig benchmark_config(const ProblemInstance& inst, double zeta) {
    SolverConfig cfg;
    cfg.zeta = zeta;
    cfg.max_total_iters = static_cast<int>(5 * inst.cols());
    return cfg;
}

struct TrialTask {
    int cell_index;
    double param;
    int sparsity;
    int trial_index;
};

void run_one_trial(const ExperimentSpec& spec, const TrialTask& task, TrialRecord* out) {
    const std::uint64_t trial_seed =
        Rng::derive(spec.master_seed, static_cast<std::uint64_t>(task.cell_index),
                    static_cast<std::uint64_t>(task.trial_index));
    GeneratorSpec gs;
    gs.kind = spec.kind;
    if (spec.kind == MatrixKind::Gaussian)
        gs.r = task.param;
    else
        gs.F = task.param;
    gs.m = spec.m;
    gs.n = spec.n;
    gs.sparsity = task.sparsity;
    gs.min_separation = spec.min_separation;
    gs.noise_db = spec.snr_db;
    gs.seed = trial_seed;

    const double zeta = spec.zeta();

    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
        TrialRecord& rec = out[mi];
        rec.cell_index = task.cell_index;
        rec.param = task.param;
        rec.sparsity = task.sparsity;
        rec.trial_index = task.trial_index;
        rec.seed = trial_seed;
        rec.method = spec.methods[mi];
    }

    ProblemInstance inst;
    try {
        inst = make_instance(gs);
    } catch (const std::exception& e) {
        for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
            out[mi].errored = true;
            out[mi].error = e.what();
        }
        return;
    }

    const SolverConfig cfg = benchmark_config(inst, zeta);

    // Initialization chain, computed at most once per trial: the l1 solution
    // seeds the DCA, the DCA (or IRLS, for noisy Gaussian cells) solution
    // seeds the proposed solver.
    std::optional<SolveResult> l1_sol, dca_sol, irls_sol;
    const bool noisy_gaussian = spec.snr_db && spec.kind == MatrixKind::Gaussian;
    const auto get_l1 = [&]() -> const SolveResult& {
        if (!l1_sol) l1_sol = solve_l1(inst, zeta, cfg);
        return *l1_sol;
    };
    const auto get_dca = [&]() -> const SolveResult& {
        if (!dca_sol) dca_sol = solve_l1_minus_l2_dca(inst, zeta, cfg, get_l1().x);
        return *dca_sol;
    };
    const auto get_irls = [&]() -> const SolveResult& {
        if (!irls_sol) irls_sol = solve_irls_lp(inst, 0.5, cfg, task.sparsity);
        return *irls_sol;
    };

    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
        TrialRecord& rec = out[mi];
        try {
            const auto t0 = std::chrono::steady_clock::now();
            SolveResult sol;
            switch (rec.method) {
                case Method::L1: sol = get_l1(); break;
                case Method::L1MinusL2Dca: sol = get_dca(); break;
                case Method::IrlsLp: sol = get_irls(); break;
                case Method::HalfOverTwo: {
                    const VectorXd x0 = noisy_gaussian ? get_irls().x : get_dca().x;
                    sol = admm_solve(inst, cfg, x0, x0, VectorXd::Zero(inst.cols()));
                    break;
                }
            }
            rec.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rec.x_hat = sol.x;
            rec.iterations = sol.outer_iters;
            const Classification c = classify_trial(inst, sol.x, zeta);
            rec.rel_error = c.rel_error;
            rec.success = c.success;
            rec.failure_class = c.failure_class;
            rec.snr_db_metric = c.snr_db_metric;
        } catch (const std::exception& e) {
            rec.errored = true;
            rec.error = e.what();
        }
    }
}

} // namespace

std::vector<TrialRecord> run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<TrialTask> tasks;
    int cell = 0;
    for (double param : spec.params)
        for (int s : spec.sparsities) {
            for (int t = 0; t < spec.trials; ++t) tasks.push_back({cell, param, s, t});
            ++cell;
        }

    const std::size_t n_methods = spec.methods.size();
    std::vector<TrialRecord> records(tasks.size() * n_methods);

    const int n_threads = std::max(1, std::min<int>(spec.threads, static_cast<int>(tasks.size())));
    if (n_threads == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i)
            run_one_trial(spec, tasks[i], &records[i * n_methods]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int w = 0; w < n_threads; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) return;
                    run_one_trial(spec, tasks[i], &records[i * n_methods]);
                }
            });
        for (auto& th : pool) th.join();
    }
    return records;
}

namespace {

struct CellKey {
    double param;
    int sparsity;
    bool operator<(const CellKey& o) const {
        if (param != o.param) return param < o.param;
        return sparsity < o.sparsity;
    }
};

} // namespace

AggregateTables aggregate(const std::vector<TrialRecord>& records, const ExperimentSpec& spec) {
    AggregateTables tables;
    if (records.empty()) return tables;

    std::map<CellKey, std::map<Method, std::vector<const TrialRecord*>>> cells;
    for (const auto& r : records) cells[{r.param, r.sparsity}][r.method].push_back(&r);

    for (auto& [key, by_method] : cells) {
        for (Method m : spec.methods) {
            const auto it = by_method.find(m);
            if (it == by_method.end()) continue;
            auto recs = it->second;
            std::sort(recs.begin(), recs.end(), [](const TrialRecord* a, const TrialRecord* b) {
                return a->trial_index < b->trial_index;
            });
            RateRow row{key.param, key.sparsity, m, 0, 0, 0.0, 0.0, 0.0, 0.0};
            int ok = 0;
            for (const TrialRecord* r : recs) {
                ++row.trials;
                if (r->errored) {
                    ++row.errors;
                    continue;
                }
                ++ok;
                row.mean_iterations += r->iterations;
                if (r->success)
                    row.success_rate += 1.0;
                else if (r->failure_class == FailureClass::ModelFailure)
                    row.model_failure_rate += 1.0;
                else
                    row.algorithm_failure_rate += 1.0;
            }
            if (ok > 0) {
                row.success_rate /= ok;
                row.model_failure_rate /= ok;
                row.algorithm_failure_rate /= ok;
                row.mean_iterations /= ok;
            }
            tables.rates.push_back(row);
        }

        if (!spec.snr_db) continue;

        // per-trial ranks by ascending snr metric, ties averaged
        std::map<Method, double> rank_sum;
        std::map<Method, int> rank_count;
        std::map<Method, std::pair<int, int>> win_count; // (proposed wins, competitor wins)
        for (int t = 0; t < spec.trials; ++t) {
            std::vector<std::pair<double, Method>> entries;
            for (Method m : spec.methods) {
                const auto it = by_method.find(m);
                if (it == by_method.end()) continue;
                for (const TrialRecord* r : it->second)
                    if (r->trial_index == t && !r->errored)
                        entries.push_back({r->snr_db_metric, m});
            }
            if (entries.empty()) continue;
            std::stable_sort(entries.begin(), entries.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (std::size_t i = 0; i < entries.size();) {
                std::size_t j = i;
                while (j < entries.size() && entries[j].first == entries[i].first) ++j;
                const double avg_rank = 0.5 * static_cast<double>(i + j - 1) + 1.0;
                for (std::size_t k = i; k < j; ++k) {
                    rank_sum[entries[k].second] += avg_rank;
                    rank_count[entries[k].second] += 1;
                }
                i = j;
            }
            // pairwise wins vs the proposed method: lower snr wins, ties to the competitor
            double proposed_snr = 0.0;
            bool have_proposed = false;
            for (const auto& e : entries)
                if (e.second == Method::HalfOverTwo) {
                    proposed_snr = e.first;
                    have_proposed = true;
                }
            if (have_proposed)
                for (const auto& e : entries) {
                    if (e.second == Method::HalfOverTwo) continue;
                    auto& wc = win_count[e.second];
                    if (proposed_snr < e.first)
                        ++wc.first;
                    else
                        ++wc.second;
                }
        }
        for (Method m : spec.methods) {
            if (rank_count.count(m))
                tables.ranks.push_back({key.param, key.sparsity, m, rank_sum[m] / rank_count[m]});
            if (m != Method::HalfOverTwo && win_count.count(m))
                tables.wins.push_back(
                    {key.param, key.sparsity, m, win_count[m].first, win_count[m].second});
        }
    }
    return tables;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file " + path);
    return out;
}

} // namespace

void write_rates_csv(const std::string& path, const AggregateTables& tables) {
    auto out = open_out(path);
    out << "param,sparsity,method,trials,errors,success_rate,model_failure_rate,"
           "algorithm_failure_rate,mean_iterations\n";
    for (const auto& r : tables.rates)
        out << fmt(r.param) << ',' << r.sparsity << ',' << method_name(r.method) << ',' << r.trials
            << ',' << r.errors << ',' << fmt(r.success_rate) << ',' << fmt(r.model_failure_rate)
            << ',' << fmt(r.algorithm_failure_rate) << ',' << fmt(r.mean_iterations) << '\n';
}

void write_ranks_csv(const std::string& path, const AggregateTables& tables) {
    auto out = open_out(path);
    out << "param,sparsity,method,mean_rank\n";
    for (const auto& r : tables.ranks)
        out << fmt(r.param) << ',' << r.sparsity << ',' << method_name(r.method) << ','
            << fmt(r.mean_rank) << '\n';
}

void write_wins_csv(const std::string& path, const AggregateTables& tables) {
    auto out = open_out(path);
    out << "param,sparsity,method,proposed_wins,method_wins\n";
    for (const auto& r : tables.wins)
        out << fmt(r.param) << ',' << r.sparsity << ',' << method_name(r.method) << ','
            << r.proposed_wins << ',' << r.method_wins << '\n';
}

void write_plotdata_csv(const std::string& path, const AggregateTables& tables) {
    auto out = open_out(path);
    out << "param,sparsity,method,success_rate\n";
    for (const auto& r : tables.rates)
        out << fmt(r.param) << ',' << r.sparsity << ',' << method_name(r.method) << ','
            << fmt(r.success_rate) << '\n';
}

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& records) {
    auto out = open_out(path);
    out << "cell,param,sparsity,trial,seed,method,rel_error,success,failure_class,snr_db,"
           "iterations,wall_time_s,error\n";
    for (const auto& r : records) {
        out << r.cell_index << ',' << fmt(r.param) << ',' << r.sparsity << ',' << r.trial_index
            << ',' << r.seed << ',' << method_name(r.method) << ',';
        if (r.errored)
            out << ",,,," << ",\"" << r.error << "\"\n";
        else
            out << fmt(r.rel_error) << ',' << (r.success ? 1 : 0) << ','
                << failure_class_name(r.failure_class) << ',' << fmt(r.snr_db_metric) << ','
                << r.iterations << ',' << fmt(r.wall_time_s) << ",\n";
    }
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split_list(s)) {
        const auto c1 = tok.find(':');
        if (c1 == std::string::npos) {
            out.push_back(std::stoi(tok));
            continue;
        }
        const auto c2 = tok.find(':', c1 + 1);
        if (c2 == std::string::npos) throw std::invalid_argument("bad range " + tok);
        const int lo = std::stoi(tok.substr(0, c1));
        const int step = std::stoi(tok.substr(c1 + 1, c2 - c1 - 1));
        const int hi = std::stoi(tok.substr(c2 + 1));
        if (step < 1) throw std::invalid_argument("bad range step in " + tok);
        for (int v = lo; v <= hi; v += step) out.push_back(v);
    }
    return out;
}

} // namespace

void apply_experiment_key(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    if (key == "kind") {
        if (value == "gaussian")
            spec.kind = MatrixKind::Gaussian;
        else if (value == "dct")
            spec.kind = MatrixKind::OversampledDct;
        else
            throw std::invalid_argument("unknown generator kind " + value);
    } else if (key == "params") {
        spec.params.clear();
        for (const auto& tok : split_list(value)) spec.params.push_back(std::stod(tok));
    } else if (key == "m") {
        spec.m = std::stoi(value);
    } else if (key == "n") {
        spec.n = std::stoi(value);
    } else if (key == "sparsity") {
        spec.sparsities = parse_int_list(value);
    } else if (key == "separation") {
        spec.min_separation = std::stoi(value);
    } else if (key == "snr_db") {
        spec.snr_db = std::stod(value);
    } else if (key == "trials") {
        spec.trials = std::stoi(value);
    } else if (key == "seed") {
        spec.master_seed = std::stoull(value);
    } else if (key == "zeta") {
        spec.zeta_override = std::stod(value);
    } else if (key == "threads") {
        spec.threads = std::stoi(value);
    } else if (key == "methods") {
        spec.methods.clear();
        for (const auto& tok : split_list(value)) {
            const auto m = parse_method(tok);
            if (!m) throw std::invalid_argument("unknown method " + tok);
            spec.methods.push_back(*m);
        }
    } else {
        throw std::invalid_argument("unknown experiment key " + key);
    }
}

ExperimentSpec parse_experiment_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open experiment file " + path);
    ExperimentSpec spec;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = true;
            for (char ch : line)
                if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
            if (blank) continue;
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        apply_experiment_key(spec, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return spec;
}

} // namespace halfratio
