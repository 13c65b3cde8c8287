#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "halfratio/bench.hpp"
#include "halfratio/rng.hpp"

using namespace halfratio;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

TrialRecord make_record(double param, int sparsity, int trial, Method m, double snr,
                        bool success) {
    TrialRecord r;
    r.param = param;
    r.sparsity = sparsity;
    r.trial_index = trial;
    r.method = m;
    r.snr_db_metric = snr;
    r.success = success;
    r.rel_error = success ? 1e-6 : 0.5;
    r.failure_class = success ? FailureClass::None : FailureClass::AlgorithmFailure;
    return r;
}

} // namespace

TEST_SUITE_BEGIN("bench");

TEST_CASE("relative error basics") {
    VectorXd t(3);
    t << 1, -2, 0;
    CHECK(rel_error(t, t) == 0.0);
    CHECK(rel_error(t, VectorXd::Zero(3)) == 1.0);
    CHECK(rel_error(t, VectorXd(1.001 * t)) == doctest::Approx(0.001).epsilon(1e-9));
    CHECK_THROWS_AS(rel_error(VectorXd::Zero(3), t), std::invalid_argument);
}

TEST_CASE("snr metric in decibels") {
    VectorXd t(4);
    t << 3, -1, 2, 0.5;
    CHECK(snr_metric(t, VectorXd(0.9 * t)) == doctest::Approx(-20.0).epsilon(1e-12));
    CHECK(snr_metric(t, t) == -std::numeric_limits<double>::infinity());
    const double re = std::pow(10.0, -45.0 / 20.0);
    VectorXd off = t;
    off[0] += re * t.norm();
    CHECK(snr_metric(t, off) == doctest::Approx(-45.0).epsilon(1e-12));
}

TEST_CASE("trial classification") {
    // 1x2 system so that points with lower and higher objective than the
    // truth are easy to construct
    ProblemInstance inst;
    inst.A.resize(1, 2);
    inst.A << 1, 0;
    inst.b = VectorXd::Constant(1, 1.0);
    VectorXd truth(2);
    truth << 1, 0;
    inst.ground_truth = truth;
    const double zeta = 1e-2;

    const Classification exact = classify_trial(inst, truth, zeta);
    CHECK(exact.success);
    CHECK(exact.failure_class == FailureClass::None);

    // same residual, spread support: ratio above 1, objective higher
    VectorXd worse(2);
    worse << 0.6, 0.4;
    const Classification alg = classify_trial(inst, worse, zeta);
    CHECK(!alg.success);
    CHECK(alg.failure_class == FailureClass::AlgorithmFailure);

    // the zero vector scores zeta * 1 while the truth scores zeta + 0.5:
    // lower objective but still a failed recovery
    ProblemInstance hard = inst;
    hard.b = VectorXd::Constant(1, 0.0);
    VectorXd far(2);
    far << 0, 1e6; // huge single spike: ratio 1, tiny residual share
    hard.A << 1, 1e-9;
    const double h_far = objective_h(hard, zeta, far);
    const double h_true = objective_h(hard, zeta, truth);
    if (h_far < h_true) {
        const Classification model = classify_trial(hard, far, zeta);
        CHECK(!model.success);
        CHECK(model.failure_class == FailureClass::ModelFailure);
    }

    ProblemInstance nogt;
    nogt.A = inst.A;
    nogt.b = inst.b;
    CHECK_THROWS_AS(classify_trial(nogt, truth, zeta), std::invalid_argument);
}

TEST_CASE("classification partitions non-erroring trials") {
    Rng rng(4);
    ProblemInstance inst;
    inst.A.resize(3, 6);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 6; ++j) inst.A(i, j) = rng.next_normal();
    VectorXd t = VectorXd::Zero(6);
    t[1] = 1.4;
    t[4] = -0.7;
    inst.ground_truth = t;
    inst.b = inst.A * t;
    for (int trial = 0; trial < 500; ++trial) {
        VectorXd guess(6);
        for (int j = 0; j < 6; ++j) guess[j] = rng.next_normal();
        if (rng.next_double() < 0.3) guess = t; // force some successes
        const Classification c = classify_trial(inst, guess, 1e-3);
        const int buckets = (c.success ? 1 : 0) +
                            (c.failure_class == FailureClass::ModelFailure ? 1 : 0) +
                            (c.failure_class == FailureClass::AlgorithmFailure ? 1 : 0);
        CHECK(buckets == 1);
    }
}

TEST_CASE("sweep produces one record per method, cell and trial") {
    ExperimentSpec spec;
    spec.kind = MatrixKind::Gaussian;
    spec.params = {0.2};
    spec.m = 10;
    spec.n = 32;
    spec.sparsities = {2};
    spec.min_separation = 3;
    spec.trials = 3;
    spec.master_seed = 11;
    spec.methods = {Method::L1};
    const auto records = run_sweep(spec);
    REQUIRE(records.size() == 3);
    CHECK(records[0].seed != records[1].seed);
    CHECK(records[1].seed != records[2].seed);
    for (const auto& r : records) CHECK(!r.errored);
}

TEST_CASE("all methods in a trial are classified against the same instance") {
    ExperimentSpec spec;
    spec.kind = MatrixKind::Gaussian;
    spec.params = {0.0};
    spec.m = 12;
    spec.n = 32;
    spec.sparsities = {2};
    spec.min_separation = 3;
    spec.trials = 2;
    spec.master_seed = 21;
    spec.methods = {Method::L1, Method::IrlsLp, Method::HalfOverTwo};
    const auto records = run_sweep(spec);
    REQUIRE(records.size() == 6);
    for (const auto& r : records) {
        REQUIRE(!r.errored);
        // rebuild the instance from the recorded seed and reproduce the
        // classification bitwise
        GeneratorSpec gs;
        gs.kind = spec.kind;
        gs.r = r.param;
        gs.m = spec.m;
        gs.n = spec.n;
        gs.sparsity = r.sparsity;
        gs.min_separation = spec.min_separation;
        gs.seed = r.seed;
        const ProblemInstance inst = make_instance(gs);
        const Classification c = classify_trial(inst, r.x_hat, spec.zeta());
        CHECK(c.rel_error == r.rel_error);
        CHECK(c.success == r.success);
    }
    // the two trials of one method share the cell but not the seed
    CHECK(records[0].seed == records[1].seed); // same trial, different methods
    CHECK(records[0].seed == records[2].seed);
    CHECK(records[0].seed != records[3].seed); // different trials
}

TEST_CASE("sweep results are identical across thread counts and reruns") {
    ExperimentSpec spec;
    spec.kind = MatrixKind::OversampledDct;
    spec.params = {10.0};
    spec.m = 10;
    spec.n = 24;
    spec.sparsities = {2};
    spec.min_separation = 2;
    spec.trials = 4;
    spec.master_seed = 5;
    spec.methods = {Method::L1, Method::IrlsLp};
    const auto a = run_sweep(spec);
    spec.threads = 2;
    const auto b = run_sweep(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].rel_error == b[i].rel_error);
        CHECK(a[i].x_hat == b[i].x_hat);
        CHECK(a[i].method == b[i].method);
    }
}

TEST_CASE("single-method ranking gives mean rank one") {
    ExperimentSpec spec;
    spec.snr_db = 50.0;
    spec.methods = {Method::HalfOverTwo};
    spec.trials = 4;
    std::vector<TrialRecord> recs;
    for (int t = 0; t < 4; ++t)
        recs.push_back(make_record(10.0, 5, t, Method::HalfOverTwo, -40.0 - t, true));
    const AggregateTables tables = aggregate(recs, spec);
    REQUIRE(tables.ranks.size() == 1);
    CHECK(tables.ranks[0].mean_rank == 1.0);
}

TEST_CASE("winning counts follow the strict-lower rule") {
    ExperimentSpec spec;
    spec.snr_db = 50.0;
    spec.methods = {Method::L1, Method::HalfOverTwo};
    spec.trials = 50;
    std::vector<TrialRecord> recs;
    for (int t = 0; t < 50; ++t) {
        const bool proposed_wins = t < 30;
        recs.push_back(make_record(10.0, 5, t, Method::HalfOverTwo,
                                   proposed_wins ? -50.0 : -20.0, true));
        recs.push_back(make_record(10.0, 5, t, Method::L1, -30.0, true));
    }
    const AggregateTables tables = aggregate(recs, spec);
    REQUIRE(tables.wins.size() == 1);
    CHECK(tables.wins[0].method == Method::L1);
    CHECK(tables.wins[0].proposed_wins == 30);
    CHECK(tables.wins[0].method_wins == 20);
}

TEST_CASE("ties get average ranks and rank sums are preserved") {
    ExperimentSpec spec;
    spec.snr_db = 45.0;
    spec.methods = {Method::L1, Method::L1MinusL2Dca, Method::IrlsLp, Method::HalfOverTwo};
    spec.trials = 6;
    std::vector<TrialRecord> recs;
    for (int t = 0; t < 6; ++t) {
        // two methods tie at -30
        recs.push_back(make_record(5.0, 15, t, Method::L1, -10.0, false));
        recs.push_back(make_record(5.0, 15, t, Method::L1MinusL2Dca, -30.0, true));
        recs.push_back(make_record(5.0, 15, t, Method::IrlsLp, -30.0, true));
        recs.push_back(make_record(5.0, 15, t, Method::HalfOverTwo, -50.0, true));
    }
    const AggregateTables tables = aggregate(recs, spec);
    REQUIRE(tables.ranks.size() == 4);
    double sum = 0.0;
    for (const auto& r : tables.ranks) sum += r.mean_rank;
    CHECK(sum == doctest::Approx(10.0).epsilon(1e-12)); // 4*5/2
    for (const auto& r : tables.ranks) {
        if (r.method == Method::HalfOverTwo) CHECK(r.mean_rank == 1.0);
        if (r.method == Method::L1) CHECK(r.mean_rank == 4.0);
        if (r.method == Method::L1MinusL2Dca) CHECK(r.mean_rank == 2.5);
        if (r.method == Method::IrlsLp) CHECK(r.mean_rank == 2.5);
    }
}

TEST_CASE("aggregation is order independent") {
    ExperimentSpec spec;
    spec.snr_db = 50.0;
    spec.methods = {Method::L1, Method::HalfOverTwo};
    spec.trials = 10;
    std::vector<TrialRecord> recs;
    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
        recs.push_back(make_record(10.0, 5, t, Method::L1, -20.0 - rng.next_double() * 20,
                                   rng.next_double() < 0.5));
        recs.push_back(make_record(10.0, 5, t, Method::HalfOverTwo,
                                   -20.0 - rng.next_double() * 20, rng.next_double() < 0.5));
    }
    const AggregateTables a = aggregate(recs, spec);
    std::vector<TrialRecord> shuffled = recs;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i)
        std::swap(shuffled[i], shuffled[rng.next_below(i + 1)]);
    const AggregateTables b = aggregate(shuffled, spec);
    REQUIRE(a.rates.size() == b.rates.size());
    for (std::size_t i = 0; i < a.rates.size(); ++i) {
        CHECK(a.rates[i].success_rate == b.rates[i].success_rate);
        CHECK(a.rates[i].method == b.rates[i].method);
    }
    REQUIRE(a.ranks.size() == b.ranks.size());
    for (std::size_t i = 0; i < a.ranks.size(); ++i)
        CHECK(a.ranks[i].mean_rank == b.ranks[i].mean_rank);
}

TEST_CASE("csv emission is byte-identical across runs") {
    ExperimentSpec spec;
    spec.kind = MatrixKind::Gaussian;
    spec.params = {0.2};
    spec.m = 10;
    spec.n = 24;
    spec.sparsities = {2, 3};
    spec.min_separation = 2;
    spec.trials = 2;
    spec.master_seed = 7;
    spec.methods = {Method::L1, Method::IrlsLp};
    const auto dir = std::filesystem::temp_directory_path();
    std::string first;
    for (int run = 0; run < 2; ++run) {
        const auto records = run_sweep(spec);
        const auto tables = aggregate(records, spec);
        const auto path = dir / ("halfratio_rates_" + std::to_string(run) + ".csv");
        write_rates_csv(path.string(), tables);
        const auto plot = dir / ("halfratio_plot_" + std::to_string(run) + ".csv");
        write_plotdata_csv(plot.string(), tables);
        const std::string text = slurp(path) + slurp(plot);
        if (run == 0)
            first = text;
        else
            CHECK(first == text);
        std::filesystem::remove(path);
        std::filesystem::remove(plot);
    }
    CHECK(first.find("param,sparsity,method") == 0);
}

TEST_CASE("experiment file parsing") {
    const auto path = std::filesystem::temp_directory_path() / "halfratio_exp.cfg";
    {
        std::ofstream out(path);
        out << "# comment\n"
            << "kind = dct\n"
            << "params = 5, 10\n"
            << "m = 64\n"
            << "n = 512\n"
            << "sparsity = 2:2:6\n"
            << "separation = 15\n"
            << "snr_db = 50\n"
            << "trials = 20\n"
            << "seed = 99\n"
            << "methods = l1, l12-over-l2\n";
    }
    const ExperimentSpec spec = parse_experiment_file(path.string());
    CHECK(spec.kind == MatrixKind::OversampledDct);
    REQUIRE(spec.params.size() == 2);
    CHECK(spec.params[1] == 10.0);
    REQUIRE(spec.sparsities.size() == 3);
    CHECK(spec.sparsities[2] == 6);
    CHECK(spec.snr_db == 50.0);
    CHECK(spec.master_seed == 99);
    REQUIRE(spec.methods.size() == 2);
    CHECK(spec.methods[1] == Method::HalfOverTwo);
    CHECK(spec.zeta() == 8e-4); // noisy DCT default
    std::filesystem::remove(path);

    ExperimentSpec s2;
    CHECK_THROWS_AS(apply_experiment_key(s2, "bogus", "1"), std::invalid_argument);
    CHECK_THROWS_AS(apply_experiment_key(s2, "methods", "nope"), std::invalid_argument);
}

TEST_CASE("success rate does not increase with sparsity") {
    ExperimentSpec spec;
    spec.kind = MatrixKind::Gaussian;
    spec.params = {0.2};
    spec.m = 24;
    spec.n = 96;
    spec.sparsities = {2, 6, 12};
    spec.min_separation = 2;
    spec.trials = 6;
    spec.master_seed = 2718;
    spec.methods = {Method::HalfOverTwo};
    const auto tables = aggregate(run_sweep(spec), spec);
    REQUIRE(tables.rates.size() == 3);
    double prev = 1.0;
    const double one_cell = 1.0 / spec.trials;
    for (const auto& row : tables.rates) {
        CHECK(row.success_rate <= prev + one_cell);
        prev = row.success_rate;
    }
}

TEST_CASE("benchmark zeta defaults") {
    ExperimentSpec spec;
    CHECK(spec.zeta() == 1e-5);
    spec.snr_db = 45.0;
    CHECK(spec.zeta() == 8e-3); // noisy Gaussian
    spec.kind = MatrixKind::OversampledDct;
    CHECK(spec.zeta() == 8e-4); // noisy DCT
    spec.zeta_override = 0.5;
    CHECK(spec.zeta() == 0.5);
}

TEST_SUITE_END();
