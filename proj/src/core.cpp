#include "halfratio/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace halfratio {

void ProblemInstance::validate() const {
    if (A.rows() < 1 || A.cols() < 1)
        throw std::invalid_argument("ProblemInstance: A must be at least 1x1");
    if (b.size() != A.rows())
        throw std::invalid_argument("ProblemInstance: b length must equal row count of A");
    if (ground_truth && ground_truth->size() != A.cols())
        throw std::invalid_argument("ProblemInstance: ground truth length must equal column count of A");
}

void SolverConfig::validate() const {
    if (!(zeta > 0)) throw std::invalid_argument("SolverConfig: zeta must be positive");
    if (!(rho0 > 0) || !(gamma0 > 0))
        throw std::invalid_argument("SolverConfig: penalties must be positive");
    if (!(eps_out > 0) || !(eps_inner > 0) || !(rel_change_tol > 0))
        throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (max_outer < 1 || max_inner < 1 || max_total_iters < 0)
        throw std::invalid_argument("SolverConfig: iteration caps must be positive");
    if (!(cg.tol > 0) || cg.max_iter < 0)
        throw std::invalid_argument("SolverConfig: CG parameters out of range");
    if (adaptive_penalty) {
        const auto& p = *adaptive_penalty;
        if (!(p.mu > 1) || !(p.tau_incr > 1) || !(p.tau_decr > 1))
            throw std::invalid_argument("SolverConfig: residual-balance parameters must exceed 1");
    }
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::MaxIters: return "max_iters";
        case Termination::Stalled: return "stalled";
    }
    return "unknown";
}

double half_norm_root(const VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::sqrt(std::abs(x[i]));
    return s;
}

double ratio_half_over_two(const VectorXd& x) {
    if (!x.allFinite()) throw std::invalid_argument("ratio_half_over_two: non-finite input");
    const double n2 = x.norm();
    if (n2 == 0.0) return 1.0;
    return half_norm_root(x) / std::sqrt(n2);
}

double objective_h(const ProblemInstance& inst, double zeta, const VectorXd& x) {
    if (x.size() != inst.A.cols())
        throw std::invalid_argument("objective_h: x length must equal column count of A");
    return zeta * ratio_half_over_two(x) + 0.5 * (inst.A * x - inst.b).squaredNorm();
}

namespace {

void write_row(std::FILE* f, const double* v, Eigen::Index n) {
    for (Eigen::Index j = 0; j < n; ++j)
        std::fprintf(f, j + 1 == n ? "%.17g\n" : "%.17g ", v[j]);
}

} // namespace

void save_instance(const ProblemInstance& inst, const std::string& path) {
    inst.validate();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("save_instance: cannot open " + path);
    std::fprintf(f, "%lld %lld\n", static_cast<long long>(inst.rows()),
                 static_cast<long long>(inst.cols()));
    std::vector<double> row(inst.cols());
    for (Eigen::Index i = 0; i < inst.rows(); ++i) {
        for (Eigen::Index j = 0; j < inst.cols(); ++j) row[j] = inst.A(i, j);
        write_row(f, row.data(), inst.cols());
    }
    write_row(f, inst.b.data(), inst.b.size());
    if (inst.ground_truth) {
        std::fprintf(f, "#gt ");
        write_row(f, inst.ground_truth->data(), inst.ground_truth->size());
    }
    std::fclose(f);
}

ProblemInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_instance: cannot open " + path);
    Eigen::Index m = 0, n = 0;
    if (!(in >> m >> n) || m < 1 || n < 1)
        throw std::runtime_error("load_instance: bad header in " + path);
    ProblemInstance inst;
    inst.A.resize(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (!(in >> inst.A(i, j)))
                throw std::runtime_error("load_instance: truncated matrix in " + path);
    inst.b.resize(m);
    for (Eigen::Index i = 0; i < m; ++i)
        if (!(in >> inst.b[i]))
            throw std::runtime_error("load_instance: truncated observation row in " + path);
    std::string tag;
    if (in >> tag) {
        if (tag != "#gt") throw std::runtime_error("load_instance: unexpected trailing row in " + path);
        VectorXd gt(n);
        for (Eigen::Index j = 0; j < n; ++j)
            if (!(in >> gt[j]))
                throw std::runtime_error("load_instance: truncated ground-truth row in " + path);
        inst.ground_truth = gt;
    }
    inst.validate();
    return inst;
}

} // namespace halfratio
