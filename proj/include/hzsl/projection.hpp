#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hzsl/graph.hpp"
#include "hzsl/matrix.hpp"
#include "hzsl/schur.hpp"
#include "hzsl/sylvester.hpp"

namespace hzsl {

/// Hyperparameters of one graph-regularised self-reconstruction problem.
/// alpha and beta are the normalised mixing weights of the two data terms,
/// epsilon weighs the graph term as it appears in the normalised E-step
/// equation, gamma the ridge on W.
struct LayerParams {
    double alpha = 0.5;
    double beta = 0.5;
    double epsilon = 0.01;
    double gamma = 0.01;
    std::size_t max_iters = 50;
    double rel_tol = 1e-5;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw validation_error("params: alpha must lie in (0, 1)");
        if (!(beta > 0.0 && beta < 1.0))
            throw validation_error("params: beta must lie in (0, 1)");
        if (!(epsilon >= 0.0)) throw validation_error("params: epsilon must be >= 0");
        if (!(gamma > 0.0)) throw validation_error("params: gamma must be > 0");
        if (max_iters < 1) throw validation_error("params: max_iters must be >= 1");
        if (!(rel_tol >= 0.0)) throw validation_error("params: rel_tol must be >= 0");
    }
};

/// Raw objective value of the self-reconstruction problem
///   ‖FW − Ẽ‖² + μ‖F − ẼWᵀ‖² + ε′·tr(ẼᵀLẼ) + ν‖Ẽ − E0‖² + η‖W‖²
/// with μ = α/(1−α), ν = (1−β)/β, η = γ/(1−α) and ε′ = ε/((1−α)β), the
/// weights implied by the normalised per-step equations. Pass lap = nullptr
/// for an absent graph term.
inline double objective(const Matrix& f, const Matrix& w, const Matrix& e_tilde,
                        const Matrix& e0, const Laplacian* lap, const LayerParams& p) {
    p.validate();
    const std::size_t n = f.rows(), df = f.cols(), dz = e0.cols();
    if (w.rows() != df || w.cols() != dz || e_tilde.rows() != n ||
        e_tilde.cols() != dz || e0.rows() != n)
        throw validation_error("objective: shape mismatch");
    if (lap && lap->n != n) throw validation_error("objective: laplacian size mismatch");

    const double mu = p.alpha / (1.0 - p.alpha);
    const double nu = (1.0 - p.beta) / p.beta;
    const double eta = p.gamma / (1.0 - p.alpha);
    const double eps_raw = p.epsilon / ((1.0 - p.alpha) * p.beta);

    double obj = 0.0;
    {
        const Matrix r = f * w - e_tilde;
        obj += frobenius_norm(r) * frobenius_norm(r);
    }
    {
        const Matrix r = f - matmul_nt(e_tilde, w);
        obj += mu * frobenius_norm(r) * frobenius_norm(r);
    }
    if (lap && p.epsilon > 0.0) {
        const Matrix le = lap->matrix * e_tilde;
        double tr = 0.0;
        for (std::size_t i = 0; i < le.size(); ++i) tr += e_tilde.data()[i] * le.data()[i];
        obj += eps_raw * tr;
    }
    {
        const Matrix r = e_tilde - e0;
        obj += nu * frobenius_norm(r) * frobenius_norm(r);
    }
    obj += eta * frobenius_norm(w) * frobenius_norm(w);
    return obj;
}

/// W-step: the global minimiser of the objective in W for fixed Ẽ solves
///   [(1−α)FᵀF + γI] W + W (α ẼᵀẼ) = FᵀẼ,
/// a Sylvester equation with a d_f×d_f and a d_z×d_z operator.
inline Matrix solve_w_step(const Matrix& f, const Matrix& e_tilde, double alpha,
                           double gamma) {
    if (f.rows() != e_tilde.rows())
        throw validation_error("solve_w_step: F and E row counts differ");
    Matrix a = matmul_tn(f, f) * (1.0 - alpha);
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += gamma;
    const Matrix b = matmul_tn(e_tilde, e_tilde) * alpha;
    const Matrix c = matmul_tn(f, e_tilde);
    return solve_sylvester(a, b, c);
}

/// E-step: the global minimiser in Ẽ for fixed W solves
///   εL Ẽ + Ẽ [αβ WᵀW + (1−α)I] = β FW + (1−α)(1−β) E0.
/// With ε = 0 the left operator vanishes and the system is a plain d_z×d_z
/// solve against the positive-definite right operator.
inline Matrix solve_e_step(const Matrix& f, const Matrix& w, const Matrix& e0,
                           const Laplacian* lap, double alpha, double beta,
                           double epsilon) {
    if (f.cols() != w.rows() || e0.cols() != w.cols() || f.rows() != e0.rows())
        throw validation_error("solve_e_step: shape mismatch");
    if (epsilon > 0.0 && !lap)
        throw validation_error("solve_e_step: epsilon > 0 requires a laplacian");
    if (lap && lap->n != f.rows())
        throw validation_error("solve_e_step: laplacian size mismatch");

    Matrix b = matmul_tn(w, w) * (alpha * beta);
    for (std::size_t i = 0; i < b.rows(); ++i) b(i, i) += 1.0 - alpha;
    const Matrix c = (f * w) * beta + e0 * ((1.0 - alpha) * (1.0 - beta));

    if (!lap || epsilon == 0.0)
        return transpose(solve_linear(transpose(b), transpose(c)));
    return solve_sylvester(lap->matrix * epsilon, b, c);
}

struct LearnResult {
    Matrix w;        // d_f × d_z projection
    Matrix e_tilde;  // updated instance-level semantic matrix
    std::vector<double> trace;  // objective after each full W/E iteration
};

/// Alternating minimisation of the graph-regularised self-reconstruction
/// objective: Ẽ starts at E0, then W-step and E-step alternate until the
/// relative objective decrease drops below rel_tol or max_iters is hit.
/// lap_schur, when given, must be the Schur form of lap->matrix (unscaled);
/// it spares the N×N factorization when one Laplacian serves many runs.
inline LearnResult learn_projection(const Matrix& f, const Matrix& e0,
                                    const Laplacian* lap, const LayerParams& p,
                                    const SchurForm* lap_schur = nullptr) {
    p.validate();
    if (f.rows() != e0.rows())
        throw validation_error("learn_projection: F and E0 row counts differ");
    if (f.rows() == 0) throw validation_error("learn_projection: no samples");
    if (p.epsilon > 0.0 && !lap)
        throw validation_error("learn_projection: epsilon > 0 requires a laplacian");
    if (lap && lap->n != f.rows())
        throw validation_error("learn_projection: laplacian size mismatch");
    require_finite(f, "learn_projection: F");
    require_finite(e0, "learn_projection: E0");

    const bool use_graph = lap && p.epsilon > 0.0;

    Matrix a_w = matmul_tn(f, f) * (1.0 - p.alpha);
    for (std::size_t i = 0; i < a_w.rows(); ++i) a_w(i, i) += p.gamma;
    const SchurForm sa_w = schur_decompose(a_w);

    std::optional<SchurForm> s_lap;
    if (use_graph) {
        if (lap_schur)
            s_lap = SchurForm{lap_schur->q, lap_schur->t * p.epsilon};
        else {
            s_lap = schur_decompose(lap->matrix);
            s_lap->t *= p.epsilon;
        }
    }

    Matrix e_tilde = e0;
    Matrix w;
    std::vector<double> trace;
    trace.reserve(p.max_iters);
    for (std::size_t it = 0; it < p.max_iters; ++it) {
        {
            const Matrix b = matmul_tn(e_tilde, e_tilde) * p.alpha;
            const Matrix c = matmul_tn(f, e_tilde);
            w = solve_sylvester_prefactored(sa_w, schur_decompose(b), c);
        }
        {
            Matrix b = matmul_tn(w, w) * (p.alpha * p.beta);
            for (std::size_t i = 0; i < b.rows(); ++i) b(i, i) += 1.0 - p.alpha;
            const Matrix c =
                (f * w) * p.beta + e0 * ((1.0 - p.alpha) * (1.0 - p.beta));
            if (use_graph)
                e_tilde = solve_sylvester_prefactored(*s_lap, schur_decompose(b), c);
            else
                e_tilde = transpose(solve_linear(transpose(b), transpose(c)));
        }
        const double obj = objective(f, w, e_tilde, e0, use_graph ? lap : nullptr, p);
        if (!std::isfinite(obj)) throw numerical_error("learn_projection: objective diverged");
        trace.push_back(obj);
        const std::size_t k = trace.size();
        if (k >= 2 && std::abs(trace[k - 2] - obj) < p.rel_tol * std::max(1.0, std::abs(trace[k - 2])))
            break;
    }
    require_finite(w, "learn_projection: W");
    require_finite(e_tilde, "learn_projection: E");
    return {std::move(w), std::move(e_tilde), std::move(trace)};
}

/// Class-level variant: same solver with the class semantic matrix Z_s in
/// place of a superclass semantic matrix.
inline LearnResult learn_class_projection(const Matrix& f, const Matrix& z_s,
                                          const Laplacian* lap, const LayerParams& p,
                                          const SchurForm* lap_schur = nullptr) {
    return learn_projection(f, z_s, lap, p, lap_schur);
}

}  // namespace hzsl
