#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "manifold.hpp"
#include "samples.hpp"
#include "side_info.hpp"
#include "tt.hpp"

namespace ttc {

/**
 * Completion task: training samples of the target on Omega, held-out
 * samples on Gamma, target ranks and the initial iterate. With `side` set
 * the problem is solved on the side-information-constrained manifold.
 */
struct CompletionProblem {
    SparseSamples train;
    SparseSamples test;
    Ranks ranks;
    std::optional<SideInfo> side;
    TTTensor initial;

    void validate() const {
        if (train.empty()) throw DimensionError("CompletionProblem: empty training set");
        if (train.dims() != test.dims()) throw DimensionError("CompletionProblem: train/test dims disagree");
        if (initial.dims() != train.dims()) throw DimensionError("CompletionProblem: initial iterate has wrong dims");
        detail::check_ranks(initial.order(), ranks, "CompletionProblem");
        if (side && side->large_dims() != train.dims())
            throw DimensionError("CompletionProblem: side information has wrong dims");
    }
};

struct SolverConfig {
    int max_iters = 250;
    /** Convergence criterion on the held-out relative error; also a stopping rule. */
    double test_tol = 1e-4;
    double train_tol = 1e-6;
    /** Stop when the train residual changes by less than this (relative) over `stagnation_window` iterations. */
    double stagnation_tol = 1e-10;
    int stagnation_window = 10;
    /** false: Riemannian steepest descent. */
    bool conjugate = true;
    /** Force a steepest-descent step every n iterations; 0 disables. */
    int restart_every = 0;
    double armijo_c = 1e-4;
    int max_halvings = 20;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_iters < 1) throw FormatError("SolverConfig: max_iters must be >= 1");
        if (!(test_tol > 0) || !(train_tol > 0) || !(stagnation_tol > 0))
            throw FormatError("SolverConfig: tolerances must be positive");
        if (stagnation_window < 1) throw FormatError("SolverConfig: stagnation_window must be >= 1");
        if (restart_every < 0 || max_halvings < 0) throw FormatError("SolverConfig: negative count");
    }
};

enum class StopReason { max_iters, test_tol, train_tol, stagnation, stationary, line_search };

inline const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::max_iters: return "max_iters";
    case StopReason::test_tol: return "test_tol";
    case StopReason::train_tol: return "train_tol";
    case StopReason::stagnation: return "stagnation";
    case StopReason::stationary: return "stationary";
    case StopReason::line_search: return "line_search";
    }
    return "unknown";
}

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> train_history; // relative train residual after each iteration
    std::vector<double> test_history;  // relative test error after each iteration
    std::vector<double> objective_history;
    double train_rel_res = 0.0; // at the final iterate
    double test_rel_err = 0.0;
    double max_side_residual = 0.0; // over all iterates, side-information runs only
    StopReason reason = StopReason::max_iters;
    TTTensor final;
    double seconds = 0.0;
};

namespace detail {

inline std::vector<double> residual(const TTTensor& x, const SparseSamples& samples) {
    std::vector<double> r = entries(x, samples.flat_indices());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= samples.values()[i];
    return r;
}

inline double sq_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/** ||r|| / ||ref||, falling back to ||r|| when the reference is zero. */
inline double relative(double r_norm, double ref_norm) { return ref_norm > 0.0 ? r_norm / ref_norm : r_norm; }

} // namespace detail

/** f(X) = 1/2 sum over the samples of (X(i) - value(i))^2. */
inline double objective(const TTTensor& x, const SparseSamples& train) {
    return 0.5 * detail::sq_norm(detail::residual(x, train));
}

/**
 * Riemannian gradient of the completion objective at `p` for the given
 * residual values on the training indices. Uses the side-information
 * projection when `side` is set.
 */
inline TangentVector riemannian_gradient(const ManifoldPoint& p, const SparseSamples& residual_samples,
                                         const SideInfo* side) {
    return side ? project_tangent_si(*side, p, residual_samples) : project_tangent(p, residual_samples);
}

/**
 * Riemannian conjugate gradients with Polak-Ribiere+ and transport by
 * projection, exact quadratic step on the sampled residual guarded by
 * Armijo halving, and the TT-SVD retraction.
 */
inline SolveReport solve(const CompletionProblem& problem, const SolverConfig& config) {
    problem.validate();
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const SideInfo* side = problem.side ? &*problem.side : nullptr;

    const double train_ref = problem.train.norm();
    const double test_ref = problem.test.norm();

    auto check_finite = [](const std::vector<double>& v, const char* what) {
        for (double x : v)
            if (!std::isfinite(x)) throw NumericalError(std::string("solve: non-finite ") + what);
    };

    SolveReport report;
    TTTensor x = problem.initial;
    ManifoldPoint point = make_point(x);
    std::vector<double> res = detail::residual(x, problem.train);
    check_finite(res, "training residual at the initial iterate");
    double f = 0.5 * detail::sq_norm(res);
    auto test_error = [&](const TTTensor& t) {
        auto r = detail::residual(t, problem.test);
        check_finite(r, "test residual");
        return detail::relative(std::sqrt(detail::sq_norm(r)), test_ref);
    };
    double train_rel = detail::relative(std::sqrt(2.0 * f), train_ref);
    double test_rel = test_error(x);
    auto side_check = [&] {
        return point.memo(side->id(), [&] { return side_residual(*side, point.left()); });
    };
    if (side) report.max_side_residual = side_check();

    auto finish = [&](StopReason reason) {
        report.reason = reason;
        report.train_rel_res = train_rel;
        report.test_rel_err = test_rel;
        report.converged = test_rel < config.test_tol;
        report.final = x;
        report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return report;
    };

    if (test_rel < config.test_tol) return finish(StopReason::test_tol);
    if (train_rel < config.train_tol) return finish(StopReason::train_tol);

    std::optional<TangentVector> prev_grad, prev_dir;
    for (int it = 1; it <= config.max_iters; ++it) {
        const TangentVector grad = riemannian_gradient(point, problem.train.with_values(res), side);
        const double grad_sq = inner(grad, grad);
        if (!std::isfinite(grad_sq)) throw NumericalError("solve: non-finite gradient");
        if (grad_sq == 0.0) return finish(StopReason::stationary);

        TangentVector steepest = -grad;
        TangentVector dir = steepest;
        const bool restart = !config.conjugate || !prev_grad || (config.restart_every > 0 && it % config.restart_every == 0);
        if (!restart) {
            const TangentVector old_grad = transport(point, *prev_grad);
            const TangentVector old_dir = transport(point, *prev_dir);
            const double beta = (grad_sq - inner(grad, old_grad)) / inner(*prev_grad, *prev_grad);
            if (beta > 0.0) {
                dir.axpy(beta, old_dir);
                if (!(inner(dir, steepest) > 0.0)) dir = steepest;
            }
        }

        // exact minimiser of t -> ||R + t s||^2 with s the sampled direction, then Armijo halving
        auto try_direction = [&](const TangentVector& eta) -> std::optional<std::pair<TTTensor, std::vector<double>>> {
            const std::vector<double> s = sample_tangent(eta, problem.train);
            const double denom = detail::sq_norm(s);
            if (!(denom > 0.0)) return std::nullopt;
            const double slope = inner(grad, eta);
            double alpha = -detail::dot(s, res) / denom;
            for (int h = 0; h <= config.max_halvings; ++h, alpha *= 0.5) {
                TTTensor candidate = retract(point, eta, alpha, problem.ranks);
                std::vector<double> r = detail::residual(candidate, problem.train);
                check_finite(r, "training residual after retraction");
                const double fc = 0.5 * detail::sq_norm(r);
                if (fc <= f + config.armijo_c * alpha * slope) return std::make_pair(std::move(candidate), std::move(r));
            }
            return std::nullopt;
        };

        auto step = try_direction(dir);
        if (!step && restart) return finish(StopReason::line_search);
        if (!step) {
            dir = steepest;
            step = try_direction(dir);
            if (!step) return finish(StopReason::line_search);
        }

        x = std::move(step->first);
        res = std::move(step->second);
        f = 0.5 * detail::sq_norm(res);
        point = make_point(x);
        prev_grad = grad;
        prev_dir = dir;

        train_rel = detail::relative(std::sqrt(2.0 * f), train_ref);
        test_rel = test_error(x);
        report.iterations = it;
        report.train_history.push_back(train_rel);
        report.test_history.push_back(test_rel);
        report.objective_history.push_back(f);
        if (side) report.max_side_residual = std::max(report.max_side_residual, side_check());

        if (test_rel < config.test_tol) return finish(StopReason::test_tol);
        if (train_rel < config.train_tol) return finish(StopReason::train_tol);
        const auto n = report.train_history.size();
        if (n > static_cast<std::size_t>(config.stagnation_window)) {
            const double old = report.train_history[n - 1 - static_cast<std::size_t>(config.stagnation_window)];
            if (std::abs(old - train_rel) <= config.stagnation_tol * old) return finish(StopReason::stagnation);
        }
    }
    return finish(StopReason::max_iters);
}

} // namespace ttc
