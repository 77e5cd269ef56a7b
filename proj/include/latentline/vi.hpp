// Mean-field coordinate-ascent variational inference for the sparse
// multi-view factor model declared in core.hpp.
//
// Every update below sets one factor of q to its exact conditional optimum
// given the others (the projection-matrix update additionally supports
// damping). Missing observations are treated as latent variables with their
// own Gaussian factor, so every (n, d) cell of every view contributes to the
// sufficient statistics and q(Z) has one covariance shared by all samples.
#pragma once

#include "latentline/core.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace latentline {

struct FitOptions {
  Hyperparameters hyper;
  int track_elbo_every = 1;
  int prune_every = 1;
};

enum class HaltReason { elbo_converged, max_iter };

const char* to_string(HaltReason reason);

struct FitReport {
  HaltReason halted_on = HaltReason::max_iter;
  int iterations = 0;
  int k_final = 0;
  std::vector<double> elbo_trace;
  double wall_time = 0.0;  // seconds
};

struct FitResult {
  ModelState state;
  FitReport report;
};

/// Seeded initial state: q(Z) means ~ N(0, 1), q(W) means ~ N(0, 1/D_m),
/// identity covariances, Gamma factors at their priors, missing means 0 with
/// variance 1.
ModelState init_state(const Dataset& data, const Hyperparameters& hyper, std::uint64_t seed);

void update_z(ModelState& state);
/// Damped by the view's learning rate evaluated at `state.iteration`.
void update_w(ModelState& state, std::size_t view);
void update_alpha(ModelState& state, std::size_t view);
/// Throws std::logic_error on a view without feature selection.
void update_gamma(ModelState& state, std::size_t view);
void update_tau(ModelState& state, std::size_t view);
void update_missing(ModelState& state, const Dataset& data, std::size_t view);

/// Evidence lower bound of the full model under the current q.
double compute_elbo(const ModelState& state);
double compute_elbo(const ModelState& state, const Dataset& data);

/// Removes every factor whose posterior-mean loadings are below the pruning
/// threshold in absolute value across all views and rows. Never removes the
/// last remaining factor. Returns the number of factors removed.
int prune_factors(ModelState& state);

/// Stopping inequality: previous > last - tol * |last|.
bool elbo_converged(double previous, double last, double tol);

/// One full coordinate sweep (Z, then per view W, alpha, gamma, tau,
/// missing) at 1-based iteration `iteration`.
void sweep(ModelState& state, const Dataset& data, int iteration);

FitResult fit(const Dataset& data, const FitOptions& options);

/// Posterior over Z and the missing entries of new samples with every
/// view-level factor (W, alpha, tau, gamma) held at the fitted values.
/// Deterministic: q(Z) starts at zero.
ModelState infer_samples(const ModelState& fitted, const Dataset& data, int max_iter = 1000,
                         double tol = 1e-12);

}  // namespace latentline
