#pragma once

#include "pfscale/bpf.hpp"
#include "pfscale/core.hpp"
#include "pfscale/model.hpp"

#include <functional>
#include <string>

namespace pfscale {

/// What a drift control may see of the observation record.
struct ObservationSummary {
  Vector lastIncrement;  // dY over the previous step
  Vector cumulative;     // Y_t - Y_0
};

/// F(t, z, observations) in R^D, evaluated per particle on its own position.
using DriftControl =
    std::function<Vector(double t, const Vector& z, const ObservationSummary& observations)>;

/// How the weight is corrected for the extra drift.
///
/// Literal: log M += h.dY - 0.5|h|^2 dt - F.dZ, the controlled weight rule
/// taken as written.
/// Girsanov: log M += h.dY - 0.5|h|^2 dt - u.g^{-1}(dZ - f dt) + 0.5|u|^2 dt
/// with u = g^{-1} F, the exact likelihood ratio of the controlled motion
/// against the prior motion.
enum class WeightCorrection { Literal, Girsanov };

std::string to_string(WeightCorrection mode);

struct ControlledPropagation {
  WeightedEnsemble ensemble;  // moved particles, weights unchanged
  Matrix displacement;        // dZ per particle, D x N
  Matrix control;             // F at the pre-step positions, D x N
};

Matrix evaluate_control(const DriftControl& control, const Matrix& positions, double t,
                        const ObservationSummary& observations);

ControlledPropagation propagate_controlled(WeightedEnsemble ensemble, const DiffusionModel& model,
                                           const DriftControl& control, double t,
                                           const ObservationSummary& observations, double dt,
                                           const SeedSpec& seed, Exec exec = Exec::Parallel);
ControlledPropagation propagate_controlled(WeightedEnsemble ensemble, const DiffusionModel& model,
                                           const DriftControl& control, double t,
                                           const ObservationSummary& observations, double dt,
                                           const Matrix& noise, Exec exec = Exec::Parallel);

/// Weight update for the step that produced `displacement`. `ensemble` holds
/// the pre-step positions, at which h and F are evaluated.
WeightedEnsemble reweight_controlled(WeightedEnsemble ensemble, const DiffusionModel& model,
                                     const Vector& obsIncrement, const Matrix& displacement,
                                     const Matrix& control, double dt,
                                     WeightCorrection mode = WeightCorrection::Literal,
                                     Exec exec = Exec::Parallel);

/// Linear-Gaussian discretization X_k = X_{k-1} + f(X_{k-1}) dt + sqrt(dt) G eps,
/// y_k = W X_k dt + sqrt(dt) eta.
struct OptimalProposalParams {
  Matrix G;
  Matrix W;
  std::function<Vector(const Vector&)> fCont;
  double dt = 0.01;

  /// Rejects singular G, non-square or mismatched matrices and dt <= 0.
  void validate() const;
};

struct ProposalMoments {
  Vector mean;
  Matrix covariance;
};

/// Mean and covariance of x_k | (x_{k-1}, y_k):
/// Sigma^{-1} = dt^{-1} (G G^T)^{-1} + dt W^T W,
/// m = Sigma (dt^{-1} (G G^T)^{-1} x + (G G^T)^{-1} f(x) + W^T y).
/// Computed as Sigma = G B^{-1} G^T with B = dt^{-1} I + dt (WG)^T (WG), so
/// only factorizations of G and B are needed.
ProposalMoments optimal_proposal_moments(const OptimalProposalParams& params,
                                         const Vector& xPrev, const Vector& y);

/// log p(y_k | x_{k-1}) up to a constant shared by all particles: the
/// incremental weight of the optimal proposal.
double optimal_proposal_log_weight(const OptimalProposalParams& params, const Vector& xPrev,
                                   const Vector& y);

/// |m_k(y) - m_k(0)|: the proposal mean's deviation from the prior (Euler)
/// mean once the y-independent O(dt^2) covariance residue is removed. Decays
/// like dt G G^T W^T y.
double continuum_limit_gap(const OptimalProposalParams& params, const Vector& xPrev,
                           const Vector& y);

}  // namespace pfscale
