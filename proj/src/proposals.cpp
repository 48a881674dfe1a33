#include "pfscale/proposals.hpp"

#include <cmath>
#include <utility>

namespace pfscale {

std::string to_string(WeightCorrection mode) {
  return mode == WeightCorrection::Literal ? "literal" : "girsanov";
}

Matrix evaluate_control(const DriftControl& control, const Matrix& positions, double t,
                        const ObservationSummary& observations) {
  require(static_cast<bool>(control), "drift control is empty");
  Matrix out(positions.rows(), positions.cols());
  for (Index j = 0; j < positions.cols(); ++j) {
    const Vector f = control(t, positions.col(j), observations);
    require(f.size() == positions.rows(), "drift control: output dimension mismatch");
    require(f.allFinite(), "drift control: non-finite output");
    out.col(j) = f;
  }
  return out;
}

ControlledPropagation propagate_controlled(WeightedEnsemble ensemble, const DiffusionModel& model,
                                           const DriftControl& control, double t,
                                           const ObservationSummary& observations, double dt,
                                           const SeedSpec& seed, Exec exec) {
  const Matrix noise = particle_normals(seed, ensemble.dim(), ensemble.size(), exec);
  return propagate_controlled(std::move(ensemble), model, control, t, observations, dt, noise,
                              exec);
}

ControlledPropagation propagate_controlled(WeightedEnsemble ensemble, const DiffusionModel& model,
                                           const DriftControl& control, double t,
                                           const ObservationSummary& observations, double dt,
                                           const Matrix& noise, Exec exec) {
  require(ensemble.dim() == model.dim(), "propagate_controlled: dimension mismatch");
  Matrix f = evaluate_control(control, ensemble.positions(), t, observations);
  const Matrix before = ensemble.positions();
  propagate_columns(ensemble.mutable_positions(), model, f, dt, noise, exec);
  if (!ensemble.positions().allFinite()) {
    throw DivergenceError("propagate_controlled: non-finite particle position");
  }
  Matrix displacement = ensemble.positions() - before;
  return {std::move(ensemble), std::move(displacement), std::move(f)};
}

namespace {

// -u.g^{-1}(dZ - f dt) + 0.5 |u|^2 dt with u = g^{-1} F.
double girsanov_correction(const DiffusionModel& model, const Vector& z, const Vector& dz,
                           const Vector& f, double dt) {
  if (const auto& lin = model.linear()) {
    const double s = lin->diffusion;
    const Vector u = f / s;
    const Vector db = (dz - lin->drift * z * dt) / s;
    return -u.dot(db) + 0.5 * u.squaredNorm() * dt;
  }
  const Eigen::PartialPivLU<Matrix> lu(model.diffusion(z));
  const Vector u = lu.solve(f);
  const Vector db = lu.solve(dz - model.drift(z) * dt);
  return -u.dot(db) + 0.5 * u.squaredNorm() * dt;
}

}  // namespace

WeightedEnsemble reweight_controlled(WeightedEnsemble ensemble, const DiffusionModel& model,
                                     const Vector& obsIncrement, const Matrix& displacement,
                                     const Matrix& control, double dt, WeightCorrection mode,
                                     Exec exec) {
  const Index d = ensemble.dim();
  const Index n = ensemble.size();
  require(displacement.rows() == d && displacement.cols() == n,
          "reweight_controlled: displacement must be D x N");
  require(control.rows() == d && control.cols() == n,
          "reweight_controlled: control must be D x N");
  Vector increments = bpf_log_increments(ensemble.positions(), model, obsIncrement, dt, exec);
  if (mode == WeightCorrection::Literal) {
    for (Index j = 0; j < n; ++j) increments[j] -= control.col(j).dot(displacement.col(j));
  } else {
    for (Index j = 0; j < n; ++j) {
      increments[j] += girsanov_correction(model, ensemble.positions().col(j), displacement.col(j),
                                           control.col(j), dt);
    }
  }
  ensemble.add_log_weights(increments);
  return ensemble;
}

void OptimalProposalParams::validate() const {
  require(dt > 0.0 && std::isfinite(dt), "optimal proposal: dt must be positive");
  require(G.rows() == G.cols() && G.rows() >= 1, "optimal proposal: G must be square");
  require(W.rows() == G.rows() && W.cols() == G.rows(), "optimal proposal: W must be D x D");
  require(static_cast<bool>(fCont), "optimal proposal: f_cont is empty");
  const Eigen::FullPivLU<Matrix> lu(G);
  require(lu.isInvertible(), "optimal proposal: G is singular");
}

namespace {

struct Factored {
  Eigen::PartialPivLU<Matrix> g;
  Eigen::LLT<Matrix> b;
};

Factored factor(const OptimalProposalParams& p) {
  const Index d = p.G.rows();
  const Matrix wg = p.W * p.G;
  const Matrix b = Matrix::Identity(d, d) / p.dt + p.dt * wg.transpose() * wg;
  Factored out{Eigen::PartialPivLU<Matrix>(p.G), Eigen::LLT<Matrix>(b)};
  require(out.b.info() == Eigen::Success, "optimal proposal: B is not positive definite");
  return out;
}

}  // namespace

ProposalMoments optimal_proposal_moments(const OptimalProposalParams& params, const Vector& xPrev,
                                         const Vector& y) {
  params.validate();
  const Index d = params.G.rows();
  require(xPrev.size() == d && y.size() == d, "optimal proposal: vector dimension mismatch");
  const Factored f = factor(params);
  const Vector fx = params.fCont(xPrev);
  require(fx.size() == d, "optimal proposal: f_cont output dimension mismatch");

  Matrix sigma = params.G * f.b.solve(params.G.transpose());
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  // Sigma (G G^T)^{-1} v = G B^{-1} G^{-1} v.
  const Vector prior = params.G * f.b.solve(f.g.solve(xPrev / params.dt + fx));
  const Vector mean = prior + sigma * (params.W.transpose() * y);
  return {mean, sigma};
}

double optimal_proposal_log_weight(const OptimalProposalParams& params, const Vector& xPrev,
                                   const Vector& y) {
  params.validate();
  const Index d = params.G.rows();
  const double dt = params.dt;
  const Vector predicted = params.W * (xPrev + params.fCont(xPrev) * dt) * dt;
  const Matrix wg = params.W * params.G;
  const Matrix cov = dt * Matrix::Identity(d, d) + dt * dt * dt * wg * wg.transpose();
  const Eigen::LLT<Matrix> llt(cov);
  const Vector r = y - predicted;
  return -0.5 * r.dot(llt.solve(r));
}

double continuum_limit_gap(const OptimalProposalParams& params, const Vector& xPrev,
                           const Vector& y) {
  const ProposalMoments withObs = optimal_proposal_moments(params, xPrev, y);
  const ProposalMoments without = optimal_proposal_moments(params, xPrev, Vector::Zero(y.size()));
  const Vector euler = xPrev + params.fCont(xPrev) * params.dt;
  const Vector residue = without.mean - euler;
  return (withObs.mean - euler - residue).norm();
}

}  // namespace pfscale
