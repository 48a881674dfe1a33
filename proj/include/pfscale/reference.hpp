#pragma once

#include "pfscale/core.hpp"
#include "pfscale/model.hpp"
#include "pfscale/rng.hpp"

#include <vector>

/// Straightforward single-threaded versions of the ensemble kernels. They go
/// through the generic model interface one particle at a time and serve as
/// the oracle the vectorized and OpenMP kernels are tested against.
namespace pfscale::reference {

Matrix particle_normals(const SeedSpec& seed, Index dim, Index n);

/// em_step applied column by column.
Matrix propagate(const Matrix& positions, const DiffusionModel& model, double dt,
                 const Matrix& noise);

Vector log_increments(const Matrix& positions, const DiffusionModel& model,
                      const Vector& obsIncrement, double dt);

double effective_sample_size(const Vector& weights);

/// Linear scan of the cumulative weights for each uniform.
std::vector<Index> multinomial_ancestors(const Vector& weights, const SeedSpec& seed);

/// Triple loop over (i, j, particle).
Matrix constant_gain(const Matrix& positions, const DiffusionModel& model);

Matrix fpf_step(const Matrix& positions, const DiffusionModel& model, const Vector& obsIncrement,
                double dt, const Matrix& noise);

}  // namespace pfscale::reference
