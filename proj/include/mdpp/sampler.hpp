#ifndef MDPP_SAMPLER_HPP
#define MDPP_SAMPLER_HPP

#include <cstddef>
#include <vector>

#include "mdpp/kernel.hpp"
#include "mdpp/random.hpp"

namespace mdpp {

/// Exact L-ensemble DPP sample from a decomposition of L.
///
/// Eigenvector n is kept with probability lambda_n / (lambda_n + 1); the
/// kept vectors then span the projection phase (see sample_from_basis).
Subset sample_dpp(const EigenDecomposition &decomp, RandomSource &rng);
Subset sample_dpp(const Kernel &l, RandomSource &rng);

/// Exact k-DPP sample. Eigenvectors are visited from last to first and kept
/// with probability lambda_n e_{r-1}^{n-1} / e_r^n, r being the number still
/// needed. Throws InfeasibleCardinality if k exceeds the numerical rank.
Subset sample_kdpp(const EigenDecomposition &decomp, std::size_t k, RandomSource &rng);
Subset sample_kdpp(const Kernel &l, std::size_t k, RandomSource &rng);

/// Projection phase shared by both samplers: repeatedly draws an item with
/// probability (1/|V|) sum_v (v . e_i)^2 and replaces V by an orthonormal
/// basis of its subspace orthogonal to e_i. Columns of `basis` must be
/// orthonormal. Returns one item per basis column.
Subset sample_from_basis(Matrix basis, RandomSource &rng);

/// Removes the e_item direction from the span of the orthonormal columns of
/// `basis`: eliminates item's row using the column with largest |basis(item,
/// j)| (lowest j on ties), drops that column, then re-orthonormalizes by
/// modified Gram-Schmidt, discarding columns whose norm falls below 1e-10.
void project_out_item(Matrix &basis, std::size_t item);

/// log P(Y = A) = log det(L_A) - log det(L + I); -infinity for
/// zero-probability sets.
double log_prob_dpp(const Kernel &l, const Subset &a);

/// log P_k(Y = A) = log det(L_A) - log e_k(lambda). Throws InvalidArgument
/// unless |A| = k.
double log_prob_kdpp(const Kernel &l, const Subset &a, std::size_t k);

}  // namespace mdpp

#endif  // MDPP_SAMPLER_HPP
