#pragma once

#include <span>

#include "shiftbench/types.hpp"

namespace shiftbench {

/// Re-targets one posterior from the `source` class prior to `target`:
/// out_i is proportional to (target_i / source_i) * posterior_i.
///
/// Zero target entries are allowed and zero out their class. Throws
/// ZeroSourceEntry when any source entry is zero, DimensionMismatch on
/// length disagreement, and DegenerateSupport when the target puts no mass
/// on the posterior's support.
ProbabilitySimplex prior_update(const ProbabilitySimplex& posterior,
                                const ProbabilitySimplex& source,
                                const ProbabilitySimplex& target);

/// Row-wise prior_update; failures carry the offending row index.
PosteriorMatrix batch_prior_update(const PosteriorMatrix& posteriors,
                                   const ProbabilitySimplex& source,
                                   const ProbabilitySimplex& target);

namespace detail {

/// target_i / source_i, validated. Throws ZeroSourceEntry / DimensionMismatch.
std::vector<double> prior_ratio(const ProbabilitySimplex& source,
                                const ProbabilitySimplex& target);

/// Writes the reweighted row into `out`. Returns false when the normalizer
/// vanishes. When every ratio is equal the row is copied unchanged.
bool reweight_row(std::span<const double> posterior, std::span<const double> ratio,
                  std::span<double> out) noexcept;

}  // namespace detail
}  // namespace shiftbench
