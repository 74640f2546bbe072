#include "shiftbench/prior_update.hpp"

#include <algorithm>
#include <string>

#include "shiftbench/errors.hpp"

namespace shiftbench {
namespace detail {

std::vector<double> prior_ratio(const ProbabilitySimplex& source,
                                const ProbabilitySimplex& target) {
  if (source.size() != target.size()) {
    throw Error(ErrorCode::DimensionMismatch, "source has " + std::to_string(source.size()) +
                                                  " classes, target " +
                                                  std::to_string(target.size()));
  }
  std::vector<double> ratio(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!(source[i] > 0.0)) {
      throw Error(ErrorCode::ZeroSourceEntry, "source prior of class " + std::to_string(i) +
                                                  " is zero");
    }
    ratio[i] = target[i] / source[i];
  }
  return ratio;
}

bool reweight_row(std::span<const double> posterior, std::span<const double> ratio,
                  std::span<double> out) noexcept {
  // Equal ratios cancel in the normalization; keep the row bit-exact.
  if (std::all_of(ratio.begin(), ratio.end(), [&](double r) { return r == ratio[0]; }) &&
      ratio[0] > 0.0) {
    std::copy(posterior.begin(), posterior.end(), out.begin());
    return true;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    out[i] = ratio[i] * posterior[i];
    total += out[i];
  }
  if (!(total > 0.0)) return false;
  for (auto& v : out) v /= total;
  return true;
}

}  // namespace detail

ProbabilitySimplex prior_update(const ProbabilitySimplex& posterior,
                                const ProbabilitySimplex& source,
                                const ProbabilitySimplex& target) {
  const auto ratio = detail::prior_ratio(source, target);
  if (posterior.size() != ratio.size()) {
    throw Error(ErrorCode::DimensionMismatch, "posterior length differs from prior length");
  }
  std::vector<double> out(ratio.size());
  if (!detail::reweight_row(posterior.values(), ratio, out)) {
    throw Error(ErrorCode::DegenerateSupport, "target prior vanishes on the posterior's support");
  }
  return validate_simplex(out);
}

PosteriorMatrix batch_prior_update(const PosteriorMatrix& posteriors,
                                   const ProbabilitySimplex& source,
                                   const ProbabilitySimplex& target) {
  const auto ratio = detail::prior_ratio(source, target);
  if (posteriors.cols() != ratio.size()) {
    throw Error(ErrorCode::DimensionMismatch, "posterior width differs from prior length");
  }
  const std::size_t m = posteriors.cols();
  std::vector<double> flat(posteriors.rows() * m);
  for (std::size_t k = 0; k < posteriors.rows(); ++k) {
    if (!detail::reweight_row(posteriors.row(k), ratio, std::span<double>(flat.data() + k * m, m))) {
      throw Error(ErrorCode::DegenerateSupport,
                  "target prior vanishes on the posterior's support", k);
    }
  }
  return PosteriorMatrix(posteriors.rows(), m, std::move(flat));
}

}  // namespace shiftbench
