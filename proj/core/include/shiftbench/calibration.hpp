#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "shiftbench/types.hpp"

namespace shiftbench {

enum class CalibratorKind {
  Identity,
  Temperature,                // softmax(z / T)
  BiasCorrectedTemperature,   // softmax(z / T + b)
  Vector,                     // softmax(s * z + b)
  NoBiasVector,               // softmax(s * z)
};

/// Short names used on the command line and in JSON: identity, ts, bcts, vs, nbvs.
std::string_view to_string(CalibratorKind kind) noexcept;
CalibratorKind parse_calibrator_kind(std::string_view name);

/// Post-hoc map from logits to calibrated posteriors. Immutable.
class Calibrator {
 public:
  static Calibrator identity();
  static Calibrator temperature(double t);
  static Calibrator bias_corrected_temperature(double t, std::vector<double> bias);
  static Calibrator vector(std::vector<double> scale, std::vector<double> bias);
  static Calibrator no_bias_vector(std::vector<double> scale);

  CalibratorKind kind() const noexcept { return kind_; }
  double temperature() const noexcept { return temperature_; }
  /// Empty for kinds without a per-class scale.
  const std::vector<double>& scale() const noexcept { return scale_; }
  /// Empty for kinds without a bias (treated as the zero vector).
  const std::vector<double>& bias() const noexcept { return bias_; }
  /// Number of classes the parameters are tied to, or 0 when any width works.
  std::size_t classes() const noexcept;

  /// Calibrated logits for one row.
  void transform(std::span<const double> logits, std::span<double> out) const;
  PosteriorMatrix apply(const LogitMatrix& logits) const;

  friend bool operator==(const Calibrator&, const Calibrator&) = default;

 private:
  Calibrator(CalibratorKind kind, double t, std::vector<double> scale, std::vector<double> bias);

  CalibratorKind kind_;
  double temperature_ = 1.0;
  std::vector<double> scale_;
  std::vector<double> bias_;
};

inline PosteriorMatrix apply_calibrator(const Calibrator& c, const LogitMatrix& logits) {
  return c.apply(logits);
}

struct CalibrationReport {
  double nll_before = 0.0;
  double nll_after = 0.0;
  double ece_before = 0.0;
  double ece_after = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;  // infinity norm at the returned parameters
};

struct FitOptions {
  double gradient_tolerance = 1e-7;
  std::size_t max_iterations = 10'000;
  std::size_t ece_bins = 15;
};

struct CalibrationFit {
  Calibrator calibrator;
  CalibrationReport report;
};

/// Mean negative log-likelihood of a calibrator family over a labeled logit
/// batch, as a function of its unconstrained parameters. Temperature and
/// scales enter through their logarithms.
///
/// Parameter layout: ts [log T]; bcts [log T, b...]; vs [log s..., b...];
/// nbvs [log s...]; identity has none.
class CalibrationObjective {
 public:
  CalibrationObjective(CalibratorKind kind, const LabeledBatch& batch);

  std::size_t parameter_count() const noexcept;
  std::vector<double> initial_parameters() const;
  /// Returns the mean NLL and writes its gradient into `gradient`.
  double evaluate(std::span<const double> params, std::span<double> gradient) const;
  double value(std::span<const double> params) const;
  Calibrator to_calibrator(std::span<const double> params) const;

 private:
  CalibratorKind kind_;
  const LogitMatrix* logits_;
  const std::vector<std::size_t>* labels_;
  std::size_t classes_;
};

/// Fits `kind` by full-batch gradient descent with backtracking line search,
/// starting from the identity map. Throws SingleClassBatch when fewer than two
/// distinct labels are present and MissingLogits when the batch has none.
/// Non-convergence is reported through `report.converged`, not thrown.
CalibrationFit fit_calibrator(CalibratorKind kind, const LabeledBatch& validation,
                              const FitOptions& options = {});

/// Top-label expected calibration error with `bins` equal-width confidence bins.
double ece(const LabeledBatch& batch, std::size_t bins = 15);
double ece(const PosteriorMatrix& posteriors, std::span<const std::size_t> labels,
           std::size_t bins = 15);

/// Binned calibration error of each posterior column against its one-vs-rest indicator.
std::vector<double> classwise_calibration_error(const LabeledBatch& batch, std::size_t bins = 15);

/// Fraction of rows whose argmax after re-targeting `estimated` from `source`
/// to `target` agrees with the same update applied to the exact `oracle` posteriors.
double top_label_shift_agreement(const PosteriorMatrix& estimated, const PosteriorMatrix& oracle,
                                 const ProbabilitySimplex& source,
                                 const ProbabilitySimplex& target);

}  // namespace shiftbench
