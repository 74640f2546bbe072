#include "shiftbench/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "shiftbench/errors.hpp"
#include "shiftbench/prior_update.hpp"

namespace shiftbench {

std::string_view to_string(CalibratorKind kind) noexcept {
  switch (kind) {
    case CalibratorKind::Identity: return "identity";
    case CalibratorKind::Temperature: return "ts";
    case CalibratorKind::BiasCorrectedTemperature: return "bcts";
    case CalibratorKind::Vector: return "vs";
    case CalibratorKind::NoBiasVector: return "nbvs";
  }
  return "identity";
}

CalibratorKind parse_calibrator_kind(std::string_view name) {
  if (name == "identity" || name == "none") return CalibratorKind::Identity;
  if (name == "ts") return CalibratorKind::Temperature;
  if (name == "bcts") return CalibratorKind::BiasCorrectedTemperature;
  if (name == "vs") return CalibratorKind::Vector;
  if (name == "nbvs") return CalibratorKind::NoBiasVector;
  throw Error(ErrorCode::InvalidArgument, "unknown calibrator '" + std::string(name) + "'");
}

Calibrator::Calibrator(CalibratorKind kind, double t, std::vector<double> scale,
                       std::vector<double> bias)
    : kind_(kind), temperature_(t), scale_(std::move(scale)), bias_(std::move(bias)) {
  if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
    throw Error(ErrorCode::InvalidTemperature, "temperature must be positive and finite");
  }
  for (double s : scale_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::InvalidArgument, "scale entries must be positive and finite");
    }
  }
  for (double b : bias_) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "bias must be finite");
  }
  if (!scale_.empty() && !bias_.empty() && scale_.size() != bias_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "scale and bias lengths differ");
  }
}

Calibrator Calibrator::identity() { return {CalibratorKind::Identity, 1.0, {}, {}}; }

Calibrator Calibrator::temperature(double t) { return {CalibratorKind::Temperature, t, {}, {}}; }

Calibrator Calibrator::bias_corrected_temperature(double t, std::vector<double> bias) {
  if (bias.size() < 2) throw Error(ErrorCode::DimensionTooSmall, "bias needs >= 2 classes");
  return {CalibratorKind::BiasCorrectedTemperature, t, {}, std::move(bias)};
}

Calibrator Calibrator::vector(std::vector<double> scale, std::vector<double> bias) {
  if (scale.size() < 2) throw Error(ErrorCode::DimensionTooSmall, "scale needs >= 2 classes");
  if (scale.size() != bias.size()) {
    throw Error(ErrorCode::DimensionMismatch, "scale and bias lengths differ");
  }
  return {CalibratorKind::Vector, 1.0, std::move(scale), std::move(bias)};
}

Calibrator Calibrator::no_bias_vector(std::vector<double> scale) {
  if (scale.size() < 2) throw Error(ErrorCode::DimensionTooSmall, "scale needs >= 2 classes");
  return {CalibratorKind::NoBiasVector, 1.0, std::move(scale), {}};
}

std::size_t Calibrator::classes() const noexcept {
  return std::max(scale_.size(), bias_.size());
}

void Calibrator::transform(std::span<const double> logits, std::span<double> out) const {
  const std::size_t m = logits.size();
  if (classes() != 0 && classes() != m) {
    throw Error(ErrorCode::DimensionMismatch, "calibrator fitted for " +
                                                  std::to_string(classes()) +
                                                  " classes, logits have " + std::to_string(m));
  }
  for (std::size_t i = 0; i < m; ++i) {
    double u = logits[i];
    if (!scale_.empty()) u *= scale_[i];
    if (kind_ == CalibratorKind::Temperature ||
        kind_ == CalibratorKind::BiasCorrectedTemperature) {
      u /= temperature_;
    }
    if (!bias_.empty()) u += bias_[i];
    out[i] = u;
  }
}

PosteriorMatrix Calibrator::apply(const LogitMatrix& logits) const {
  const std::size_t m = logits.cols();
  std::vector<double> flat(logits.rows() * m);
  std::vector<double> scratch(m);
  for (std::size_t k = 0; k < logits.rows(); ++k) {
    transform(logits.row(k), scratch);
    softmax(scratch, std::span<double>(flat.data() + k * m, m));
  }
  return PosteriorMatrix(logits.rows(), m, std::move(flat));
}

CalibrationObjective::CalibrationObjective(CalibratorKind kind, const LabeledBatch& batch)
    : kind_(kind),
      logits_(&batch.logits()),
      labels_(&batch.labels()),
      classes_(batch.classes()) {}

std::size_t CalibrationObjective::parameter_count() const noexcept {
  switch (kind_) {
    case CalibratorKind::Identity: return 0;
    case CalibratorKind::Temperature: return 1;
    case CalibratorKind::BiasCorrectedTemperature: return 1 + classes_;
    case CalibratorKind::Vector: return 2 * classes_;
    case CalibratorKind::NoBiasVector: return classes_;
  }
  return 0;
}

std::vector<double> CalibrationObjective::initial_parameters() const {
  // log T = 0, log s = 0, b = 0: the identity map.
  return std::vector<double>(parameter_count(), 0.0);
}

double CalibrationObjective::evaluate(std::span<const double> params,
                                      std::span<double> gradient) const {
  const std::size_t m = classes_;
  const std::size_t n = logits_->rows();
  const bool with_grad = !gradient.empty();

  // Per-class multiplier a_i and additive bias b_i of the affine logit map.
  std::vector<double> mult(m, 1.0), bias(m, 0.0);
  std::size_t bias_offset = 0;
  switch (kind_) {
    case CalibratorKind::Identity: break;
    case CalibratorKind::Temperature:
      std::fill(mult.begin(), mult.end(), std::exp(-params[0]));
      break;
    case CalibratorKind::BiasCorrectedTemperature:
      std::fill(mult.begin(), mult.end(), std::exp(-params[0]));
      bias_offset = 1;
      break;
    case CalibratorKind::Vector:
      for (std::size_t i = 0; i < m; ++i) mult[i] = std::exp(params[i]);
      bias_offset = m;
      break;
    case CalibratorKind::NoBiasVector:
      for (std::size_t i = 0; i < m; ++i) mult[i] = std::exp(params[i]);
      break;
  }
  const bool has_bias = kind_ == CalibratorKind::BiasCorrectedTemperature ||
                        kind_ == CalibratorKind::Vector;
  if (has_bias) {
    for (std::size_t i = 0; i < m; ++i) bias[i] = params[bias_offset + i];
  }

  // Accumulate dL/du_i and dL/du_i * z_i over the batch.
  std::vector<long double> d_u(m, 0.0L), d_uz(m, 0.0L);
  std::vector<double> u(m), p(m);
  long double loss = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    const auto z = logits_->row(k);
    const std::size_t y = (*labels_)[k];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      u[i] = mult[i] * z[i] + bias[i];
      top = std::max(top, u[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = std::exp(u[i] - top);
      total += p[i];
    }
    loss += static_cast<long double>(top + std::log(total) - u[y]);
    if (with_grad) {
      for (std::size_t i = 0; i < m; ++i) {
        const double g = p[i] / total - (i == y ? 1.0 : 0.0);
        d_u[i] += g;
        d_uz[i] += static_cast<long double>(g) * z[i];
      }
    }
  }
  const long double inv_n = 1.0L / static_cast<long double>(n);
  if (with_grad) {
    std::fill(gradient.begin(), gradient.end(), 0.0);
    switch (kind_) {
      case CalibratorKind::Identity: break;
      case CalibratorKind::Temperature:
      case CalibratorKind::BiasCorrectedTemperature: {
        long double g = 0.0L;
        for (std::size_t i = 0; i < m; ++i) g -= d_uz[i] * mult[i];
        gradient[0] = static_cast<double>(g * inv_n);
        break;
      }
      case CalibratorKind::Vector:
      case CalibratorKind::NoBiasVector:
        for (std::size_t i = 0; i < m; ++i) {
          gradient[i] = static_cast<double>(d_uz[i] * mult[i] * inv_n);
        }
        break;
    }
    if (has_bias) {
      for (std::size_t i = 0; i < m; ++i) {
        gradient[bias_offset + i] = static_cast<double>(d_u[i] * inv_n);
      }
    }
  }
  return static_cast<double>(loss * inv_n);
}

double CalibrationObjective::value(std::span<const double> params) const {
  return evaluate(params, {});
}

Calibrator CalibrationObjective::to_calibrator(std::span<const double> params) const {
  const std::size_t m = classes_;
  switch (kind_) {
    case CalibratorKind::Identity: return Calibrator::identity();
    case CalibratorKind::Temperature: return Calibrator::temperature(std::exp(params[0]));
    case CalibratorKind::BiasCorrectedTemperature:
      return Calibrator::bias_corrected_temperature(
          std::exp(params[0]), std::vector<double>(params.begin() + 1, params.end()));
    case CalibratorKind::Vector: {
      std::vector<double> scale(m);
      for (std::size_t i = 0; i < m; ++i) scale[i] = std::exp(params[i]);
      return Calibrator::vector(std::move(scale),
                                std::vector<double>(params.begin() + m, params.end()));
    }
    case CalibratorKind::NoBiasVector: {
      std::vector<double> scale(m);
      for (std::size_t i = 0; i < m; ++i) scale[i] = std::exp(params[i]);
      return Calibrator::no_bias_vector(std::move(scale));
    }
  }
  return Calibrator::identity();
}

namespace {

double inf_norm(std::span<const double> v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out += a[i] * b[i];
  return out;
}

}  // namespace

CalibrationFit fit_calibrator(CalibratorKind kind, const LabeledBatch& validation,
                              const FitOptions& options) {
  const auto& logits = validation.logits();
  const std::set<std::size_t> distinct(validation.labels().begin(), validation.labels().end());
  if (distinct.size() < 2) {
    throw Error(ErrorCode::SingleClassBatch, "need at least two distinct labels to calibrate");
  }
  for (double z : logits.data()) {
    if (!std::isfinite(z)) throw Error(ErrorCode::NonFiniteLogits, "validation logits");
  }

  const CalibrationObjective objective(kind, validation);
  const std::size_t dim = objective.parameter_count();
  std::vector<double> x = objective.initial_parameters();
  std::vector<double> grad(dim), x_new(dim), grad_new(dim);

  CalibrationReport report;
  double f = objective.evaluate(x, grad);
  report.nll_before = f;

  constexpr double kArmijo = 1e-4;
  double step = 1.0;
  std::size_t iter = 0;
  bool converged = dim == 0 || inf_norm(grad) < options.gradient_tolerance;
  while (!converged && iter < options.max_iterations) {
    ++iter;
    const double g2 = dot(grad, grad);
    double t = step;
    double f_new = f;
    bool accepted = false;
    while (t > 1e-14) {
      for (std::size_t i = 0; i < dim; ++i) x_new[i] = x[i] - t * grad[i];
      f_new = objective.evaluate(x_new, grad_new);
      if (std::isfinite(f_new) && f_new <= f - kArmijo * t * g2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // At rounding level the sufficient-decrease test is noise; take the
      // step only if it does not raise the loss and shrinks the gradient.
      if (std::isfinite(f_new) && f_new <= f && inf_norm(grad_new) < inf_norm(grad)) {
        accepted = true;
      } else {
        break;
      }
    }
    // Barzilai-Borwein estimate for the next trial step.
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double s = x_new[i] - x[i];
      const double y = grad_new[i] - grad[i];
      ss += s * s;
      sy += s * y;
    }
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : std::min(2.0 * t, 1e10);
    x.swap(x_new);
    grad.swap(grad_new);
    f = f_new;
    converged = inf_norm(grad) < options.gradient_tolerance;
  }

  report.nll_after = f;
  report.iterations = iter;
  report.converged = converged;
  report.gradient_norm = inf_norm(grad);

  auto calibrator = objective.to_calibrator(x);
  report.ece_before = ece(Calibrator::identity().apply(logits), validation.labels(),
                          options.ece_bins);
  report.ece_after = ece(calibrator.apply(logits), validation.labels(), options.ece_bins);
  return {std::move(calibrator), report};
}

namespace {

std::size_t bin_of(double confidence, std::size_t bins) {
  const auto b = static_cast<std::size_t>(std::floor(confidence * static_cast<double>(bins)));
  return std::min(b, bins - 1);
}

void check_bins(std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "bin count must be >= 1");
}

}  // namespace

double ece(const PosteriorMatrix& posteriors, std::span<const std::size_t> labels,
           std::size_t bins) {
  check_bins(bins);
  if (labels.size() != posteriors.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  }
  if (labels.empty()) throw Error(ErrorCode::EmptyBatch, "no samples");
  std::vector<double> conf_sum(bins, 0.0), hits(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t k = 0; k < posteriors.rows(); ++k) {
    const std::size_t pred = posteriors.row_argmax(k);
    const double conf = posteriors.row(k)[pred];
    const std::size_t b = bin_of(conf, bins);
    conf_sum[b] += conf;
    hits[b] += pred == labels[k] ? 1.0 : 0.0;
    ++count[b];
  }
  const double n = static_cast<double>(labels.size());
  double out = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double c = static_cast<double>(count[b]);
    out += (c / n) * std::abs(hits[b] / c - conf_sum[b] / c);
  }
  return out;
}

double ece(const LabeledBatch& batch, std::size_t bins) {
  if (batch.size() == 0) throw Error(ErrorCode::EmptyBatch, "no samples");
  return ece(batch.posteriors(), batch.labels(), bins);
}

std::vector<double> classwise_calibration_error(const LabeledBatch& batch, std::size_t bins) {
  check_bins(bins);
  if (batch.size() == 0) throw Error(ErrorCode::EmptyBatch, "no samples");
  const auto& post = batch.posteriors();
  const std::size_t m = post.cols();
  const double n = static_cast<double>(batch.size());
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> prob_sum(bins, 0.0), hits(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t k = 0; k < post.rows(); ++k) {
      const double p = post.row(k)[i];
      const std::size_t b = bin_of(p, bins);
      prob_sum[b] += p;
      hits[b] += batch.labels()[k] == i ? 1.0 : 0.0;
      ++count[b];
    }
    for (std::size_t b = 0; b < bins; ++b) {
      if (count[b] == 0) continue;
      const double c = static_cast<double>(count[b]);
      out[i] += (c / n) * std::abs(hits[b] / c - prob_sum[b] / c);
    }
  }
  return out;
}

double top_label_shift_agreement(const PosteriorMatrix& estimated, const PosteriorMatrix& oracle,
                                 const ProbabilitySimplex& source,
                                 const ProbabilitySimplex& target) {
  if (estimated.rows() != oracle.rows() || estimated.cols() != oracle.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "estimated and oracle matrices differ in shape");
  }
  const auto updated_est = batch_prior_update(estimated, source, target);
  const auto updated_oracle = batch_prior_update(oracle, source, target);
  std::size_t agree = 0;
  for (std::size_t k = 0; k < estimated.rows(); ++k) {
    if (updated_est.row_argmax(k) == updated_oracle.row_argmax(k)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(estimated.rows());
}

}  // namespace shiftbench
