#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace shiftbench {

// Ingested vectors within this distance of unit mass are silently renormalized.
inline constexpr double kIngestTolerance = 1e-6;
// Internal invariant on every constructed simplex.
inline constexpr double kSimplexTolerance = 1e-9;

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;

/// Numerically stable softmax of `logits` written to `out` (same length).
void softmax(std::span<const double> logits, std::span<double> out) noexcept;

/// A probability vector over m >= 2 positionally-indexed classes.
class ProbabilitySimplex {
 public:
  /// Divides nonnegative finite `weights` by their sum. Throws
  /// DegenerateSupport when the sum is zero.
  static ProbabilitySimplex normalize(std::vector<double> weights);
  static ProbabilitySimplex uniform(std::size_t classes);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::span<const double> values() const noexcept { return probs_; }
  const std::vector<double>& to_vector() const noexcept { return probs_; }
  auto begin() const noexcept { return probs_.begin(); }
  auto end() const noexcept { return probs_.end(); }
  std::size_t argmax() const noexcept { return shiftbench::argmax(probs_); }

  friend bool operator==(const ProbabilitySimplex&, const ProbabilitySimplex&) = default;

 private:
  friend ProbabilitySimplex validate_simplex(std::span<const double> values);
  explicit ProbabilitySimplex(std::vector<double> probs) : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

/// Accepts `values` as a simplex. Sums off by at most kIngestTolerance are
/// renormalized; anything further is rejected with SumOutOfTolerance.
ProbabilitySimplex validate_simplex(std::span<const double> values);
inline ProbabilitySimplex validate_simplex(std::initializer_list<double> values) {
  return validate_simplex(std::span<const double>(values.begin(), values.size()));
}

/// N x m row-stochastic matrix, stored row-major.
class PosteriorMatrix {
 public:
  /// Validates every row as a simplex (ingestion tolerance); errors carry the row index.
  PosteriorMatrix(std::size_t rows, std::size_t cols, std::vector<double> flat);
  static PosteriorMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static PosteriorMatrix from_rows(const std::vector<ProbabilitySimplex>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t k) const noexcept {
    return {data_.data() + k * cols_, cols_};
  }
  ProbabilitySimplex row_simplex(std::size_t k) const;
  std::size_t row_argmax(std::size_t k) const noexcept { return argmax(row(k)); }
  double row_max(std::size_t k) const noexcept { return row(k)[row_argmax(k)]; }
  std::span<const double> data() const noexcept { return data_; }

  PosteriorMatrix select(std::span<const std::size_t> indices) const;

  friend bool operator==(const PosteriorMatrix&, const PosteriorMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// N x m raw classifier scores; entries must be finite.
class LogitMatrix {
 public:
  LogitMatrix(std::size_t rows, std::size_t cols, std::vector<double> flat);
  static LogitMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t k) const noexcept {
    return {data_.data() + k * cols_, cols_};
  }
  std::span<const double> data() const noexcept { return data_; }

  LogitMatrix select(std::span<const std::size_t> indices) const;

  friend bool operator==(const LogitMatrix&, const LogitMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

enum class ConfusionKind { Conditional, Joint };

/// Entry (i, j) is p(predicted = i | true = j) for the conditional kind and
/// p(predicted = i, true = j) for the joint kind.
class ConfusionMatrix {
 public:
  /// `entries` is row-major m*m. Conditional columns must each sum to one;
  /// joint entries must sum to one overall.
  ConfusionMatrix(std::size_t classes, std::vector<double> entries, ConfusionKind kind);

  std::size_t size() const noexcept { return classes_; }
  ConfusionKind kind() const noexcept { return kind_; }
  double operator()(std::size_t predicted, std::size_t truth) const noexcept {
    return entries_[predicted * classes_ + truth];
  }
  std::span<const double> entries() const noexcept { return entries_; }

  /// Diagonal of a conditional matrix (per-class recall).
  std::vector<double> recalls() const;
  /// Scales column j of a conditional matrix by source[j].
  ConfusionMatrix to_joint(const ProbabilitySimplex& source) const;

 private:
  std::size_t classes_;
  std::vector<double> entries_;
  ConfusionKind kind_;
};

/// Prevalence ratios w_i = p_t(y_i) / p_s(y_i); entries are nonnegative.
class ShiftWeights {
 public:
  explicit ShiftWeights(std::vector<double> w);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const noexcept { return w_[i]; }
  std::span<const double> values() const noexcept { return w_; }
  const std::vector<double>& to_vector() const noexcept { return w_; }

  /// Whether sum_i w_i * source_i equals one within `tolerance`.
  bool consistent_with(const ProbabilitySimplex& source, double tolerance = 1e-6) const;

  friend bool operator==(const ShiftWeights&, const ShiftWeights&) = default;

 private:
  std::vector<double> w_;
};

/// Validation or test samples with known labels. At least one of
/// posteriors/logits is present; when both are, they must agree in shape.
class LabeledBatch {
 public:
  LabeledBatch(std::optional<PosteriorMatrix> posteriors, std::optional<LogitMatrix> logits,
               std::vector<std::size_t> labels);
  LabeledBatch(PosteriorMatrix posteriors, std::vector<std::size_t> labels);
  LabeledBatch(LogitMatrix logits, std::vector<std::size_t> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t classes() const noexcept { return classes_; }
  bool has_posteriors() const noexcept { return posteriors_.has_value(); }
  bool has_logits() const noexcept { return logits_.has_value(); }
  const PosteriorMatrix& posteriors() const;
  const LogitMatrix& logits() const;
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

  std::vector<std::size_t> label_counts() const;
  LabeledBatch select(std::span<const std::size_t> indices) const;

 private:
  std::optional<PosteriorMatrix> posteriors_;
  std::optional<LogitMatrix> logits_;
  std::vector<std::size_t> labels_;
  std::size_t classes_ = 0;
};

}  // namespace shiftbench
