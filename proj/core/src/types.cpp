#include "shiftbench/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "shiftbench/errors.hpp"

namespace shiftbench {

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void softmax(std::span<const double> logits, std::span<double> out) noexcept {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (auto& v : out) v /= total;
}

namespace {

// Checks one simplex row in place, renormalizing within the ingestion band.
void check_simplex(std::span<double> v, std::optional<std::size_t> row) {
  if (v.size() < 2) {
    throw Error(ErrorCode::DimensionTooSmall,
                "need at least 2 classes, got " + std::to_string(v.size()), row);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::NonFiniteValue, "entry " + std::to_string(i), row);
    }
    if (v[i] < 0.0) {
      throw Error(ErrorCode::NegativeEntry,
                  "entry " + std::to_string(i) + " = " + std::to_string(v[i]), row);
    }
    total += v[i];
  }
  const double gap = std::abs(total - 1.0);
  if (gap > kIngestTolerance) {
    throw Error(ErrorCode::SumOutOfTolerance, "entries sum to " + std::to_string(total), row);
  }
  // Rounding-level gaps are left alone so already-normalized rows stay bit-exact.
  if (gap > 1e-12) {
    for (auto& x : v) x /= total;
  }
}

void check_shape(std::size_t rows, std::size_t cols, std::size_t flat) {
  if (rows * cols != flat) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(rows) + "x" + std::to_string(cols) + " matrix given " +
                    std::to_string(flat) + " values");
  }
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows, std::size_t& cols) {
  cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != cols) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(cols) + " columns, got " +
                      std::to_string(rows[k].size()),
                  k);
    }
    flat.insert(flat.end(), rows[k].begin(), rows[k].end());
  }
  return flat;
}

}  // namespace

ProbabilitySimplex validate_simplex(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  check_simplex(v, std::nullopt);
  return ProbabilitySimplex(std::move(v));
}

ProbabilitySimplex ProbabilitySimplex::normalize(std::vector<double> weights) {
  if (weights.size() < 2) {
    throw Error(ErrorCode::DimensionTooSmall, "need at least 2 classes");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::NonFiniteValue, "weight is not finite");
    if (w < 0.0) throw Error(ErrorCode::NegativeEntry, "weight " + std::to_string(w));
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateSupport, "weights sum to zero");
  for (auto& w : weights) w /= total;
  return ProbabilitySimplex(std::move(weights));
}

ProbabilitySimplex ProbabilitySimplex::uniform(std::size_t classes) {
  if (classes < 2) throw Error(ErrorCode::DimensionTooSmall, "need at least 2 classes");
  return ProbabilitySimplex(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

PosteriorMatrix::PosteriorMatrix(std::size_t rows, std::size_t cols, std::vector<double> flat)
    : rows_(rows), cols_(cols), data_(std::move(flat)) {
  check_shape(rows_, cols_, data_.size());
  if (rows_ == 0) throw Error(ErrorCode::EmptyBatch, "posterior matrix has no rows");
  for (std::size_t k = 0; k < rows_; ++k) {
    check_simplex(std::span<double>(data_.data() + k * cols_, cols_), k);
  }
}

PosteriorMatrix PosteriorMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  std::size_t cols = 0;
  auto flat = flatten(rows, cols);
  return PosteriorMatrix(rows.size(), cols, std::move(flat));
}

PosteriorMatrix PosteriorMatrix::from_rows(const std::vector<ProbabilitySimplex>& rows) {
  std::vector<std::vector<double>> raw;
  raw.reserve(rows.size());
  for (const auto& r : rows) raw.push_back(r.to_vector());
  return from_rows(raw);
}

ProbabilitySimplex PosteriorMatrix::row_simplex(std::size_t k) const {
  return validate_simplex(row(k));
}

PosteriorMatrix PosteriorMatrix::select(std::span<const std::size_t> indices) const {
  std::vector<double> flat;
  flat.reserve(indices.size() * cols_);
  for (std::size_t k : indices) {
    if (k >= rows_) throw Error(ErrorCode::InvalidArgument, "row index out of range", k);
    auto r = row(k);
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return PosteriorMatrix(indices.size(), cols_, std::move(flat));
}

LogitMatrix::LogitMatrix(std::size_t rows, std::size_t cols, std::vector<double> flat)
    : rows_(rows), cols_(cols), data_(std::move(flat)) {
  check_shape(rows_, cols_, data_.size());
  if (rows_ == 0) throw Error(ErrorCode::EmptyBatch, "logit matrix has no rows");
  if (cols_ < 2) throw Error(ErrorCode::DimensionTooSmall, "need at least 2 classes");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorCode::NonFiniteLogits, "column " + std::to_string(i % cols_),
                  i / cols_);
    }
  }
}

LogitMatrix LogitMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  std::size_t cols = 0;
  auto flat = flatten(rows, cols);
  return LogitMatrix(rows.size(), cols, std::move(flat));
}

LogitMatrix LogitMatrix::select(std::span<const std::size_t> indices) const {
  std::vector<double> flat;
  flat.reserve(indices.size() * cols_);
  for (std::size_t k : indices) {
    if (k >= rows_) throw Error(ErrorCode::InvalidArgument, "row index out of range", k);
    auto r = row(k);
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return LogitMatrix(indices.size(), cols_, std::move(flat));
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<double> entries,
                                 ConfusionKind kind)
    : classes_(classes), entries_(std::move(entries)), kind_(kind) {
  if (classes_ < 2) throw Error(ErrorCode::DimensionTooSmall, "need at least 2 classes");
  check_shape(classes_, classes_, entries_.size());
  for (double v : entries_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "confusion entry");
    if (v < 0.0) throw Error(ErrorCode::NegativeEntry, "confusion entry " + std::to_string(v));
  }
  if (kind_ == ConfusionKind::Conditional) {
    for (std::size_t j = 0; j < classes_; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < classes_; ++i) col += (*this)(i, j);
      if (std::abs(col - 1.0) > kSimplexTolerance) {
        throw Error(ErrorCode::SumOutOfTolerance,
                    "confusion column " + std::to_string(j) + " sums to " + std::to_string(col));
      }
    }
  } else {
    const double total = std::accumulate(entries_.begin(), entries_.end(), 0.0);
    if (std::abs(total - 1.0) > kSimplexTolerance) {
      throw Error(ErrorCode::SumOutOfTolerance,
                  "joint confusion sums to " + std::to_string(total));
    }
  }
}

std::vector<double> ConfusionMatrix::recalls() const {
  if (kind_ != ConfusionKind::Conditional) {
    throw Error(ErrorCode::InvalidArgument, "recalls need a conditional confusion matrix");
  }
  std::vector<double> diag(classes_);
  for (std::size_t i = 0; i < classes_; ++i) diag[i] = (*this)(i, i);
  return diag;
}

ConfusionMatrix ConfusionMatrix::to_joint(const ProbabilitySimplex& source) const {
  if (kind_ != ConfusionKind::Conditional) {
    throw Error(ErrorCode::InvalidArgument, "matrix is already joint");
  }
  if (source.size() != classes_) {
    throw Error(ErrorCode::DimensionMismatch, "source prior has wrong length");
  }
  std::vector<double> joint(entries_.size());
  for (std::size_t i = 0; i < classes_; ++i) {
    for (std::size_t j = 0; j < classes_; ++j) {
      joint[i * classes_ + j] = (*this)(i, j) * source[j];
    }
  }
  return ConfusionMatrix(classes_, std::move(joint), ConfusionKind::Joint);
}

ShiftWeights::ShiftWeights(std::vector<double> w) : w_(std::move(w)) {
  for (double v : w_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "shift weight");
    if (v < 0.0) throw Error(ErrorCode::NegativeEntry, "shift weight " + std::to_string(v));
  }
}

bool ShiftWeights::consistent_with(const ProbabilitySimplex& source, double tolerance) const {
  if (source.size() != w_.size()) return false;
  double total = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) total += w_[i] * source[i];
  return std::abs(total - 1.0) <= tolerance;
}

LabeledBatch::LabeledBatch(std::optional<PosteriorMatrix> posteriors,
                           std::optional<LogitMatrix> logits, std::vector<std::size_t> labels)
    : posteriors_(std::move(posteriors)), logits_(std::move(logits)), labels_(std::move(labels)) {
  if (!posteriors_ && !logits_) {
    throw Error(ErrorCode::InvalidArgument, "batch needs posteriors or logits");
  }
  const std::size_t rows = posteriors_ ? posteriors_->rows() : logits_->rows();
  classes_ = posteriors_ ? posteriors_->cols() : logits_->cols();
  if (posteriors_ && logits_ &&
      (logits_->rows() != rows || logits_->cols() != classes_)) {
    throw Error(ErrorCode::DimensionMismatch, "posteriors and logits differ in shape");
  }
  if (labels_.size() != rows) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(labels_.size()) +
                                                  " labels for " + std::to_string(rows) + " rows");
  }
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    if (labels_[k] >= classes_) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(labels_[k]), k);
    }
  }
}

LabeledBatch::LabeledBatch(PosteriorMatrix posteriors, std::vector<std::size_t> labels)
    : LabeledBatch(std::optional<PosteriorMatrix>(std::move(posteriors)), std::nullopt,
                   std::move(labels)) {}

LabeledBatch::LabeledBatch(LogitMatrix logits, std::vector<std::size_t> labels)
    : LabeledBatch(std::nullopt, std::optional<LogitMatrix>(std::move(logits)),
                   std::move(labels)) {}

const PosteriorMatrix& LabeledBatch::posteriors() const {
  if (!posteriors_) throw Error(ErrorCode::MissingPosteriors, "batch carries logits only");
  return *posteriors_;
}

const LogitMatrix& LabeledBatch::logits() const {
  if (!logits_) throw Error(ErrorCode::MissingLogits, "batch carries posteriors only");
  return *logits_;
}

std::vector<std::size_t> LabeledBatch::label_counts() const {
  std::vector<std::size_t> counts(classes_, 0);
  for (std::size_t y : labels_) ++counts[y];
  return counts;
}

LabeledBatch LabeledBatch::select(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> labels;
  labels.reserve(indices.size());
  for (std::size_t k : indices) {
    if (k >= labels_.size()) throw Error(ErrorCode::InvalidArgument, "row index out of range", k);
    labels.push_back(labels_[k]);
  }
  std::optional<PosteriorMatrix> post;
  std::optional<LogitMatrix> logit;
  if (posteriors_) post = posteriors_->select(indices);
  if (logits_) logit = logits_->select(indices);
  return LabeledBatch(std::move(post), std::move(logit), std::move(labels));
}

}  // namespace shiftbench
