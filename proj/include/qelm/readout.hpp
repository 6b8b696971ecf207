#pragma once

// Linear readout: least-squares training through the Moore-Penrose
// pseudoinverse, prediction, and normalized mean squared error.

#include "qelm/qcore.hpp"
#include "qelm/reservoir.hpp"

#include <span>
#include <vector>

namespace qelm {

/// Relative singular-value cutoff applied to X·Xᵀ before inversion.
inline constexpr double kPinvRelativeCutoff = 1e-12;

/// Design matrix with one column per sample. When bias_row is set the last
/// row is all ones.
struct FeatureMatrix {
  RealMatrix values;
  std::size_t step = 1;
  Extension extension;
  bool bias_row = true;

  std::size_t n_samples() const noexcept { return static_cast<std::size_t>(values.cols()); }
  std::size_t n_features() const noexcept {
    return static_cast<std::size_t>(values.rows()) - (bias_row ? 1 : 0);
  }

  static FeatureMatrix from_columns(std::span<const RealVector> columns, bool bias_row,
                                    std::size_t step = 1, Extension extension = {}) {
    if (columns.empty()) throw std::invalid_argument("FeatureMatrix: no samples");
    const auto n = columns.front().size();
    FeatureMatrix fm;
    fm.values.resize(n + (bias_row ? 1 : 0), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c].size() != n)
        throw std::invalid_argument("FeatureMatrix: columns have unequal length");
      const auto col = static_cast<Eigen::Index>(c);
      fm.values.col(col).head(n) = columns[c];
      if (bias_row) fm.values(n, col) = 1.0;
    }
    fm.step = step;
    fm.extension = extension;
    fm.bias_row = bias_row;
    return fm;
  }

  static FeatureMatrix from_columns(std::span<const FeatureVector> columns, bool bias_row) {
    if (columns.empty()) throw std::invalid_argument("FeatureMatrix: no samples");
    std::vector<RealVector> raw;
    raw.reserve(columns.size());
    for (const auto& c : columns) raw.push_back(c.values);
    return from_columns(raw, bias_row, columns.front().step, columns.front().extension);
  }
};

struct ReadoutModel {
  RealMatrix weights;  // n_targets × (n_features + bias)
  std::size_t step = 1;
  Extension extension;
  double regularization = 0.0;
  bool bias_row = true;

  std::size_t n_inputs() const noexcept {
    return static_cast<std::size_t>(weights.cols()) - (bias_row ? 1 : 0);
  }
};

/// Pseudoinverse of a symmetric positive-semidefinite matrix, discarding
/// eigenvalues below kPinvRelativeCutoff · λ_max.
inline RealMatrix symmetric_pinv(const RealMatrix& g) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(g);
  const RealVector& ev = es.eigenvalues();
  const double top = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  RealVector inv = RealVector::Zero(ev.size());
  if (top > 0.0)
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (std::abs(ev(i)) > kPinvRelativeCutoff * top) inv(i) = 1.0 / ev(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// W = Y Xᵀ (X Xᵀ)⁺ when epsilon = 0, W = Y Xᵀ (X Xᵀ + εI)⁻¹ otherwise.
/// `y` has one row per target and one column per sample.
inline ReadoutModel train(const FeatureMatrix& x, const RealMatrix& y, double epsilon = 0.0) {
  if (x.n_samples() < 1) throw std::invalid_argument("train: need at least one sample");
  if (static_cast<std::size_t>(y.cols()) != x.n_samples())
    throw std::invalid_argument("train: " + std::to_string(y.cols()) + " targets for " +
                                std::to_string(x.n_samples()) + " samples");
  if (!(epsilon >= 0.0)) throw std::domain_error("train: epsilon must be >= 0");
  const RealMatrix& xm = x.values;
  const RealMatrix gram = xm * xm.transpose();
  const RealMatrix yxt = y * xm.transpose();
  ReadoutModel model;
  if (epsilon == 0.0) {
    model.weights = yxt * symmetric_pinv(gram);
  } else {
    const RealMatrix reg = gram + epsilon * RealMatrix::Identity(gram.rows(), gram.cols());
    model.weights = reg.ldlt().solve(yxt.transpose()).transpose();
  }
  if (!model.weights.allFinite()) throw std::runtime_error("train: non-finite weights");
  model.step = x.step;
  model.extension = x.extension;
  model.regularization = epsilon;
  model.bias_row = x.bias_row;
  return model;
}

inline ReadoutModel train(const FeatureMatrix& x, const RealVector& y, double epsilon = 0.0) {
  return train(x, RealMatrix(y.transpose()), epsilon);
}

inline RealMatrix predict(const ReadoutModel& model, const FeatureMatrix& x) {
  if (x.bias_row != model.bias_row ||
      static_cast<Eigen::Index>(x.values.rows()) != model.weights.cols())
    throw std::invalid_argument("predict: feature matrix shape does not match model");
  return model.weights * x.values;
}

/// Prediction for one raw feature vector (without the bias entry).
inline RealVector predict(const ReadoutModel& model, const RealVector& features) {
  if (static_cast<std::size_t>(features.size()) != model.n_inputs())
    throw std::invalid_argument("predict: expected " + std::to_string(model.n_inputs()) +
                                " features, got " + std::to_string(features.size()));
  const auto n = features.size();
  RealVector out = model.weights.leftCols(n) * features;
  if (model.bias_row) out += model.weights.col(n);
  return out;
}

/// Σ(ŷ − y)² / Σ(y − ȳ)². A predictor returning the mean of `actual` scores 1.
inline double nmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size())
    throw std::invalid_argument("nmse: length mismatch");
  if (actual.size() < 2) throw std::invalid_argument("nmse: need at least two samples");
  double mean = 0.0;
  for (double y : actual) mean += y;
  mean /= static_cast<double>(actual.size());
  double err = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    err += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
    var += (actual[i] - mean) * (actual[i] - mean);
  }
  if (var == 0.0) throw std::domain_error("nmse: actual values are constant (degenerate target grid)");
  return err / var;
}

inline double nmse(const RealVector& predicted, const RealVector& actual) {
  return nmse(std::span<const double>(predicted.data(), static_cast<std::size_t>(predicted.size())),
              std::span<const double>(actual.data(), static_cast<std::size_t>(actual.size())));
}

/// Trains on one split and returns the NMSE on the other.
inline double train_eval_step(const FeatureMatrix& features_train, const RealVector& targets_train,
                              const FeatureMatrix& features_test, const RealVector& targets_test,
                              double epsilon = 0.0) {
  const ReadoutModel model = train(features_train, targets_train, epsilon);
  const RealMatrix pred = predict(model, features_test);
  return nmse(RealVector(pred.row(0).transpose()), targets_test);
}

}  // namespace qelm
