#include "biasbench/logreg.hpp"

#include <cmath>
#include <stdexcept>

#include "biasbench/rng.hpp"

namespace biasbench {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    p.row(i).array() -= p.row(i).maxCoeff();
    p.row(i) = p.row(i).array().exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LogregModel::LogregModel(Eigen::MatrixXd weights, Eigen::RowVectorXd bias)
    : w_(std::move(weights)), b_(std::move(bias)) {
  if (w_.cols() != b_.cols()) throw std::invalid_argument("weight/bias class mismatch");
  if (w_.cols() < 2) throw std::invalid_argument("need at least two classes");
}

LogregLoss logreg_loss(const Eigen::MatrixXd& w, const Eigen::RowVectorXd& b,
                       const Eigen::MatrixXd& x, const Eigen::MatrixXi& y,
                       double inverse_regularization) {
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd p = softmax_rows((x * w).rowwise() + b);
  const Eigen::MatrixXd yd = y.cast<double>();

  double ce = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (y(i, c) == 1) ce -= std::log(std::max(p(i, c), 1e-300));
    }
  }
  ce /= n;

  LogregLoss out;
  out.loss = ce + w.squaredNorm() / (2.0 * inverse_regularization);
  const Eigen::MatrixXd diff = p - yd;
  out.dw = x.transpose() * diff / n + w / inverse_regularization;
  out.db = diff.colwise().sum() / n;
  return out;
}

LogregModel LogregModel::train(const LogregParams& params, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXi& y, std::uint64_t seed) {
  if (params.epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (params.learning_rate <= 0) throw std::invalid_argument("learning rate must be positive");
  if (params.inverse_regularization <= 0) {
    throw std::invalid_argument("inverse regularization must be positive");
  }
  if (x.rows() != y.rows()) throw std::invalid_argument("feature/label row mismatch");
  if (x.rows() == 0) throw std::invalid_argument("cannot train on an empty set");

  const int f = static_cast<int>(x.cols());
  const int c = static_cast<int>(y.cols());
  Rng rng(seed);
  const double limit = 1.0 / std::sqrt(static_cast<double>(std::max(f, 1)));
  Eigen::MatrixXd w(f, c);
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < c; ++j) w(i, j) = limit * (2.0 * rng.uniform() - 1.0);
  }
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(c);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const LogregLoss grad = logreg_loss(w, b, x, y, params.inverse_regularization);
    w -= params.learning_rate * grad.dw;
    b -= params.learning_rate * grad.db;
  }
  return LogregModel(std::move(w), std::move(b));
}

Eigen::MatrixXd LogregModel::predict_proba(const Eigen::MatrixXd& x) const {
  if (x.cols() != w_.rows()) throw std::invalid_argument("feature count mismatch");
  return softmax_rows((x * w_).rowwise() + b_);
}

nlohmann::json LogregModel::to_json() const {
  std::vector<double> weights(w_.data(), w_.data() + w_.size());
  std::vector<double> bias(b_.data(), b_.data() + b_.size());
  return {{"format_version", 1},
          {"kind", "logreg"},
          {"n_features", n_features()},
          {"n_classes", n_classes()},
          {"weights", weights},
          {"bias", bias}};
}

LogregModel LogregModel::from_json(const nlohmann::json& j) {
  const int f = j.at("n_features").get<int>();
  const int c = j.at("n_classes").get<int>();
  const auto weights = j.at("weights").get<std::vector<double>>();
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (static_cast<int>(weights.size()) != f * c || static_cast<int>(bias.size()) != c) {
    throw std::invalid_argument("logreg parameter sizes do not match the declared shape");
  }
  Eigen::MatrixXd w = Eigen::Map<const Eigen::MatrixXd>(weights.data(), f, c);
  Eigen::RowVectorXd b = Eigen::Map<const Eigen::RowVectorXd>(bias.data(), c);
  return LogregModel(std::move(w), std::move(b));
}

std::unique_ptr<TrainedModel> LogregModel::clone() const {
  return std::make_unique<LogregModel>(*this);
}

}  // namespace biasbench
