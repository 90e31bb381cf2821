#include "biasbench/mlp.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "biasbench/logreg.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

namespace {

Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) w(i, j) = limit * (2.0 * rng.uniform() - 1.0);
  }
  return w;
}

struct AdamState {
  Eigen::MatrixXd m, v;
  explicit AdamState(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}

  void update(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad, double lr,
              double t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double correction1 = 1.0 - std::pow(beta1, t);
    const double correction2 = 1.0 - std::pow(beta2, t);
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + eps);
  }
};

}  // namespace

MlpModel::MlpModel(Layers layers) : layers_(std::move(layers)) {
  const auto& l = layers_;
  if (l.w1.cols() != l.w2.rows() || l.w2.cols() != l.w3.rows() ||
      l.b1.cols() != l.w1.cols() || l.b2.cols() != l.w2.cols() || l.b3.cols() != l.w3.cols()) {
    throw std::invalid_argument("inconsistent layer shapes");
  }
}

MlpGradients mlp_loss_gradients(const MlpModel::Layers& l, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXi& y) {
  const double n = static_cast<double>(x.rows());

  const Eigen::MatrixXd z1 = (x * l.w1).rowwise() + l.b1;
  const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
  const Eigen::MatrixXd z2 = (h1 * l.w2).rowwise() + l.b2;
  const Eigen::MatrixXd h2 = z2.cwiseMax(0.0);
  const Eigen::MatrixXd p = softmax_rows((h2 * l.w3).rowwise() + l.b3);

  double ce = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (y(i, c) == 1) ce -= std::log(std::max(p(i, c), 1e-300));
    }
  }

  MlpGradients out;
  out.loss = ce / n;

  const Eigen::MatrixXd dz3 = (p - y.cast<double>()) / n;
  out.grad.w3 = h2.transpose() * dz3;
  out.grad.b3 = dz3.colwise().sum();

  const Eigen::MatrixXd dz2 =
      (dz3 * l.w3.transpose()).cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
  out.grad.w2 = h1.transpose() * dz2;
  out.grad.b2 = dz2.colwise().sum();

  const Eigen::MatrixXd dz1 =
      (dz2 * l.w2.transpose()).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  out.grad.w1 = x.transpose() * dz1;
  out.grad.b1 = dz1.colwise().sum();
  return out;
}

MlpModel MlpModel::train(const MlpParams& params, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXi& y, std::uint64_t seed) {
  if (params.hidden1 < 1 || params.hidden2 < 1) {
    throw std::invalid_argument("hidden layer sizes must be positive");
  }
  if (params.max_epochs < 1) throw std::invalid_argument("max_epochs must be positive");
  if (params.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (params.learning_rate <= 0) throw std::invalid_argument("learning rate must be positive");
  if (x.rows() != y.rows()) throw std::invalid_argument("feature/label row mismatch");
  if (x.rows() == 0) throw std::invalid_argument("cannot train on an empty set");

  const int n = static_cast<int>(x.rows());
  const int f = static_cast<int>(x.cols());
  const int c = static_cast<int>(y.cols());
  const int batch = std::min(params.batch_size, n);

  Rng rng(seed);
  Layers l;
  l.w1 = glorot_uniform(f, params.hidden1, rng);
  l.w2 = glorot_uniform(params.hidden1, params.hidden2, rng);
  l.w3 = glorot_uniform(params.hidden2, c, rng);
  l.b1 = Eigen::RowVectorXd::Zero(params.hidden1);
  l.b2 = Eigen::RowVectorXd::Zero(params.hidden2);
  l.b3 = Eigen::RowVectorXd::Zero(c);

  AdamState aw1(f, params.hidden1), aw2(params.hidden1, params.hidden2),
      aw3(params.hidden2, c);
  AdamState ab1(1, params.hidden1), ab2(1, params.hidden2), ab3(1, c);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::MatrixXd xb(batch, f);
  Eigen::MatrixXi yb(batch, c);

  double best_loss = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;
  double step = 0.0;
  int epochs_run = 0;

  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int nb = std::min(batch, n - start);
      for (int i = 0; i < nb; ++i) {
        const int row = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x.row(row);
        yb.row(i) = y.row(row);
      }
      const MlpGradients g = mlp_loss_gradients(l, xb.topRows(nb), yb.topRows(nb));
      step += 1.0;
      aw1.update(l.w1, g.grad.w1, params.learning_rate, step);
      ab1.update(l.b1, g.grad.b1, params.learning_rate, step);
      aw2.update(l.w2, g.grad.w2, params.learning_rate, step);
      ab2.update(l.b2, g.grad.b2, params.learning_rate, step);
      aw3.update(l.w3, g.grad.w3, params.learning_rate, step);
      ab3.update(l.b3, g.grad.b3, params.learning_rate, step);
      epoch_loss += g.loss * nb;
    }
    epoch_loss /= n;
    epochs_run = epoch + 1;

    if (epoch_loss < best_loss - params.tol) {
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }
    best_loss = std::min(best_loss, epoch_loss);
    if (stale_epochs >= params.no_improvement_epochs) break;
  }

  MlpModel model(std::move(l));
  model.epochs_trained_ = epochs_run;
  return model;
}

Eigen::MatrixXd MlpModel::embed(const Eigen::MatrixXd& x) const {
  if (x.cols() != layers_.w1.rows()) throw std::invalid_argument("feature count mismatch");
  const Eigen::MatrixXd h1 = ((x * layers_.w1).rowwise() + layers_.b1).cwiseMax(0.0);
  return ((h1 * layers_.w2).rowwise() + layers_.b2).cwiseMax(0.0);
}

Eigen::MatrixXd MlpModel::predict_proba(const Eigen::MatrixXd& x) const {
  return softmax_rows((embed(x) * layers_.w3).rowwise() + layers_.b3);
}

nlohmann::json MlpModel::to_json() const {
  const auto flat = [](const Eigen::MatrixXd& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
  };
  const auto flat_row = [](const Eigen::RowVectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return {{"format_version", 1},
          {"kind", "mlp"},
          {"shape",
           {n_features(), static_cast<int>(layers_.w1.cols()),
            static_cast<int>(layers_.w2.cols()), n_classes()}},
          {"w1", flat(layers_.w1)},
          {"b1", flat_row(layers_.b1)},
          {"w2", flat(layers_.w2)},
          {"b2", flat_row(layers_.b2)},
          {"w3", flat(layers_.w3)},
          {"b3", flat_row(layers_.b3)},
          {"epochs_trained", epochs_trained_}};
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<int>>();
  if (shape.size() != 4) throw std::invalid_argument("mlp shape must have four entries");
  const auto matrix = [&](const char* key, int rows, int cols) {
    const auto values = j.at(key).get<std::vector<double>>();
    if (static_cast<int>(values.size()) != rows * cols) {
      throw std::invalid_argument(std::string("mlp parameter '") + key + "' has wrong size");
    }
    return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(values.data(), rows, cols));
  };
  const auto row = [&](const char* key, int cols) {
    const auto values = j.at(key).get<std::vector<double>>();
    if (static_cast<int>(values.size()) != cols) {
      throw std::invalid_argument(std::string("mlp parameter '") + key + "' has wrong size");
    }
    return Eigen::RowVectorXd(Eigen::Map<const Eigen::RowVectorXd>(values.data(), cols));
  };
  Layers l;
  l.w1 = matrix("w1", shape[0], shape[1]);
  l.b1 = row("b1", shape[1]);
  l.w2 = matrix("w2", shape[1], shape[2]);
  l.b2 = row("b2", shape[2]);
  l.w3 = matrix("w3", shape[2], shape[3]);
  l.b3 = row("b3", shape[3]);
  MlpModel model(std::move(l));
  model.epochs_trained_ = j.value("epochs_trained", 0);
  return model;
}

std::unique_ptr<TrainedModel> MlpModel::clone() const {
  return std::make_unique<MlpModel>(*this);
}

}  // namespace biasbench
