#include "biasbench/models.hpp"

#include <stdexcept>

#include "biasbench/forest.hpp"
#include "biasbench/logreg.hpp"
#include "biasbench/mlp.hpp"

namespace biasbench {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::logreg: return "logreg";
    case ModelKind::mlp: return "mlp";
    case ModelKind::forest: return "forest";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "logreg") return ModelKind::logreg;
  if (name == "mlp") return ModelKind::mlp;
  if (name == "forest") return ModelKind::forest;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

void ModelSpec::validate() const {
  if (logreg.epochs < 1 || logreg.learning_rate <= 0 || logreg.inverse_regularization <= 0) {
    throw std::invalid_argument("bad logreg parameters");
  }
  if (mlp.hidden1 < 1 || mlp.hidden2 < 1 || mlp.max_epochs < 1 || mlp.batch_size < 1 ||
      mlp.learning_rate <= 0 || mlp.tol < 0 || mlp.no_improvement_epochs < 1) {
    throw std::invalid_argument("bad mlp parameters");
  }
  if (forest.trees < 1 || forest.max_leaves < 1 || forest.min_leaf < 1 ||
      !(forest.row_subsample > 0.0 && forest.row_subsample <= 1.0) ||
      forest.laplace_alpha <= 0.0) {
    throw std::invalid_argument("bad forest parameters");
  }
}

std::unique_ptr<TrainedModel> fit(const ModelSpec& spec, const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXi& y, std::uint64_t seed) {
  spec.validate();
  if (y.cols() < 2) throw std::invalid_argument("need at least two label columns");
  switch (spec.kind) {
    case ModelKind::logreg:
      return std::make_unique<LogregModel>(LogregModel::train(spec.logreg, x, y, seed));
    case ModelKind::mlp:
      return std::make_unique<MlpModel>(MlpModel::train(spec.mlp, x, y, seed));
    case ModelKind::forest:
      return std::make_unique<ForestModel>(ForestModel::train(spec.forest, x, y, seed));
  }
  throw std::invalid_argument("unknown model kind");
}

std::unique_ptr<TrainedModel> model_from_json(const nlohmann::json& j) {
  const auto kind = model_kind_from_string(j.at("kind").get<std::string>());
  switch (kind) {
    case ModelKind::logreg:
      return std::make_unique<LogregModel>(LogregModel::from_json(j));
    case ModelKind::mlp:
      return std::make_unique<MlpModel>(MlpModel::from_json(j));
    case ModelKind::forest:
      return std::make_unique<ForestModel>(ForestModel::from_json(j));
  }
  throw std::invalid_argument("unknown model kind");
}

int argmax_class(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
  int best = 0;
  for (int c = 1; c < probs.size(); ++c) {
    if (probs(c) > probs(best)) best = c;
  }
  return best;
}

Eigen::VectorXi predict_classes(const TrainedModel& model, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd probs = model.predict_proba(x);
  Eigen::VectorXi classes(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    classes(i) = argmax_class(probs.row(i));
  }
  return classes;
}

double accuracy(const TrainedModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXi& y) {
  if (x.rows() != y.rows()) throw std::invalid_argument("feature/label row mismatch");
  if (x.rows() == 0) throw std::invalid_argument("accuracy on an empty set");
  const Eigen::VectorXi predicted = predict_classes(model, x);
  int hits = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    if (y(i, predicted(i)) == 1) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(y.rows());
}

}  // namespace biasbench
