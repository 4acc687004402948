#include "molrule/mlp.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "molrule/errors.hpp"

namespace molrule {

using nlohmann::json;

std::vector<int> MlpRegressor::dims() const {
  std::vector<int> d;
  d.push_back(input_dim());
  for (const auto& w : W) d.push_back(static_cast<int>(w.rows()));
  return d;
}

void MlpRegressor::fit_scalers(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y) {
  if (X.cols() != input_dim())
    throw DimensionMismatch("scaler fit: feature width mismatch");
  if (X.rows() != y.size() || X.rows() == 0)
    throw LengthMismatch("scaler fit: row count mismatch");
  x_mean = X.colwise().mean().transpose();
  Eigen::VectorXd var = (X.rowwise() - x_mean.transpose())
                            .array()
                            .square()
                            .colwise()
                            .mean()
                            .transpose();
  x_scale = var.array().sqrt();
  for (int i = 0; i < x_scale.size(); ++i)
    if (x_scale[i] < 1e-12) x_scale[i] = 1.0;
  y_mean = y.mean();
  double y_var = (y.array() - y_mean).square().mean();
  y_scale = std::sqrt(y_var);
  if (y_scale < 1e-12) y_scale = 1.0;
}

MlpRegressor mlp_init(const std::vector<int>& dims, double dropout_p,
                      RandomStream& stream) {
  if (dims.size() < 2)
    throw DimensionMismatch("model needs at least input and output dims");
  if (dims.back() != 1)
    throw DimensionMismatch("output dimension must be 1");
  for (int d : dims)
    if (d < 1) throw DimensionMismatch("every layer width must be >= 1");
  if (dropout_p < 0 || dropout_p >= 1)
    throw DimensionMismatch("dropout_p must lie in [0, 1)");
  MlpRegressor m;
  m.dropout_p = dropout_p;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    Eigen::MatrixXd w(dims[k + 1], dims[k]);
    double sd = std::sqrt(2.0 / dims[k]);
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c)
        w(r, c) = sd * stream.next_normal();
    m.W.push_back(std::move(w));
    m.b.push_back(Eigen::VectorXd::Zero(dims[k + 1]));
  }
  m.x_mean = Eigen::VectorXd::Zero(dims.front());
  m.x_scale = Eigen::VectorXd::Ones(dims.front());
  return m;
}

std::vector<Eigen::MatrixXd> draw_dropout_masks(const MlpRegressor& model,
                                                int rows,
                                                RandomStream& stream) {
  std::vector<Eigen::MatrixXd> masks;
  double keep = 1.0 - model.dropout_p;
  for (int k = 0; k + 1 < model.layer_count(); ++k) {
    Eigen::MatrixXd m(rows, model.W[k].rows());
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c)
        m(r, c) = stream.next_uniform() < model.dropout_p ? 0.0 : 1.0 / keep;
    masks.push_back(std::move(m));
  }
  return masks;
}

Eigen::VectorXd forward_batch(const MlpRegressor& model,
                              const Eigen::MatrixXd& X,
                              const std::vector<Eigen::MatrixXd>* masks,
                              ForwardCache* cache) {
  if (X.cols() != model.input_dim())
    throw DimensionMismatch("forward: expected " +
                            std::to_string(model.input_dim()) +
                            " features, got " + std::to_string(X.cols()));
  int hidden_layers = model.layer_count() - 1;
  if (masks && static_cast<int>(masks->size()) != hidden_layers)
    throw DimensionMismatch("forward: one dropout mask per hidden layer");

  Eigen::MatrixXd A = (X.rowwise() - model.x_mean.transpose());
  A.array().rowwise() /= model.x_scale.transpose().array();
  if (cache) {
    cache->x_scaled = A;
    cache->preact.clear();
    cache->act.clear();
    cache->masks = masks;
  }
  for (int k = 0; k < hidden_layers; ++k) {
    Eigen::MatrixXd Z =
        (A * model.W[k].transpose()).rowwise() + model.b[k].transpose();
    if (masks && (*masks)[k].rows() != Z.rows())
      throw DimensionMismatch("forward: mask row count mismatch");
    Eigen::MatrixXd H = Z.cwiseMax(0.0);
    if (masks) H = H.cwiseProduct((*masks)[k]);
    if (cache) {
      cache->preact.push_back(std::move(Z));
      cache->act.push_back(H);
    }
    A = std::move(H);
  }
  Eigen::VectorXd ys = (A * model.W.back().transpose()).col(0);
  ys.array() += model.b.back()[0];
  return (ys.array() * model.y_scale + model.y_mean).matrix();
}

Gradients Gradients::zeros_like(const MlpRegressor& model) {
  Gradients g;
  for (int k = 0; k < model.layer_count(); ++k) {
    g.dW.push_back(
        Eigen::MatrixXd::Zero(model.W[k].rows(), model.W[k].cols()));
    g.db.push_back(Eigen::VectorXd::Zero(model.b[k].size()));
  }
  return g;
}

void Gradients::add_scaled(const Gradients& other, double factor) {
  for (std::size_t k = 0; k < dW.size(); ++k) {
    dW[k] += factor * other.dW[k];
    db[k] += factor * other.db[k];
  }
}

void backward_batch(const MlpRegressor& model, const ForwardCache& cache,
                    const Eigen::VectorXd& dLdy,
                    const Eigen::MatrixXd* extra_dh_last, Gradients* grads) {
  int hidden_layers = model.layer_count() - 1;
  const Eigen::MatrixXd& rep =
      hidden_layers > 0 ? cache.act.back() : cache.x_scaled;
  if (dLdy.size() != rep.rows())
    throw LengthMismatch("backward: dLdy row count mismatch");

  // Output layer; predictions were unscaled by y_scale, so chain it here.
  Eigen::VectorXd g = dLdy * model.y_scale;
  grads->dW.back() += (g.transpose() * rep);
  grads->db.back()[0] += g.sum();
  Eigen::MatrixXd dA = g * model.W.back();  // rows x last_hidden
  if (extra_dh_last) {
    if (extra_dh_last->rows() != dA.rows() ||
        extra_dh_last->cols() != dA.cols())
      throw DimensionMismatch("backward: extra_dh_last shape mismatch");
    dA += *extra_dh_last;
  }
  for (int k = hidden_layers - 1; k >= 0; --k) {
    Eigen::MatrixXd dZ = dA;
    if (cache.masks) dZ = dZ.cwiseProduct((*cache.masks)[k]);
    dZ = dZ.cwiseProduct(
        (cache.preact[k].array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd& below = k > 0 ? cache.act[k - 1] : cache.x_scaled;
    grads->dW[k] += dZ.transpose() * below;
    grads->db[k] += dZ.colwise().sum().transpose();
    if (k > 0) dA = dZ * model.W[k];
  }
}

Eigen::VectorXd input_sensitivities(const MlpRegressor& model,
                                    const Eigen::VectorXd& x) {
  ForwardCache cache;
  forward_batch(model, x.transpose(), nullptr, &cache);
  int hidden_layers = model.layer_count() - 1;
  Eigen::MatrixXd dA = model.y_scale * model.W.back();  // 1 x last_hidden
  for (int k = hidden_layers - 1; k >= 0; --k) {
    Eigen::MatrixXd dZ = dA.cwiseProduct(
        (cache.preact[k].array() > 0.0).cast<double>().matrix());
    dA = dZ * model.W[k];
  }
  return (dA.row(0).transpose().array() / model.x_scale.array()).matrix();
}

Eigen::MatrixXd representation_batch(const MlpRegressor& model,
                                     const Eigen::MatrixXd& X) {
  ForwardCache cache;
  forward_batch(model, X, nullptr, &cache);
  return model.layer_count() > 1 ? cache.act.back() : cache.x_scaled;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": not an array");
  int rows = static_cast<int>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols)
      throw FormatError(std::string(what) + ": ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": not an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const MlpRegressor& model,
                     const Eigen::MatrixXd& adaptive,
                     const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["dims"] = model.dims();
  j["dropout_p"] = model.dropout_p;
  j["x_mean"] = vector_to_json(model.x_mean);
  j["x_scale"] = vector_to_json(model.x_scale);
  j["y_mean"] = model.y_mean;
  j["y_scale"] = model.y_scale;
  json layers = json::array();
  for (int k = 0; k < model.layer_count(); ++k) {
    json layer;
    layer["W"] = matrix_to_json(model.W[k]);
    layer["b"] = vector_to_json(model.b[k]);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  j["adaptive"] = matrix_to_json(adaptive);
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << j.dump() << "\n";
  if (!out) throw FormatError("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  Checkpoint ck;
  try {
    if (j.at("format_version").get<int>() != 1)
      throw FormatError("checkpoint '" + path + "': unknown format version");
    std::vector<int> dims = j.at("dims").get<std::vector<int>>();
    ck.model.dropout_p = j.at("dropout_p").get<double>();
    ck.model.x_mean = vector_from_json(j.at("x_mean"), "x_mean");
    ck.model.x_scale = vector_from_json(j.at("x_scale"), "x_scale");
    ck.model.y_mean = j.at("y_mean").get<double>();
    ck.model.y_scale = j.at("y_scale").get<double>();
    const json& layers = j.at("layers");
    if (layers.empty())
      throw FormatError("checkpoint '" + path + "': no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      ck.model.W.push_back(matrix_from_json(layers[k].at("W"), "W"));
      ck.model.b.push_back(vector_from_json(layers[k].at("b"), "b"));
    }
    if (ck.model.dims() != dims)
      throw InvariantViolation("checkpoint '" + path +
                               "': layer shapes disagree with dims");
    ck.adaptive = matrix_from_json(j.at("adaptive"), "adaptive");
  } catch (const json::exception& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  return ck;
}

}  // namespace molrule
