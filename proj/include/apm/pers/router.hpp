#pragma once

// Preference router: a from-scratch linear model over history embeddings
// with 2M outputs (class layout from labels.hpp).
//
//   classify: multinomial logistic regression fit by full-batch gradient
//             descent.  The recorded loss trace is monotone nonincreasing by
//             construction: a step that would increase the loss is rolled
//             back and the learning rate halved; hitting the rate floor
//             aborts training with the trace attached.
//   regress:  ordinary least squares against the 2M score vector, solved
//             exactly via normal equations and Cholesky (with an escalating
//             ridge fallback for rank-deficient feature sets); gradient
//             descent is deliberately not used where an exact solve exists.
//
// Both modes share the weight layout (feature_dim + 1) x n_outputs row-major
// with the bias as the final row, which is also the serialization format.

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "apm/pers/labels.hpp"

namespace apm::pers {

struct TrainingError : std::runtime_error {
  std::vector<double> loss_trace;
  TrainingError(const std::string& msg, std::vector<double> trace)
      : std::runtime_error(msg), loss_trace(std::move(trace)) {}
};

enum class RouterMode { Classify, Regress };

struct RouterModel {
  RouterMode mode = RouterMode::Classify;
  std::size_t feature_dim = 0;
  std::size_t n_outputs = 0;
  std::vector<double> weights;  // (feature_dim+1) x n_outputs, bias = last row

  std::size_t epochs_run = 0;
  double final_learning_rate = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;

  double weight(std::size_t row, std::size_t col) const {
    return weights[row * n_outputs + col];
  }

  // Raw outputs (logits in classify mode, predicted scores in regress mode).
  std::vector<double> predict(const std::vector<double>& x) const {
    if (x.size() != feature_dim)
      throw std::invalid_argument("router predict: feature dimension mismatch");
    std::vector<double> z(n_outputs, 0.0);
    for (std::size_t i = 0; i < feature_dim; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* row = &weights[i * n_outputs];
      for (std::size_t c = 0; c < n_outputs; ++c) z[c] += xi * row[c];
    }
    const double* bias = &weights[feature_dim * n_outputs];
    for (std::size_t c = 0; c < n_outputs; ++c) z[c] += bias[c];
    return z;
  }
};

struct RouterHyperparams {
  std::size_t max_epochs = 500;
  double learning_rate = 2.0;
  double lr_floor = 1e-9;
  double tol = 1e-8;  // stop once the per-epoch improvement drops below this
};

namespace detail {

inline void validate_features(const std::vector<std::vector<double>>& features) {
  if (features.empty()) throw std::invalid_argument("router: no training examples");
  for (const auto& f : features)
    if (f.size() != features.front().size() || f.empty())
      throw std::invalid_argument("router: inconsistent feature dimensions");
}

inline double softmax_loss_and_grad(const std::vector<std::vector<double>>& x,
                                    const std::vector<std::size_t>& y,
                                    const RouterModel& model,
                                    std::vector<double>* grad) {
  const std::size_t n = x.size(), d = model.feature_dim, c = model.n_outputs;
  if (grad) grad->assign((d + 1) * c, 0.0);
  double loss = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<double> z = model.predict(x[e]);
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double denom = 0.0;
    for (double& v : z) {
      v = std::exp(v - zmax);
      denom += v;
    }
    loss += -std::log(z[y[e]] / denom);
    if (!grad) continue;
    for (std::size_t k = 0; k < c; ++k) {
      double residual = z[k] / denom - (k == y[e] ? 1.0 : 0.0);
      for (std::size_t i = 0; i < d; ++i)
        (*grad)[i * c + k] += x[e][i] * residual;
      (*grad)[d * c + k] += residual;
    }
  }
  if (grad)
    for (double& g : *grad) g /= static_cast<double>(n);
  return loss / static_cast<double>(n);
}

// Cholesky factorization/solve for the normal equations; returns false when
// the matrix is not positive definite.
inline bool cholesky_solve(std::vector<double> a, std::size_t n,
                           std::vector<double>& rhs, std::size_t m) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (!(diag > 0.0)) return false;
    diag = std::sqrt(diag);
    a[j * n + j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / diag;
    }
  }
  // rhs is n x m row-major; solve L y = rhs, then L^T w = y, in place.
  for (std::size_t col = 0; col < m; ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = rhs[i * m + col];
      for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * rhs[k * m + col];
      rhs[i * m + col] = v / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = rhs[i * m + col];
      for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * rhs[k * m + col];
      rhs[i * m + col] = v / a[i * n + i];
    }
  }
  return true;
}

}  // namespace detail

inline RouterModel train_router_classify(const std::vector<std::vector<double>>& features,
                                         const std::vector<std::size_t>& class_ids,
                                         std::size_t n_classes,
                                         const RouterHyperparams& hp = {}) {
  detail::validate_features(features);
  if (class_ids.size() != features.size())
    throw std::invalid_argument("router: label count mismatch");
  if (n_classes < 2) throw std::invalid_argument("router: need >= 2 classes");
  for (auto y : class_ids)
    if (y >= n_classes) throw std::invalid_argument("router: class id out of range");

  RouterModel model;
  model.mode = RouterMode::Classify;
  model.feature_dim = features.front().size();
  model.n_outputs = n_classes;
  model.weights.assign((model.feature_dim + 1) * n_classes, 0.0);

  double lr = hp.learning_rate;
  std::vector<double> grad;
  double loss = detail::softmax_loss_and_grad(features, class_ids, model, &grad);
  model.loss_trace.push_back(loss);

  for (std::size_t epoch = 0; epoch < hp.max_epochs; ++epoch) {
    std::vector<double> saved = model.weights;
    for (std::size_t i = 0; i < model.weights.size(); ++i)
      model.weights[i] -= lr * grad[i];
    std::vector<double> next_grad;
    double next_loss =
        detail::softmax_loss_and_grad(features, class_ids, model, &next_grad);

    if (next_loss <= loss + 1e-12) {
      double improvement = loss - next_loss;
      loss = next_loss;
      grad = std::move(next_grad);
      model.loss_trace.push_back(loss);
      model.epochs_run = epoch + 1;
      if (improvement < hp.tol) break;
    } else {
      model.weights = std::move(saved);  // roll back the bad step
      lr /= 2.0;
      if (lr < hp.lr_floor)
        throw TrainingError("router training diverged below the learning-rate floor",
                            model.loss_trace);
    }
  }
  model.final_learning_rate = lr;
  model.final_loss = loss;
  return model;
}

inline RouterModel train_router_regress(const std::vector<std::vector<double>>& features,
                                        const std::vector<std::vector<double>>& targets) {
  detail::validate_features(features);
  if (targets.size() != features.size())
    throw std::invalid_argument("router: target count mismatch");
  const std::size_t n = features.size();
  const std::size_t d = features.front().size();
  const std::size_t m = targets.front().size();
  for (const auto& t : targets)
    if (t.size() != m) throw std::invalid_argument("router: inconsistent target dims");

  // Normal equations on the bias-augmented design matrix.
  const std::size_t da = d + 1;
  auto xi = [&](std::size_t e, std::size_t i) {
    return i < d ? features[e][i] : 1.0;
  };
  std::vector<double> xtx(da * da, 0.0), xty(da * m, 0.0);
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t i = 0; i < da; ++i) {
      const double v = xi(e, i);
      if (v == 0.0) continue;
      for (std::size_t j2 = i; j2 < da; ++j2) xtx[i * da + j2] += v * xi(e, j2);
      for (std::size_t c = 0; c < m; ++c) xty[i * m + c] += v * targets[e][c];
    }
  }
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j2 = 0; j2 < i; ++j2) xtx[i * da + j2] = xtx[j2 * da + i];

  double scale = 0.0;
  for (std::size_t i = 0; i < da; ++i) scale = std::max(scale, xtx[i * da + i]);
  if (scale == 0.0) scale = 1.0;

  std::vector<double> solution;
  bool solved = false;
  for (double ridge = 0.0; ridge <= 1e-2 * scale;
       ridge = ridge == 0.0 ? 1e-12 * scale : ridge * 10.0) {
    std::vector<double> a = xtx;
    for (std::size_t i = 0; i < da; ++i) a[i * da + i] += ridge;
    solution = xty;
    if (detail::cholesky_solve(std::move(a), da, solution, m)) {
      solved = true;
      break;
    }
  }
  if (!solved)
    throw TrainingError("router regression: normal equations not solvable", {});

  RouterModel model;
  model.mode = RouterMode::Regress;
  model.feature_dim = d;
  model.n_outputs = m;
  model.weights = std::move(solution);
  model.epochs_run = 1;

  double sse = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    auto pred = model.predict(features[e]);
    for (std::size_t c = 0; c < m; ++c) {
      double r = pred[c] - targets[e][c];
      sse += r * r;
    }
  }
  model.final_loss = sse / static_cast<double>(n * m);
  model.loss_trace = {model.final_loss};
  return model;
}

// Classify: argmax class (first on ties, which by the class layout prefers
// lower principle and follow over avoid).  Regress: strongest predicted
// within-principle gap, direction from its sign.
inline RoutingLabel route(const RouterModel& model, const std::vector<double>& feature) {
  std::vector<double> z = model.predict(feature);
  if (model.mode == RouterMode::Classify) {
    std::size_t best = 0;
    bool any_different = false;
    for (std::size_t c = 1; c < z.size(); ++c) {
      if (z[c] != z[0]) any_different = true;
      if (z[c] > z[best]) best = c;
    }
    auto [j, dir] = decode_class(best);
    return RoutingLabel{j, dir, !any_different};
  }
  if (z.size() % 2 != 0)
    throw std::logic_error("regress router: output dim must be 2M");
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t j = 0; j < z.size() / 2; ++j) {
    double gap = std::abs(z[2 * j] - z[2 * j + 1]);
    if (gap > best_abs) {
      best_abs = gap;
      best = j;
    }
  }
  double gap = z[2 * best] - z[2 * best + 1];
  if (gap == 0.0) return RoutingLabel{0, +1, true};
  return RoutingLabel{best, gap > 0 ? +1 : -1, false};
}

// Ground-truth label straight from the preference vector.
inline RoutingLabel oracle_route(const std::vector<double>& preference) {
  std::size_t best = 0;
  double best_abs = 0.0;
  for (std::size_t j = 0; j < preference.size(); ++j) {
    if (std::abs(preference[j]) > best_abs) {
      best_abs = std::abs(preference[j]);
      best = j;
    }
  }
  if (best_abs == 0.0)
    throw std::domain_error("oracle_route: preference vector has no signal");
  return RoutingLabel{best, preference[best] > 0 ? +1 : -1, false};
}

inline double classification_accuracy(const RouterModel& model,
                                      const std::vector<std::vector<double>>& features,
                                      const std::vector<std::size_t>& class_ids) {
  if (features.empty() || features.size() != class_ids.size())
    throw std::invalid_argument("accuracy: bad evaluation set");
  std::size_t hits = 0;
  for (std::size_t e = 0; e < features.size(); ++e) {
    auto z = model.predict(features[e]);
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c)
      if (z[c] > z[best]) best = c;
    if (best == class_ids[e]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

inline void save_router(std::ostream& out, const RouterModel& model) {
  out << "apm-router "
      << (model.mode == RouterMode::Classify ? "classify" : "regress") << " "
      << model.feature_dim << " " << model.n_outputs << " " << model.epochs_run
      << " ";
  out << std::setprecision(17) << model.final_learning_rate << " "
      << model.final_loss << "\n";
  for (std::size_t i = 0; i <= model.feature_dim; ++i) {
    for (std::size_t c = 0; c < model.n_outputs; ++c) {
      if (c) out << " ";
      out << std::setprecision(17) << model.weight(i, c);
    }
    out << "\n";
  }
}

inline RouterModel load_router(std::istream& in) {
  std::string magic, mode;
  RouterModel model;
  in >> magic >> mode >> model.feature_dim >> model.n_outputs >> model.epochs_run >>
      model.final_learning_rate >> model.final_loss;
  if (!in || magic != "apm-router" || (mode != "classify" && mode != "regress"))
    throw std::runtime_error("load_router: bad header");
  model.mode = mode == "classify" ? RouterMode::Classify : RouterMode::Regress;
  model.weights.resize((model.feature_dim + 1) * model.n_outputs);
  for (double& w : model.weights)
    if (!(in >> w)) throw std::runtime_error("load_router: truncated weights");
  return model;
}

}  // namespace apm::pers
