#include "pbpk/ipinn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "pbpk/ode.hpp"
#include "pbpk/tape.hpp"

namespace pbpk {

double constrain(const BoundedParam& p) { return p.min + (p.max - p.min) / (1.0 + std::exp(-p.raw)); }

double unconstrain(const BoundedParam& p, double value) {
  const double u = (value - p.min) / (p.max - p.min);
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("unconstrain: value outside the open bounds");
  return std::log(u / (1.0 - u));
}

void EstimationSpec::validate() const {
  std::set<ParamId> seen;
  for (const auto& p : free) {
    const std::string name(p.name());
    if (!seen.insert(p.id).second) throw std::invalid_argument("parameter " + name + " listed twice");
    if (!std::isfinite(p.min) || !std::isfinite(p.max) || !(p.min < p.max)) {
      throw std::invalid_argument("parameter " + name + " needs finite bounds with min < max");
    }
    if (!std::isfinite(p.raw)) throw std::invalid_argument("parameter " + name + " has a non-finite raw value");
  }
}

ModelParams EstimationSpec::materialize() const {
  ModelParams out = fixed;
  for (const auto& p : free) out[p.id] = constrain(p);
  return out;
}

std::vector<std::string> EstimationSpec::names() const {
  std::vector<std::string> out;
  for (const auto& p : free) out.emplace_back(p.name());
  return out;
}

std::vector<double> EstimationSpec::values() const {
  std::vector<double> out;
  for (const auto& p : free) out.push_back(constrain(p));
  return out;
}

EstimationSpec EstimationSpec::scaled_bounds(const std::vector<ParamId>& ids, const ModelParams& reference, double lo,
                                             double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("bound scales must satisfy 0 < lo < hi");
  EstimationSpec spec;
  spec.fixed = reference;
  for (ParamId id : ids) {
    const double ref = reference[id];
    if (!(ref > 0.0)) {
      throw std::invalid_argument("cannot scale bounds around a zero reference value for " +
                                  std::string(param_name(id)));
    }
    double max = hi * ref;
    if (param_kind(id) == ParamKind::Fraction) max = std::min(max, 1.0);
    const double min = lo * ref;
    if (!(min < max)) throw std::invalid_argument("empty bound interval for " + std::string(param_name(id)));
    spec.free.push_back(BoundedParam{id, min, max, 0.0});
  }
  spec.validate();
  return spec;
}

std::vector<ParamId> default_free_params() {
  return {ParamId::Vbb, ParamId::Vbm, ParamId::Vccsf, ParamId::Vscsf, ParamId::fubb, ParamId::lam_ccsf};
}

void LossWeights::validate() const {
  bool any_positive = false;
  for (const auto* family : {&ic, &ode, &data}) {
    for (double w : *family) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("loss weights must be finite and >= 0");
      any_positive = any_positive || w > 0.0;
    }
  }
  if (!any_positive) throw std::invalid_argument("at least one loss weight must be positive");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (lbfgs_iterations < 0) throw std::invalid_argument("L-BFGS iterations must be non-negative");
  if (log_stride < 1) throw std::invalid_argument("log stride must be at least 1");
  if (prediction_points < 2) throw std::invalid_argument("prediction grid needs at least two points");
  weights.validate();
}

double LossBreakdown::weighted(const LossWeights& w) const {
  double t = 0.0;
  for (std::size_t k = 0; k < kCompartments; ++k) t += w.data[k] * data[k];
  for (std::size_t k = 0; k < kCompartments; ++k) t += w.ode[k] * ode[k];
  for (std::size_t k = 0; k < kCompartments; ++k) t += w.ic[k] * ic[k];
  return t;
}

// ---------------------------------------------------------------------------

ConcentrationState SurrogateView::value(double t) const {
  const Eigen::VectorXd y = forward(net, t / horizon);
  if (y.size() != static_cast<Eigen::Index>(kCompartments)) throw std::invalid_argument("network must have 4 outputs");
  return {scale[0] * y(0), scale[1] * y(1), scale[2] * y(2), scale[3] * y(3)};
}

std::pair<ConcentrationState, ConcentrationState> SurrogateView::value_and_rate(double t) const {
  const auto [y, dy] = forward_with_time_derivative(net, t / horizon);
  if (y.size() != static_cast<Eigen::Index>(kCompartments)) throw std::invalid_argument("network must have 4 outputs");
  ConcentrationState v{};
  ConcentrationState r{};
  for (std::size_t k = 0; k < kCompartments; ++k) {
    v[k] = scale[k] * y(static_cast<Eigen::Index>(k));
    r[k] = scale[k] * dy(static_cast<Eigen::Index>(k)) / horizon;
  }
  return {v, r};
}

std::array<double, kCompartments> data_loss_components(const SurrogateView& y, const ConcentrationSeries& series) {
  if (series.empty()) throw std::invalid_argument("data_loss: empty series");
  std::array<double, kCompartments> out{};
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto pred = y.value(series.times[i]);
    for (std::size_t k = 0; k < kCompartments; ++k) {
      const double r = pred[k] - series.columns[k][i];
      out[k] += r * r;
    }
  }
  for (auto& v : out) v /= static_cast<double>(series.size());
  return out;
}

double data_loss(const SurrogateView& y, const ConcentrationSeries& series,
                 const std::array<double, kCompartments>& weights) {
  const auto c = data_loss_components(y, series);
  double t = 0.0;
  for (std::size_t k = 0; k < kCompartments; ++k) t += weights[k] * c[k];
  return t;
}

std::array<double, kCompartments> ode_loss_components(const SurrogateView& y, const ModelParams& params,
                                                      const PlasmaProfile& plasma,
                                                      std::span<const double> collocation, ModelVariant variant) {
  if (collocation.empty()) throw std::invalid_argument("ode_loss: no collocation points");
  std::array<double, kCompartments> out{};
  for (double t : collocation) {
    const auto [v, rate] = y.value_and_rate(t);
    const auto f = rhs_terms(linear_interp(plasma, t), v, params, variant);
    for (std::size_t k = 0; k < kCompartments; ++k) {
      const double r = rate[k] - f[k];
      out[k] += r * r;
    }
  }
  for (auto& v : out) v /= static_cast<double>(collocation.size());
  return out;
}

double ode_loss(const SurrogateView& y, const EstimationSpec& spec, const PlasmaProfile& plasma,
                std::span<const double> collocation, ModelVariant variant,
                const std::array<double, kCompartments>& weights) {
  const auto c = ode_loss_components(y, spec.materialize(), plasma, collocation, variant);
  double t = 0.0;
  for (std::size_t k = 0; k < kCompartments; ++k) t += weights[k] * c[k];
  return t;
}

std::array<double, kCompartments> ic_loss_components(const SurrogateView& y, const ConcentrationState& y0,
                                                     double t0) {
  const auto v = y.value(t0);
  std::array<double, kCompartments> out{};
  for (std::size_t k = 0; k < kCompartments; ++k) out[k] = (v[k] - y0[k]) * (v[k] - y0[k]);
  return out;
}

double ic_loss(const SurrogateView& y, const ConcentrationState& y0, const std::array<double, kCompartments>& weights,
               double t0) {
  const auto c = ic_loss_components(y, y0, t0);
  double t = 0.0;
  for (std::size_t k = 0; k < kCompartments; ++k) t += weights[k] * c[k];
  return t;
}

// ---------------------------------------------------------------------------

PinnProblem::PinnProblem(const ConcentrationSeries& dataset, EstimationSpec spec, NetworkConfig net_cfg,
                         TrainConfig cfg)
    : dataset_(dataset), spec_(std::move(spec)), cfg_(std::move(cfg)) {
  validate(dataset_);
  if (dataset_.size() < 2) throw std::invalid_argument("training needs at least two data rows");
  if (!dataset_.plasma) throw std::invalid_argument("training data must include a Cplasma column");
  spec_.validate();
  cfg_.validate();
  net_cfg.validate();
  if (net_cfg.output_dim != static_cast<int>(kCompartments)) {
    throw std::invalid_argument("network must have four outputs");
  }
  net_ = init_network(net_cfg);
  network_size_ = net_.parameter_count();
  plasma_ = dataset_.plasma_profile();

  t0_ = dataset_.times.front();
  horizon_ = dataset_.times.back();
  if (!(horizon_ > 0.0)) throw std::invalid_argument("data horizon must be positive");
  y0_ = dataset_.state(0);

  if (cfg_.scale_outputs) {
    for (std::size_t k = 0; k < kCompartments; ++k) {
      const double m = *std::max_element(dataset_.columns[k].begin(), dataset_.columns[k].end());
      scale_[k] = m > 0.0 ? m : 1.0;
    }
  }

  collocation_ = dataset_.times;
  if (cfg_.extra_collocation > 0) {
    const auto extra = uniform_grid(t0_, horizon_, cfg_.extra_collocation + 2);
    collocation_.insert(collocation_.end(), extra.begin() + 1, extra.end() - 1);
  }
  t_hat_.resize(static_cast<Eigen::Index>(collocation_.size()));
  plasma_at_collocation_.resize(1, static_cast<Eigen::Index>(collocation_.size()));
  for (std::size_t i = 0; i < collocation_.size(); ++i) {
    t_hat_(static_cast<Eigen::Index>(i)) = collocation_[i] / horizon_;
    plasma_at_collocation_(0, static_cast<Eigen::Index>(i)) = linear_interp(plasma_, collocation_[i]);
  }
  observed_.resize(static_cast<Eigen::Index>(kCompartments), static_cast<Eigen::Index>(dataset_.size()));
  for (std::size_t k = 0; k < kCompartments; ++k) {
    for (std::size_t i = 0; i < dataset_.size(); ++i) {
      observed_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = dataset_.columns[k][i];
    }
  }
}

Eigen::VectorXd PinnProblem::pack(const Network& net, const EstimationSpec& spec) const {
  if (net.parameter_count() != network_size_ || spec.free.size() != spec_.free.size()) {
    throw std::invalid_argument("pack: shape mismatch");
  }
  Eigen::VectorXd psi(static_cast<Eigen::Index>(dimension()));
  psi.head(static_cast<Eigen::Index>(network_size_)) = net.flatten();
  for (std::size_t i = 0; i < spec.free.size(); ++i) {
    psi(static_cast<Eigen::Index>(network_size_ + i)) = spec.free[i].raw;
  }
  return psi;
}

void PinnProblem::unpack(const Eigen::VectorXd& psi, Network& net, EstimationSpec& spec) const {
  if (static_cast<std::size_t>(psi.size()) != dimension()) throw std::invalid_argument("unpack: wrong length");
  net = net_;
  net.assign(std::span<const double>(psi.data(), network_size_));
  spec = spec_;
  for (std::size_t i = 0; i < spec.free.size(); ++i) {
    spec.free[i].raw = psi(static_cast<Eigen::Index>(network_size_ + i));
  }
}

LossBreakdown PinnProblem::evaluate(const Eigen::VectorXd& psi, Eigen::VectorXd* grad) const {
  using ad::Var;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  if (static_cast<std::size_t>(psi.size()) != dimension()) throw std::invalid_argument("evaluate: wrong length");

  ad::Tape tape;
  NetworkVars vars;
  Eigen::Index offset = 0;
  for (const auto& layer : net_.layers) {
    const Eigen::Index r = layer.weight.rows();
    const Eigen::Index c = layer.weight.cols();
    vars.weights.push_back(tape.variable(ad::Matrix(Eigen::Map<const RowMajor>(psi.data() + offset, r, c))));
    offset += r * c;
    vars.biases.push_back(tape.variable(ad::Matrix(psi.segment(offset, r))));
    offset += r;
  }
  std::vector<Var> raws;
  BasicModelParams<Var> params;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto id = static_cast<ParamId>(i);
    params[id] = Var(spec_.fixed[id]);
  }
  for (const auto& p : spec_.free) {
    Var raw = tape.variable(psi(offset++));
    raws.push_back(raw);
    params[p.id] = affine(sigmoid(raw), p.max - p.min, p.min);
  }

  const auto [y_net, dy_net] = forward_batch(tape, vars, net_.config, t_hat_);
  const int n_data = static_cast<int>(dataset_.size());
  const int n_col = static_cast<int>(collocation_.size());

  State<Var> y;
  State<Var> rate;
  for (std::size_t k = 0; k < kCompartments; ++k) {
    y[k] = row(y_net, static_cast<int>(k));
    if (scale_[k] != 1.0) y[k] = affine(y[k], scale_[k], 0.0);
    rate[k] = affine(row(dy_net, static_cast<int>(k)), scale_[k] / horizon_, 0.0);
  }
  const Var c_art = tape.constant(plasma_at_collocation_);
  const State<Var> f = rhs_terms(c_art, y, params, cfg_.variant);

  std::array<Var, kCompartments> data_terms;
  std::array<Var, kCompartments> ode_terms;
  std::array<Var, kCompartments> ic_terms;
  for (std::size_t k = 0; k < kCompartments; ++k) {
    const Var yk_data = n_col == n_data ? y[k] : cols(y[k], 0, n_data);
    const Var obs = tape.constant(observed_.row(static_cast<Eigen::Index>(k)));
    data_terms[k] = mean(square(yk_data - obs));
    ode_terms[k] = mean(square(rate[k] - f[k]));
    ic_terms[k] = square(affine(cols(y[k], 0, 1), 1.0, -y0_[k]));
  }

  const auto& w = cfg_.weights;
  Var total(0.0);
  for (std::size_t k = 0; k < kCompartments; ++k) total = total + w.data[k] * data_terms[k];
  for (std::size_t k = 0; k < kCompartments; ++k) total = total + w.ode[k] * ode_terms[k];
  for (std::size_t k = 0; k < kCompartments; ++k) total = total + w.ic[k] * ic_terms[k];

  LossBreakdown out;
  for (std::size_t k = 0; k < kCompartments; ++k) {
    out.data[k] = data_terms[k].scalar();
    out.ode[k] = ode_terms[k].scalar();
    out.ic[k] = ic_terms[k].scalar();
  }
  out.total = total.scalar();

  if (grad) {
    const auto g = tape.gradient(total);
    grad->resize(psi.size());
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < net_.layers.size(); ++l) {
      const ad::Matrix& gw = g[2 * l];
      for (Eigen::Index i = 0; i < gw.rows(); ++i) {
        for (Eigen::Index j = 0; j < gw.cols(); ++j) (*grad)(k++) = gw(i, j);
      }
      const ad::Matrix& gb = g[2 * l + 1];
      for (Eigen::Index i = 0; i < gb.rows(); ++i) (*grad)(k++) = gb(i, 0);
    }
    for (std::size_t i = 0; i < raws.size(); ++i) (*grad)(k++) = g[2 * net_.layers.size() + i](0, 0);
  }
  return out;
}

LossBreakdown PinnProblem::evaluate_scalar(const Eigen::VectorXd& psi) const {
  Network net;
  EstimationSpec spec;
  unpack(psi, net, spec);
  const SurrogateView view{net, horizon_, scale_};
  LossBreakdown out;
  out.data = data_loss_components(view, dataset_);
  out.ode = ode_loss_components(view, spec.materialize(), plasma_, collocation_, cfg_.variant);
  out.ic = ic_loss_components(view, y0_, t0_);
  out.total = out.weighted(cfg_.weights);
  return out;
}

// ---------------------------------------------------------------------------

ConcentrationSeries predict_series(const Network& net, double t0, double horizon, std::size_t points,
                                   const std::array<double, kCompartments>& scale) {
  const auto grid = uniform_grid(t0, horizon, points);
  Eigen::RowVectorXd t_hat(static_cast<Eigen::Index>(points));
  for (std::size_t i = 0; i < points; ++i) t_hat(static_cast<Eigen::Index>(i)) = grid[i] / horizon;
  const Eigen::MatrixXd y = predict_batch(net, t_hat);
  ConcentrationSeries out;
  for (std::size_t i = 0; i < points; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    out.push_back(grid[i], {scale[0] * y(0, c), scale[1] * y(1, c), scale[2] * y(2, c), scale[3] * y(3, c)});
  }
  return out;
}

TrainResult train(const ConcentrationSeries& dataset, const EstimationSpec& spec, const NetworkConfig& net_cfg,
                  const TrainConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const PinnProblem problem(dataset, spec, net_cfg, cfg);

  TrainResult result;
  result.artifacts.param_names = spec.names();

  Eigen::VectorXd psi = problem.pack(problem.network_template(), spec);
  Eigen::VectorXd best_psi = psi;
  double best_total = std::numeric_limits<double>::infinity();
  AdamState adam;
  Eigen::VectorXd grad;

  auto record = [&](long iteration, const LossBreakdown& lb, const Eigen::VectorXd& at) {
    LossRecord rec{iteration, lb.data_sum(), lb.ode_sum(), lb.ic_sum(), lb.total};
    result.artifacts.losses.push_back(rec);
    result.logged.push_back(lb);
    Network net;
    EstimationSpec s;
    problem.unpack(at, net, s);
    result.artifacts.params.push_back(ParamRecord{iteration, s.values()});
    if (cfg.on_log) cfg.on_log(rec);
  };

  for (long it = 0;; ++it) {
    LossBreakdown lb;
    try {
      lb = problem.evaluate(psi, &grad);
    } catch (const ad::NonFiniteGradient& e) {
      result.failure = TrainFailure{TrainFailure::Kind::NonFiniteGradient, it, e.what()};
      break;
    }
    const bool log_now = it % cfg.log_stride == 0 || it == cfg.iterations;
    if (!std::isfinite(lb.total) || lb.total > cfg.divergence_threshold) {
      if (std::isfinite(lb.total)) record(it, lb, psi);
      result.failure = TrainFailure{TrainFailure::Kind::Diverged, it,
                                    "total loss " + format_number(lb.total) + " exceeds the divergence threshold"};
      break;
    }
    if (lb.total < best_total) {
      best_total = lb.total;
      best_psi = psi;
      result.best_loss = lb;
      result.best_iteration = it;
    }
    if (log_now) record(it, lb, psi);
    if (it >= cfg.iterations) break;
    try {
      adam_step(adam, psi, grad, cfg.learning_rate);
    } catch (const NonFiniteGradientError& e) {
      result.failure = TrainFailure{TrainFailure::Kind::NonFiniteGradient, it, e.what()};
      break;
    }
  }

  if (!result.failure && cfg.lbfgs_iterations > 0) {
    const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      try {
        return problem.evaluate(x, &g).total;
      } catch (const ad::NonFiniteGradient&) {
        g = Eigen::VectorXd::Zero(x.size());
        return std::numeric_limits<double>::infinity();
      }
    };
    LbfgsOptions opts;
    opts.max_iterations = cfg.lbfgs_iterations;
    opts.gradient_tolerance = 0.0;
    const LbfgsResult refined = lbfgs_refine(objective, best_psi, opts);
    result.lbfgs_steps = refined.iterations;
    if (refined.value < best_total) {
      best_total = refined.value;
      best_psi = refined.x;
      result.best_loss = problem.evaluate(best_psi, nullptr);
      result.best_iteration = cfg.iterations + refined.iterations;
    }
    record(cfg.iterations + refined.iterations, problem.evaluate(refined.x, nullptr), refined.x);
  }

  problem.unpack(best_psi, result.network, result.spec);
  result.artifacts.prediction = predict_series(result.network, dataset.times.front(), dataset.times.back(),
                                               cfg.prediction_points, problem.output_scale());
  result.artifacts.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace pbpk
