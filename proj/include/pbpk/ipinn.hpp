#pragma once

// Inverse PINN: a network surrogate Y(t) trained jointly with bounded
// physical parameters on the weighted sum of data, ODE-residual and
// initial-condition losses.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pbpk/dataio.hpp"
#include "pbpk/model.hpp"
#include "pbpk/network.hpp"
#include "pbpk/optim.hpp"
#include "pbpk/series.hpp"

namespace pbpk {

/// Physical value = min + (max - min) * sigmoid(raw).
struct BoundedParam {
  ParamId id;
  double min = 0.0;
  double max = 1.0;
  double raw = 0.0;

  std::string_view name() const { return param_name(id); }
};

double constrain(const BoundedParam& p);
/// Inverse of constrain() for a value strictly inside the bounds.
double unconstrain(const BoundedParam& p, double value);

struct EstimationSpec {
  std::vector<BoundedParam> free;
  ModelParams fixed;  // values of every parameter that is not free

  /// Throws std::invalid_argument on duplicate names or min >= max.
  void validate() const;
  /// Fixed values with the constrained free values substituted.
  ModelParams materialize() const;
  std::vector<std::string> names() const;
  std::vector<double> values() const;

  /// Bounds reference * [lo, hi] for each named parameter, raws at zero.
  /// Fractions are capped at 1. Throws when a reference value is zero.
  static EstimationSpec scaled_bounds(const std::vector<ParamId>& ids, const ModelParams& reference,
                                      double lo = 0.5, double hi = 2.0);
};

/// The six parameters recovered in the reference experiment.
std::vector<ParamId> default_free_params();

struct LossWeights {
  std::array<double, kCompartments> ic{1.0, 1.0, 1.0, 1.0};
  std::array<double, kCompartments> ode{2.0, 2.0, 2.0, 2.0};
  std::array<double, kCompartments> data{3.0, 3.0, 3.0, 3.0};

  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  long iterations = 10000;
  long lbfgs_iterations = 0;
  std::size_t extra_collocation = 0;  // uniform points added to the observed times
  LossWeights weights;
  long log_stride = 100;
  ModelVariant variant = ModelVariant::PaperLiteral;
  bool scale_outputs = false;  // network predicts Y_k / max(data_k)
  double divergence_threshold = 1e8;
  std::size_t prediction_points = 481;
  /// Called after each logged iteration.
  std::function<void(const LossRecord&)> on_log;

  void validate() const;
};

struct LossBreakdown {
  std::array<double, kCompartments> data{};  // per-compartment MSE
  std::array<double, kCompartments> ode{};   // per-equation mean squared residual
  std::array<double, kCompartments> ic{};    // per-compartment squared error at t0
  double total = 0.0;

  double data_sum() const { return data[0] + data[1] + data[2] + data[3]; }
  double ode_sum() const { return ode[0] + ode[1] + ode[2] + ode[3]; }
  double ic_sum() const { return ic[0] + ic[1] + ic[2] + ic[3]; }
  /// Weighted recombination of the components.
  double weighted(const LossWeights& w) const;
};

// ---------------------------------------------------------------------------
// Scalar loss terms (direct per-point evaluation through the dual forward pass)

/// Network outputs are mapped to concentrations by `scale` (ones when unscaled)
/// and time enters as t / horizon.
struct SurrogateView {
  const Network& net;
  double horizon = 1.0;
  std::array<double, kCompartments> scale{1.0, 1.0, 1.0, 1.0};

  ConcentrationState value(double t) const;
  /// (Y, dY/dt) in physical time units.
  std::pair<ConcentrationState, ConcentrationState> value_and_rate(double t) const;
};

std::array<double, kCompartments> data_loss_components(const SurrogateView& y, const ConcentrationSeries& series);
double data_loss(const SurrogateView& y, const ConcentrationSeries& series,
                 const std::array<double, kCompartments>& weights = {1.0, 1.0, 1.0, 1.0});

std::array<double, kCompartments> ode_loss_components(const SurrogateView& y, const ModelParams& params,
                                                      const PlasmaProfile& plasma,
                                                      std::span<const double> collocation, ModelVariant variant);
double ode_loss(const SurrogateView& y, const EstimationSpec& spec, const PlasmaProfile& plasma,
                std::span<const double> collocation, ModelVariant variant = ModelVariant::PaperLiteral,
                const std::array<double, kCompartments>& weights = {1.0, 1.0, 1.0, 1.0});

std::array<double, kCompartments> ic_loss_components(const SurrogateView& y, const ConcentrationState& y0,
                                                     double t0 = 0.0);
double ic_loss(const SurrogateView& y, const ConcentrationState& y0,
               const std::array<double, kCompartments>& weights = {1.0, 1.0, 1.0, 1.0}, double t0 = 0.0);

// ---------------------------------------------------------------------------

/// Training objective over the flat vector psi = [network weights..., raw
/// values of the free parameters...].
class PinnProblem {
 public:
  PinnProblem(const ConcentrationSeries& dataset, EstimationSpec spec, NetworkConfig net_cfg, TrainConfig cfg);

  std::size_t dimension() const { return network_size_ + spec_.free.size(); }
  std::size_t network_size() const { return network_size_; }

  Eigen::VectorXd pack(const Network& net, const EstimationSpec& spec) const;
  void unpack(const Eigen::VectorXd& psi, Network& net, EstimationSpec& spec) const;

  /// Loss on the tape; writes the gradient when `grad` is non-null.
  LossBreakdown evaluate(const Eigen::VectorXd& psi, Eigen::VectorXd* grad) const;
  /// The same loss computed point by point with dual numbers (no tape).
  LossBreakdown evaluate_scalar(const Eigen::VectorXd& psi) const;

  const Network& network_template() const { return net_; }
  const EstimationSpec& spec() const { return spec_; }
  const ConcentrationSeries& dataset() const { return dataset_; }
  const std::vector<double>& collocation() const { return collocation_; }
  const std::array<double, kCompartments>& output_scale() const { return scale_; }
  double horizon() const { return horizon_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  ConcentrationSeries dataset_;
  EstimationSpec spec_;
  TrainConfig cfg_;
  Network net_;
  PlasmaProfile plasma_;
  std::size_t network_size_ = 0;
  double t0_ = 0.0;
  double horizon_ = 1.0;
  std::array<double, kCompartments> scale_{1.0, 1.0, 1.0, 1.0};
  ConcentrationState y0_{};
  std::vector<double> collocation_;       // data times followed by extras
  Eigen::RowVectorXd t_hat_;              // collocation_ / horizon
  Eigen::MatrixXd observed_;              // 4 x N_data
  Eigen::MatrixXd plasma_at_collocation_; // 1 x N_c
};

struct TrainFailure {
  enum class Kind { NonFiniteGradient, Diverged };
  Kind kind;
  long iteration;
  std::string message;
};

struct TrainResult {
  Network network;        // best state seen
  EstimationSpec spec;    // raws of the best state
  RunArtifacts artifacts;
  LossBreakdown best_loss;
  long best_iteration = 0;
  long lbfgs_steps = 0;
  std::optional<TrainFailure> failure;
  /// Per-compartment components of every logged iteration (same order as artifacts.losses).
  std::vector<LossBreakdown> logged;
};

TrainResult train(const ConcentrationSeries& dataset, const EstimationSpec& spec, const NetworkConfig& net_cfg,
                  const TrainConfig& train_cfg);

/// Network prediction in physical units on a uniform grid over the data horizon.
ConcentrationSeries predict_series(const Network& net, double t0, double horizon, std::size_t points,
                                   const std::array<double, kCompartments>& scale = {1.0, 1.0, 1.0, 1.0});

}  // namespace pbpk
