#pragma once

#include "romnn/dynsys.hpp"
#include "romnn/neuralnet.hpp"
#include "romnn/pod.hpp"

#include <filesystem>
#include <memory>

namespace romnn {

/// Regression data for the reduced velocity, one sample per column.
/// Input column (p, i) is (tau_ip, t_i, mu_p) with tau_ip = Phi^T (u(t_i, mu_p) - u_bar);
/// the matching target column is the reduced velocity at that sample.
struct RomNnTrainingSet {
  Matrix inputs;   // (k_u + 1 + N_mu) x (N_s N_t)
  Matrix targets;  // k_u x (N_s N_t)

  Index samples() const { return inputs.cols(); }
};

enum class TargetSource {
  /// Phi^T f(u(t_i, mu_p)), from the stored velocity snapshots.
  stored_velocity,
  /// Phi^T f(u_bar + Phi tau_ip), re-evaluated through the full-order model.
  reevaluated,
};

/// Columns follow the snapshot ordering (parameter-major, then time).
/// `hdm` is required only for TargetSource::reevaluated.
RomNnTrainingSet build_training_data(const SnapshotSet& snapshots, const ReducedBasis& basis,
                                     TargetSource source = TargetSource::stored_velocity,
                                     const DynamicalSystem* hdm = nullptr);

/// Reduced system whose velocity is a trained network:
///   M_r dy/dt = f_hat(y, t, mu).
/// Holds no reference to the full-order model.
class RomNnSystem final : public DynamicalSystem {
 public:
  RomNnSystem(nn::NetworkModel model, ReducedBasis basis, Matrix reduced_mass, Vector reduced_initial_state,
              ParamBox param_box);

  const nn::NetworkModel& model() const { return model_; }
  const ReducedBasis& basis() const { return basis_; }

  /// Writes the network and the basis into `directory`.
  void save(const std::filesystem::path& directory) const;
  static std::shared_ptr<RomNnSystem> load(const std::filesystem::path& directory);

 protected:
  Vector compute_velocity(const Vector& tau, double t, const Vector& mu) const override;
  /// tau-block of the network's input Jacobian.
  Operator compute_jacobian(const Vector& tau, double t, const Vector& mu) const override;

 private:
  Vector features(const Vector& tau, double t, const Vector& mu) const;

  nn::NetworkModel model_;
  ReducedBasis basis_;
};

struct RomNnTrainingResult {
  std::shared_ptr<RomNnSystem> system;
  std::vector<nn::EpochRecord> log;
  Index best_epoch = 0;
};

/// Fits the network and wraps it as a reduced system sharing the mass matrix,
/// initial state and parameter box of `hdm` reduced through `basis`.
RomNnTrainingResult train_romnn(const RomNnTrainingSet& training, const DynamicalSystem& hdm,
                                const ReducedBasis& basis, const std::vector<Index>& hidden_widths,
                                const nn::TrainingConfig& config);

/// Wraps an already fitted network.
std::shared_ptr<RomNnSystem> make_romnn_system(nn::NetworkModel model, const DynamicalSystem& hdm,
                                               const ReducedBasis& basis);

void save_basis(const ReducedBasis& basis, const std::filesystem::path& path);
ReducedBasis load_basis(const std::filesystem::path& path);

}  // namespace romnn
