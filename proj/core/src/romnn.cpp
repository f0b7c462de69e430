#include "romnn/romnn.hpp"

#include "romnn/archive.hpp"
#include "romnn/galerkin_rom.hpp"

namespace romnn {

RomNnTrainingSet build_training_data(const SnapshotSet& snapshots, const ReducedBasis& basis,
                                     TargetSource source, const DynamicalSystem* hdm) {
  if (snapshots.states.rows() != basis.full_dim() || snapshots.velocities.rows() != basis.full_dim() ||
      snapshots.states.cols() != snapshots.velocities.cols() ||
      snapshots.states.cols() != static_cast<Index>(snapshots.params.size()) * snapshots.steps()) {
    throw std::invalid_argument("build_training_data: snapshot set and basis are inconsistent");
  }
  if (source == TargetSource::reevaluated && hdm == nullptr) {
    throw std::invalid_argument("build_training_data: re-evaluated targets need the full-order model");
  }
  const Index k = basis.size();
  const Index n_mu = snapshots.params.empty() ? 0 : snapshots.params.front().size();
  const Index n = snapshots.states.cols();

  RomNnTrainingSet set;
  set.inputs.resize(k + 1 + n_mu, n);
  set.inputs.topRows(k) = basis.project(snapshots.states);
  for (std::size_t p = 0; p < snapshots.params.size(); ++p) {
    for (Index i = 0; i < snapshots.steps(); ++i) {
      const Index c = snapshots.column(static_cast<Index>(p), i);
      set.inputs(k, c) = snapshots.times[static_cast<std::size_t>(i)];
      set.inputs.col(c).tail(n_mu) = snapshots.params[p];
    }
  }
  if (source == TargetSource::stored_velocity) {
    set.targets.noalias() = basis.basis.transpose() * snapshots.velocities;
  } else {
    set.targets.resize(k, n);
    for (Index c = 0; c < n; ++c) {
      const Vector u = basis.reconstruct(Vector(set.inputs.col(c).head(k)));
      set.targets.col(c) = basis.basis.transpose() * hdm->velocity(u, set.inputs(k, c), set.inputs.col(c).tail(n_mu));
    }
  }
  return set;
}

RomNnSystem::RomNnSystem(nn::NetworkModel model, ReducedBasis basis, Matrix reduced_mass,
                         Vector reduced_initial_state, ParamBox param_box)
    : DynamicalSystem(Operator(std::move(reduced_mass)), std::move(reduced_initial_state), std::move(param_box)),
      model_(std::move(model)),
      basis_(std::move(basis)) {
  if (model_.output_size() != basis_.size() || model_.input_size() != basis_.size() + 1 + param_dim()) {
    throw std::invalid_argument("RomNnSystem: network widths do not match (k_u + 1 + N_mu) -> k_u");
  }
  if (dim() != basis_.size()) throw std::invalid_argument("RomNnSystem: initial state has wrong size");
}

Vector RomNnSystem::features(const Vector& tau, double t, const Vector& mu) const {
  Vector x(model_.input_size());
  x << tau, t, mu;
  return x;
}

Vector RomNnSystem::compute_velocity(const Vector& tau, double t, const Vector& mu) const {
  return model_.forward(features(tau, t, mu));
}

Operator RomNnSystem::compute_jacobian(const Vector& tau, double t, const Vector& mu) const {
  return Operator(Matrix(model_.jacobian_wrt_input(features(tau, t, mu)).leftCols(basis_.size())));
}

void save_basis(const ReducedBasis& basis, const std::filesystem::path& path) {
  Archive ar;
  ar.put("offset", basis.offset);
  ar.put("basis", basis.basis);
  ar.put("singular_values", basis.singular_values);
  ar.save(path);
}

ReducedBasis load_basis(const std::filesystem::path& path) {
  const Archive ar = Archive::load(path);
  return {ar.vector("offset"), ar.matrix("basis"), ar.vector("singular_values")};
}

void RomNnSystem::save(const std::filesystem::path& directory) const {
  std::filesystem::create_directories(directory);
  model_.save(directory / "network.bin");
  save_basis(basis_, directory / "basis.bin");
  Archive ar;
  ar.put("reduced_mass", mass().to_dense());
  ar.put("initial_state", initial_state());
  ar.put("param_lower", Vector(Eigen::Map<const Vector>(param_box().lower.data(), param_dim())));
  ar.put("param_upper", Vector(Eigen::Map<const Vector>(param_box().upper.data(), param_dim())));
  ar.save(directory / "system.bin");
}

std::shared_ptr<RomNnSystem> RomNnSystem::load(const std::filesystem::path& directory) {
  const Archive ar = Archive::load(directory / "system.bin");
  const Vector lo = ar.vector("param_lower");
  const Vector hi = ar.vector("param_upper");
  ParamBox box{{lo.data(), lo.data() + lo.size()}, {hi.data(), hi.data() + hi.size()}};
  return std::make_shared<RomNnSystem>(nn::NetworkModel::load(directory / "network.bin"),
                                       load_basis(directory / "basis.bin"), ar.matrix("reduced_mass"),
                                       ar.vector("initial_state"), std::move(box));
}

std::shared_ptr<RomNnSystem> make_romnn_system(nn::NetworkModel model, const DynamicalSystem& hdm,
                                               const ReducedBasis& basis) {
  return std::make_shared<RomNnSystem>(std::move(model), basis, reduced_mass(hdm.mass(), basis.basis),
                                       basis.project(hdm.initial_state()), hdm.param_box());
}

RomNnTrainingResult train_romnn(const RomNnTrainingSet& training, const DynamicalSystem& hdm,
                                const ReducedBasis& basis, const std::vector<Index>& hidden_widths,
                                const nn::TrainingConfig& config) {
  if (training.samples() == 0) throw std::invalid_argument("train_romnn: empty training set");
  nn::FitResult fit = nn::fit(training.inputs, training.targets, hidden_widths, config);
  RomNnTrainingResult out;
  out.system = make_romnn_system(std::move(fit.model), hdm, basis);
  out.log = std::move(fit.log);
  out.best_epoch = fit.best_epoch;
  return out;
}

}  // namespace romnn
