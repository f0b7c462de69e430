#include "romnn/experiment.hpp"

#include "romnn/archive.hpp"
#include "romnn/deim.hpp"
#include "romnn/galerkin_rom.hpp"
#include "romnn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace romnn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

template <typename T, std::size_t N>
std::string join(const std::array<T, N>& values) {
  return join(std::vector<T>(values.begin(), values.end()));
}

template <std::size_t N>
std::array<double, N> to_array(const std::string& key, const std::vector<double>& v) {
  if (v.size() != N) {
    throw std::invalid_argument("config key '" + key + "': expected " + std::to_string(N) + " values");
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

std::vector<Index> to_indices(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

std::string to_string(TargetSource s) {
  return s == TargetSource::stored_velocity ? "stored_velocity" : "reevaluated";
}

TargetSource parse_target_source(const std::string& s) {
  if (s == "stored_velocity") return TargetSource::stored_velocity;
  if (s == "reevaluated") return TargetSource::reevaluated;
  throw std::invalid_argument("unknown target source '" + s + "' (stored_velocity, reevaluated)");
}

std::string to_string(PodMethod m) {
  switch (m) {
    case PodMethod::automatic:
      return "automatic";
    case PodMethod::method_of_snapshots:
      return "method_of_snapshots";
    case PodMethod::thin_svd:
      return "thin_svd";
  }
  return "automatic";
}

PodMethod parse_pod_method(const std::string& s) {
  if (s == "automatic") return PodMethod::automatic;
  if (s == "method_of_snapshots") return PodMethod::method_of_snapshots;
  if (s == "thin_svd") return PodMethod::thin_svd;
  throw std::invalid_argument("unknown POD method '" + s + "' (automatic, method_of_snapshots, thin_svd)");
}

Problem parse_problem(const std::string& s) {
  if (s == "burgers") return Problem::burgers;
  if (s == "flame") return Problem::flame;
  throw std::invalid_argument("unknown problem '" + s + "' (burgers, flame)");
}

ParamBox parse_box(const KeyValueConfig& kv, const std::string& section, const ParamBox& fallback) {
  return {kv.get_doubles(section + ".param_lower", fallback.lower),
          kv.get_doubles(section + ".param_upper", fallback.upper)};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
    if (!os) throw std::runtime_error("error writing " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Trajectory reconstructed(const Trajectory& reduced, const ReducedBasis& basis) {
  Trajectory full = reduced;
  full.states = basis.reconstruct(reduced.states);
  return full;
}

}  // namespace

std::string to_string(Problem p) { return p == Problem::burgers ? "burgers" : "flame"; }

std::string to_string(Method m) {
  switch (m) {
    case Method::rom:
      return "rom";
    case Method::deim:
      return "deim";
    case Method::romnn:
      return "romnn";
  }
  return "rom";
}

Method parse_method(const std::string& text) {
  for (Method m : kAllMethods) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown method '" + text + "' (rom, deim, romnn)");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::test:
      return "test";
    case Split::all:
      return "all";
  }
  return "all";
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

// ---------------------------------------------------------------------------
// ExperimentConfig

ExperimentConfig ExperimentConfig::defaults(Problem problem) {
  ExperimentConfig c;
  c.problem = problem;
  if (problem == Problem::flame) {
    c.train_grid = {4, 4};
    c.test_grid = {7, 7};
    c.k_u = {80, 120, 160, 200};
  }
  return c;
}

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv) {
  ExperimentConfig c = defaults(parse_problem(kv.get_string("experiment.problem", "burgers")));
  c.train_grid = to_indices(kv.get_ints("experiment.train_grid", {c.train_grid.begin(), c.train_grid.end()}));
  c.test_grid = to_indices(kv.get_ints("experiment.test_grid", {c.test_grid.begin(), c.test_grid.end()}));
  c.k_u = to_indices(kv.get_ints("experiment.k_u", {c.k_u.begin(), c.k_u.end()}));
  const std::string k_f = kv.get_string("experiment.k_f", "auto");
  if (k_f != "auto") c.k_f = static_cast<Index>(kv.get_int("experiment.k_f", 0));
  c.seed = static_cast<std::uint64_t>(kv.get_int("experiment.seed", 0));
  c.workers = static_cast<int>(kv.get_int("experiment.workers", c.workers));
  c.output_dir = kv.get_string("experiment.output_dir", c.output_dir.string());
  c.target_source = parse_target_source(kv.get_string("experiment.target_source", to_string(c.target_source)));
  c.pod_method = parse_pod_method(kv.get_string("experiment.pod_method", to_string(c.pod_method)));
  c.dump_fields = kv.get_bool("experiment.dump_fields", c.dump_fields);
  c.small = kv.get_bool("experiment.small", c.small);

  c.hidden_widths =
      to_indices(kv.get_ints("network.hidden_widths", {c.hidden_widths.begin(), c.hidden_widths.end()}));
  const std::string act = kv.get_string("network.activation", "relu");
  if (act == "relu") {
    c.training.hidden_activation = nn::Activation::relu;
  } else if (act == "identity") {
    c.training.hidden_activation = nn::Activation::identity;
  } else {
    throw std::invalid_argument("unknown activation '" + act + "' (relu, identity)");
  }

  auto& t = c.training;
  t.adam.learning_rate = kv.get_double("training.learning_rate", t.adam.learning_rate);
  t.adam.beta1 = kv.get_double("training.beta1", t.adam.beta1);
  t.adam.beta2 = kv.get_double("training.beta2", t.adam.beta2);
  t.adam.epsilon = kv.get_double("training.epsilon", t.adam.epsilon);
  t.batch_size = kv.get_int("training.batch_size", t.batch_size);
  t.max_epochs = kv.get_int("training.max_epochs", t.max_epochs);
  t.dropout = kv.get_double("training.dropout", t.dropout);
  t.patience = kv.get_int("training.patience", t.patience);
  t.validation_fraction = kv.get_double("training.validation_fraction", t.validation_fraction);

  auto& s = c.integrate;
  s.newton.tol = kv.get_double("solver.newton_tol", s.newton.tol);
  s.newton.max_iter = static_cast<int>(kv.get_int("solver.newton_max_iter", s.newton.max_iter));
  s.newton.max_halvings = static_cast<int>(kv.get_int("solver.newton_max_halvings", s.newton.max_halvings));
  s.blowup_factor = kv.get_double("solver.blowup_factor", s.blowup_factor);

  auto& b = c.burgers;
  b.n_elements = kv.get_int("burgers.n_elements", b.n_elements);
  b.horizon = kv.get_double("burgers.horizon", b.horizon);
  b.n_steps = kv.get_int("burgers.n_steps", b.n_steps);
  b.param_box = parse_box(kv, "burgers", b.param_box);

  auto& f = c.flame;
  f.nx = kv.get_int("flame.nx", f.nx);
  f.ny = kv.get_int("flame.ny", f.ny);
  f.length_x = kv.get_double("flame.length_x", f.length_x);
  f.length_y = kv.get_double("flame.length_y", f.length_y);
  f.horizon = kv.get_double("flame.horizon", f.horizon);
  f.n_steps = kv.get_int("flame.n_steps", f.n_steps);
  f.diffusivity = kv.get_double("flame.diffusivity", f.diffusivity);
  f.velocity = to_array<2>("flame.velocity", kv.get_doubles("flame.velocity", {f.velocity.begin(), f.velocity.end()}));
  f.density = kv.get_double("flame.density", f.density);
  f.molecular_weight = to_array<3>(
      "flame.molecular_weight",
      kv.get_doubles("flame.molecular_weight", {f.molecular_weight.begin(), f.molecular_weight.end()}));
  const auto nu = kv.get_ints("flame.stoichiometry", {f.stoichiometry.begin(), f.stoichiometry.end()});
  if (nu.size() != 3) throw std::invalid_argument("config key 'flame.stoichiometry': expected 3 values");
  for (std::size_t i = 0; i < 3; ++i) f.stoichiometry[i] = static_cast<int>(nu[i]);
  f.heat_of_reaction = kv.get_double("flame.heat_of_reaction", f.heat_of_reaction);
  f.gas_constant = kv.get_double("flame.gas_constant", f.gas_constant);
  f.param_box = parse_box(kv, "flame", f.param_box);
  f.wall_state = to_array<4>("flame.wall_state",
                             kv.get_doubles("flame.wall_state", {f.wall_state.begin(), f.wall_state.end()}));
  f.inlet_state = to_array<4>("flame.inlet_state",
                              kv.get_doubles("flame.inlet_state", {f.inlet_state.begin(), f.inlet_state.end()}));
  f.inlet_extent = to_array<2>(
      "flame.inlet_extent", kv.get_doubles("flame.inlet_extent", {f.inlet_extent.begin(), f.inlet_extent.end()}));
  f.initial_state = to_array<4>(
      "flame.initial_state", kv.get_doubles("flame.initial_state", {f.initial_state.begin(), f.initial_state.end()}));
  const std::string scheme = kv.get_string("flame.convection", "upwind");
  if (scheme == "upwind") {
    f.convection = ConvectionScheme::upwind;
  } else if (scheme == "central") {
    f.convection = ConvectionScheme::central;
  } else {
    throw std::invalid_argument("unknown convection scheme '" + scheme + "' (upwind, central)");
  }
  f.min_temperature = kv.get_double("flame.min_temperature", f.min_temperature);

  const auto unused = kv.unused_keys();
  if (!unused.empty()) throw std::invalid_argument("unknown config key '" + unused.front() + "'");
  if (c.small) c.apply_small();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from(KeyValueConfig::load(path));
}

void ExperimentConfig::apply_small() {
  small = true;
  if (problem != Problem::flame) return;
  flame.nx = 20;
  flame.ny = 10;
  train_grid = {3, 3};
  test_grid = {5, 5};
  if (k_u == defaults(Problem::flame).k_u) k_u = {20, 40, 60, 80};
}

const ParamBox& ExperimentConfig::param_box() const {
  return problem == Problem::burgers ? burgers.param_box : flame.param_box;
}

std::shared_ptr<DynamicalSystem> ExperimentConfig::make_system() const {
  if (problem == Problem::burgers) return assemble_burgers(burgers);
  return assemble_flame(flame);
}

TimeGrid ExperimentConfig::time_grid() const {
  return problem == Problem::burgers ? burgers.time_grid() : flame.time_grid();
}

void ExperimentConfig::validate() const {
  const ParamBox& box = param_box();
  const auto n_mu = static_cast<std::size_t>(box.dim());
  if (box.upper.size() != n_mu || n_mu == 0) throw std::invalid_argument("parameter box bounds are inconsistent");
  for (std::size_t i = 0; i < n_mu; ++i) {
    if (!(box.lower[i] < box.upper[i])) throw std::invalid_argument("parameter box must have lower < upper");
  }
  if (train_grid.size() != n_mu || test_grid.size() != n_mu) {
    throw std::invalid_argument("train_grid and test_grid need one count per parameter (" + std::to_string(n_mu) +
                                ")");
  }
  nested_indices(train_grid, test_grid);
  if (k_u.empty()) throw std::invalid_argument("k_u list is empty");
  Index train_points = 1;
  for (Index c : train_grid) train_points *= c;
  const Index snapshots =
      train_points * (problem == Problem::burgers ? burgers.n_steps : flame.n_steps);
  const Index dofs = problem == Problem::burgers ? burgers.dofs() : flame.dofs();
  for (Index k : k_u) {
    if (k < 1 || k > std::min(dofs, snapshots)) {
      throw std::invalid_argument("k_u = " + std::to_string(k) + " outside [1, " +
                                  std::to_string(std::min(dofs, snapshots)) + "]");
    }
    const Index kf = deim_size(k);
    if (kf < 1 || kf > std::min(dofs, snapshots)) {
      throw std::invalid_argument("k_f = " + std::to_string(kf) + " outside [1, " +
                                  std::to_string(std::min(dofs, snapshots)) + "]");
    }
  }
  for (Index w : hidden_widths) {
    if (w < 1) throw std::invalid_argument("hidden widths must be positive");
  }
  const auto& t = training;
  if (!(t.adam.learning_rate > 0.0) || !(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0) ||
      !(t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0) || !(t.adam.epsilon > 0.0)) {
    throw std::invalid_argument("invalid Adam hyperparameters");
  }
  if (t.batch_size < 1 || t.max_epochs < 0 || t.patience < 1) {
    throw std::invalid_argument("batch_size and patience must be positive, max_epochs non-negative");
  }
  if (!(t.dropout >= 0.0 && t.dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (!(t.validation_fraction > 0.0 && t.validation_fraction < 1.0)) {
    throw std::invalid_argument("validation_fraction must lie in (0, 1)");
  }
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (problem == Problem::burgers && burgers.n_elements < 2) throw std::invalid_argument("n_elements must be >= 2");
  if (problem == Problem::flame && (flame.nx < 4 || flame.ny < 4)) {
    throw std::invalid_argument("flame grid needs nx, ny >= 4");
  }
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "[experiment]\n"
     << "problem = " << to_string(problem) << "\n"
     << "train_grid = " << join(train_grid) << "\n"
     << "test_grid = " << join(test_grid) << "\n"
     << "k_u = " << join(k_u) << "\n"
     << "k_f = " << (k_f ? std::to_string(*k_f) : std::string("auto")) << "\n"
     << "seed = " << seed << "\n"
     << "workers = " << workers << "\n"
     << "output_dir = " << output_dir.string() << "\n"
     << "target_source = " << to_string(target_source) << "\n"
     << "pod_method = " << to_string(pod_method) << "\n"
     << "dump_fields = " << (dump_fields ? "true" : "false") << "\n"
     << "small = " << (small ? "true" : "false") << "\n\n";
  os << "[network]\n"
     << "hidden_widths = " << join(hidden_widths) << "\n"
     << "activation = " << (training.hidden_activation == nn::Activation::relu ? "relu" : "identity") << "\n\n";
  os << "[training]\n"
     << "learning_rate = " << format_double(training.adam.learning_rate) << "\n"
     << "beta1 = " << format_double(training.adam.beta1) << "\n"
     << "beta2 = " << format_double(training.adam.beta2) << "\n"
     << "epsilon = " << format_double(training.adam.epsilon) << "\n"
     << "batch_size = " << training.batch_size << "\n"
     << "max_epochs = " << training.max_epochs << "\n"
     << "dropout = " << format_double(training.dropout) << "\n"
     << "patience = " << training.patience << "\n"
     << "validation_fraction = " << format_double(training.validation_fraction) << "\n\n";
  os << "[solver]\n"
     << "newton_tol = " << format_double(integrate.newton.tol) << "\n"
     << "newton_max_iter = " << integrate.newton.max_iter << "\n"
     << "newton_max_halvings = " << integrate.newton.max_halvings << "\n"
     << "blowup_factor = " << format_double(integrate.blowup_factor) << "\n\n";
  os << "[burgers]\n"
     << "n_elements = " << burgers.n_elements << "\n"
     << "horizon = " << format_double(burgers.horizon) << "\n"
     << "n_steps = " << burgers.n_steps << "\n"
     << "param_lower = " << join(burgers.param_box.lower) << "\n"
     << "param_upper = " << join(burgers.param_box.upper) << "\n\n";
  os << "[flame]\n"
     << "nx = " << flame.nx << "\n"
     << "ny = " << flame.ny << "\n"
     << "length_x = " << format_double(flame.length_x) << "\n"
     << "length_y = " << format_double(flame.length_y) << "\n"
     << "horizon = " << format_double(flame.horizon) << "\n"
     << "n_steps = " << flame.n_steps << "\n"
     << "diffusivity = " << format_double(flame.diffusivity) << "\n"
     << "velocity = " << join(flame.velocity) << "\n"
     << "density = " << format_double(flame.density) << "\n"
     << "molecular_weight = " << join(flame.molecular_weight) << "\n"
     << "stoichiometry = " << join(flame.stoichiometry) << "\n"
     << "heat_of_reaction = " << format_double(flame.heat_of_reaction) << "\n"
     << "gas_constant = " << format_double(flame.gas_constant) << "\n"
     << "param_lower = " << join(flame.param_box.lower) << "\n"
     << "param_upper = " << join(flame.param_box.upper) << "\n"
     << "wall_state = " << join(flame.wall_state) << "\n"
     << "inlet_state = " << join(flame.inlet_state) << "\n"
     << "inlet_extent = " << join(flame.inlet_extent) << "\n"
     << "initial_state = " << join(flame.initial_state) << "\n"
     << "convection = " << (flame.convection == ConvectionScheme::upwind ? "upwind" : "central") << "\n"
     << "min_temperature = " << format_double(flame.min_temperature) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Grids, errors, statistics

std::vector<Vector> uniform_grid(const ParamBox& box, const std::vector<Index>& counts) {
  const auto dim = static_cast<std::size_t>(box.dim());
  if (counts.size() != dim) throw std::invalid_argument("uniform_grid: one count per parameter required");
  std::size_t total = 1;
  for (Index c : counts) {
    if (c < 2) throw std::invalid_argument("uniform_grid: counts must be at least 2");
    total *= static_cast<std::size_t>(c);
  }
  std::vector<Vector> points;
  points.reserve(total);
  std::vector<Index> idx(dim, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vector mu(static_cast<Index>(dim));
    for (std::size_t a = 0; a < dim; ++a) {
      const double s = static_cast<double>(idx[a]) / static_cast<double>(counts[a] - 1);
      // Exact endpoints, avoiding lower + (upper - lower) round-off at s = 1.
      mu[static_cast<Index>(a)] =
          idx[a] == counts[a] - 1 ? box.upper[a] : box.lower[a] + s * (box.upper[a] - box.lower[a]);
    }
    points.push_back(std::move(mu));
    for (std::size_t a = dim; a-- > 0;) {
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
    }
  }
  return points;
}

std::vector<std::size_t> nested_indices(const std::vector<Index>& train, const std::vector<Index>& test) {
  if (train.size() != test.size()) throw std::invalid_argument("train and test grids differ in dimension");
  for (std::size_t a = 0; a < train.size(); ++a) {
    if (train[a] < 2 || test[a] < 2) throw std::invalid_argument("grid counts must be at least 2");
    if ((test[a] - 1) % (train[a] - 1) != 0) {
      throw std::invalid_argument("training count " + std::to_string(train[a]) + " does not nest in test count " +
                                  std::to_string(test[a]) + " on axis " + std::to_string(a + 1));
    }
  }
  std::size_t total = 1;
  for (Index c : train) total *= static_cast<std::size_t>(c);
  std::vector<std::size_t> out;
  std::vector<Index> idx(train.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < train.size(); ++a) {
      const Index stride = (test[a] - 1) / (train[a] - 1);
      flat = flat * static_cast<std::size_t>(test[a]) + static_cast<std::size_t>(idx[a] * stride);
    }
    out.push_back(flat);
    for (std::size_t a = train.size(); a-- > 0;) {
      if (++idx[a] < train[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

double relative_error(const Matrix& approx, const Matrix& reference) {
  if (approx.rows() != reference.rows() || approx.cols() != reference.cols() || reference.cols() < 2) {
    throw std::invalid_argument("relative_error: trajectories have different shapes");
  }
  const Index n = reference.cols() - 1;
  const double den = reference.rightCols(n).squaredNorm();
  const double num = (approx.rightCols(n) - reference.rightCols(n)).squaredNorm();
  if (den == 0.0) return num == 0.0 ? 0.0 : kInf;
  return std::sqrt(num / den);
}

RelativeError relative_error(const Trajectory& approx, const Trajectory& reference) {
  if (!reference.converged()) throw std::runtime_error("relative_error: reference trajectory diverged");
  if (!approx.converged() || !approx.states.allFinite()) return {kInf, true};
  return {relative_error(approx.states, reference.states), false};
}

ErrorStatistics error_statistics(std::vector<double> values, Index diverged) {
  ErrorStatistics s;
  s.count = static_cast<Index>(values.size()) + diverged;
  s.diverged = diverged;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.available = true;
  s.min = values.front();
  s.max = values.back();
  s.median = values[(values.size() - 1) / 2];
  return s;
}

ErrorStatistics error_statistics(const ErrorReport& report, Split split, Method method) {
  std::vector<double> values;
  Index diverged = 0;
  for (const auto& row : report.rows) {
    if ((split == Split::train && !row.train) || (split == Split::test && row.train)) continue;
    const auto& r = row[method];
    if (!r) continue;
    if (r->stable && std::isfinite(r->error)) {
      values.push_back(r->error);
    } else {
      ++diverged;
    }
  }
  return error_statistics(std::move(values), diverged);
}

// ---------------------------------------------------------------------------
// CSV

std::string per_parameter_csv(const ErrorReport& report, Index n_mu) {
  std::ostringstream os;
  for (Index i = 0; i < n_mu; ++i) os << "mu_" << i + 1 << ',';
  os << "split,eps_rom,eps_deim,eps_romnn,stable_rom,stable_deim,stable_romnn\n";
  for (const auto& row : report.rows) {
    for (Index i = 0; i < n_mu; ++i) os << format_double(row.mu[i]) << ',';
    os << (row.train ? "train" : "test");
    for (Method m : kAllMethods) os << ',' << (row[m] ? format_double(row[m]->error) : "");
    for (Method m : kAllMethods) os << ',' << (row[m] ? (row[m]->stable ? "1" : "0") : "");
    os << '\n';
  }
  return os.str();
}

ErrorReport parse_per_parameter_csv(const std::string& text, Index k_u) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("per-parameter CSV: missing header");
  const auto header = split_list(line);
  Index n_mu = 0;
  while (static_cast<std::size_t>(n_mu) < header.size() && header[static_cast<std::size_t>(n_mu)].rfind("mu_", 0) == 0) {
    ++n_mu;
  }
  if (header.size() != static_cast<std::size_t>(n_mu) + 7) throw std::invalid_argument("per-parameter CSV: bad header");
  ErrorReport report;
  report.k_u = k_u;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    // split_list drops a trailing empty field; pad to the header width.
    auto cells = split_list(line);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != header.size()) throw std::invalid_argument("per-parameter CSV: ragged row");
    ReportRow row;
    row.mu.resize(n_mu);
    for (Index i = 0; i < n_mu; ++i) row.mu[i] = std::stod(cells[static_cast<std::size_t>(i)]);
    const auto base = static_cast<std::size_t>(n_mu);
    row.train = cells[base] == "train";
    for (std::size_t m = 0; m < 3; ++m) {
      const auto& eps = cells[base + 1 + m];
      const auto& stable = cells[base + 4 + m];
      if (eps.empty()) continue;
      row.methods[m] = MethodResult{std::stod(eps), stable == "1"};
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string summary_csv(const ErrorReport& report) {
  std::ostringstream os;
  os << "method,split,count,diverged,min,max,median\n";
  for (Method m : kAllMethods) {
    for (Split s : {Split::train, Split::test}) {
      const auto st = error_statistics(report, s, m);
      os << to_string(m) << ',' << to_string(s) << ',' << st.count << ',' << st.diverged << ',';
      if (st.available) {
        os << format_double(st.min) << ',' << format_double(st.max) << ',' << format_double(st.median);
      } else {
        os << ",,";
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string sweep_csv(const std::vector<ErrorReport>& reports) {
  std::ostringstream os;
  os << "k_u,method,min,max,median,count,diverged\n";
  for (const auto& r : reports) {
    for (Method m : kAllMethods) {
      const auto st = error_statistics(r, Split::all, m);
      os << r.k_u << ',' << to_string(m) << ',';
      if (st.available) {
        os << format_double(st.min) << ',' << format_double(st.max) << ',' << format_double(st.median);
      } else {
        os << ",,";
      }
      os << ',' << st.count << ',' << st.diverged << '\n';
    }
  }
  return os.str();
}

void emit_report(const std::vector<ErrorReport>& reports, Problem problem, Index n_mu,
                 const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (const auto& r : reports) {
    const std::string k = std::to_string(r.k_u);
    write_text(directory / ("per_parameter_k" + k + ".csv"), per_parameter_csv(r, n_mu));
    write_text(directory / ("summary_k" + k + ".csv"), summary_csv(r));
  }
  if (problem == Problem::flame) write_text(directory / "flame_sweep.csv", sweep_csv(reports));
}

// ---------------------------------------------------------------------------
// Experiment

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.training.seed = config_.seed;
  config_.validate();
  hdm_ = config_.make_system();
  test_points_ = uniform_grid(config_.param_box(), config_.test_grid);
  train_positions_ = nested_indices(config_.train_grid, config_.test_grid);
}

std::filesystem::path Experiment::k_dir(const std::string& phase, Index k) const {
  return config_.output_dir / phase / ("k" + std::to_string(k));
}

void Experiment::write_echo() const { write_text(path("config.ini"), config_.echo()); }

namespace {

std::string fingerprint(ExperimentConfig c) {
  // Settings that cannot change any artifact.
  c.workers = 1;
  c.output_dir.clear();
  c.dump_fields = false;
  return c.echo();
}

}  // namespace

bool Experiment::phase_done(const std::string& phase) const {
  const auto marker = path("state/" + phase + ".done");
  return std::filesystem::exists(marker) && read_text(marker) == fingerprint(config_);
}

void Experiment::mark_done(const std::string& phase) const {
  write_text(path("state/" + phase + ".done"), fingerprint(config_));
}

void Experiment::hdm_sweep() {
  write_echo();
  const TimeGrid grid = config_.time_grid();
  std::vector<Trajectory> runs(test_points_.size());
  std::clog << "[hdm-sweep] " << test_points_.size() << " full-order solves, N_u = " << hdm_->dim() << "\n";
  parallel_for(test_points_.size(), config_.workers, [&](std::size_t i) {
    runs[i] = integrate(*hdm_, grid, test_points_[i], config_.integrate);
  });
  Archive ar;
  Matrix params(hdm_->param_dim(), static_cast<Index>(runs.size()));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    params.col(static_cast<Index>(i)) = test_points_[i];
    if (!runs[i].converged()) {
      std::ostringstream mu;
      for (Index a = 0; a < test_points_[i].size(); ++a) mu << (a ? ", " : "") << format_double(test_points_[i][a]);
      throw std::runtime_error("full-order solve failed at mu = (" + mu.str() + "), step " +
                               std::to_string(*runs[i].failed_step));
    }
    ar.put("states_" + std::to_string(i), runs[i].states);
  }
  ar.put("params", params);
  ar.put("dofs", std::vector<std::int64_t>{hdm_->dim()});
  ar.save(path("hdm/trajectories.bin"));
  mark_done("hdm-sweep");
}

std::vector<Trajectory> Experiment::load_hdm() const {
  const auto file = path("hdm/trajectories.bin");
  if (!std::filesystem::exists(file)) throw std::runtime_error("missing " + file.string() + "; run hdm-sweep first");
  const Archive ar = Archive::load(file);
  const Matrix& params = ar.matrix("params");
  if (params.cols() != static_cast<Index>(test_points_.size()) || params.rows() != hdm_->param_dim()) {
    throw std::runtime_error("persisted full-order runs do not match the configured test grid");
  }
  std::vector<Trajectory> runs(test_points_.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (params.col(static_cast<Index>(i)) != test_points_[i]) {
      throw std::runtime_error("persisted full-order runs were computed for different parameters");
    }
    runs[i].states = ar.matrix("states_" + std::to_string(i));
    runs[i].params = test_points_[i];
  }
  return runs;
}

SnapshotSet Experiment::training_snapshots(const std::vector<Trajectory>& hdm) const {
  std::vector<Trajectory> train;
  train.reserve(train_positions_.size());
  for (std::size_t p : train_positions_) train.push_back(hdm[p]);
  return snapshots_from_trajectories(*hdm_, config_.time_grid(), train);
}

void Experiment::build_basis() {
  write_echo();
  const SnapshotSet snaps = training_snapshots(load_hdm());
  {
    Archive ar;
    ar.put("states", snaps.states);
    ar.put("velocities", snaps.velocities);
    ar.save(path("basis/snapshots.bin"));
  }
  for (Index k : config_.k_u) {
    std::clog << "[build-basis] k_u = " << k << ", k_f = " << config_.deim_size(k) << "\n";
    const ReducedBasis basis = compute_pod_basis(snaps.states, hdm_->initial_state(), k, config_.pod_method);
    save_basis(basis, k_dir("basis", k) / "basis.bin");
    const DeimOperator op =
        build_deim_operator(basis, compute_deim_basis(snaps.velocities, config_.deim_size(k)));
    Archive ar;
    ar.put("velocity_basis", op.velocity_basis);
    ar.put("sample_indices", std::vector<std::int64_t>(op.sample_indices.begin(), op.sample_indices.end()));
    ar.put("projector", op.projector);
    ar.put_scalar("condition_number", op.condition_number);
    ar.save(k_dir("basis", k) / "deim.bin");
  }
  mark_done("build-basis");
}

namespace {

SnapshotSet load_snapshots(const std::filesystem::path& file, const std::vector<Vector>& train_params,
                           const TimeGrid& grid) {
  if (!std::filesystem::exists(file)) throw std::runtime_error("missing " + file.string() + "; run build-basis first");
  const Archive ar = Archive::load(file);
  SnapshotSet s;
  s.states = ar.matrix("states");
  s.velocities = ar.matrix("velocities");
  s.params = train_params;
  for (Index n = 1; n <= grid.steps(); ++n) s.times.push_back(grid[n]);
  return s;
}

DeimOperator load_deim(const std::filesystem::path& file) {
  const Archive ar = Archive::load(file);
  DeimOperator op;
  op.velocity_basis = ar.matrix("velocity_basis");
  const auto& idx = ar.integers("sample_indices");
  op.sample_indices.assign(idx.begin(), idx.end());
  op.projector = ar.matrix("projector");
  op.condition_number = ar.scalar("condition_number");
  return op;
}

}  // namespace

void Experiment::train_networks() {
  write_echo();
  std::vector<Vector> train_params;
  for (std::size_t p : train_positions_) train_params.push_back(test_points_[p]);
  const SnapshotSet snaps = load_snapshots(path("basis/snapshots.bin"), train_params, config_.time_grid());
  for (Index k : config_.k_u) {
    const ReducedBasis basis = load_basis(k_dir("basis", k) / "basis.bin");
    const RomNnTrainingSet data = build_training_data(snaps, basis, config_.target_source, hdm_.get());
    std::clog << "[train-nn] k_u = " << k << ", " << data.samples() << " samples\n";
    const auto result = train_romnn(data, *hdm_, basis, config_.hidden_widths, config_.training);
    std::clog << "[train-nn] k_u = " << k << ": best epoch " << result.best_epoch << " of "
              << result.log.back().epoch << "\n";
    result.system->save(k_dir("romnn", k));
    nn::write_training_log(k_dir("romnn", k) / "training_log.csv", result.log);
  }
  mark_done("train-nn");
}

void Experiment::evaluate(const std::vector<Method>& methods) {
  write_echo();
  const std::vector<Trajectory> reference = load_hdm();
  const TimeGrid grid = config_.time_grid();
  std::size_t centre = 0;
  {
    const ParamBox& box = config_.param_box();
    double best = kInf;
    for (std::size_t i = 0; i < test_points_.size(); ++i) {
      double d = 0.0;
      for (Index a = 0; a < box.dim(); ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double s = (test_points_[i][a] - 0.5 * (box.lower[ua] + box.upper[ua])) / (box.upper[ua] - box.lower[ua]);
        d += s * s;
      }
      if (d < best) best = d, centre = i;
    }
  }

  for (Index k : config_.k_u) {
    const ReducedBasis basis = load_basis(k_dir("basis", k) / "basis.bin");
    for (Method m : methods) {
      std::shared_ptr<const DynamicalSystem> rom;
      if (m == Method::rom) {
        rom = build_rom(hdm_, basis);
      } else if (m == Method::deim) {
        rom = std::make_shared<DeimRom>(hdm_, basis, load_deim(k_dir("basis", k) / "deim.bin"));
      } else {
        rom = RomNnSystem::load(k_dir("romnn", k));
      }
      const long vel_before = hdm_->velocity_evaluations();
      const long jac_before = hdm_->jacobian_evaluations();
      std::vector<Trajectory> runs(test_points_.size());
      parallel_for(runs.size(), config_.workers, [&](std::size_t i) {
        runs[i] = integrate(*rom, grid, test_points_[i], config_.integrate);
      });
      const long vel_calls = hdm_->velocity_evaluations() - vel_before;
      const long jac_calls = hdm_->jacobian_evaluations() - jac_before;

      Vector errors(static_cast<Index>(runs.size()));
      std::vector<std::int64_t> stable(runs.size());
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const RelativeError e = relative_error(reconstructed(runs[i], basis), reference[i]);
        errors[static_cast<Index>(i)] = e.value;
        stable[i] = e.diverged ? 0 : 1;
      }
      const auto n_stable = std::count(stable.begin(), stable.end(), 1);
      std::clog << "[evaluate] k_u = " << k << ", " << to_string(m) << ": " << n_stable << "/" << runs.size()
                << " stable\n";
      Archive ar;
      ar.put("errors", errors);
      ar.put("stable", stable);
      ar.put("hdm_calls", std::vector<std::int64_t>{vel_calls, jac_calls});
      ar.save(k_dir("eval", k) / (to_string(m) + ".bin"));

      if (config_.dump_fields) {
        const Trajectory& run = runs[centre];
        std::ostringstream os;
        os << "dof,hdm," << to_string(m) << "\n";
        const Vector& ref = reference[centre].states.col(grid.steps());
        const bool ok = run.converged();
        const Vector approx = ok ? basis.reconstruct(Vector(run.states.col(grid.steps()))) : Vector();
        for (Index r = 0; r < ref.size(); ++r) {
          os << r << ',' << format_double(ref[r]) << ',' << (ok ? format_double(approx[r]) : "") << '\n';
        }
        write_text(k_dir("eval", k) / ("final_field_" + to_string(m) + ".csv"), os.str());
      }
    }
  }
  if (methods.size() == kAllMethods.size()) mark_done("evaluate");
}

long Experiment::hdm_calls_during_romnn() const {
  long total = 0;
  for (Index k : config_.k_u) {
    const auto file = k_dir("eval", k) / "romnn.bin";
    if (!std::filesystem::exists(file)) continue;
    const Archive ar = Archive::load(file);
    const auto& calls = ar.integers("hdm_calls");
    total += static_cast<long>(calls.at(0) + calls.at(1));
  }
  return total;
}

std::vector<ErrorReport> Experiment::report() {
  write_echo();
  std::vector<ErrorReport> reports;
  std::vector<bool> is_train(test_points_.size(), false);
  for (std::size_t p : train_positions_) is_train[p] = true;
  for (Index k : config_.k_u) {
    ErrorReport r;
    r.k_u = k;
    r.rows.resize(test_points_.size());
    for (std::size_t i = 0; i < test_points_.size(); ++i) {
      r.rows[i].mu = test_points_[i];
      r.rows[i].train = is_train[i];
    }
    for (Method m : kAllMethods) {
      const auto file = k_dir("eval", k) / (to_string(m) + ".bin");
      if (!std::filesystem::exists(file)) continue;
      const Archive ar = Archive::load(file);
      const Vector errors = ar.vector("errors");
      const auto& stable = ar.integers("stable");
      if (errors.size() != static_cast<Index>(test_points_.size())) {
        throw std::runtime_error(file.string() + " does not match the test grid");
      }
      for (std::size_t i = 0; i < test_points_.size(); ++i) {
        r.rows[i][m] = MethodResult{errors[static_cast<Index>(i)], stable[i] == 1};
      }
    }
    reports.push_back(std::move(r));
  }
  emit_report(reports, config_.problem, hdm_->param_dim(), path("report"));
  mark_done("report");
  return reports;
}

std::vector<ErrorReport> Experiment::full_run() {
  // A rerun phase invalidates everything downstream of it.
  bool stale = !phase_done("hdm-sweep");
  if (stale) hdm_sweep();
  stale = stale || !phase_done("build-basis");
  if (stale) build_basis();
  stale = stale || !phase_done("train-nn");
  if (stale) train_networks();
  stale = stale || !phase_done("evaluate");
  if (stale) evaluate();
  return report();
}

}  // namespace romnn
