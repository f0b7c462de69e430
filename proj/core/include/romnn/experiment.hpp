#pragma once

#include "romnn/burgers.hpp"
#include "romnn/config.hpp"
#include "romnn/dynsys.hpp"
#include "romnn/flame.hpp"
#include "romnn/neuralnet.hpp"
#include "romnn/pod.hpp"
#include "romnn/romnn.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace romnn {

enum class Problem { burgers, flame };
enum class Method { rom = 0, deim = 1, romnn = 2 };
inline constexpr std::array<Method, 3> kAllMethods{Method::rom, Method::deim, Method::romnn};

std::string to_string(Problem p);
std::string to_string(Method m);
Method parse_method(const std::string& text);

struct ExperimentConfig {
  Problem problem = Problem::burgers;
  std::vector<Index> train_grid{2, 2, 2};
  std::vector<Index> test_grid{5, 5, 5};
  std::vector<Index> k_u{8};
  /// DEIM velocity-basis size; k_f = k_u when unset.
  std::optional<Index> k_f;
  std::vector<Index> hidden_widths{80, 120, 240, 480, 240, 120, 80};
  nn::TrainingConfig training;
  TargetSource target_source = TargetSource::stored_velocity;
  PodMethod pod_method = PodMethod::automatic;
  IntegrateOptions integrate;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "romnn-out";
  int workers = 1;
  bool dump_fields = false;
  bool small = false;
  BurgersConfig burgers;
  FlameConfig flame;

  /// Problem defaults: Burgers 2x2x2 / 5x5x5 with k_u = 8; flame 4x4 / 7x7
  /// with k_u in {80, 120, 160, 200}.
  static ExperimentConfig defaults(Problem problem);
  /// Reads every recognised key; throws on unknown keys or invalid values.
  static ExperimentConfig from(const KeyValueConfig& kv);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Reduced flame setup for CI: 20 x 10 grid, 3 x 3 training and 5 x 5 test
  /// grid. The default k_u sweep becomes {20, 40, 60, 80}, which stays below
  /// the snapshot rank of the smaller grid; an explicit k_u list is kept.
  /// No effect on Burgers.
  void apply_small();
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  /// All settings, defaults included, in the key-value format.
  std::string echo() const;

  Index deim_size(Index k) const { return k_f.value_or(k); }
  const ParamBox& param_box() const;
  std::shared_ptr<DynamicalSystem> make_system() const;
  TimeGrid time_grid() const;
};

/// Tensor-product grid including the endpoints of every axis, lexicographic
/// with the last parameter varying fastest.
std::vector<Vector> uniform_grid(const ParamBox& box, const std::vector<Index>& counts);

/// Positions of `train` points within the `test` grid (both from uniform_grid
/// over the same box). Throws std::invalid_argument unless each training axis
/// count nests in the test count, i.e. (test - 1) % (train - 1) == 0.
std::vector<std::size_t> nested_indices(const std::vector<Index>& train, const std::vector<Index>& test);

struct RelativeError {
  double value = 0.0;
  bool diverged = false;
};

/// sqrt(sum_i ||v_i - u_i||^2 / sum_i ||u_i||^2) over t_1 .. t_N. A diverged
/// approximation gives +inf with the flag set. Throws std::runtime_error if
/// the reference diverged and std::invalid_argument on shape mismatch.
RelativeError relative_error(const Trajectory& approx, const Trajectory& reference);

/// Same metric on full-order state matrices (columns t_0 .. t_N).
double relative_error(const Matrix& approx_states, const Matrix& reference_states);

struct MethodResult {
  double error = 0.0;
  bool stable = true;
};

struct ReportRow {
  Vector mu;
  bool train = false;
  std::array<std::optional<MethodResult>, 3> methods;

  const std::optional<MethodResult>& operator[](Method m) const { return methods[static_cast<std::size_t>(m)]; }
  std::optional<MethodResult>& operator[](Method m) { return methods[static_cast<std::size_t>(m)]; }
};

struct ErrorReport {
  Index k_u = 0;
  std::vector<ReportRow> rows;
};

enum class Split { train, test, all };
std::string to_string(Split s);

struct ErrorStatistics {
  Index count = 0;     // rows of the split evaluated for the method
  Index diverged = 0;  // of which unstable
  bool available = false;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;  // lower-middle element for even counts
};

ErrorStatistics error_statistics(const ErrorReport& report, Split split, Method method);
/// Order statistics of arbitrary values, lower-middle median.
ErrorStatistics error_statistics(std::vector<double> values, Index diverged = 0);

/// Exact decimal rendering used in every emitted file ("%.17g", "inf").
std::string format_double(double value);

std::string per_parameter_csv(const ErrorReport& report, Index n_mu);
ErrorReport parse_per_parameter_csv(const std::string& text, Index k_u = 0);
std::string summary_csv(const ErrorReport& report);
std::string sweep_csv(const std::vector<ErrorReport>& reports);

/// Writes per_parameter_k<k>.csv and summary_k<k>.csv for every report, plus
/// flame_sweep.csv for the flame problem, into `directory`.
void emit_report(const std::vector<ErrorReport>& reports, Problem problem, Index n_mu,
                 const std::filesystem::path& directory);

/// Persistent, resumable experiment driver. Each phase reads its inputs from
/// and writes its outputs to the output directory:
///
///   hdm-sweep    hdm/trajectories.bin            HDM solves on the test grid
///   build-basis  basis/k<k>/{basis,deim}.bin     POD and DEIM from training runs
///   train-nn     romnn/k<k>/...                  ROM-NN fit and training log
///   evaluate     eval/k<k>/<method>.bin          reduced solves and errors
///   report       report/*.csv                    CSV tables
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const DynamicalSystem& hdm() const { return *hdm_; }
  const std::vector<Vector>& test_points() const { return test_points_; }
  const std::vector<std::size_t>& train_positions() const { return train_positions_; }

  void hdm_sweep();
  void build_basis();
  void train_networks();
  void evaluate(const std::vector<Method>& methods = {kAllMethods.begin(), kAllMethods.end()});
  std::vector<ErrorReport> report();
  /// Runs all phases, skipping those already completed with the same settings.
  std::vector<ErrorReport> full_run();

  /// Full-order velocity evaluations observed while ROM-NN trajectories were
  /// integrated, summed over k_u (read back from the evaluate artifacts).
  long hdm_calls_during_romnn() const;

  std::filesystem::path path(const std::string& relative) const { return config_.output_dir / relative; }

 private:
  void write_echo() const;
  bool phase_done(const std::string& phase) const;
  void mark_done(const std::string& phase) const;
  std::vector<Trajectory> load_hdm() const;
  SnapshotSet training_snapshots(const std::vector<Trajectory>& hdm) const;
  std::filesystem::path k_dir(const std::string& phase, Index k) const;

  ExperimentConfig config_;
  std::shared_ptr<DynamicalSystem> hdm_;
  std::vector<Vector> test_points_;
  std::vector<std::size_t> train_positions_;
};

}  // namespace romnn
