// romnn-bench: parameter sweeps comparing Galerkin ROM, DEIM and ROM-NN
// against the full-order model.

#include "romnn/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>

namespace {

struct Options {
  std::string config;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string k_u;
  std::string method = "all";
  std::string problem;
  bool small = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Key-value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--problem", o.problem, "burgers or flame (overrides the config)");
  cmd->add_option("--workers", o.workers, "Worker threads for parameter-level parallelism")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Seed for network initialization and shuffling");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--k-u", o.k_u, "Comma-separated reduced dimensions, e.g. 80,120");
  cmd->add_option("--method", o.method, "rom, deim, romnn or all (evaluate only)")
      ->check(CLI::IsMember({"rom", "deim", "romnn", "all"}));
  cmd->add_flag("--small", o.small, "Reduced flame setup (20x10 grid, 5x5 test grid)");
}

romnn::ExperimentConfig resolve(const Options& o) {
  romnn::KeyValueConfig kv =
      o.config.empty() ? romnn::KeyValueConfig::parse("", "<defaults>") : romnn::KeyValueConfig::load(o.config);
  if (!o.problem.empty()) kv.set("experiment.problem", o.problem);
  romnn::ExperimentConfig c = romnn::ExperimentConfig::from(kv);
  if (o.workers) c.workers = *o.workers;
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.k_u.empty()) {
    const auto ks = romnn::parse_int_list(o.k_u);
    c.k_u.assign(ks.begin(), ks.end());
  }
  if (o.small) c.apply_small();
  return c;
}

void print_summary(const std::vector<romnn::ErrorReport>& reports) {
  for (const auto& r : reports) {
    std::cout << "k_u = " << r.k_u << "\n";
    for (romnn::Method m : romnn::kAllMethods) {
      for (romnn::Split s : {romnn::Split::train, romnn::Split::test}) {
        const auto st = romnn::error_statistics(r, s, m);
        if (st.count == 0) continue;
        std::cout << "  " << romnn::to_string(m) << " " << romnn::to_string(s) << ": ";
        if (st.available) {
          std::cout << "min " << st.min << "  median " << st.median << "  max " << st.max;
        } else {
          std::cout << "unavailable";
        }
        std::cout << "  (" << st.diverged << "/" << st.count << " diverged)\n";
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order model benchmark driver"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"hdm-sweep", "Solve the full-order model on the test grid"},
      {"build-basis", "Compute POD and DEIM bases from the training runs"},
      {"train-nn", "Train the ROM-NN velocity network for each k_u"},
      {"evaluate", "Integrate the reduced models and measure errors"},
      {"report", "Write per-parameter, summary and sweep CSV files"},
      {"full-run", "Run every phase, resuming from completed ones"},
      {"echo-config", "Print the resolved configuration"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const romnn::ExperimentConfig config = resolve(o);
    if (cmd == "echo-config") {
      std::cout << config.echo();
      return 0;
    }
    romnn::Experiment exp(config);
    if (cmd == "hdm-sweep") {
      exp.hdm_sweep();
    } else if (cmd == "build-basis") {
      exp.build_basis();
    } else if (cmd == "train-nn") {
      exp.train_networks();
    } else if (cmd == "evaluate") {
      std::vector<romnn::Method> methods(romnn::kAllMethods.begin(), romnn::kAllMethods.end());
      if (o.method != "all") methods = {romnn::parse_method(o.method)};
      exp.evaluate(methods);
    } else if (cmd == "report") {
      print_summary(exp.report());
    } else if (cmd == "full-run") {
      print_summary(exp.full_run());
      std::cout << "full-order calls during ROM-NN integration: " << exp.hdm_calls_during_romnn() << "\n";
    }
  } catch (const std::exception& e) {
    nlohmann::json line{{"status", "error"}, {"command", cmd}, {"message", e.what()}};
    std::cerr << line.dump() << std::endl;
    return 1;
  }
  return 0;
}
