#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradshare/harness/ensemble.hpp"
#include "gradshare/harness/experiment_config.hpp"
#include "gradshare/harness/metrics.hpp"
#include "gradshare/harness/oracle_cases.hpp"
#include "gradshare/harness/plots.hpp"
#include "gradshare/harness/run.hpp"
#include "gradshare/harness/speedup.hpp"
#include "gradshare/meta/checkpoint.hpp"
#include "gradshare/tasks/episodes.hpp"
#include "json.hpp"

namespace {

using namespace gradshare;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kNumerical = 2;

std::string run_id(const std::string& dir) {
  auto p = std::filesystem::path(dir).lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

nlohmann::json summary_json(const meta::EvalSummary& s, std::size_t members) {
  nlohmann::json j;
  j["tasks"] = s.loss.count;
  j["members"] = members;
  j["loss_mean"] = s.loss.mean;
  j["loss_ci95"] = s.loss.half_width;
  if (s.classification) {
    j["accuracy_mean"] = s.accuracy.mean;
    j["accuracy_ci95"] = s.accuracy.half_width;
  } else {
    j["accuracy_mean"] = nullptr;
    j["accuracy_ci95"] = nullptr;
  }
  return j;
}

int meta_train_cmd(const std::string& config_path, std::uint64_t seed, const std::string& out) {
  const auto config = harness::load_experiment_config(config_path);
  const auto outcome = harness::run_experiment(config, seed, out, &std::cerr);
  if (outcome.exit_code != 0) return kNumerical;
  std::cout << "completed " << outcome.history.size() << " epochs into " << out << '\n';
  return kOk;
}

int meta_test_cmd(const std::string& checkpoint, const std::string& episodes, const std::string& ensemble_dir,
                  std::optional<std::size_t> top) {
  const auto tasks = tasks::read_episodes(episodes);
  std::vector<meta::Checkpoint> members;
  if (!ensemble_dir.empty()) {
    std::size_t n = 5;
    if (top) {
      n = *top;
    } else if (!checkpoint.empty()) {
      n = meta::read_checkpoint(checkpoint).config.top_n;
    }
    members = harness::load_top_checkpoints(ensemble_dir, n);
  } else if (!checkpoint.empty()) {
    members.push_back(meta::read_checkpoint(checkpoint));
  } else {
    throw std::invalid_argument("meta-test needs --checkpoint or --ensemble");
  }
  const auto summary = members.size() == 1 ? meta::meta_test(members.front(), tasks)
                                           : harness::ensemble_evaluate(members, tasks);
  auto j = summary_json(summary, members.size());
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& m : members) epochs.push_back(m.epoch);
  j["member_epochs"] = epochs;
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int compare_cmd(const std::string& baseline, const std::string& gradshare, const std::string& out) {
  const auto a = harness::read_metrics(harness::RunPaths{baseline}.metrics());
  const auto b = harness::read_metrics(harness::RunPaths{gradshare}.metrics());
  const auto c = harness::compute_speedup(a.records, b.records, run_id(baseline), run_id(gradshare));
  const auto text = harness::format_comparison(c);
  std::cout << text << '\n';
  if (!out.empty()) std::ofstream(out, std::ios::binary) << text << '\n';
  return kOk;
}

int plot_cmd(const std::vector<std::string>& runs, const std::string& out) {
  std::vector<harness::RunSeries> series;
  for (const auto& dir : runs) {
    series.push_back({run_id(dir), harness::read_metrics(harness::RunPaths{dir}.metrics()).records});
  }
  const auto report = harness::emit_plots(series, out);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : report.files) std::cout << f << '\n';
  return kOk;
}

int oracle_cmd(const std::string& name, std::optional<double> tol) {
  const auto r = harness::run_oracle_case(name, tol);
  std::printf("%s %s  max error %.3e  tolerance %.1e  (%.2f s)\n  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
              r.max_error, r.tolerance, r.seconds, r.detail.c_str());
  return r.passed ? kOk : kInvalid;
}

int make_episodes_cmd(const std::string& dist_name, std::size_t count, std::uint64_t seed, const std::string& out,
                      const std::string& config_path) {
  const auto colon = dist_name.find(':');
  const auto family = tasks::parse_family(dist_name.substr(0, colon));
  const auto split =
      colon == std::string::npos ? tasks::Split::MetaTest : tasks::parse_split(dist_name.substr(colon + 1));
  auto config = config_path.empty() ? harness::desk_defaults(family) : harness::load_experiment_config(config_path);
  if (config.tasks.family != family) throw std::invalid_argument("--dist family differs from the config's family");
  const auto dist = config.split(split);
  dist.validate();
  const auto episodes = tasks::sample_batch(dist, count, seed);
  tasks::write_episodes(out, episodes);
  std::cout << "wrote " << episodes.size() << " " << tasks::to_string(split) << " episodes to " << out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradshare: gradient-sharing meta-learning experiments"};
  app.require_subcommand(1);

  std::string config, out, checkpoint, episodes, ensemble, baseline, gradshare, name, dist, dist_config;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::optional<std::size_t> top;
  std::optional<double> tol;
  std::vector<std::string> runs;

  auto* train = app.add_subcommand("meta-train", "run meta-training from a config file");
  train->add_option("--config", config, "experiment config (key = value)")->required();
  train->add_option("--seed", seed, "run seed")->required();
  train->add_option("--out", out, "run directory")->required();

  auto* test = app.add_subcommand("meta-test", "evaluate a checkpoint or a top-N ensemble on an episode file");
  test->add_option("--checkpoint", checkpoint, "checkpoint file");
  test->add_option("--episodes", episodes, "episode file")->required();
  test->add_option("--ensemble", ensemble, "directory of checkpoints to ensemble");
  test->add_option("--top", top, "ensemble size (default: the checkpoint's top_n, else 5)");

  auto* compare = app.add_subcommand("compare", "speed-up of a grad-share run over a baseline run");
  compare->add_option("--baseline", baseline, "baseline run directory")->required();
  compare->add_option("--gradshare", gradshare, "grad-share run directory")->required();
  compare->add_option("--out", out, "also write the report to this file");

  auto* plot = app.add_subcommand("plot", "CSV and SVG curves of one or more runs");
  plot->add_option("--runs", runs, "run directories")->required()->expected(1, -1);
  plot->add_option("--out", out, "output directory")->required();

  auto* oracle_check = app.add_subcommand("oracle-check", "run a verification case");
  oracle_check->add_option("--case", name, "case name")->required();
  oracle_check->add_option("--tol", tol, "tolerance (default: the case's own)");

  auto* make = app.add_subcommand("make-episodes", "sample a fixed episode file");
  make->add_option("--dist", dist, "family[:split], e.g. gaussian-classes:meta-test")->required();
  make->add_option("--count", count, "number of episodes")->required();
  make->add_option("--seed", seed, "sampling seed")->required();
  make->add_option("--out", out, "output file")->required();
  make->add_option("--config", dist_config, "experiment config supplying the family parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*train) return meta_train_cmd(config, seed, out);
    if (*test) return meta_test_cmd(checkpoint, episodes, ensemble, top);
    if (*compare) return compare_cmd(baseline, gradshare, out);
    if (*plot) return plot_cmd(runs, out);
    if (*oracle_check) return oracle_cmd(name, tol);
    if (*make) return make_episodes_cmd(dist, count, seed, out, dist_config);
  } catch (const meta::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kNumerical;
  } catch (const meta::NumericalError& e) {
    std::cerr << "numerical error in " << e.name() << ": " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
