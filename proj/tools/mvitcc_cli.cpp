// mvitcc: command-line front end for multi-view information-theoretic
// co-clustering.
//
//   mvitcc fit    --manifest data/manifest.json --k 4 --out result/
//   mvitcc eval   --pred result/row_assignments.csv --labels data/labels.txt
//   mvitcc gen    --samples 200 --row-clusters 4 --view 120,6,0.05,200000 --out data/
//   mvitcc sweep  --manifest data/manifest.json --k 4 --out sweep/
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible configuration.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvitcc/io.hpp"
#include "mvitcc/metrics.hpp"
#include "mvitcc/oracle.hpp"
#include "mvitcc/solver.hpp"
#include "mvitcc/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInfeasible = 3;
constexpr std::size_t kDefaultFeatureClusters = 20;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitFlags {
  std::string manifest;
  std::size_t k = 0;
  std::vector<std::size_t> l;
  double lambda = 1.0;
  double epsilon = 1e-6;
  int max_iter = 20;
  std::uint64_t seed = 0;
  int restarts = 1;
  double alpha = 0.0;
  int threads = 0;
  std::string out;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--manifest", f.manifest, "Dataset manifest (JSON)")->required();
  cmd->add_option("--k", f.k, "Number of sample clusters")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--l", f.l, "Feature clusters per view (one value or one per view)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", f.lambda, "Weight-entropy regularization (> 0)")
      ->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "Relative convergence threshold")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iter", f.max_iter, "Iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  cmd->add_option("--restarts", f.restarts, "Independent restarts")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", f.alpha, "Additive smoothing before normalization")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output directory")->required();
}

mvitcc::SolverConfig resolve_config(const FitFlags& f, const mvitcc::LoadedDataset& data) {
  if (!(f.lambda > 0.0) || !std::isfinite(f.lambda)) throw UsageError("--lambda must be > 0");
  mvitcc::SolverConfig config;
  config.k = f.k;
  config.lambda = f.lambda;
  config.epsilon = f.epsilon;
  config.max_iter = f.max_iter;
  config.seed = f.seed;
  config.restarts = f.restarts;
  config.alpha = f.alpha;
  config.threads = f.threads;
  const std::size_t views = data.views.size();
  if (f.l.empty()) {
    for (const auto& v : data.manifest.views) {
      config.l.push_back(v.feature_cluster_count.value_or(kDefaultFeatureClusters));
    }
  } else if (f.l.size() == 1) {
    config.l.assign(views, f.l.front());
  } else if (f.l.size() == views) {
    config.l = f.l;
  } else {
    throw UsageError("--l lists " + std::to_string(f.l.size()) + " values for " +
                     std::to_string(views) + " views");
  }
  return config;
}

void print_config(const mvitcc::SolverConfig& c, const std::string& manifest) {
  nlohmann::ordered_json j;
  j["manifest"] = manifest;
  j["k"] = c.k;
  j["l"] = c.l;
  j["lambda"] = c.lambda;
  j["epsilon"] = c.epsilon;
  j["max_iter"] = c.max_iter;
  j["seed"] = c.seed;
  j["restarts"] = c.restarts;
  j["alpha"] = c.alpha;
  j["threads"] = c.threads;
  std::cout << "config: " << j.dump() << "\n";
}

std::optional<std::span<const std::uint32_t>> label_span(const mvitcc::LoadedDataset& data) {
  if (!data.labels) return std::nullopt;
  return std::span<const std::uint32_t>(*data.labels);
}

int cmd_fit(const FitFlags& f) {
  const auto data = mvitcc::read_manifest(f.manifest);
  const auto config = resolve_config(f, data);
  print_config(config, f.manifest);
  const auto result =
      mvitcc::fit(config, std::span<const mvitcc::ViewMatrix>(data.views), label_span(data));
  mvitcc::write_fit_result(result, f.out);
  std::cout << "objective: " << mvitcc::format_double(result.objective)
            << "  iterations: " << result.iterations
            << "  converged: " << (result.converged ? "true" : "false") << "\n";
  if (result.metrics) {
    std::cout << "purity: " << mvitcc::format_double(result.metrics->purity)
              << "  nmi: " << mvitcc::format_double(result.metrics->nmi)
              << "  rand_index: " << mvitcc::format_double(result.metrics->rand_index) << "\n";
  }
  return kExitOk;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int e = -6; e <= 6; ++e) grid.push_back(std::ldexp(1.0, e));
  return grid;
}

int cmd_sweep(const FitFlags& f, const std::vector<double>& grid) {
  for (const double lambda : grid) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw UsageError("grid values must be > 0");
  }
  const auto data = mvitcc::read_manifest(f.manifest);
  auto config = resolve_config(f, data);
  print_config(config, f.manifest);

  std::vector<mvitcc::ViewJoint> views;
  for (const auto& m : data.views) views.push_back(mvitcc::normalize(m, config.alpha));

  std::vector<mvitcc::SweepRow> rows;
  for (const double lambda : grid) {
    config.lambda = lambda;
    const auto result =
        mvitcc::fit(config, std::span<const mvitcc::ViewJoint>(views), label_span(data));
    mvitcc::SweepRow row;
    row.lambda = lambda;
    row.weights.assign(result.state.weights.values().begin(), result.state.weights.values().end());
    row.objective = result.objective;
    row.losses = result.state.losses;
    row.metrics = result.metrics;
    rows.push_back(std::move(row));
  }
  std::error_code ec;
  fs::create_directories(f.out, ec);
  if (ec) throw mvitcc::Error(mvitcc::ErrorKind::kIo, "cannot create " + f.out);
  mvitcc::write_sweep(rows, fs::path(f.out) / "sweep.csv");
  std::cout << "wrote " << rows.size() << " rows to " << (fs::path(f.out) / "sweep.csv").string()
            << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& labels_path,
             const std::string& out) {
  const auto pred = mvitcc::read_predictions(pred_path);
  const auto truth = mvitcc::read_labels(labels_path, pred.size());
  const auto report = mvitcc::evaluate(pred, truth);
  std::cout << "purity: " << mvitcc::format_double(report.purity) << "\n"
            << "nmi: " << mvitcc::format_double(report.nmi) << "\n"
            << "rand_index: " << mvitcc::format_double(report.rand_index) << "\n";
  if (!out.empty()) mvitcc::write_metric_report(report, out);
  return kExitOk;
}

mvitcc::SynthViewSpec parse_view_spec(const std::string& text) {
  std::vector<std::string> fields;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (fields.size() != 4) throw UsageError("--view expects M,L,ETA,T, got '" + text + "'");
  mvitcc::SynthViewSpec v;
  try {
    std::size_t pos = 0;
    const auto whole = [&](const std::string& s) {
      if (pos != s.size()) throw std::invalid_argument(s);
    };
    v.n_features = std::stoull(fields[0], &pos);
    whole(fields[0]);
    v.feature_clusters = std::stoull(fields[1], &pos);
    whole(fields[1]);
    v.noise = std::stod(fields[2], &pos);
    whole(fields[2]);
    v.total_count = std::stoull(fields[3], &pos);
    whole(fields[3]);
  } catch (const std::exception&) {
    throw UsageError("--view expects M,L,ETA,T, got '" + text + "'");
  }
  return v;
}

int cmd_gen(std::size_t samples, std::size_t row_clusters, const std::vector<std::string>& view_specs,
            std::uint64_t seed, const std::string& out) {
  mvitcc::SynthSpec spec;
  spec.n_samples = samples;
  spec.row_clusters = row_clusters;
  spec.seed = seed;
  for (const auto& v : view_specs) spec.views.push_back(parse_view_spec(v));
  const auto data = mvitcc::generate(spec);

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw mvitcc::Error(mvitcc::ErrorKind::kIo, "cannot create " + out);
  const fs::path dir(out);
  mvitcc::DatasetManifest manifest;
  manifest.name = "synthetic";
  manifest.n_samples = samples;
  manifest.labels_path = "labels.txt";
  for (std::size_t i = 0; i < data.views.size(); ++i) {
    const std::string matrix = "view_" + std::to_string(i) + ".mtx";
    mvitcc::write_view_matrix(dir / matrix, data.views[i]);
    mvitcc::write_labels(dir / ("col_labels_" + std::to_string(i) + ".txt"),
                         data.column_labels[i]);
    manifest.views.push_back({matrix, spec.views[i].feature_clusters});
  }
  mvitcc::write_labels(dir / "labels.txt", data.row_labels);
  mvitcc::write_manifest(dir / "manifest.json", manifest);
  std::cout << "config: {\"samples\":" << samples << ",\"row_clusters\":" << row_clusters
            << ",\"views\":" << view_specs.size() << ",\"seed\":" << seed << "}\n"
            << "wrote " << data.views.size() << " views to " << out << "\n";
  return kExitOk;
}

int cmd_oracle(const std::string& manifest_path, std::size_t k, std::vector<std::size_t> l,
               double lambda, double alpha, int threads) {
  if (!(lambda > 0.0)) throw UsageError("--lambda must be > 0");
  const auto data = mvitcc::read_manifest(manifest_path);
  if (l.size() == 1) l.assign(data.views.size(), l.front());
  if (l.size() != data.views.size()) throw UsageError("--l must give one value per view");
  std::vector<mvitcc::ViewJoint> views;
  for (const auto& m : data.views) views.push_back(mvitcc::normalize(m, alpha));
  const auto r = mvitcc::exhaustive_min(views, k, l, lambda, threads);
  nlohmann::ordered_json j;
  j["global_min_J"] = r.global_min_J;
  j["rows"] = std::vector<std::uint32_t>(r.rows.labels().begin(), r.rows.labels().end());
  j["cols"] = nlohmann::ordered_json::array();
  for (const auto& c : r.cols) {
    j["cols"].push_back(std::vector<std::uint32_t>(c.labels().begin(), c.labels().end()));
  }
  j["weights"] = std::vector<double>(r.weights.values().begin(), r.weights.values().end());
  j["losses"] = r.losses;
  j["optimum_count"] = r.optimum_count;
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int exit_code_for(mvitcc::ErrorKind kind) {
  return kind == mvitcc::ErrorKind::kInfeasible ? kExitInfeasible : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view information-theoretic co-clustering"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a co-clustering to a manifest dataset");
  add_fit_flags(fit_cmd, fit_flags);

  FitFlags sweep_flags;
  std::vector<double> grid = default_lambda_grid();
  auto* sweep_cmd = app.add_subcommand("sweep", "Fit once per lambda and tabulate the weights");
  add_fit_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--lambda-grid", grid, "Comma-separated lambda values")
      ->delimiter(',');

  std::string pred_path, labels_path, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted clusters against labels");
  eval_cmd->add_option("--pred", pred_path, "Predicted labels or row_assignments.csv")->required();
  eval_cmd->add_option("--labels", labels_path, "True labels, one per line")->required();
  eval_cmd->add_option("--out", eval_out, "Optional JSON report path");

  std::size_t samples = 0, row_clusters = 0;
  std::vector<std::string> view_specs;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a planted multi-view dataset");
  gen_cmd->add_option("--samples", samples, "Number of samples")->required();
  gen_cmd->add_option("--row-clusters", row_clusters, "Planted sample clusters")->required();
  gen_cmd->add_option("--view", view_specs, "M,L,ETA,T for one view (repeatable)")
      ->required()
      ->take_all();
  gen_cmd->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();

  std::string oracle_manifest;
  std::size_t oracle_k = 0;
  std::vector<std::size_t> oracle_l;
  double oracle_lambda = 1.0, oracle_alpha = 0.0;
  int oracle_threads = 0;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive global minimum (tiny inputs)");
  oracle_cmd->group("");
  oracle_cmd->add_option("--manifest", oracle_manifest)->required();
  oracle_cmd->add_option("--k", oracle_k)->required()->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--l", oracle_l)->required()->delimiter(',')->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--lambda", oracle_lambda);
  oracle_cmd->add_option("--alpha", oracle_alpha)->check(CLI::NonNegativeNumber);
  oracle_cmd->add_option("--threads", oracle_threads)->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_flags);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, grid);
    if (*eval_cmd) return cmd_eval(pred_path, labels_path, eval_out);
    if (*gen_cmd) return cmd_gen(samples, row_clusters, view_specs, gen_seed, gen_out);
    if (*oracle_cmd) {
      return cmd_oracle(oracle_manifest, oracle_k, oracle_l, oracle_lambda, oracle_alpha,
                        oracle_threads);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mvitcc::Error& e) {
    std::cerr << mvitcc::to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  }
  return kExitUsage;
}
