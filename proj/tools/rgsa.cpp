// rgsa: batch front end.
//
//   rgsa analyze --model ishigami --measures data/ishigami_measures.json --prior --out results
//   rgsa sample  --model ishigami --measures data/ishigami_measures.json --measure mu1 --n 10000 --out mu1.csv
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// failure, 5 prior required, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "rgsa/report.hpp"

namespace {

enum ExitCode : int { ok = 0, unexpected = 1, config = 2, data = 3, numeric = 4, prior_required = 5 };

int run_analyze(const rgsa::AnalysisConfig& cfg, const std::string& out_dir) {
  const auto report = rgsa::run_analysis(cfg);
  const auto text = rgsa::dump_report(report);
  for (const auto& w : report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
  if (out_dir.empty()) {
    std::cout << text;
    return ok;
  }
  const auto emitted = rgsa::emit_plot_data(report, out_dir);
  const auto path = std::filesystem::path(out_dir) / "report.json";
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw rgsa::DataError("write failure on '" + path.string() + "'");
  for (const auto& w : emitted.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "wrote " << path.string() << " and " << emitted.files.size() << " CSV file(s)\n";
  return ok;
}

int run_sample(const std::string& model_spec, const std::string& measures, const std::string& measure_name,
               std::size_t n, std::uint64_t seed, unsigned workers, const std::string& out) {
  const auto set = rgsa::load_measure_set(measures);
  const auto idx = measure_name.empty() ? std::optional<std::size_t>(0) : set.index_of(measure_name);
  if (!idx) throw rgsa::ConfigError("measure '" + measure_name + "' is not in the measure set");
  const auto model = rgsa::make_builtin_model(model_spec.ends_with(".json") ? "multilinear:" + model_spec : model_spec);
  if (model.model.dim() != set.dim()) throw rgsa::ConfigError("model and measures differ in dimension");
  const auto s = rgsa::evaluate(model.model, set[*idx], n, seed, workers, set.name(*idx));
  rgsa::write_sample(s, out);
  std::cerr << "wrote " << s.size() << " runs under " << set.name(*idx) << " to " << out << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-based sensitivity analysis under a set of input distributions"};
  app.require_subcommand(1);

  rgsa::AnalysisConfig cfg;
  std::string estimator = "quad";
  std::string out_dir;
  std::vector<double> prior_weights;
  auto* analyze = app.add_subcommand("analyze", "Run an analysis and write a JSON report");
  analyze->add_option("--model", cfg.model, "ishigami | multilinear:<file> | <model.json> | <sample.csv>")->required();
  analyze->add_option("--measures", cfg.measures_file, "Measure-set configuration (JSON)")->required();
  analyze->add_flag("--prior", cfg.with_prior, "Run the with-prior (mixture) analysis");
  analyze->add_option("--prior-weights", prior_weights, "Prior weights replacing the configuration's")->delimiter(',');
  analyze->add_option("--estimator", estimator, "quad | bruteforce | pickfreeze | givendata | reweight")
      ->check(CLI::IsMember({"quad", "bruteforce", "pickfreeze", "givendata", "reweight"}));
  analyze->add_option("--n", cfg.n, "Runs per measure (outer loop for bruteforce)");
  analyze->add_option("--n-inner", cfg.n_inner, "Inner loop size for bruteforce");
  analyze->add_option("--seed", cfg.seed, "Random seed");
  analyze->add_option("--workers", cfg.workers, "Worker threads (results do not depend on it)");
  analyze->add_option("--base", cfg.base_measure, "Measure a reused sample was drawn under");
  analyze->add_option("--sections", cfg.sections, "per_measure,mixture,dimension,robust,trend,cores")->delimiter(',');
  analyze->add_option("--curve-points", cfg.curve_points, "Grid points per effect curve");
  analyze->add_option("--out", out_dir, "Output directory (report.json and CSVs); stdout when omitted");

  std::string s_model, s_measures, s_measure, s_out;
  std::size_t s_n = 10000;
  std::uint64_t s_seed = 0;
  unsigned s_workers = 1;
  auto* sample = app.add_subcommand("sample", "Draw and evaluate a sample under one measure");
  sample->add_option("--model", s_model, "ishigami | multilinear:<file> | <model.json>")->required();
  sample->add_option("--measures", s_measures, "Measure-set configuration (JSON)")->required();
  sample->add_option("--measure", s_measure, "Measure name (default: the first)");
  sample->add_option("--n", s_n, "Number of runs");
  sample->add_option("--seed", s_seed, "Random seed");
  sample->add_option("--workers", s_workers, "Worker threads");
  sample->add_option("--out", s_out, "Sample file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config;
  }

  try {
    if (*analyze) {
      cfg.estimator = rgsa::parse_estimator(estimator);
      if (!prior_weights.empty()) cfg.prior = prior_weights;
      if (cfg.workers == 0) cfg.workers = 1;
      return run_analyze(cfg, out_dir);
    }
    return run_sample(s_model, s_measures, s_measure, s_n, s_seed, std::max(1u, s_workers), s_out);
  } catch (const rgsa::PriorRequiredError& e) {
    std::cerr << "error: prior required: " << e.what() << '\n';
    return prior_required;
  } catch (const rgsa::ConfigError& e) {
    std::cerr << "error: configuration: " << e.what() << '\n';
    return config;
  } catch (const rgsa::DataError& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return data;
  } catch (const rgsa::NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << '\n';
    return numeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return unexpected;
  }
}
