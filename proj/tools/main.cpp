// clickgate: deception-aware click evaluation harness CLI.
//
// Subcommands: generate, split, stats, reward-audit, summarize, evaluate,
// report. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clickgate/backends.hpp"
#include "clickgate/experience.hpp"
#include "clickgate/harness.hpp"
#include "clickgate/reward.hpp"
#include "clickgate/rng.hpp"

namespace fs = std::filesystem;
using namespace clickgate;
using ordered_json = nlohmann::ordered_json;

namespace {

struct BackendSettings {
  std::string kind;
  std::string policy = "trap_first";       // scripted agents
  double error_benign = 0.0;               // oracle evaluator
  double error_null = 0.0;
  double error_deceptive = 0.0;
  double gamma_min = 0.3;
  double gamma_max = 0.8;
  EndpointConfig endpoint;
};

struct AppConfig {
  std::uint64_t seed = 42;
  std::string dataset;
  int parallelism = 1;
  BackendSettings evaluator = [] {
    BackendSettings b;
    b.kind = "oracle";
    return b;
  }();
  BackendSettings agent = [] {
    BackendSettings b;
    b.kind = "scripted";
    return b;
  }();
  BackendSettings summarizer = [] {
    BackendSettings b;
    b.kind = "rule";
    return b;
  }();
  RewardConfig reward;
  LoopConfig loop;
  HarnessConfig harness;
};

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) {
      fail(Errc::IoError, "cannot write " + tmp.string());
    }
    out << content;
  }
  fs::rename(tmp, path);
}

std::unique_ptr<EvaluatorClient> make_evaluator(const AppConfig& config) {
  const BackendSettings& b = config.evaluator;
  if (b.kind == "oracle") {
    OracleEvaluatorConfig oracle;
    oracle.error_rate_benign = b.error_benign;
    oracle.error_rate_null = b.error_null;
    oracle.error_rate_deceptive = b.error_deceptive;
    oracle.gamma_min = b.gamma_min;
    oracle.gamma_max = b.gamma_max;
    oracle.seed = config.seed;
    return std::make_unique<OracleEvaluator>(oracle);
  }
  if (b.kind == "http") {
    return std::make_unique<HttpEvaluator>(b.endpoint);
  }
  fail(Errc::ConfigError, "evaluator.kind must be oracle or http");
}

std::unique_ptr<AgentClient> make_agent(const AppConfig& config) {
  const BackendSettings& b = config.agent;
  if (b.kind == "scripted") {
    return std::make_unique<ScriptedAgent>(parse_scripted_policy(b.policy),
                                           config.seed);
  }
  if (b.kind == "http") {
    return std::make_unique<HttpAgent>(b.endpoint, config.harness.tool_list);
  }
  fail(Errc::ConfigError, "agent.kind must be scripted or http");
}

std::unique_ptr<SummarizerClient> make_summarizer(const AppConfig& config) {
  const BackendSettings& b = config.summarizer;
  if (b.kind == "rule") return std::make_unique<RuleSummarizer>();
  if (b.kind == "noop") return std::make_unique<NoOpSummarizer>();
  if (b.kind == "http") return std::make_unique<HttpSummarizer>(b.endpoint);
  fail(Errc::ConfigError, "summarizer.kind must be rule, noop or http");
}

void apply_ablation(RewardConfig& reward, const std::string& ablation) {
  reward.use_severity = true;
  reward.use_alpha = true;
  reward.use_beta = true;
  if (ablation == "full") return;
  if (ablation == "no-omega") {
    reward.use_severity = false;
  } else if (ablation == "no-alpha") {
    reward.use_alpha = false;
  } else if (ablation == "no-beta") {
    reward.use_beta = false;
  } else if (ablation == "confidence-only") {
    reward.use_severity = false;
    reward.use_alpha = false;
  } else {
    fail(Errc::ConfigError, "unknown ablation '" + ablation + "'");
  }
}

struct AuditOutput {
  std::vector<EvaluatedClick> rows;
  PoolState pools;
};

// One gated judgment per training click; failures feed the pools.
AuditOutput run_audit(const std::vector<Sample>& samples, EvaluatorClient& evaluator,
                      const RewardConfig& reward, std::size_t null_clicks,
                      std::uint64_t seed, std::string_view guidance) {
  AuditOutput out;
  for (const Sample& sample : samples) {
    const auto clicks = generate_training_clicks(
        sample, null_clicks, mix_seed(seed, static_cast<std::uint64_t>(sample.id)));
    for (const TrainingClick& click : clicks) {
      EvaluatedClick row;
      row.sample_id = sample.id;
      row.click = click.click;
      row.truth = click.label;
      const Parsed<EvaluatorJudgment> parsed =
          parse_evaluator_output(evaluator.judge_raw(sample, click.click, guidance));
      if (parsed) {
        row.judgment = *parsed;
        row.outcome = hybrid_reward(sample, click.click, *parsed, reward);
      } else {
        row.outcome = auxiliary_penalty(ErrorCategory::ParseFailure, reward);
      }
      out.rows.push_back(row);
    }
  }
  out.pools.failures = collect_errors(out.rows);
  for (const EvaluatedClick& row : out.rows) {
    if (row.outcome.value < 0.0) continue;
    FailureEntry entry;
    entry.sample_id = row.sample_id;
    entry.click = row.click;
    entry.truth = row.truth;
    entry.predicted = row.judgment ? row.judgment->label : row.truth;
    entry.gamma = row.judgment ? row.judgment->gamma : 0.0;
    entry.kappa = 1;
    out.pools.successes.push_back(entry);
  }
  return out;
}

std::vector<Sample> load_required_dataset(const AppConfig& config) {
  if (config.dataset.empty()) {
    fail(Errc::ConfigError, "no dataset given (--dataset or [dataset] in config)");
  }
  auto samples = load_dataset(config.dataset);
  if (samples.empty()) {
    fail(Errc::EmptyDataset, config.dataset + " holds no records");
  }
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].id == samples[i - 1].id) {
      fail(Errc::MalformedRecord, config.dataset + ": duplicate sample id " +
                                      std::to_string(samples[i].id));
    }
  }
  return samples;
}

int cmd_generate(const AppConfig& config, std::size_t n, double fraction,
                 const std::string& out_path) {
  const auto samples = generate_synthetic_dataset(n, config.seed, fraction);
  std::ostringstream body;
  for (const Sample& sample : samples) {
    body << serialize_sample(sample) << '\n';
  }
  write_atomic(out_path, body.str());
  std::cout << "wrote " << samples.size() << " samples to " << out_path << "\n";
  return 0;
}

int cmd_split(const AppConfig& config, const std::string& ratios_text,
              const std::string& out_path) {
  SplitRatios ratios;
  if (std::sscanf(ratios_text.c_str(), "%lf,%lf", &ratios.train, &ratios.valid) != 2) {
    fail(Errc::ConfigError, "--ratios expects train,valid (e.g. 0.7,0.15)");
  }
  const auto samples = load_required_dataset(config);
  const SplitAssignment split = stratified_split(samples, config.seed, ratios);

  ordered_json manifest;
  manifest["seed"] = config.seed;
  manifest["train_ratio"] = ratios.train;
  manifest["valid_ratio"] = ratios.valid;
  manifest["train"] = split.train;
  manifest["valid"] = split.valid;
  manifest["test"] = split.test;
  write_atomic(out_path, manifest.dump(2) + "\n");
  std::cout << "train/valid/test = " << split.train.size() << "/" << split.valid.size()
            << "/" << split.test.size() << " -> " << out_path << "\n";
  return 0;
}

int cmd_stats(const AppConfig& config, const std::string& out_path) {
  const auto samples = load_required_dataset(config);
  const DatasetStats stats = dataset_stats(samples);

  ordered_json report;
  report["normal_count"] = stats.normal_count;
  report["deception_count"] = stats.deception_count;
  auto box_node = [](const BoxStats& b) {
    return ordered_json{{"count", b.count},         {"mean_area", b.mean_area},
                        {"std_area", b.std_area},   {"min_area", b.min_area},
                        {"max_area", b.max_area},   {"mean_fraction", b.mean_fraction}};
  };
  report["correct_box"] = box_node(stats.correct);
  report["dark_box"] = box_node(stats.dark);
  report["resolution"] = ordered_json{{"mean_width", stats.resolution.mean_width},
                                      {"std_width", stats.resolution.std_width},
                                      {"mean_height", stats.resolution.mean_height},
                                      {"std_height", stats.resolution.std_height}};
  const std::string text = report.dump(2) + "\n";
  if (!out_path.empty()) {
    write_atomic(out_path, text);
  }
  std::cout << text;
  return 0;
}

int cmd_reward_audit(const AppConfig& config, std::size_t null_clicks,
                     const std::string& out_path) {
  const auto samples = load_required_dataset(config);
  auto evaluator = make_evaluator(config);
  const AuditOutput audit =
      run_audit(samples, *evaluator, config.reward, null_clicks, config.seed, "");

  std::ostringstream body;
  std::size_t negative = 0;
  double reward_sum = 0.0;
  for (const EvaluatedClick& row : audit.rows) {
    body << serialize_audit_row(row) << '\n';
    negative += row.outcome.value < 0.0 ? 1 : 0;
    reward_sum += row.outcome.value;
  }
  write_atomic(out_path, body.str());
  std::cout << audit.rows.size() << " judgments, " << negative
            << " negative, mean reward "
            << reward_sum / static_cast<double>(audit.rows.size()) << " -> "
            << out_path << "\n";
  return 0;
}

int cmd_summarize(const AppConfig& config, std::size_t null_clicks,
                  const std::string& context_path, const std::string& reports_path) {
  const auto samples = load_required_dataset(config);
  const SampleIndex index(samples);
  auto evaluator = make_evaluator(config);
  auto summarizer = make_summarizer(config);

  AuditOutput audit =
      run_audit(samples, *evaluator, config.reward, null_clicks, config.seed, "");
  std::cout << "initial pools: F=" << audit.pools.failures.size()
            << " S=" << audit.pools.successes.size() << "\n";

  const SummarizationResult result = run_summarization(
      audit.pools, *summarizer, *evaluator, config.loop, config.seed, index);

  save_context(result.context, context_path);
  std::ostringstream body;
  for (const IterationReport& report : result.reports) {
    body << serialize_iteration_report(report) << '\n';
  }
  write_atomic(reports_path, body.str());
  std::cout << "halt=" << to_string(result.halt_reason)
            << " iterations=" << result.reports.size()
            << " F=" << audit.pools.failures.size()
            << " S=" << audit.pools.successes.size() << " context tokens="
            << result.context.token_estimate << " -> " << context_path << "\n";
  return 0;
}

int cmd_evaluate(const AppConfig& config, const std::string& gate,
                 const std::string& context_path, const std::string& episodes_path,
                 const std::string& metrics_path) {
  const auto samples = load_required_dataset(config);
  auto agent = make_agent(config);
  auto evaluator = make_evaluator(config);

  HarnessConfig harness = config.harness;
  if (!gate.empty()) {
    harness.gate_enabled = gate == "on";
  }
  harness.seed = config.seed;

  ExperienceContext context;
  if (!context_path.empty()) {
    context = load_context(context_path);
  }

  const SuiteResult result = run_suite(samples, *agent, *evaluator, context, harness,
                                       config.parallelism);
  std::ostringstream body;
  for (const EpisodeRecord& episode : result.episodes) {
    body << serialize_episode(episode) << '\n';
  }
  write_atomic(episodes_path, body.str());
  write_atomic(metrics_path, metrics_to_csv(result.metrics));
  std::cout << metrics_to_table(result.metrics);
  return 0;
}

int cmd_report(const std::string& episodes_path, const std::string& format,
               const std::string& out_path) {
  std::ifstream in(episodes_path);
  if (!in) {
    fail(Errc::IoError, "cannot open " + episodes_path);
  }
  std::vector<EpisodeRecord> episodes;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) episodes.push_back(parse_episode(line));
  }
  const MetricsReport report = aggregate_metrics(episodes);
  const std::string text =
      format == "csv" ? metrics_to_csv(report) : metrics_to_table(report);
  if (!out_path.empty()) {
    write_atomic(out_path, text);
  }
  std::cout << text;
  return 0;
}

void register_config_options(CLI::App& app, AppConfig& config) {
  app.set_config("--config", "", "Config file (INI; flags override file values)");
  app.add_option("--seed", config.seed, "Deterministic seed for all randomized work");
  app.add_option("--dataset", config.dataset, "Dataset file (JSONL records)");
  app.add_option("--parallelism", config.parallelism, "Episode workers for evaluate");

  app.add_option("--evaluator.kind", config.evaluator.kind, "oracle | http");
  app.add_option("--evaluator.error-benign", config.evaluator.error_benign);
  app.add_option("--evaluator.error-null", config.evaluator.error_null);
  app.add_option("--evaluator.error-deceptive", config.evaluator.error_deceptive);
  app.add_option("--evaluator.gamma-min", config.evaluator.gamma_min);
  app.add_option("--evaluator.gamma-max", config.evaluator.gamma_max);
  app.add_option("--evaluator.url", config.evaluator.endpoint.url);
  app.add_option("--evaluator.model", config.evaluator.endpoint.model);
  app.add_option("--evaluator.api-key-env", config.evaluator.endpoint.api_key_env);
  app.add_option("--evaluator.timeout-ms", config.evaluator.endpoint.timeout_ms);
  app.add_option("--evaluator.max-retries", config.evaluator.endpoint.max_retries);

  app.add_option("--agent.kind", config.agent.kind, "scripted | http");
  app.add_option("--agent.policy", config.agent.policy,
                 "trap_first | correct_first | null_walk");
  app.add_option("--agent.url", config.agent.endpoint.url);
  app.add_option("--agent.model", config.agent.endpoint.model);
  app.add_option("--agent.api-key-env", config.agent.endpoint.api_key_env);
  app.add_option("--agent.timeout-ms", config.agent.endpoint.timeout_ms);

  app.add_option("--summarizer.kind", config.summarizer.kind, "rule | noop | http");
  app.add_option("--summarizer.url", config.summarizer.endpoint.url);
  app.add_option("--summarizer.model", config.summarizer.endpoint.model);
  app.add_option("--summarizer.api-key-env", config.summarizer.endpoint.api_key_env);

  app.add_option("--reward.omega-c4", config.reward.omega_c4);
  app.add_option("--reward.parse-penalty", config.reward.parse_penalty);
  app.add_option("--reward.domain-penalty", config.reward.domain_penalty);
  app.add_option("--reward.alpha-min", config.reward.alpha_min);
  app.add_option("--reward.alpha-max", config.reward.alpha_max);
  app.add_option("--reward.epsilon", config.reward.epsilon);

  app.add_option("--loop.batch-size", config.loop.batch_size);
  app.add_option("--loop.anchor-size", config.loop.anchor_size);
  app.add_option("--loop.max-iterations", config.loop.max_iterations);
  app.add_option("--loop.patience", config.loop.patience);
  app.add_option("--loop.token-cap", config.loop.token_cap);
  app.add_flag("--loop.anchors-in-summary,!--loop.no-anchors-in-summary",
               config.loop.anchors_in_summary);

  app.add_option("--harness.t-max", config.harness.t_max);
  app.add_option("--harness.deception-step-penalty",
                 config.harness.deception_step_penalty);
  app.add_option("--harness.tool-list", config.harness.tool_list);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clickgate: deception-aware click evaluation harness"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  AppConfig config;
  register_config_options(app, config);

  // generate
  std::size_t gen_n = 100;
  double gen_fraction = 0.35;
  std::string gen_out = "dataset.jsonl";
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--n", gen_n, "Sample count")->check(CLI::PositiveNumber);
  generate->add_option("--fraction", gen_fraction, "Deceptive fraction")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--out", gen_out, "Output dataset path");

  // split
  std::string split_ratios = "0.7,0.15";
  std::string split_out = "splits.json";
  CLI::App* split = app.add_subcommand("split", "Stratified train/valid/test split");
  split->add_option("--ratios", split_ratios, "train,valid fractions");
  split->add_option("--out", split_out, "Split manifest path");

  // stats
  std::string stats_out;
  CLI::App* stats = app.add_subcommand("stats", "Dataset geometry statistics");
  stats->add_option("--out", stats_out, "Optional JSON output path");

  // reward-audit
  std::size_t audit_clicks = 1;
  std::string audit_out = "audit.jsonl";
  std::string audit_ablation = "full";
  CLI::App* audit = app.add_subcommand("reward-audit",
                                       "Price evaluator judgments over training clicks");
  audit->add_option("--clicks-per-sample", audit_clicks,
                    "Null clicks generated per sample");
  audit->add_option("--ablation", audit_ablation,
                    "full | no-omega | no-alpha | no-beta | confidence-only");
  audit->add_option("--out", audit_out, "Audit log path");

  // summarize
  std::size_t summ_clicks = 1;
  std::string summ_context_out = "context.txt";
  std::string summ_reports_out = "iterations.jsonl";
  CLI::App* summarize = app.add_subcommand("summarize",
                                           "Distill failures into guidance text");
  summarize->add_option("--clicks-per-sample", summ_clicks,
                        "Null clicks generated per sample");
  summarize->add_option("--out-context", summ_context_out, "Context file path");
  summarize->add_option("--out-reports", summ_reports_out, "Iteration log path");

  // evaluate
  std::string eval_gate;
  std::string eval_context;
  std::string eval_episodes_out = "episodes.jsonl";
  std::string eval_metrics_out = "metrics.csv";
  CLI::App* evaluate = app.add_subcommand("evaluate", "Run gated episodes");
  evaluate->add_option("--gate", eval_gate, "on | off")
      ->check(CLI::IsMember({"on", "off"}));
  evaluate->add_option("--context", eval_context, "Experience context file");
  evaluate->add_option("--out-episodes", eval_episodes_out, "Episode JSONL path");
  evaluate->add_option("--out-metrics", eval_metrics_out, "Metrics CSV path");

  // report
  std::string report_episodes;
  std::string report_format = "table";
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "Re-aggregate an episode log");
  report->add_option("--episodes", report_episodes, "Episode JSONL path")->required();
  report->add_option("--format", report_format, "table | csv")
      ->check(CLI::IsMember({"table", "csv"}));
  report->add_option("--out", report_out, "Optional output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    std::cerr << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 2;
  }

  try {
    apply_ablation(config.reward, audit_ablation);
    validate(config.reward);
    validate(config.loop);
    if (generate->parsed()) return cmd_generate(config, gen_n, gen_fraction, gen_out);
    if (split->parsed()) return cmd_split(config, split_ratios, split_out);
    if (stats->parsed()) return cmd_stats(config, stats_out);
    if (audit->parsed()) return cmd_reward_audit(config, audit_clicks, audit_out);
    if (summarize->parsed()) {
      return cmd_summarize(config, summ_clicks, summ_context_out, summ_reports_out);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(config, eval_gate, eval_context, eval_episodes_out,
                          eval_metrics_out);
    }
    if (report->parsed()) return cmd_report(report_episodes, report_format, report_out);
    std::cerr << "no command given\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "clickgate: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "clickgate: unexpected failure: " << e.what() << "\n";
    return 1;
  }
}
