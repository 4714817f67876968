// lx: command-line front end for the perception toolkit.

#include <atomic>
#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lx/cost.hpp"
#include "lx/csv.hpp"
#include "lx/error.hpp"
#include "lx/finetune.hpp"
#include "lx/inference.hpp"
#include "lx/mediation.hpp"
#include "lx/metrics.hpp"
#include "lx/pipeline.hpp"
#include "lx/service.hpp"
#include "lx/synthetic.hpp"
#include "lx/taxonomy.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lx::Error(lx::ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, std::string_view data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw lx::Error(lx::ErrorCode::Io, "cannot write " + path);
  out << data;
}

lx::infer::BackendConfig load_backend(const std::string& path) {
  if (path.empty()) return {};
  return lx::infer::BackendConfig::from_json(slurp(path));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  std::string input, id_col, text_col, perceptions = "all", backend, out, warnings;
  bool include_text = false, include_aspects = false;
  std::size_t max_bytes = 1024 * 1024;
};

int run_analyze(const AnalyzeArgs& a) {
  lx::pipeline::AnalysisConfig config;
  config.id_column = a.id_col;
  config.text_column = a.text_col;
  config.selected_perceptions = split_list(a.perceptions);
  config.include_text = a.include_text;
  config.include_aspects = a.include_aspects;
  config.validate();

  const auto ingest = lx::pipeline::ingest_csv(slurp(a.input), a.id_col, a.text_col, {a.max_bytes});
  const auto backend = lx::infer::make_backend(load_backend(a.backend), lx::default_taxonomy());
  auto output = lx::pipeline::run_analysis(ingest.rows, config, *backend);
  for (const auto& bad : ingest.rejected) output.warnings.push_back({bad.row_index, "", "", "MalformedRow", bad.reason});

  spit(a.out, output.csv);
  const std::string warnings_path = !a.warnings.empty() ? a.warnings : (a.out.empty() || a.out == "-" ? "" : a.out + ".warnings.csv");
  if (!warnings_path.empty()) spit(warnings_path, output.warnings_csv());
  std::cerr << output.row_count << " rows, " << output.warnings.size() << " warnings, " << output.usage.input_tokens
            << " input / " << output.usage.output_tokens << " output tokens, " << lx::cost::format_usd(output.usage.total_cost)
            << '\n';
  return 0;
}

// ---- cost-estimate ---------------------------------------------------------

struct CostArgs {
  std::string input, text_col;
  double price_in = 0, price_out = 0;
  double output_tokens = lx::cost::kDefaultOutputTokensPerText;
  std::int64_t texts = 0;
  double avg_input_tokens = 0;
  int prompts_per_text = 1;
};

int run_cost(const CostArgs& a) {
  std::int64_t texts = a.texts;
  double avg_in = a.avg_input_tokens;
  if (!a.input.empty()) {
    const auto table = lx::csv::parse(slurp(a.input));
    const auto col = a.text_col.empty() ? table.header.size() - 1 : table.require_column(a.text_col);
    std::int64_t tokens = 0;
    for (const auto& row : table.rows) {
      tokens += lx::cost::estimate_tokens_from_words(static_cast<std::int64_t>(lx::pipeline::word_count(row[col])));
    }
    texts = static_cast<std::int64_t>(table.rows.size());
    avg_in = texts ? static_cast<double>(tokens) / static_cast<double>(texts) : 0.0;
  }
  const std::int64_t calls = texts * a.prompts_per_text;
  const double cost = lx::cost::project_corpus_cost(calls, avg_in, a.output_tokens, a.price_in, a.price_out);
  std::cout << "texts," << texts << "\ncalls," << calls << "\navg_input_tokens," << avg_in << "\noutput_tokens_per_call,"
            << a.output_tokens << "\ninput_tokens," << std::llround(static_cast<double>(calls) * avg_in) << "\noutput_tokens,"
            << std::llround(static_cast<double>(calls) * a.output_tokens) << "\ncost," << lx::cost::format_usd(cost) << '\n';
  return 0;
}

// ---- mediate / generate-products ------------------------------------------

struct MediateArgs {
  std::string input, out_csv, out_json;
  int boot = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool student_t = false;
  std::vector<std::string> unlogged;
  double alpha = 0.05;
};

int run_mediate(const MediateArgs& a) {
  lx::mediation::MediationConfig config;
  config.bootstrap.n_boot = a.boot;
  config.bootstrap.seed = a.seed;
  config.bootstrap.threads = a.threads;
  config.alpha = a.alpha;
  config.sur.p_values = a.student_t ? lx::sur::PValueMethod::StudentT : lx::sur::PValueMethod::Normal;
  for (const auto& name : a.unlogged) {
    bool found = false;
    for (std::size_t c = 0; c < lx::sur::kControls; ++c) {
      if (lx::sur::kControlNames[c] == name) {
        config.sur.log_controls[c] = false;
        found = true;
      }
    }
    if (!found) throw lx::Error(lx::ErrorCode::InvalidConfig, "unknown control '" + name + "'");
  }
  const auto records = lx::sur::read_products_csv(slurp(a.input));
  const auto report = lx::mediation::mediation_report(records, config);
  spit(a.out_csv, report.to_csv());
  if (!a.out_json.empty()) spit(a.out_json, report.to_json() + "\n");
  std::cerr << records.size() << " products, " << report.bootstrap_replicates << " bootstrap replicates ("
            << report.bootstrap_failed << " failed)\n";
  return 0;
}

struct GenerateArgs {
  std::size_t n = 10491;
  std::uint64_t seed = 1;
  double rho = 0.0;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  auto config = lx::synth::reference_config();
  config.n_products = a.n;
  config.seed = a.seed;
  config.rho = a.rho;
  spit(a.out, lx::sur::write_products_csv(lx::synth::generate_products(config)));
  return 0;
}

// ---- train-toy -------------------------------------------------------------

struct TrainArgs {
  std::string config, loss_csv, adapter_out;
};

int run_train(const TrainArgs& a) {
  const std::string text = a.config.empty() ? std::string("{}") : slurp(a.config);
  const auto j = nlohmann::json::parse(text);
  const auto train_cfg = lx::ft::TrainConfig::from_json(j.contains("train") ? j.at("train").dump() : "{}");
  const int rank = j.value("rank", 5);
  const double alpha = j.value("alpha", 10.0);

  const auto scenario = lx::ft::joy_present_scenario();
  auto adapter = lx::ft::LoraAdapter::init(scenario.model.vocab_size(), scenario.model.context_size(), rank, alpha,
                                           train_cfg.seed);
  const double before = lx::ft::dataset_loss(scenario.model, adapter, {scenario.target});
  const auto result = lx::ft::train({scenario.target}, {scenario.target}, scenario.model, adapter, train_cfg);
  const double after = lx::ft::dataset_loss(scenario.model, result.adapter, {scenario.target});
  const auto probs = lx::ft::step_probabilities(lx::ft::effective_weights(scenario.model, result.adapter), scenario.target);

  if (!a.loss_csv.empty()) spit(a.loss_csv, result.report.to_csv());
  if (!a.adapter_out.empty()) spit(a.adapter_out, result.adapter.to_json() + "\n");
  const auto [lora, full] = lx::ft::trainable_param_count(scenario.model.vocab_size(), scenario.model.context_size(), rank);
  std::cout << "initial_loss," << before << "\nfinal_loss," << after << "\np_joy," << probs[0](0) << "\np_present,"
            << probs[1](4) << "\niterations," << result.report.stop_iteration << "\nstop_reason,"
            << lx::ft::to_string(result.report.stop_reason) << "\ntrainable_params," << lora << "\nfull_params," << full
            << '\n';
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string pred, truth, id_col, out;
};

std::optional<lx::Label> cell_label(lx::PerceptionKind kind, const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  if (kind == lx::PerceptionKind::Emotion) {
    if (cell == "1") return lx::Label::Present;
    if (cell == "0") return lx::Label::NotPresent;
  } else {
    if (cell == "1") return lx::Label::Positive;
    if (cell == "-1") return lx::Label::Negative;
    if (cell == "0") return lx::Label::NeutralOrNoMention;
  }
  throw lx::Error(lx::ErrorCode::Unparseable, "unexpected cell value '" + cell + "'");
}

int run_eval(const EvalArgs& a) {
  const auto pred = lx::csv::parse(slurp(a.pred));
  const auto truth = lx::csv::parse(slurp(a.truth));
  const std::size_t pid = a.id_col.empty() ? 0 : pred.require_column(a.id_col);
  const std::size_t tid = a.id_col.empty() ? 0 : truth.require_column(a.id_col);
  std::map<std::string, const std::vector<std::string>*> truth_rows;
  for (const auto& row : truth.rows) truth_rows[row[tid]] = &row;

  const auto& tax = lx::default_taxonomy();
  std::vector<lx::metrics::TaskScore> scores;
  for (const auto& id : lx::pipeline::selectable_perceptions(tax)) {
    const auto pc = pred.column_index(id);
    const auto tc = truth.column_index(id);
    if (!pc || !tc) continue;
    const auto kind = id == lx::pipeline::kOverallSentiment ? lx::PerceptionKind::SentimentAspect : tax.lookup(id).kind;
    std::vector<lx::Label> p, t;
    for (const auto& row : pred.rows) {
      const auto it = truth_rows.find(row[pid]);
      if (it == truth_rows.end()) continue;
      const auto pl = cell_label(kind, row[*pc]);
      const auto tl = cell_label(kind, (*it->second)[*tc]);
      if (!pl || !tl) continue;
      p.push_back(*pl);
      t.push_back(*tl);
    }
    scores.push_back({id, p.empty() ? 0.0 : lx::metrics::task_f1(kind, p, t), static_cast<std::int64_t>(p.size())});
  }
  spit(a.out, lx::metrics::scores_to_csv(scores));
  return 0;
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1", data_dir, backend, webhook;
  int port = 8080;
  unsigned workers = 2;
  std::size_t max_bytes = 1024 * 1024;
};

std::atomic<lx::service::Service*> g_service{nullptr};

int run_serve(const ServeArgs& a) {
  lx::service::ServiceConfig config;
  if (!a.data_dir.empty()) config.data_dir = a.data_dir;
  config.retention = lx::jobs::retention_from_env();
  config.backend = load_backend(a.backend);
  config.workers = a.workers;
  config.limits.max_bytes = a.max_bytes;
  if (const char* token = std::getenv("LX_AUTH_TOKEN")) config.auth_token = token;
  std::unique_ptr<lx::service::Notifier> notifier;
  if (!a.webhook.empty()) notifier = std::make_unique<lx::service::WebhookNotifier>(a.webhook);

  lx::service::Service service(config, std::move(notifier));
  const int port = service.bind(a.host, a.port);
  std::cerr << "lx: serving on http://" << a.host << ':' << port << " (data in " << config.data_dir.string() << ")\n";
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (auto* s = g_service.load()) s->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (auto* s = g_service.load()) s->stop();
  });
  service.listen();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion, evaluation and sentiment perception toolkit"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Classify a CSV of texts");
  an->add_option("--input", analyze.input, "Input CSV")->required();
  an->add_option("--id-col", analyze.id_col, "ID column (rows are numbered when omitted)");
  an->add_option("--text-col", analyze.text_col, "Text column")->required();
  an->add_option("--perceptions", analyze.perceptions, "Comma-separated perception ids or 'all'");
  an->add_option("--backend", analyze.backend, "Backend config JSON (lexicon backend when omitted)");
  an->add_option("--out", analyze.out, "Output CSV ('-' for stdout)");
  an->add_option("--warnings", analyze.warnings, "Warnings CSV (default: <out>.warnings.csv)");
  an->add_flag("--include-text", analyze.include_text, "Copy the text column into the output");
  an->add_flag("--include-aspects", analyze.include_aspects, "Add per-aspect columns next to sentiment");
  an->add_option("--max-bytes", analyze.max_bytes, "Upload size limit");

  CostArgs cost;
  auto* co = app.add_subcommand("cost-estimate", "Project the API cost of a corpus");
  co->add_option("--input", cost.input, "CSV of texts");
  co->add_option("--text-col", cost.text_col, "Text column (default: last column)");
  co->add_option("--texts", cost.texts, "Number of texts when no input file is given");
  co->add_option("--avg-input-tokens", cost.avg_input_tokens, "Average input tokens per call");
  co->add_option("--output-tokens", cost.output_tokens, "Output tokens per call");
  co->add_option("--prompts-per-text", cost.prompts_per_text, "Calls per text");
  co->add_option("--price-in", cost.price_in, "USD per 1M input tokens")->required();
  co->add_option("--price-out", cost.price_out, "USD per 1M output tokens")->required();

  MediateArgs mediate;
  auto* me = app.add_subcommand("mediate", "Rating-mediation analysis on product-level data");
  me->add_option("--input", mediate.input, "Products CSV")->required();
  me->add_option("--boot", mediate.boot, "Bootstrap replicates");
  me->add_option("--seed", mediate.seed, "Bootstrap seed");
  me->add_option("--threads", mediate.threads, "Bootstrap worker threads");
  me->add_option("--alpha", mediate.alpha, "Significance level for the direct effect");
  me->add_option("--no-log", mediate.unlogged, "Controls entered without a log (price, volume, views, length)");
  me->add_flag("--student-t", mediate.student_t, "Student-t p-values instead of normal");
  me->add_option("--out", mediate.out_csv, "Coefficient table CSV ('-' for stdout)");
  me->add_option("--json", mediate.out_json, "Mediation summary JSON");

  GenerateArgs generate;
  auto* ge = app.add_subcommand("generate-products", "Write a synthetic products CSV");
  ge->add_option("--n", generate.n, "Products");
  ge->add_option("--seed", generate.seed, "Seed");
  ge->add_option("--rho", generate.rho, "Error correlation between the two equations");
  ge->add_option("--out", generate.out, "Output CSV");

  TrainArgs train;
  auto* tr = app.add_subcommand("train-toy", "Train the toy LoRA answer model");
  tr->add_option("--config", train.config, "Training config JSON");
  tr->add_option("--loss-csv", train.loss_csv, "Loss trace CSV");
  tr->add_option("--adapter-out", train.adapter_out, "Adapter JSON");

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Score predictions against ground truth");
  ev->add_option("--pred", eval.pred, "Predicted output CSV")->required();
  ev->add_option("--truth", eval.truth, "Ground-truth CSV in the same layout")->required();
  ev->add_option("--id-col", eval.id_col, "ID column (default: first)");
  ev->add_option("--out", eval.out, "Scores CSV");

  ServeArgs serve;
  auto* se = app.add_subcommand("serve", "Run the HTTP job service");
  se->add_option("--host", serve.host, "Bind address");
  se->add_option("--port", serve.port, "Port");
  se->add_option("--data-dir", serve.data_dir, "Job storage (default: $LX_DATA_DIR)");
  se->add_option("--backend", serve.backend, "Backend config JSON");
  se->add_option("--workers", serve.workers, "Concurrent jobs");
  se->add_option("--max-bytes", serve.max_bytes, "Upload size limit");
  se->add_option("--webhook", serve.webhook, "URL notified when a job finishes");

  auto* tx = app.add_subcommand("taxonomy", "Print the perception taxonomy as JSON");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*an) return run_analyze(analyze);
    if (*co) return run_cost(cost);
    if (*me) return run_mediate(mediate);
    if (*ge) return run_generate(generate);
    if (*tr) return run_train(train);
    if (*ev) return run_eval(eval);
    if (*se) return run_serve(serve);
    if (*tx) {
      std::cout << lx::default_taxonomy().to_json() << '\n';
      return 0;
    }
  } catch (const lx::Error& e) {
    std::cerr << "lx: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lx: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
