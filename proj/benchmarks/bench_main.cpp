#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "lx/csv.hpp"
#include "lx/finetune.hpp"
#include "lx/inference.hpp"
#include "lx/instruction.hpp"
#include "lx/mediation.hpp"
#include "lx/pipeline.hpp"
#include "lx/sur.hpp"
#include "lx/synthetic.hpp"

using namespace lx;

static void BM_Softmax(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Eigen::VectorXd v(state.range(0));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = z(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ft::softmax(v));
}
BENCHMARK(BM_Softmax)->Arg(5)->Arg(512)->Arg(32000);

static void BM_LoraGradients(benchmark::State& state) {
  const auto s = ft::joy_present_scenario();
  const auto ad = ft::LoraAdapter::init(5, 6, 5, 10.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ft::lora_gradients(s.model, ad, {s.target}));
}
BENCHMARK(BM_LoraGradients);

static void BM_ToyTrain(benchmark::State& state) {
  const auto s = ft::joy_present_scenario();
  const auto ad = ft::LoraAdapter::init(5, 6, 5, 10.0, 3);
  ft::TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ft::train({s.target}, {}, s.model, ad, cfg));
}
BENCHMARK(BM_ToyTrain)->Unit(benchmark::kMillisecond);

static void BM_SurFgls(benchmark::State& state) {
  auto cfg = synth::reference_config();
  cfg.n_products = static_cast<std::size_t>(state.range(0));
  const auto d = sur::build_designs(synth::generate_products(cfg));
  for (auto _ : state) benchmark::DoNotOptimize(sur::sur_fgls(d));
}
BENCHMARK(BM_SurFgls)->Arg(500)->Arg(10491)->Unit(benchmark::kMillisecond);

static void BM_Bootstrap(benchmark::State& state) {
  auto cfg = synth::reference_config();
  cfg.n_products = 500;
  const auto recs = synth::generate_products(cfg);
  mediation::BootstrapConfig bc;
  bc.n_boot = 200;
  for (auto _ : state) benchmark::DoNotOptimize(mediation::bootstrap_indirect(recs, {}, bc));
}
BENCHMARK(BM_Bootstrap)->Unit(benchmark::kMillisecond);

static void BM_LexiconClassify(benchmark::State& state) {
  const infer::LexiconBackend backend(default_taxonomy());
  const auto rec = instruct::make_inference_record(default_taxonomy().lookup("trust"),
                                                   "I trust this store, the staff were honest and the price was fair.");
  for (auto _ : state) benchmark::DoNotOptimize(backend.classify(rec));
}
BENCHMARK(BM_LexiconClassify);

static void BM_CsvParse(benchmark::State& state) {
  std::ostringstream out;
  out << "ID_num,TEXT\n";
  for (int i = 0; i < state.range(0); ++i) out << i << ",\"Great product, fast delivery, would buy again\"\n";
  const std::string text = out.str();
  for (auto _ : state) benchmark::DoNotOptimize(csv::parse(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_CsvParse)->Arg(1000)->Arg(10000);

static void BM_RunAnalysisAll(benchmark::State& state) {
  std::ostringstream out;
  out << "ID_num,TEXT\n";
  for (int i = 0; i < 200; ++i) out << i << ",I was irritated and sad but the price was fair\n";
  pipeline::AnalysisConfig cfg;
  cfg.id_column = "ID_num";
  cfg.text_column = "TEXT";
  cfg.selected_perceptions = {"all"};
  cfg.validate();
  const auto rows = pipeline::ingest_csv(out.str(), cfg.id_column, cfg.text_column).rows;
  const infer::LexiconBackend backend(default_taxonomy());
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::run_analysis(rows, cfg, backend));
}
BENCHMARK(BM_RunAnalysisAll)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
