#include <doctest.h>

#include <filesystem>
#include <set>

#include "fedrkg/federation.hpp"
#include "fedrkg/report.hpp"
#include "fedrkg/synthetic.hpp"
#include "support/oracles.hpp"

using namespace fedrkg;

namespace {

// Small corpus shared by the orchestration tests.
const InteractionDataset& small_data() {
  static const InteractionDataset dataset = [] {
    SyntheticSpec spec;
    spec.users = 24;
    spec.items = 150;
    spec.seed = 17;
    return preprocess(generate_synthetic(spec), 10);
  }();
  return dataset;
}

ExperimentConfig small_config(Regime regime, std::uint64_t seed = 1) {
  ExperimentConfig config;
  config.dataset = "unit";
  config.regime = regime;
  config.hp.dim = 8;
  config.hp.seed = seed;
  config.hp.rounds = 12;
  config.hp.guidance_interval = 4;
  config.hp.eta = 0.05;
  config.hp.eta_gate = 0.01;
  config.eval_interval = 6;
  config.output_dir =
      (std::filesystem::temp_directory_path() / "fedrkg_unit").string();
  return config;
}

}  // namespace

TEST_SUITE("federation") {

TEST_CASE("participant sampling is exact, distinct and reproducible") {
  ExperimentConfig config = small_config(Regime::local_only);
  config.hp.clients_per_round = 10;
  Simulation sim(small_data(), config);
  sim.init();
  const auto first = sim.sample_participants(3);
  CHECK(first.size() == 10);
  CHECK(std::set<UserId>(first.begin(), first.end()).size() == 10);
  for (UserId u : first) CHECK(u < small_data().user_count());
  CHECK(sim.sample_participants(3) == first);
  CHECK(sim.sample_participants(4) != first);
}

TEST_CASE("local_only never reads the global matrix after init") {
  ExperimentConfig config = small_config(Regime::local_only);
  Simulation sim(small_data(), config);
  sim.init();
  for (std::size_t t = 1; t <= 8; ++t) sim.run_round(t);
  CHECK(sim.global_reads_after_init() == 0);
}

TEST_CASE("guidance fires only at interval multiples") {
  ExperimentConfig config = small_config(Regime::knowledge_guidance);
  Simulation sim(small_data(), config);
  sim.init();
  for (std::size_t t = 1; t <= 8; ++t) {
    const RoundLog log = sim.run_round(t);
    CHECK(log.guidance_applied == (t % 4 == 0));
    CHECK(log.participants.size() == small_data().user_count());  // n_s = n
  }
}

TEST_CASE("full replacement leaves every client on the aggregate") {
  ExperimentConfig config = small_config(Regime::full_replacement);
  Simulation sim(small_data(), config);
  sim.init();
  sim.run_round(1);
  const Matrix& global = sim.global().items();
  for (const ClientState& client : sim.clients())
    CHECK(client.item_embeddings == global);
}

TEST_CASE("zeroed gates make an adaptive round equal a fixed round") {
  ExperimentConfig adaptive_cfg = small_config(Regime::adaptive_guidance);
  adaptive_cfg.hp.gate_epochs = 0;  // keep the zeroed gates
  ExperimentConfig fixed_cfg = small_config(Regime::knowledge_guidance);

  Simulation adaptive(small_data(), adaptive_cfg);
  Simulation fixed(small_data(), fixed_cfg);
  adaptive.init();
  fixed.init();
  for (ClientState& client : adaptive.clients()) {
    client.gate.weights.assign(client.gate.weights.size(), 0.0);
    client.gate.bias = 0.0;
  }

  for (std::size_t t = 1; t <= 4; ++t) {
    adaptive.run_round(t);
    fixed.run_round(t);
  }
  for (UserId u = 0; u < small_data().user_count(); ++u) {
    CHECK(oracle::max_abs_diff(adaptive.clients()[u].item_embeddings,
                               fixed.clients()[u].item_embeddings) < 1e-12);
    CHECK(adaptive.clients()[u].user_embedding ==
          fixed.clients()[u].user_embedding);
  }
}

TEST_CASE("beta zero guidance equals full replacement") {
  ExperimentConfig kg = small_config(Regime::knowledge_guidance);
  kg.hp.beta = 0.0;
  kg.hp.guidance_interval = 1;  // guidance every round
  ExperimentConfig fr = small_config(Regime::full_replacement);

  Simulation a(small_data(), kg), b(small_data(), fr);
  a.init();
  b.init();
  a.run_round(1);
  b.run_round(1);
  for (UserId u = 0; u < small_data().user_count(); ++u)
    CHECK(oracle::max_abs_diff(a.clients()[u].item_embeddings,
                               b.clients()[u].item_embeddings) < 1e-12);
}

TEST_CASE("symmetry: identical clients stay identical through guidance") {
  ExperimentConfig config = small_config(Regime::adaptive_guidance);
  config.hp.local_epochs = 0;  // isolate the guidance epilogue
  config.hp.gate_epochs = 0;
  Simulation sim(small_data(), config);
  sim.init();
  const ClientState first = sim.clients()[0];
  for (ClientState& client : sim.clients()) {
    client.item_embeddings = first.item_embeddings;
    client.user_embedding = first.user_embedding;
    client.gate = first.gate;
  }
  sim.run_round(4);  // guidance round
  for (const ClientState& client : sim.clients())
    CHECK(client.item_embeddings == sim.clients()[0].item_embeddings);
}

TEST_CASE("zero rounds leaves only the initial evaluation") {
  ExperimentConfig config = small_config(Regime::knowledge_guidance);
  config.hp.rounds = 0;
  const ExperimentResult result = run_experiment(small_data(), config);
  REQUIRE(result.history.points.size() == 1);
  CHECK(result.history.points[0].round == 0);
  CHECK(result.history.final_round == 0);
}

TEST_CASE("reruns are bit-identical, across worker counts too") {
  ExperimentConfig config = small_config(Regime::adaptive_guidance, 5);
  config.hp.rounds = 8;
  config.eval_interval = 2;
  const ExperimentResult once = run_experiment(small_data(), config);
  const ExperimentResult again = run_experiment(small_data(), config);
  CHECK(once.history == again.history);

  ExperimentConfig threaded = config;
  threaded.workers = 3;
  const ExperimentResult parallel = run_experiment(small_data(), threaded);
  CHECK(once.history == parallel.history);
  CHECK(format_metrics_csv(once.history) ==
        format_metrics_csv(parallel.history));
}

TEST_CASE("privacy toggle keeps the batch stream but adds noise") {
  ExperimentConfig config = small_config(Regime::local_only, 6);
  config.hp.rounds = 2;
  ExperimentConfig with_dp = config;
  with_dp.privacy.enabled = true;
  with_dp.privacy.clip_threshold = 0.1;
  with_dp.privacy.noise_stddev = 0.001;

  const ExperimentResult plain = run_experiment(small_data(), config);
  const ExperimentResult noisy = run_experiment(small_data(), with_dp);
  // Different parameters, but the same deterministic shape of history.
  CHECK(plain.history.points.size() == noisy.history.points.size());
  CHECK(plain.history != noisy.history);
}

TEST_CASE("early stopping never selects a worse checkpoint") {
  ExperimentConfig config = small_config(Regime::knowledge_guidance, 7);
  config.hp.rounds = 20;
  config.eval_interval = 2;
  config.patience = 3;
  const ExperimentResult result = run_experiment(small_data(), config);
  const MetricsHistory& history = result.history;
  const double best =
      history.best().val.ndcg_at.at(history.primary_k);
  for (const EvalPoint& point : history.points)
    CHECK(best >= point.val.ndcg_at.at(history.primary_k));
}

TEST_CASE("guidance boundary evaluations appear in the history") {
  ExperimentConfig config = small_config(Regime::knowledge_guidance, 8);
  config.hp.rounds = 9;
  config.hp.guidance_interval = 4;
  config.eval_interval = 100;  // only boundaries and the final round
  config.eval_guidance_boundaries = true;
  const ExperimentResult result = run_experiment(small_data(), config);
  std::set<std::size_t> rounds;
  for (const EvalPoint& point : result.history.points)
    rounds.insert(point.round);
  CHECK(rounds.count(3) == 1);
  CHECK(rounds.count(4) == 1);
  CHECK(rounds.count(7) == 1);
  CHECK(rounds.count(8) == 1);
  CHECK(rounds.count(9) == 1);  // final round
}

TEST_CASE("snapshot resume reproduces the uninterrupted run") {
  const auto dir = std::filesystem::temp_directory_path() / "fedrkg_resume";
  std::filesystem::create_directories(dir);

  ExperimentConfig config = small_config(Regime::adaptive_guidance, 9);
  config.hp.rounds = 8;
  config.eval_interval = 2;
  config.output_dir = dir.string();
  config.snapshot_interval = 5;  // leaves snapshot.bin from round 5
  const ExperimentResult full = run_experiment(small_data(), config);
  const std::filesystem::path snapshot =
      dir / config.run_id() / "snapshot.bin";
  REQUIRE(std::filesystem::exists(snapshot));

  ExperimentConfig second_leg = config;  // picks up at round 6
  second_leg.resume_path = snapshot.string();
  const ExperimentResult resumed = run_experiment(small_data(), second_leg);

  // The resumed history must continue exactly where the full run was.
  REQUIRE(resumed.history.points.size() == full.history.points.size());
  for (std::size_t k = 0; k < full.history.points.size(); ++k)
    CHECK(resumed.history.points[k] == full.history.points[k]);
  CHECK(resumed.history.best_index == full.history.best_index);

  SUBCASE("snapshot refuses a mismatched config") {
    ExperimentConfig other = second_leg;
    other.hp.eta = 0.123;
    CHECK_THROWS_AS(run_experiment(small_data(), other), std::runtime_error);
  }
}

TEST_CASE("history round-trips through the binary format") {
  ExperimentConfig config = small_config(Regime::knowledge_guidance, 10);
  config.hp.rounds = 4;
  config.eval_interval = 2;
  const ExperimentResult result = run_experiment(small_data(), config);
  const auto path =
      std::filesystem::temp_directory_path() / "fedrkg_history.bin";
  save_history(result.history, path);
  CHECK(load_history(path) == result.history);
  std::filesystem::remove(path);
}

TEST_CASE("run outputs land in the manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "fedrkg_outputs";
  ExperimentConfig config = small_config(Regime::adaptive_guidance, 11);
  config.hp.rounds = 4;
  config.output_dir = dir.string();
  config.dump_gate_stats = true;
  ExperimentResult result = run_experiment(small_data(), config);
  const std::filesystem::path run_dir = write_run_outputs(result, config);
  for (const std::string& name : result.manifest.outputs)
    CHECK(std::filesystem::exists(run_dir / name));
  CHECK(!result.gate_stats.empty());
  // No orphan files beyond the declared outputs.
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    CHECK(std::count(result.manifest.outputs.begin(),
                     result.manifest.outputs.end(), name) == 1);
  }
}

}  // TEST_SUITE
