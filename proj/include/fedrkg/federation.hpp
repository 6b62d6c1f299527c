#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedrkg/config.hpp"
#include "fedrkg/dataset.hpp"
#include "fedrkg/evaluation.hpp"
#include "fedrkg/guidance.hpp"
#include "fedrkg/model.hpp"

namespace fedrkg {

struct RoundLog {
  std::size_t round = 0;
  Regime regime = Regime::adaptive_guidance;
  std::vector<UserId> participants;
  bool guidance_applied = false;
  std::optional<MetricsRecord> val_metrics;
  std::optional<MetricsRecord> test_metrics;
  double wall_seconds = 0.0;
};

// Validation and test metrics measured at the same round. Test metrics
// are computed eagerly so the best-validation checkpoint's test numbers
// are available without keeping a copy of all client states.
struct EvalPoint {
  std::size_t round = 0;
  MetricsRecord val;
  MetricsRecord test;

  friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

struct MetricsHistory {
  std::vector<EvalPoint> points;
  std::size_t best_index = 0;  // argmax of val NDCG@k_primary, earliest wins
  int primary_k = 10;
  bool stopped_early = false;
  std::size_t final_round = 0;

  const EvalPoint& best() const { return points.at(best_index); }

  friend bool operator==(const MetricsHistory&, const MetricsHistory&) =
      default;
};

struct GateStatRow {
  std::size_t round = 0;
  UserId user = 0;
  double mean_value = 0.0;
  double mean_logit = 0.0;
};

struct RunManifest {
  std::string run_id;
  std::string config_json;
  std::string build_id;
  std::string data_source;  // "file:<path>" or "synthetic"
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  std::string started_at;
  std::string finished_at;
  double train_seconds = 0.0;
  double guidance_seconds = 0.0;
  double eval_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<std::string> outputs;
};

struct ExperimentResult {
  MetricsHistory history;
  std::vector<RoundLog> rounds;
  std::vector<GateStatRow> gate_stats;
  RunManifest manifest;
};

// One federated training run over a fixed dataset. Owns all client
// states and the server aggregate; rounds are driven by run_experiment
// or manually (tests).
class Simulation {
 public:
  Simulation(const InteractionDataset& dataset, const ExperimentConfig& config);

  void init();
  RoundLog run_round(std::size_t t);
  EvalPoint evaluate_now(std::size_t round) const;

  std::vector<UserId> sample_participants(std::size_t t) const;

  const std::vector<ClientState>& clients() const { return clients_; }
  std::vector<ClientState>& clients() { return clients_; }
  const GlobalState& global() const { return global_; }
  std::size_t clients_per_round() const;
  // Global-matrix reads since init; stays zero under local_only.
  std::size_t global_reads_after_init() const {
    return global_.read_count() - reads_at_init_;
  }

  const InteractionDataset& dataset() const { return dataset_; }
  const ExperimentConfig& config() const { return config_; }

  void save_snapshot(const std::filesystem::path& path,
                     const MetricsHistory& history, std::size_t next_round,
                     std::size_t evals_since_best) const;
  // Returns (next_round, evals_since_best); restores states and history.
  std::pair<std::size_t, std::size_t> load_snapshot(
      const std::filesystem::path& path, MetricsHistory& history);

 private:
  void run_guidance_round(std::size_t t, RoundLog& log);

  const InteractionDataset& dataset_;
  ExperimentConfig config_;
  std::vector<ClientState> clients_;
  GlobalState global_;
  std::size_t reads_at_init_ = 0;
  bool initialized_ = false;
};

// Full protocol: init, round loop with evaluation cadence and early
// stopping, final report at the best-validation checkpoint.
ExperimentResult run_experiment(const InteractionDataset& dataset,
                                const ExperimentConfig& config,
                                std::ostream* progress = nullptr);

// Binary round-trip of a metric history, per-user ranks included.
void save_history(const MetricsHistory& history,
                  const std::filesystem::path& path);
MetricsHistory load_history(const std::filesystem::path& path);

}  // namespace fedrkg
