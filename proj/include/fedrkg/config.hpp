#pragma once

#include <string>
#include <vector>

#include "fedrkg/model.hpp"
#include "fedrkg/privacy.hpp"
#include "fedrkg/synthetic.hpp"

namespace fedrkg {

// Training regimes: the two guidance modes plus the two baselines they
// are compared against.
enum class Regime {
  full_replacement,   // aggregate every round, overwrite local embeddings
  local_only,         // never touch the global embeddings after init
  knowledge_guidance, // periodic fixed-beta fusion
  adaptive_guidance,  // periodic gated fusion with nested gate training
};

Regime parse_regime(const std::string& tag);
std::string regime_name(Regime regime);

struct ExperimentConfig {
  std::string dataset = "synthetic-video";
  std::string data_path;  // raw ratings file; empty = synthesize
  std::string format = "csv";
  std::size_t min_interactions = 10;
  SyntheticSpec synthetic;

  HyperParams hp;
  Regime regime = Regime::adaptive_guidance;
  PrivacyConfig privacy;

  std::size_t eval_interval = 10;
  std::vector<int> eval_ks = {5, 10};
  // Adds evaluations at rounds t-1 and t for every guidance round so the
  // per-guidance metric step is observable at coarse eval intervals.
  bool eval_guidance_boundaries = false;
  bool rank_excludes_val = true;
  std::size_t patience = 100;  // evaluations without val improvement

  std::string output_dir = "runs";
  std::size_t workers = 1;
  std::size_t snapshot_interval = 0;  // rounds between snapshots; 0 = off
  std::string resume_path;
  bool dump_gate_stats = false;

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;

  // Fills dataset-dependent defaults (format, filter threshold, beta,
  // round budget) for the named preset; explicit flag values are applied
  // on top by the CLI.
  void apply_dataset_defaults();

  // Every problem at once, empty when valid.
  std::vector<std::string> validate() const;

  std::string to_json_string() const;
  static ExperimentConfig from_json_string(const std::string& text);

  // Deterministic directory name: readable prefix + config digest.
  std::string run_id() const;
};

}  // namespace fedrkg
