#include "fedrkg/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

namespace fedrkg {

Regime parse_regime(const std::string& tag) {
  if (tag == "full_replacement") return Regime::full_replacement;
  if (tag == "local_only") return Regime::local_only;
  if (tag == "knowledge_guidance") return Regime::knowledge_guidance;
  if (tag == "adaptive_guidance") return Regime::adaptive_guidance;
  throw std::runtime_error(
      "unknown regime '" + tag +
      "' (expected full_replacement, local_only, knowledge_guidance, or "
      "adaptive_guidance)");
}

std::string regime_name(Regime regime) {
  switch (regime) {
    case Regime::full_replacement: return "full_replacement";
    case Regime::local_only: return "local_only";
    case Regime::knowledge_guidance: return "knowledge_guidance";
    case Regime::adaptive_guidance: return "adaptive_guidance";
  }
  return "?";
}

void ExperimentConfig::apply_dataset_defaults() {
  if (dataset == "ml-1m") {
    format = "ml1m";
    min_interactions = 20;
    hp.beta = 0.99;
    hp.rounds = 1000;
  } else if (dataset == "amazon-video") {
    format = "csv";
    min_interactions = 10;
    hp.beta = 0.99;
    hp.rounds = 1000;
  } else if (dataset == "filmtrust") {
    format = "space";
    min_interactions = 10;
    hp.beta = 0.99;
    hp.rounds = 1000;
  } else if (dataset == "lastfm-2k") {
    format = "tsv";
    min_interactions = 10;
    hp.beta = 0.999;
    hp.rounds = 3000;
  } else if (dataset == "synthetic-video") {
    // Amazon-Video-scale synthetic corpus.
    format = "csv";
    min_interactions = 10;
    hp.beta = 0.99;
    hp.rounds = 1000;
  }
  // Unknown names keep the generic defaults; data_path decides loadability.
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  const auto complain = [&problems](const std::string& text) {
    problems.push_back(text);
  };

  if (hp.dim == 0) complain("hp.dim: must be >= 1");
  if (!(hp.eta > 0.0)) complain("hp.eta: learning rate must be > 0");
  if (!(hp.eta_gate > 0.0))
    complain("hp.eta_gate: gate learning rate must be > 0");
  if (hp.beta < 0.0 || hp.beta > 1.0 || !std::isfinite(hp.beta))
    complain("hp.beta: retention must lie in [0, 1]");
  if (hp.guidance_interval < 1) complain("hp.guidance_interval: must be >= 1");
  if (hp.batch_size < 1) complain("hp.batch_size: must be >= 1");
  if (hp.negatives_per_positive < 1)
    complain("hp.negatives_per_positive: must be >= 1");
  if (min_interactions < 3)
    complain("min_interactions: must be >= 3 (train/val/test each need one)");
  if (eval_interval < 1) complain("eval_interval: must be >= 1");
  if (eval_ks.empty()) complain("eval_ks: need at least one cutoff");
  for (int k : eval_ks)
    if (k < 1) complain("eval_ks: cutoffs must be >= 1");
  if (patience < 1) complain("patience: must be >= 1");
  if (workers < 1) complain("workers: must be >= 1");
  if (privacy.enabled) {
    if (!(privacy.clip_threshold > 0.0))
      complain("privacy.clip_threshold: must be > 0 when privacy is enabled");
    if (privacy.noise_stddev < 0.0)
      complain("privacy.noise_stddev: must be >= 0");
  }
  if (!data_path.empty() && !std::filesystem::exists(data_path))
    complain("data_path: no such file: " + data_path);
  if (!resume_path.empty() && !std::filesystem::exists(resume_path))
    complain("resume_path: no such file: " + resume_path);
  try {
    parse_raw_format(format);
  } catch (const std::exception& e) {
    complain(std::string("format: ") + e.what());
  }
  return problems;
}

namespace {

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dataset"] = c.dataset;
  j["data_path"] = c.data_path;
  j["format"] = c.format;
  j["min_interactions"] = c.min_interactions;
  j["synthetic"] = {{"users", c.synthetic.users},
                    {"items", c.synthetic.items},
                    {"clusters", c.synthetic.clusters},
                    {"latent_dim", c.synthetic.latent_dim},
                    {"min_interactions", c.synthetic.min_interactions},
                    {"mean_extra", c.synthetic.mean_extra},
                    {"max_interactions", c.synthetic.max_interactions},
                    {"popularity_skew", c.synthetic.popularity_skew},
                    {"popularity_weight", c.synthetic.popularity_weight},
                    {"affinity_weight", c.synthetic.affinity_weight},
                    {"quirk_scale", c.synthetic.quirk_scale},
                    {"item_noise", c.synthetic.item_noise},
                    {"seed", c.synthetic.seed}};
  j["hp"] = {{"dim", c.hp.dim},
             {"eta", c.hp.eta},
             {"eta_gate", c.hp.eta_gate},
             {"local_epochs", c.hp.local_epochs},
             {"gate_epochs", c.hp.gate_epochs},
             {"beta", c.hp.beta},
             {"rounds", c.hp.rounds},
             {"guidance_interval", c.hp.guidance_interval},
             {"clients_per_round", c.hp.clients_per_round},
             {"batch_size", c.hp.batch_size},
             {"negatives_per_positive", c.hp.negatives_per_positive},
             {"seed", c.hp.seed}};
  j["regime"] = regime_name(c.regime);
  j["privacy"] = {{"enabled", c.privacy.enabled},
                  {"clip_threshold", c.privacy.clip_threshold},
                  {"noise_stddev", c.privacy.noise_stddev},
                  {"delta", c.privacy.delta}};
  j["eval_interval"] = c.eval_interval;
  j["eval_ks"] = c.eval_ks;
  j["eval_guidance_boundaries"] = c.eval_guidance_boundaries;
  j["rank_excludes_val"] = c.rank_excludes_val;
  j["patience"] = c.patience;
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  j["snapshot_interval"] = c.snapshot_interval;
  j["resume_path"] = c.resume_path;
  j["dump_gate_stats"] = c.dump_gate_stats;
  return j;
}

}  // namespace

std::string ExperimentConfig::to_json_string() const {
  return to_json(*this).dump(2);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig c;
  j.at("dataset").get_to(c.dataset);
  j.at("data_path").get_to(c.data_path);
  j.at("format").get_to(c.format);
  j.at("min_interactions").get_to(c.min_interactions);
  const auto& s = j.at("synthetic");
  s.at("users").get_to(c.synthetic.users);
  s.at("items").get_to(c.synthetic.items);
  s.at("clusters").get_to(c.synthetic.clusters);
  s.at("latent_dim").get_to(c.synthetic.latent_dim);
  s.at("min_interactions").get_to(c.synthetic.min_interactions);
  s.at("mean_extra").get_to(c.synthetic.mean_extra);
  s.at("max_interactions").get_to(c.synthetic.max_interactions);
  s.at("popularity_skew").get_to(c.synthetic.popularity_skew);
  s.at("popularity_weight").get_to(c.synthetic.popularity_weight);
  s.at("affinity_weight").get_to(c.synthetic.affinity_weight);
  s.at("quirk_scale").get_to(c.synthetic.quirk_scale);
  s.at("item_noise").get_to(c.synthetic.item_noise);
  s.at("seed").get_to(c.synthetic.seed);
  const auto& h = j.at("hp");
  h.at("dim").get_to(c.hp.dim);
  h.at("eta").get_to(c.hp.eta);
  h.at("eta_gate").get_to(c.hp.eta_gate);
  h.at("local_epochs").get_to(c.hp.local_epochs);
  h.at("gate_epochs").get_to(c.hp.gate_epochs);
  h.at("beta").get_to(c.hp.beta);
  h.at("rounds").get_to(c.hp.rounds);
  h.at("guidance_interval").get_to(c.hp.guidance_interval);
  h.at("clients_per_round").get_to(c.hp.clients_per_round);
  h.at("batch_size").get_to(c.hp.batch_size);
  h.at("negatives_per_positive").get_to(c.hp.negatives_per_positive);
  h.at("seed").get_to(c.hp.seed);
  c.regime = parse_regime(j.at("regime").get<std::string>());
  const auto& p = j.at("privacy");
  p.at("enabled").get_to(c.privacy.enabled);
  p.at("clip_threshold").get_to(c.privacy.clip_threshold);
  p.at("noise_stddev").get_to(c.privacy.noise_stddev);
  p.at("delta").get_to(c.privacy.delta);
  j.at("eval_interval").get_to(c.eval_interval);
  c.eval_ks = j.at("eval_ks").get<std::vector<int>>();
  j.at("eval_guidance_boundaries").get_to(c.eval_guidance_boundaries);
  j.at("rank_excludes_val").get_to(c.rank_excludes_val);
  j.at("patience").get_to(c.patience);
  j.at("output_dir").get_to(c.output_dir);
  j.at("workers").get_to(c.workers);
  j.at("snapshot_interval").get_to(c.snapshot_interval);
  j.at("resume_path").get_to(c.resume_path);
  j.at("dump_gate_stats").get_to(c.dump_gate_stats);
  return c;
}

std::string ExperimentConfig::run_id() const {
  // FNV-1a over the canonical json, minus fields that do not affect the
  // simulation itself.
  ExperimentConfig canon = *this;
  canon.output_dir.clear();
  canon.workers = 1;
  canon.resume_path.clear();
  canon.snapshot_interval = 0;
  canon.dump_gate_stats = false;
  const std::string text = canon.to_json_string();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char byte : text) {
    hash ^= byte;
    hash *= 0x100000001b3ULL;
  }
  char digest[17];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(hash));
  return dataset + "_" + regime_name(regime) + "_s" +
         std::to_string(hp.seed) + (privacy.enabled ? "_dp_" : "_") +
         std::string(digest).substr(0, 8);
}

}  // namespace fedrkg
