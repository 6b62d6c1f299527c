// Experiment runner: single runs, parameter sweeps, resume.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fedrkg/config.hpp"
#include "fedrkg/dataset.hpp"
#include "fedrkg/federation.hpp"
#include "fedrkg/report.hpp"
#include "fedrkg/synthetic.hpp"

namespace {

using namespace fedrkg;

// Conventional raw-file names looked up under FEDRKG_DATA_DIR.
std::vector<std::string> data_file_candidates(const std::string& dataset) {
  if (dataset == "ml-1m")
    return {"ml-1m/ratings.dat", "ml-1m.dat", "ratings.dat"};
  if (dataset == "amazon-video")
    return {"amazon-video/ratings.csv", "amazon-video.csv",
            "ratings_Amazon_Instant_Video.csv"};
  if (dataset == "filmtrust")
    return {"filmtrust/ratings.txt", "filmtrust.txt"};
  if (dataset == "lastfm-2k")
    return {"lastfm-2k/user_artists.dat", "lastfm-2k.dat", "user_artists.dat"};
  return {};
}

std::string resolve_data_path(const ExperimentConfig& config) {
  if (!config.data_path.empty()) return config.data_path;
  if (config.dataset.rfind("synthetic", 0) == 0) return {};
  const char* dir = std::getenv("FEDRKG_DATA_DIR");
  if (dir == nullptr) return {};
  for (const std::string& name : data_file_candidates(config.dataset)) {
    const std::filesystem::path candidate = std::filesystem::path(dir) / name;
    if (std::filesystem::exists(candidate)) return candidate.string();
  }
  return {};
}

InteractionDataset load_configured_dataset(ExperimentConfig& config,
                                           const std::string& cache_path) {
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    std::cerr << "loading dataset cache " << cache_path << "\n";
    return load_dataset_cache(cache_path);
  }

  RawInteractions raw;
  config.data_path = resolve_data_path(config);
  if (!config.data_path.empty()) {
    std::cerr << "loading " << config.data_path << " as "
              << config.format << "\n";
    raw = load_raw(config.data_path, parse_raw_format(config.format));
  } else if (config.dataset.rfind("synthetic", 0) == 0) {
    std::cerr << "generating synthetic dataset (seed "
              << config.synthetic.seed << ")\n";
    raw = generate_synthetic(config.synthetic);
  } else {
    throw std::runtime_error(
        "no data file for dataset '" + config.dataset +
        "'; pass --data-path or set FEDRKG_DATA_DIR");
  }

  InteractionDataset dataset = preprocess(raw, config.min_interactions);
  std::cerr << "dataset: " << dataset.user_count() << " users, "
            << dataset.item_count() << " items, "
            << dataset.interaction_count() << " interactions\n";
  if (!cache_path.empty()) {
    save_dataset_cache(dataset, cache_path);
    std::cerr << "wrote dataset cache " << cache_path << "\n";
  }
  return dataset;
}

int run_single(ExperimentConfig config, const std::string& cache_path) {
  InteractionDataset dataset = load_configured_dataset(config, cache_path);
  ExperimentResult result = run_experiment(dataset, config, &std::cerr);
  const std::filesystem::path dir = write_run_outputs(result, config);
  std::cout << format_report(result, config) << "\noutputs: " << dir.string()
            << "\n";
  return 0;
}

struct SweepValue {
  std::string text;
  bool failed = false;
  std::string error;
  MetricsHistory history;
  std::string run_dir;
};

int run_sweep(const ExperimentConfig& base, const std::string& axis,
              const std::string& values_csv, const std::string& cache_path) {
  std::vector<std::string> values;
  std::stringstream stream(values_csv);
  for (std::string item; std::getline(stream, item, ',');)
    if (!item.empty()) values.push_back(item);
  if (values.empty()) throw std::runtime_error("sweep: empty value list");

  ExperimentConfig probe = base;  // dataset shared across all sweep points
  InteractionDataset dataset = load_configured_dataset(probe, cache_path);

  std::vector<SweepValue> results;
  for (const std::string& value : values) {
    SweepValue entry;
    entry.text = value;
    ExperimentConfig config = probe;
    try {
      if (axis == "regime")
        config.regime = parse_regime(value);
      else if (axis == "t_int")
        config.hp.guidance_interval = std::stoul(value);
      else if (axis == "beta")
        config.hp.beta = std::stod(value);
      else if (axis == "eta_gate")
        config.hp.eta_gate = std::stod(value);
      else
        throw std::runtime_error(
            "unknown sweep axis '" + axis +
            "' (expected regime, t_int, beta, or eta_gate)");

      const auto problems = config.validate();
      if (!problems.empty()) {
        std::string msg = "invalid sweep point:";
        for (const auto& p : problems) msg += " " + p + ";";
        throw std::runtime_error(msg);
      }
      std::cerr << "== sweep " << axis << " = " << value << "\n";
      ExperimentResult result = run_experiment(dataset, config, &std::cerr);
      entry.run_dir = write_run_outputs(result, config).string();
      entry.history = std::move(result.history);
    } catch (const std::exception& e) {
      entry.failed = true;
      entry.error = e.what();
      std::cerr << "sweep point " << value << " failed: " << e.what() << "\n";
    }
    results.push_back(std::move(entry));
  }

  const std::filesystem::path sweep_dir =
      std::filesystem::path(base.output_dir) /
      ("sweep_" + axis + "_" + base.dataset + "_s" +
       std::to_string(base.hp.seed));
  std::filesystem::create_directories(sweep_dir);

  std::ofstream combined(sweep_dir / "combined.csv");
  combined << axis << ",status,best_round,split,metric,K,value\n";
  std::ofstream curves(sweep_dir / "curves.csv");
  curves << axis << ",round,split,metric,K,value\n";
  bool any_failed = false;
  for (const SweepValue& entry : results) {
    if (entry.failed) {
      any_failed = true;
      combined << entry.text << ",failed: " << entry.error << ",,,,\n";
      continue;
    }
    const EvalPoint& best = entry.history.best();
    for (const MetricsRecord* record : {&best.val, &best.test}) {
      for (const auto& [k, v] : record->recall_at)
        combined << entry.text << ",ok," << best.round << ","
                 << split_name(record->split) << ",R," << k << "," << v
                 << "\n";
      for (const auto& [k, v] : record->ndcg_at)
        combined << entry.text << ",ok," << best.round << ","
                 << split_name(record->split) << ",N," << k << "," << v
                 << "\n";
    }
    for (const EvalPoint& point : entry.history.points) {
      for (const MetricsRecord* record : {&point.val, &point.test}) {
        for (const auto& [k, v] : record->recall_at)
          curves << entry.text << "," << point.round << ","
                 << split_name(record->split) << ",R," << k << "," << v
                 << "\n";
        for (const auto& [k, v] : record->ndcg_at)
          curves << entry.text << "," << point.round << ","
                 << split_name(record->split) << ",N," << k << "," << v
                 << "\n";
      }
    }
  }
  std::cout << "sweep outputs: " << sweep_dir.string() << "\n";
  return any_failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated recommendation simulator with knowledge guidance"};

  std::string config_file;
  std::string dataset = "synthetic-video";
  std::string data_path, format, regime_tag, output_dir, resume_path;
  std::string cache_path;
  std::uint64_t seed = 0;
  std::size_t rounds = 0, t_int = 0, e_local = 0, e_gate = 0, dim = 0;
  std::size_t batch_size = 0, neg_per_pos = 0, min_interactions = 0;
  std::size_t eval_interval = 0, patience = 0, workers = 0;
  std::size_t snapshot_interval = 0, clients_per_round = 0;
  double beta = -1.0, eta = 0.0, eta_gate = 0.0;
  bool privacy = false;
  double clip = 0.0, sigma = -1.0;
  std::vector<int> eval_ks;
  bool eval_boundaries = false, dump_gate_stats = false;
  std::vector<std::string> sweep_args;
  std::uint64_t synth_seed = 0;

  app.add_option("--config", config_file, "JSON config file (flags override)");
  app.add_option("--dataset", dataset,
                 "ml-1m, amazon-video, filmtrust, lastfm-2k, synthetic-video");
  app.add_option("--data-path", data_path, "raw ratings file");
  app.add_option("--format", format, "raw format: ml1m, csv, tsv, space");
  app.add_option("--regime", regime_tag,
                 "full_replacement, local_only, knowledge_guidance, "
                 "adaptive_guidance");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--rounds", rounds, "communication rounds T");
  app.add_option("--t-int", t_int, "guidance interval");
  app.add_option("--beta", beta, "retention coefficient in [0,1]");
  app.add_option("--eta", eta, "recommender learning rate");
  app.add_option("--eta-gate", eta_gate, "gate learning rate");
  app.add_option("--epochs", e_local, "local epochs per round");
  app.add_option("--e-gate", e_gate, "gate epochs per guidance round");
  app.add_option("--dim", dim, "embedding dimension");
  app.add_option("--batch-size", batch_size, "training batch size");
  app.add_option("--neg-per-pos", neg_per_pos, "negatives per positive");
  app.add_option("--min-interactions", min_interactions,
                 "drop users with fewer interactions");
  app.add_option("--clients-per-round", clients_per_round,
                 "clients sampled per round (0 = all)");
  app.add_flag("--privacy", privacy, "enable gradient clipping + noise");
  app.add_option("--clip", clip, "privacy clip threshold C");
  app.add_option("--sigma", sigma, "privacy noise stddev");
  app.add_option("--eval-interval", eval_interval, "rounds between evals");
  app.add_option("--eval-k", eval_ks, "metric cutoffs (repeatable)");
  app.add_flag("--eval-guidance-boundaries", eval_boundaries,
               "also evaluate right before and at each guidance round");
  app.add_option("--patience", patience,
                 "evaluations without val improvement before stopping");
  app.add_option("--output-dir", output_dir, "run output directory");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--snapshot-interval", snapshot_interval,
                 "rounds between snapshots (0 = off)");
  app.add_option("--resume", resume_path, "snapshot file to resume from");
  app.add_flag("--dump-gate-stats", dump_gate_stats,
               "per-user gate statistics at each guidance round");
  app.add_option("--cache", cache_path, "dataset cache file (read or write)");
  app.add_option("--synth-seed", synth_seed, "synthetic generator seed");
  app.add_option("--sweep", sweep_args,
                 "axis and comma-separated values, e.g. --sweep t_int "
                 "1,10,50,100")
      ->expected(2);

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig config;
  try {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw std::runtime_error("cannot open " + config_file);
      std::stringstream buffer;
      buffer << in.rdbuf();
      config = ExperimentConfig::from_json_string(buffer.str());
    }
    if (app.count("--dataset") || config_file.empty()) {
      config.dataset = dataset;
      config.apply_dataset_defaults();
    }

    if (app.count("--data-path")) config.data_path = data_path;
    if (app.count("--format")) config.format = format;
    if (app.count("--regime")) config.regime = parse_regime(regime_tag);
    if (app.count("--seed")) config.hp.seed = seed;
    if (app.count("--rounds")) config.hp.rounds = rounds;
    if (app.count("--t-int")) config.hp.guidance_interval = t_int;
    if (app.count("--beta")) config.hp.beta = beta;
    if (app.count("--eta")) config.hp.eta = eta;
    if (app.count("--eta-gate")) config.hp.eta_gate = eta_gate;
    if (app.count("--epochs")) config.hp.local_epochs = e_local;
    if (app.count("--e-gate")) config.hp.gate_epochs = e_gate;
    if (app.count("--dim")) config.hp.dim = dim;
    if (app.count("--batch-size")) config.hp.batch_size = batch_size;
    if (app.count("--neg-per-pos"))
      config.hp.negatives_per_positive = neg_per_pos;
    if (app.count("--min-interactions"))
      config.min_interactions = min_interactions;
    if (app.count("--privacy")) config.privacy.enabled = privacy;
    if (app.count("--clip")) config.privacy.clip_threshold = clip;
    if (app.count("--sigma")) config.privacy.noise_stddev = sigma;
    if (app.count("--eval-interval")) config.eval_interval = eval_interval;
    if (app.count("--eval-k")) config.eval_ks = eval_ks;
    if (app.count("--eval-guidance-boundaries"))
      config.eval_guidance_boundaries = eval_boundaries;
    if (app.count("--patience")) config.patience = patience;
    if (app.count("--output-dir")) config.output_dir = output_dir;
    if (app.count("--workers")) config.workers = workers;
    if (app.count("--snapshot-interval"))
      config.snapshot_interval = snapshot_interval;
    if (app.count("--resume")) config.resume_path = resume_path;
    if (app.count("--dump-gate-stats"))
      config.dump_gate_stats = dump_gate_stats;
    if (app.count("--synth-seed")) config.synthetic.seed = synth_seed;
    if (app.count("--clients-per-round"))
      config.hp.clients_per_round = clients_per_round;

    const auto problems = config.validate();
    if (!problems.empty()) {
      std::cerr << "configuration errors:\n";
      for (const auto& p : problems) std::cerr << "  - " << p << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (!sweep_args.empty())
      return run_sweep(config, sweep_args[0], sweep_args[1], cache_path);
    return run_single(std::move(config), cache_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
