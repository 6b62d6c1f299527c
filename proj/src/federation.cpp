#include "fedrkg/federation.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "fedrkg/io.hpp"
#include "fedrkg/parallel.hpp"

namespace fedrkg {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string timestamp_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace

Simulation::Simulation(const InteractionDataset& dataset,
                       const ExperimentConfig& config)
    : dataset_(dataset), config_(config) {
  const auto problems = config_.validate();
  if (!problems.empty()) {
    std::string message = "invalid configuration:";
    for (const auto& p : problems) message += "\n  - " + p;
    throw std::runtime_error(message);
  }
  if (config_.hp.clients_per_round > dataset_.user_count())
    throw std::runtime_error("clients_per_round exceeds the user count");
}

std::size_t Simulation::clients_per_round() const {
  return config_.hp.clients_per_round == 0 ? dataset_.user_count()
                                           : config_.hp.clients_per_round;
}

void Simulation::init() {
  const std::size_t n = dataset_.user_count();
  const std::size_t m = dataset_.item_count();
  const std::uint64_t seed = config_.hp.seed;

  Rng global_rng = Rng::stream(seed, Stream::global_init, 0, 0);
  GlobalState global(init_global(m, config_.hp.dim, global_rng),
                     std::vector<double>(n, 1.0 / static_cast<double>(n)));
  global_ = std::move(global);

  clients_.clear();
  clients_.reserve(n);
  const Matrix& initial = global_.items();
  for (UserId u = 0; u < n; ++u) {
    Rng rng = Rng::stream(seed, Stream::client_init, u, 0);
    clients_.push_back(init_client(u, initial, rng));
  }
  reads_at_init_ = global_.read_count();
  initialized_ = true;
}

std::vector<UserId> Simulation::sample_participants(std::size_t t) const {
  const std::size_t n = dataset_.user_count();
  const std::size_t take = clients_per_round();
  Rng rng = Rng::stream(config_.hp.seed, Stream::participant_sampling, 0, t);

  // Partial Fisher-Yates; uniform without replacement.
  std::vector<UserId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t pick = k + rng.below(n - k);
    std::swap(ids[k], ids[pick]);
  }
  ids.resize(take);
  std::sort(ids.begin(), ids.end());
  return ids;
}

RoundLog Simulation::run_round(std::size_t t) {
  if (!initialized_) throw std::logic_error("run_round before init");
  const auto start = std::chrono::steady_clock::now();

  RoundLog log;
  log.round = t;
  log.regime = config_.regime;
  log.participants = sample_participants(t);

  parallel_for(log.participants.size(), config_.workers, [&](std::size_t k) {
    const UserId u = log.participants[k];
    Rng train_rng = Rng::stream(config_.hp.seed, Stream::training, u, t);
    Rng noise_rng = Rng::stream(config_.hp.seed, Stream::noise, u, t);
    local_train_rec(clients_[u], dataset_, config_.hp, train_rng,
                    config_.privacy, noise_rng);
  });

  switch (config_.regime) {
    case Regime::local_only:
      break;  // updated parameters stay local forever
    case Regime::full_replacement: {
      // The conventional loop: aggregate every round, then every client
      // adopts the aggregate wholesale.
      global_.replace(aggregate_global(clients_, global_.weights()));
      global_.round = t;
      const Matrix& aggregate = global_.items();
      parallel_for(clients_.size(), config_.workers, [&](std::size_t u) {
        clients_[u].item_embeddings = aggregate;
      });
      break;
    }
    case Regime::knowledge_guidance:
    case Regime::adaptive_guidance:
      if (t % config_.hp.guidance_interval == 0) run_guidance_round(t, log);
      break;
  }

  log.wall_seconds = seconds_since(start);
  return log;
}

void Simulation::run_guidance_round(std::size_t t, RoundLog& log) {
  log.guidance_applied = true;
  global_.replace(aggregate_global(clients_, global_.weights()));
  global_.round = t;
  const Matrix& aggregate = global_.items();  // one logical read per round

  if (config_.regime == Regime::knowledge_guidance) {
    parallel_for(clients_.size(), config_.workers, [&](std::size_t u) {
      knowledge_guidance(clients_[u].item_embeddings, aggregate,
                         config_.hp.beta);
    });
    return;
  }

  // Adaptive guidance: fit the gate with everything else frozen, then
  // commit the gated fusion on every row.
  parallel_for(clients_.size(), config_.workers, [&](std::size_t u) {
    Rng gate_rng =
        Rng::stream(config_.hp.seed, Stream::gate_training, u, t);
    local_train_gate(clients_[u], aggregate, dataset_, config_.hp, gate_rng);
    apply_adaptive_guidance(clients_[u], aggregate, config_.hp.beta);
  });
}

EvalPoint Simulation::evaluate_now(std::size_t round) const {
  EvalOptions options;
  options.ks = config_.eval_ks;
  options.exclude_val_when_test = config_.rank_excludes_val;
  options.workers = config_.workers;

  EvalPoint point;
  point.round = round;
  point.val = evaluate(clients_, dataset_, Split::validation, round, options);
  point.test = evaluate(clients_, dataset_, Split::test, round, options);
  return point;
}

namespace {

constexpr const char* kSnapshotMagic = "FRKGSN01";
constexpr const char* kHistoryMagic = "FRKGMH01";

void write_metrics_record(BinaryWriter& w, const MetricsRecord& record) {
  w.u64(record.round);
  w.u32(record.split == Split::validation ? 0 : 1);
  w.u64(record.recall_at.size());
  for (const auto& [k, v] : record.recall_at) {
    w.u32(static_cast<std::uint32_t>(k));
    w.f64(v);
  }
  w.u64(record.ndcg_at.size());
  for (const auto& [k, v] : record.ndcg_at) {
    w.u32(static_cast<std::uint32_t>(k));
    w.f64(v);
  }
  w.u64(record.per_user_ranks.size());
  for (std::uint32_t r : record.per_user_ranks) w.u32(r);
}

MetricsRecord read_metrics_record(BinaryReader& r) {
  MetricsRecord record;
  record.round = r.u64();
  record.split = r.u32() == 0 ? Split::validation : Split::test;
  const std::uint64_t recalls = r.u64();
  for (std::uint64_t k = 0; k < recalls; ++k) {
    const int cutoff = static_cast<int>(r.u32());
    record.recall_at[cutoff] = r.f64();
  }
  const std::uint64_t ndcgs = r.u64();
  for (std::uint64_t k = 0; k < ndcgs; ++k) {
    const int cutoff = static_cast<int>(r.u32());
    record.ndcg_at[cutoff] = r.f64();
  }
  record.per_user_ranks.resize(r.u64());
  for (auto& rank : record.per_user_ranks) rank = r.u32();
  return record;
}

}  // namespace

void Simulation::save_snapshot(const std::filesystem::path& path,
                               const MetricsHistory& history,
                               std::size_t next_round,
                               std::size_t evals_since_best) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    BinaryWriter w(tmp);
    w.magic(kSnapshotMagic);
    w.str(config_.run_id());
    w.u64(next_round);
    w.u64(evals_since_best);

    w.u64(global_.round);
    const Matrix& global = global_.items();
    w.u64(global.rows());
    w.u64(global.cols());
    w.f64_span({global.data(), global.size()});

    w.u64(clients_.size());
    for (const ClientState& client : clients_) {
      w.u32(client.user);
      w.f64_span({client.item_embeddings.data(), client.item_embeddings.size()});
      w.f64_span(client.user_embedding);
      w.f64_span(client.gate.weights);
      w.f64(client.gate.bias);
    }

    w.u64(history.points.size());
    for (const EvalPoint& point : history.points) {
      w.u64(point.round);
      write_metrics_record(w, point.val);
      write_metrics_record(w, point.test);
    }
    w.u64(history.best_index);
    w.u32(static_cast<std::uint32_t>(history.primary_k));
    w.close();
  }
  std::filesystem::rename(tmp, path);
}

std::pair<std::size_t, std::size_t> Simulation::load_snapshot(
    const std::filesystem::path& path, MetricsHistory& history) {
  if (!initialized_) init();

  BinaryReader r(path);
  r.expect_magic(kSnapshotMagic);
  const std::string snapshot_run = r.str();
  if (snapshot_run != config_.run_id())
    throw std::runtime_error("snapshot " + path.string() +
                             " belongs to run " + snapshot_run +
                             ", not the configured run " + config_.run_id());
  const std::size_t next_round = r.u64();
  const std::size_t evals_since_best = r.u64();

  global_.round = r.u64();
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  Matrix global(rows, cols);
  r.f64_span({global.data(), global.size()});
  global_.replace(std::move(global));

  const std::uint64_t n = r.u64();
  if (n != clients_.size())
    throw std::runtime_error("snapshot client count mismatch");
  for (ClientState& client : clients_) {
    client.user = r.u32();
    r.f64_span({client.item_embeddings.data(), client.item_embeddings.size()});
    r.f64_span(client.user_embedding);
    r.f64_span(client.gate.weights);
    client.gate.bias = r.f64();
  }

  history.points.clear();
  const std::uint64_t points = r.u64();
  for (std::uint64_t k = 0; k < points; ++k) {
    EvalPoint point;
    point.round = r.u64();
    point.val = read_metrics_record(r);
    point.test = read_metrics_record(r);
    history.points.push_back(std::move(point));
  }
  history.best_index = r.u64();
  history.primary_k = static_cast<int>(r.u32());

  reads_at_init_ = global_.read_count();
  return {next_round, evals_since_best};
}

void save_history(const MetricsHistory& history,
                  const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic(kHistoryMagic);
  w.u64(history.points.size());
  for (const EvalPoint& point : history.points) {
    w.u64(point.round);
    write_metrics_record(w, point.val);
    write_metrics_record(w, point.test);
  }
  w.u64(history.best_index);
  w.u32(static_cast<std::uint32_t>(history.primary_k));
  w.u32(history.stopped_early ? 1 : 0);
  w.u64(history.final_round);
  w.close();
}

MetricsHistory load_history(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kHistoryMagic);
  MetricsHistory history;
  const std::uint64_t points = r.u64();
  for (std::uint64_t k = 0; k < points; ++k) {
    EvalPoint point;
    point.round = r.u64();
    point.val = read_metrics_record(r);
    point.test = read_metrics_record(r);
    history.points.push_back(std::move(point));
  }
  history.best_index = r.u64();
  history.primary_k = static_cast<int>(r.u32());
  history.stopped_early = r.u32() != 0;
  history.final_round = r.u64();
  return history;
}

ExperimentResult run_experiment(const InteractionDataset& dataset,
                                const ExperimentConfig& config,
                                std::ostream* progress) {
  const auto t_start = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.manifest.run_id = config.run_id();
  result.manifest.config_json = config.to_json_string();
#ifdef FEDRKG_BUILD_ID
  result.manifest.build_id = FEDRKG_BUILD_ID;
#else
  result.manifest.build_id = "unknown";
#endif
  result.manifest.users = dataset.user_count();
  result.manifest.items = dataset.item_count();
  result.manifest.interactions = dataset.interaction_count();
  result.manifest.data_source =
      config.data_path.empty() ? "synthetic" : "file:" + config.data_path;
  result.manifest.started_at = timestamp_now();

  Simulation sim(dataset, config);

  MetricsHistory& history = result.history;
  history.primary_k =
      std::count(config.eval_ks.begin(), config.eval_ks.end(), 10) > 0
          ? 10
          : *std::max_element(config.eval_ks.begin(), config.eval_ks.end());

  std::size_t first_round = 1;
  std::size_t evals_since_best = 0;
  double eval_seconds = 0.0;

  const auto record_eval = [&](std::size_t round) {
    const auto t0 = std::chrono::steady_clock::now();
    EvalPoint point = sim.evaluate_now(round);
    eval_seconds += seconds_since(t0);
    const double current = point.val.ndcg_at.at(history.primary_k);
    const double best =
        history.points.empty()
            ? -1.0
            : history.best().val.ndcg_at.at(history.primary_k);
    history.points.push_back(std::move(point));
    if (current > best) {
      history.best_index = history.points.size() - 1;
      evals_since_best = 0;
    } else {
      ++evals_since_best;
    }
    if (progress) {
      const EvalPoint& p = history.points.back();
      *progress << "round " << round << " val N@" << history.primary_k << " "
                << p.val.ndcg_at.at(history.primary_k) << " test N@"
                << history.primary_k << " "
                << p.test.ndcg_at.at(history.primary_k) << "\n";
    }
  };

  if (!config.resume_path.empty()) {
    auto [next_round, since_best] =
        sim.load_snapshot(config.resume_path, history);
    first_round = next_round;
    evals_since_best = since_best;
    if (progress)
      *progress << "resumed from " << config.resume_path << " at round "
                << first_round << "\n";
  } else {
    sim.init();
    record_eval(0);
  }

  const std::size_t interval = config.hp.guidance_interval;
  const bool guided = config.regime == Regime::knowledge_guidance ||
                      config.regime == Regime::adaptive_guidance;
  const auto wants_eval = [&](std::size_t t) {
    if (t % config.eval_interval == 0) return true;
    if (t == config.hp.rounds) return true;
    if (config.eval_guidance_boundaries && guided) {
      if (t % interval == 0) return true;
      if ((t + 1) % interval == 0 && t + 1 <= config.hp.rounds) return true;
    }
    return false;
  };

  double train_seconds = 0.0;
  double guidance_seconds = 0.0;
  std::size_t last_round = first_round - 1;
  const std::filesystem::path snapshot_path =
      std::filesystem::path(config.output_dir) / config.run_id() /
      "snapshot.bin";

  for (std::size_t t = first_round; t <= config.hp.rounds; ++t) {
    RoundLog log = sim.run_round(t);
    if (log.guidance_applied)
      guidance_seconds += log.wall_seconds;
    else
      train_seconds += log.wall_seconds;

    if (wants_eval(t)) {
      record_eval(t);
      log.val_metrics = history.points.back().val;
      log.test_metrics = history.points.back().test;
    }

    if (config.dump_gate_stats && log.guidance_applied &&
        config.regime == Regime::adaptive_guidance) {
      const Matrix& aggregate = sim.global().items();
      std::vector<ItemId> all_items(dataset.item_count());
      std::iota(all_items.begin(), all_items.end(), 0);
      for (UserId u = 0; u < dataset.user_count(); ++u) {
        const UserId member[1] = {u};
        const GateStatistics stats = gate_statistics(
            sim.clients(), aggregate, all_items,
            std::span<const UserId>(member, 1));
        result.gate_stats.push_back({t, u, stats.mean_value, stats.mean_logit});
      }
    }

    result.rounds.push_back(std::move(log));
    last_round = t;

    if (config.snapshot_interval > 0 && t % config.snapshot_interval == 0) {
      std::filesystem::create_directories(snapshot_path.parent_path());
      sim.save_snapshot(snapshot_path, history, t + 1, evals_since_best);
    }

    if (evals_since_best >= config.patience) {
      history.stopped_early = true;
      if (progress)
        *progress << "early stop at round " << t << " ("
                  << evals_since_best << " evaluations without improvement)\n";
      break;
    }
  }

  if (config.regime == Regime::local_only &&
      sim.global_reads_after_init() != 0)
    throw std::logic_error(
        "local_only regime read the global embeddings after init");

  history.final_round = last_round;
  result.manifest.train_seconds = train_seconds;
  result.manifest.guidance_seconds = guidance_seconds;
  result.manifest.eval_seconds = eval_seconds;
  result.manifest.total_seconds = seconds_since(t_start);
  result.manifest.finished_at = timestamp_now();
  return result;
}

}  // namespace fedrkg
