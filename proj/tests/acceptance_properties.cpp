// Property-based acceptance suite. Each criterion prints one PASS/FAIL
// line; the process exits nonzero if any criterion fails.

#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "fedrkg/evaluation.hpp"
#include "fedrkg/federation.hpp"
#include "fedrkg/guidance.hpp"
#include "fedrkg/model.hpp"
#include "fedrkg/privacy.hpp"
#include "fedrkg/report.hpp"
#include "fedrkg/synthetic.hpp"
#include "support/oracles.hpp"

using namespace fedrkg;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, bool pass,
               const std::string& detail = "") {
  std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.empty() ? "" : " | ", detail.c_str());
  if (!pass) ++g_failures;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                     double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (double& v : m.row(i)) v = rng.normal(0.0, scale);
  return m;
}

InteractionDataset probe_dataset(std::size_t user_items, std::size_t fillers,
                                 std::int64_t salt) {
  RawInteractions raw;
  for (std::size_t k = 0; k < user_items; ++k)
    raw.records.push_back({"probe", "p" + std::to_string(k), 5.0,
                           static_cast<std::int64_t>(100 + k + salt)});
  for (std::size_t k = 0; k < fillers; ++k)
    raw.records.push_back({"zfill", "f" + std::to_string(k), 5.0,
                           static_cast<std::int64_t>(100 + k)});
  return preprocess(raw, 3);
}

// criterion 1
void check_regularized_equivalence() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + rng.below(8);
    const std::size_t m = 1 + rng.below(20);
    const double beta = rng.uniform();
    const Matrix global = random_matrix(m, d, rng);
    const Matrix local = random_matrix(m, d, rng);
    for (const double lambda : {0.5, 1.0, 2.0}) {
      const double eta = (1.0 - beta) / lambda;
      const Matrix stepped = regularized_step(local, global, lambda, eta);
      Matrix fused = local;
      knowledge_guidance(fused, global, beta);
      worst = std::max(worst, oracle::max_abs_diff(fused, stepped));
    }
  }
  criterion(1, "guidance equals a regularized gradient step", worst < 1e-12,
            "max |diff| = " + std::to_string(worst));
}

// criterion 2
void check_adaptive_reduction() {
  Rng rng(102);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + rng.below(8);
    const std::size_t m = 1 + rng.below(20);
    const double beta = rng.uniform();
    const Matrix global = random_matrix(m, d, rng);
    ClientState client;
    client.item_embeddings = random_matrix(m, d, rng);
    client.user_embedding.assign(d, 0.0);
    client.gate.weights.assign(3 * d, 0.0);
    client.gate.bias = 0.0;

    Matrix fixed = client.item_embeddings;
    knowledge_guidance(fixed, global, beta);
    apply_adaptive_guidance(client, global, beta);
    worst = std::max(worst, oracle::max_abs_diff(client.item_embeddings, fixed));
  }
  criterion(2, "zeroed gates reduce adaptive to fixed guidance", worst < 1e-12,
            "max |diff| = " + std::to_string(worst));
}

// criterion 3
void check_gradients() {
  const PrivacyConfig no_privacy{};
  std::size_t checked = 0, bad = 0;
  for (std::uint64_t instance = 0; instance < 100; ++instance) {
    const std::size_t d = 2 + instance % 7;  // up to 8
    const InteractionDataset dataset =
        probe_dataset(3 + instance % 5, 8, static_cast<std::int64_t>(instance));
    const UserId u = dataset.user_id("probe");

    Rng setup(7000 + instance);
    const Matrix global = random_matrix(dataset.item_count(), d, setup, 0.4);
    Rng client_rng(7100 + instance);
    ClientState client = init_client(u, global, client_rng);
    for (double& v : client.user_embedding) v = setup.normal(0.0, 0.4);
    for (double& v : client.gate.weights) v = setup.normal(0.0, 0.4);
    client.gate.bias = setup.normal(0.0, 0.4);

    HyperParams hp;
    hp.dim = d;
    hp.eta = 1.0;
    hp.eta_gate = 1.0;
    hp.local_epochs = 1;
    hp.gate_epochs = 1;
    hp.beta = 0.8;
    hp.negatives_per_positive = 1;
    hp.batch_size = 4096;

    const std::uint64_t batch_seed = 7200 + instance;
    std::vector<TrainingBatch> batches;
    {
      Rng replica(batch_seed);
      batches = build_batches(dataset, u, hp.batch_size,
                              hp.negatives_per_positive, replica);
    }

    // Recommender path: one unit-rate step recovers the exact gradient.
    {
      ClientState stepped = client;
      Rng rng(batch_seed), noise(1);
      local_train_rec(stepped, dataset, hp, rng, no_privacy, noise);
      const auto loss = [&] {
        std::vector<double> scores(batches[0].items.size());
        for (std::size_t k = 0; k < batches[0].items.size(); ++k)
          scores[k] = predict(client, batches[0].items[k]);
        return bce_loss(scores, batches[0].labels);
      };
      for (std::size_t j = 0; j < d; ++j) {
        const double analytic =
            client.user_embedding[j] - stepped.user_embedding[j];
        const double fd = oracle::finite_difference(
            loss, &client.user_embedding[j], 1e-5);
        ++checked;
        if (!oracle::close_rel(fd, analytic, 1e-4)) ++bad;
      }
      const std::set<ItemId> touched(batches[0].items.begin(),
                                     batches[0].items.end());
      for (ItemId i : touched)
        for (std::size_t j = 0; j < d; ++j) {
          const double analytic =
              client.item_embeddings(i, j) - stepped.item_embeddings(i, j);
          const double fd = oracle::finite_difference(
              loss, &client.item_embeddings(i, j), 1e-5);
          ++checked;
          if (!oracle::close_rel(fd, analytic, 1e-4)) ++bad;
        }
    }

    // Gate path, same idea with fused temporary embeddings.
    {
      ClientState stepped = client;
      Rng rng(batch_seed);
      local_train_gate(stepped, global, dataset, hp, rng);
      const auto loss = [&] {
        std::vector<double> scores(batches[0].items.size());
        for (std::size_t k = 0; k < batches[0].items.size(); ++k) {
          const ItemId i = batches[0].items[k];
          const double g = gate_forward(client.gate,
                                        client.item_embeddings.row(i),
                                        global.row(i));
          double logit = 0.0;
          for (std::size_t j = 0; j < d; ++j)
            logit += client.user_embedding[j] *
                     (hp.beta * client.item_embeddings(i, j) +
                      2.0 * (1.0 - hp.beta) * g * global(i, j));
          scores[k] = sigmoid(logit);
        }
        return bce_loss(scores, batches[0].labels);
      };
      for (std::size_t j = 0; j < 3 * d; ++j) {
        const double analytic =
            client.gate.weights[j] - stepped.gate.weights[j];
        const double fd =
            oracle::finite_difference(loss, &client.gate.weights[j], 1e-5);
        ++checked;
        if (!oracle::close_rel(fd, analytic, 1e-4)) ++bad;
      }
      const double analytic_bias = client.gate.bias - stepped.gate.bias;
      const double fd_bias =
          oracle::finite_difference(loss, &client.gate.bias, 1e-5);
      ++checked;
      if (!oracle::close_rel(fd_bias, analytic_bias, 1e-4)) ++bad;
    }
  }
  criterion(3, "analytic gradients match central finite differences",
            bad == 0,
            std::to_string(checked) + " coordinates, " + std::to_string(bad) +
                " mismatches");
}

// criterion 4
void check_gate_freezing() {
  bool frozen = true;
  for (std::uint64_t instance = 0; instance < 50; ++instance) {
    const InteractionDataset dataset =
        probe_dataset(4 + instance % 4, 10, static_cast<std::int64_t>(instance));
    const UserId u = dataset.user_id("probe");
    Rng setup(8000 + instance);
    const Matrix global = random_matrix(dataset.item_count(), 6, setup, 0.3);
    Rng client_rng(8100 + instance);
    ClientState client = init_client(u, global, client_rng);
    const ClientState before = client;

    HyperParams hp;
    hp.dim = 6;
    hp.eta_gate = 0.1;
    hp.gate_epochs = 3;
    hp.beta = 0.9;
    hp.negatives_per_positive = 2;
    Rng rng(8200 + instance);
    local_train_gate(client, global, dataset, hp, rng);
    frozen = frozen && client.item_embeddings == before.item_embeddings &&
             client.user_embedding == before.user_embedding;
  }
  criterion(4, "gate training freezes recommender parameters (bit-exact)",
            frozen);
}

// criterion 5
void check_metric_oracles() {
  Rng rng(105);
  std::size_t bad_ranks = 0;
  std::vector<InteractionDataset> pool;
  for (int k = 0; k < 40; ++k)
    pool.push_back(probe_dataset(3 + rng.below(8), 3 + rng.below(38), k));

  for (int trial = 0; trial < 10000; ++trial) {
    const InteractionDataset& dataset = pool[rng.below(pool.size())];
    const UserId u = dataset.user_id("probe");
    const std::size_t d = 3;
    ClientState client;
    client.user = u;
    client.item_embeddings = random_matrix(dataset.item_count(), d, rng);
    // Quantized scores so ties are common.
    for (std::size_t i = 0; i < client.item_embeddings.rows(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        client.item_embeddings(i, j) =
            std::round(client.item_embeddings(i, j) * 2.0) / 2.0;
    client.user_embedding.assign(d, 0.0);
    client.user_embedding[0] = 1.0;

    const Split split = trial % 2 == 0 ? Split::test : Split::validation;
    const ItemId heldout =
        split == Split::test ? dataset.test(u) : dataset.val(u);
    std::vector<std::pair<double, ItemId>> scored;
    for (ItemId i = 0; i < dataset.item_count(); ++i) {
      if (dataset.in_train(u, i)) continue;
      if (split == Split::test && i == dataset.val(u)) continue;
      scored.emplace_back(predict_logit(client, i), i);
    }
    if (rank_heldout(client, dataset, split) !=
        oracle::rank_by_sorting(scored, heldout))
      ++bad_ranks;
  }

  // Aggregate metrics against independent per-user folds.
  std::size_t bad_metrics = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::uint32_t> ranks(1 + rng.below(60));
    for (auto& r : ranks) r = 1 + static_cast<std::uint32_t>(rng.below(55));
    for (int k : {1, 5, 10, 50}) {
      double hits = 0.0, gain = 0.0;
      for (std::uint32_t r : ranks)
        if (r <= static_cast<std::uint32_t>(k)) {
          hits += 1.0;
          gain += 1.0 / std::log2(1.0 + r);
        }
      const double n = static_cast<double>(ranks.size());
      if (!oracle::close_rel(recall_at_k(ranks, k), 100.0 * hits / n, 1e-12))
        ++bad_metrics;
      if (!oracle::close_rel(ndcg_at_k(ranks, k), 100.0 * gain / n, 1e-12))
        ++bad_metrics;
    }
  }

  const bool spot =
      ndcg_at_k(std::vector<std::uint32_t>{1}, 5) == 100.0 &&
      std::abs(ndcg_at_k(std::vector<std::uint32_t>{3}, 10) - 50.0) < 1e-12 &&
      std::abs(ndcg_at_k(std::vector<std::uint32_t>{3}, 3) - 50.0) < 1e-12;

  criterion(5, "ranking and metrics agree with exhaustive oracles",
            bad_ranks == 0 && bad_metrics == 0 && spot,
            "10000 rank cases (" + std::to_string(bad_ranks) +
                " bad), 300 metric vectors (" + std::to_string(bad_metrics) +
                " bad)");
}

// criterion 6
void check_ldp() {
  Rng rng(106);
  std::size_t clip_violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t rows = 1 + rng.below(8);
    const std::size_t cols = 1 + rng.below(8);
    Matrix grad = random_matrix(rows, cols, rng, std::exp(rng.normal(0, 1.5)));
    const double c = 0.01 + rng.uniform();
    clip_gradient(grad, c);
    if (grad.frobenius_norm() > c * (1.0 + 1e-9)) ++clip_violations;
  }

  // Movement bound over a sync window with sigma = 0.
  const InteractionDataset dataset = probe_dataset(12, 30, 0);
  const UserId u = dataset.user_id("probe");
  Rng setup(9000);
  const Matrix global = random_matrix(dataset.item_count(), 8, setup, 0.1);
  Rng client_rng(9001);
  ClientState client = init_client(u, global, client_rng);
  const Matrix before = client.item_embeddings;

  HyperParams hp;
  hp.dim = 8;
  hp.eta = 0.4;
  hp.local_epochs = 2;
  hp.negatives_per_positive = 4;
  PrivacyConfig privacy;
  privacy.enabled = true;
  privacy.clip_threshold = 0.05;
  privacy.noise_stddev = 0.0;

  std::size_t steps = 0;
  for (std::size_t round = 0; round < 15; ++round) {
    Rng rng_r(9100 + round), noise(9200 + round);
    steps += local_train_rec(client, dataset, hp, rng_r, privacy, noise).steps;
  }
  Matrix delta = client.item_embeddings;
  for (std::size_t i = 0; i < delta.rows(); ++i)
    for (std::size_t j = 0; j < delta.cols(); ++j) delta(i, j) -= before(i, j);
  const double moved = delta.frobenius_norm();
  const double bound =
      hp.eta * static_cast<double>(steps) * privacy.clip_threshold;

  criterion(6, "clip norm bound and windowed movement bound hold",
            clip_violations == 0 && moved <= bound + 1e-9,
            "moved " + std::to_string(moved) + " <= " + std::to_string(bound));
}

// criterion 7
void check_parameter_counts() {
  Rng rng(107);
  bool ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.below(2000);
    const std::size_t d = 1 + rng.below(96);
    ClientState client;
    client.item_embeddings = Matrix(m, d);
    client.user_embedding.assign(d, 0.0);
    client.gate.weights.assign(3 * d, 0.0);
    ok = ok && count_parameters(client, ParamPhase::steady) ==
                   m * d + 4 * d + 1 &&
         count_parameters(client, ParamPhase::guidance_peak) ==
             2 * m * d + 4 * d + 1 &&
         count_parameters(client, ParamPhase::inference) ==
             m * d + 4 * d + 1;
  }
  criterion(7, "parameter counts match the memory-analysis formulas", ok);
}

// criterion 8
void check_determinism() {
  SyntheticSpec spec;
  spec.users = 30;
  spec.items = 200;
  spec.seed = 77;
  const InteractionDataset dataset = preprocess(generate_synthetic(spec), 10);

  ExperimentConfig config;
  config.dataset = "acceptance";
  config.regime = Regime::adaptive_guidance;
  config.hp.dim = 8;
  config.hp.rounds = 12;
  config.hp.guidance_interval = 4;
  config.hp.seed = 3;
  config.eval_interval = 3;
  config.eval_guidance_boundaries = true;

  ExperimentConfig threaded = config;
  threaded.workers = 4;

  const ExperimentResult a = run_experiment(dataset, config);
  const ExperimentResult b = run_experiment(dataset, threaded);
  const bool identical = a.history == b.history &&
                         format_metrics_csv(a.history) ==
                             format_metrics_csv(b.history);
  criterion(8, "runs are byte-identical across worker counts", identical);
}

}  // namespace

int main() {
  check_regularized_equivalence();
  check_adaptive_reduction();
  check_gradients();
  check_gate_freezing();
  check_metric_oracles();
  check_ldp();
  check_parameter_counts();
  check_determinism();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all property criteria passed\n");
  return 0;
}
