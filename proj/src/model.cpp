#include "fedrkg/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace fedrkg {

Matrix init_global(std::size_t item_count, std::size_t dim, Rng& rng) {
  Matrix global(item_count, dim);
  for (std::size_t i = 0; i < item_count; ++i)
    for (double& v : global.row(i)) v = rng.normal(0.0, 0.01);
  return global;
}

ClientState init_client(UserId user, const Matrix& global_items, Rng& rng) {
  ClientState client;
  client.user = user;
  client.item_embeddings = global_items;
  const std::size_t dim = global_items.cols();
  client.user_embedding.resize(dim);
  for (double& v : client.user_embedding) v = rng.normal(0.0, 0.01);
  client.gate.weights.resize(3 * dim);
  for (double& v : client.gate.weights) v = rng.normal(0.0, 0.01);
  client.gate.bias = 0.0;
  return client;
}

double predict_logit(const ClientState& client, ItemId item) {
  return dot(client.user_embedding, client.item_embeddings.row(item));
}

double predict(const ClientState& client, ItemId item) {
  return sigmoid(predict_logit(client, item));
}

double bce_loss(std::span<const double> scores,
                std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    throw std::runtime_error("bce_loss: scores and labels differ in length");
  double loss = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double s =
        std::clamp(scores[k], kScoreClamp, 1.0 - kScoreClamp);
    loss -= labels[k] ? std::log(s) : std::log(1.0 - s);
  }
  return loss;
}

std::size_t count_parameters(const ClientState& client, ParamPhase phase) {
  const std::size_t own = client.item_embeddings.size() +
                          client.user_embedding.size() +
                          client.gate.weights.size() + 1;
  if (phase == ParamPhase::guidance_peak)
    return own + client.item_embeddings.size();
  return own;
}

namespace {

// Batch gradient accumulator over the touched item rows. Rows are
// assigned compact slots in first-appearance order, which keeps every
// downstream iteration deterministic.
struct RowGradients {
  std::unordered_map<ItemId, std::size_t> slot_of;
  std::vector<ItemId> items;
  Matrix grads;

  void reset(const TrainingBatch& batch, std::size_t dim) {
    slot_of.clear();
    items.clear();
    for (ItemId i : batch.items)
      if (slot_of.emplace(i, items.size()).second) items.push_back(i);
    grads = Matrix(items.size(), dim);
  }
};

}  // namespace

TrainStats local_train_rec(ClientState& client,
                           const InteractionDataset& dataset,
                           const HyperParams& hp, Rng& rng,
                           const PrivacyConfig& privacy, Rng& noise_rng) {
  const std::size_t dim = client.user_embedding.size();
  TrainStats stats;
  std::vector<double> user_grad(dim);
  std::vector<double> scores;
  RowGradients rows;

  for (std::size_t epoch = 0; epoch < hp.local_epochs; ++epoch) {
    double epoch_loss = 0.0;
    const std::vector<TrainingBatch> batches = build_batches(
        dataset, client.user, hp.batch_size, hp.negatives_per_positive, rng);
    for (const TrainingBatch& batch : batches) {
      rows.reset(batch, dim);
      std::fill(user_grad.begin(), user_grad.end(), 0.0);
      scores.resize(batch.items.size());

      for (std::size_t k = 0; k < batch.items.size(); ++k) {
        const ItemId item = batch.items[k];
        const double score = sigmoid(predict_logit(client, item));
        scores[k] = score;
        const double residual = score - batch.labels[k];
        axpy(residual, client.item_embeddings.row(item), user_grad);
        axpy(residual, client.user_embedding,
             rows.grads.row(rows.slot_of.at(item)));
      }
      epoch_loss += bce_loss(scores, batch.labels);

      if (privacy.enabled) {
        clip_gradient(rows.grads, privacy.clip_threshold);
        add_noise(rows.grads, privacy.noise_stddev, noise_rng);
      }

      if (!rows.grads.all_finite() ||
          std::any_of(user_grad.begin(), user_grad.end(),
                      [](double v) { return !std::isfinite(v); }))
        throw std::runtime_error(
            "non-finite gradient for user " + dataset.user_key(client.user) +
            " at step " + std::to_string(stats.steps));

      // Simultaneous update: every gradient above was taken at the
      // pre-step parameter values.
      axpy(-hp.eta, user_grad, client.user_embedding);
      for (std::size_t slot = 0; slot < rows.items.size(); ++slot)
        axpy(-hp.eta, rows.grads.row(slot),
             client.item_embeddings.row(rows.items[slot]));
      ++stats.steps;
    }
    stats.last_epoch_loss = epoch_loss;
  }
  return stats;
}

}  // namespace fedrkg
