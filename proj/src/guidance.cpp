#include "fedrkg/guidance.hpp"

#include <algorithm>
#include <stdexcept>

namespace fedrkg {

Matrix aggregate_global(std::span<const ClientState> clients,
                        std::span<const double> weights) {
  if (clients.empty()) throw std::runtime_error("aggregate: no clients");
  if (clients.size() != weights.size())
    throw std::runtime_error("aggregate: weight count mismatch");
  const Matrix& first = clients.front().item_embeddings;
  Matrix global(first.rows(), first.cols());
  for (std::size_t u = 0; u < clients.size(); ++u) {
    const Matrix& local = clients[u].item_embeddings;
    if (!local.same_shape(global))
      throw std::runtime_error("aggregate: embedding shape mismatch");
    const double weight = weights[u];
    double* acc = global.data();
    const double* src = local.data();
    for (std::size_t k = 0; k < global.size(); ++k) acc[k] += weight * src[k];
  }
  return global;
}

void knowledge_guidance(Matrix& local_items, const Matrix& global_items,
                        double beta) {
  if (!local_items.same_shape(global_items))
    throw std::runtime_error("knowledge_guidance: shape mismatch");
  if (beta < 0.0 || beta > 1.0)
    throw std::runtime_error("knowledge_guidance: beta outside [0,1]");
  double* local = local_items.data();
  const double* global = global_items.data();
  const double keep = beta;
  const double mix = 1.0 - beta;
  for (std::size_t k = 0; k < local_items.size(); ++k)
    local[k] = keep * local[k] + mix * global[k];
}

Matrix regularized_step(const Matrix& local_items, const Matrix& global_items,
                        double lambda, double eta) {
  if (!local_items.same_shape(global_items))
    throw std::runtime_error("regularized_step: shape mismatch");
  const double step = eta * lambda;  // gradient is lambda * (P - P_g)
  Matrix next = local_items;
  double* out = next.data();
  const double* global = global_items.data();
  for (std::size_t k = 0; k < next.size(); ++k)
    out[k] -= step * (out[k] - global[k]);
  return next;
}

double gate_preactivation(const GateParams& gate,
                          std::span<const double> local_row,
                          std::span<const double> global_row) {
  const std::size_t dim = local_row.size();
  double acc = gate.bias;
  // Blocks in fixed order: local, global, difference.
  for (std::size_t j = 0; j < dim; ++j) acc += gate.weights[j] * local_row[j];
  for (std::size_t j = 0; j < dim; ++j)
    acc += gate.weights[dim + j] * global_row[j];
  for (std::size_t j = 0; j < dim; ++j)
    acc += gate.weights[2 * dim + j] * (local_row[j] - global_row[j]);
  return acc;
}

double gate_forward(const GateParams& gate, std::span<const double> local_row,
                    std::span<const double> global_row) {
  return sigmoid(gate_preactivation(gate, local_row, global_row));
}

void guidance_vector(double gate_value, std::span<const double> global_row,
                     std::span<double> out) {
  const double scale = 2.0 * gate_value;
  for (std::size_t j = 0; j < global_row.size(); ++j)
    out[j] = scale * global_row[j];
}

TrainStats local_train_gate(ClientState& client, const Matrix& global_items,
                            const InteractionDataset& dataset,
                            const HyperParams& hp, Rng& rng) {
  const std::size_t dim = client.user_embedding.size();
  const double mix = 1.0 - hp.beta;
  TrainStats stats;

  std::vector<double> fused(dim);
  std::vector<double> weight_grad(3 * dim);
  std::vector<double> scores;

  for (std::size_t epoch = 0; epoch < hp.gate_epochs; ++epoch) {
    double epoch_loss = 0.0;
    const std::vector<TrainingBatch> batches = build_batches(
        dataset, client.user, hp.batch_size, hp.negatives_per_positive, rng);
    for (const TrainingBatch& batch : batches) {
      std::fill(weight_grad.begin(), weight_grad.end(), 0.0);
      double bias_grad = 0.0;
      scores.resize(batch.items.size());

      for (std::size_t k = 0; k < batch.items.size(); ++k) {
        const ItemId item = batch.items[k];
        const auto local_row =
            std::span<const double>(client.item_embeddings.row(item));
        const auto global_row = global_items.row(item);

        const double gate_value =
            gate_forward(client.gate, local_row, global_row);
        for (std::size_t j = 0; j < dim; ++j)
          fused[j] = hp.beta * local_row[j] +
                     2.0 * mix * gate_value * global_row[j];
        const double score = sigmoid(dot(client.user_embedding, fused));
        scores[k] = score;

        // Chain: loss -> score logit -> gate value -> preactivation.
        const double residual = score - batch.labels[k];
        const double logit_wrt_gate =
            2.0 * mix * dot(client.user_embedding, global_row);
        const double preact_factor =
            residual * logit_wrt_gate * gate_value * (1.0 - gate_value);

        for (std::size_t j = 0; j < dim; ++j) {
          weight_grad[j] += preact_factor * local_row[j];
          weight_grad[dim + j] += preact_factor * global_row[j];
          weight_grad[2 * dim + j] +=
              preact_factor * (local_row[j] - global_row[j]);
        }
        bias_grad += preact_factor;
      }
      epoch_loss += bce_loss(scores, batch.labels);

      if (!std::isfinite(bias_grad) ||
          std::any_of(weight_grad.begin(), weight_grad.end(),
                      [](double v) { return !std::isfinite(v); }))
        throw std::runtime_error("non-finite gate gradient for user " +
                                 dataset.user_key(client.user));

      axpy(-hp.eta_gate, weight_grad, client.gate.weights);
      client.gate.bias -= hp.eta_gate * bias_grad;
      ++stats.steps;
    }
    stats.last_epoch_loss = epoch_loss;
  }
  return stats;
}

void apply_adaptive_guidance(ClientState& client, const Matrix& global_items,
                             double beta) {
  if (!client.item_embeddings.same_shape(global_items))
    throw std::runtime_error("adaptive guidance: shape mismatch");
  const double mix = 1.0 - beta;
  for (std::size_t i = 0; i < global_items.rows(); ++i) {
    const auto local_row = client.item_embeddings.row(i);
    const auto global_row = global_items.row(i);
    // Gate evaluated on the pre-fusion row, then the row is overwritten.
    const double gate_value = gate_forward(client.gate, local_row, global_row);
    const double scale = 2.0 * gate_value;
    for (std::size_t j = 0; j < local_row.size(); ++j)
      local_row[j] = beta * local_row[j] + mix * (scale * global_row[j]);
  }
}

}  // namespace fedrkg
