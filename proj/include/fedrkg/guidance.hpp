#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedrkg/dataset.hpp"
#include "fedrkg/matrix.hpp"
#include "fedrkg/model.hpp"

namespace fedrkg {

// Server-side aggregate of the clients' item embeddings. Reads are
// counted so the local-only regime can assert the global matrix is never
// consulted after client initialization.
class GlobalState {
 public:
  GlobalState() = default;
  GlobalState(Matrix items, std::vector<double> weights)
      : items_(std::move(items)), weights_(std::move(weights)) {}

  const Matrix& items() const {
    ++read_count_;
    return items_;
  }
  void replace(Matrix next) { items_ = std::move(next); }

  std::span<const double> weights() const { return weights_; }
  std::size_t read_count() const { return read_count_; }

  std::size_t round = 0;

 private:
  Matrix items_;
  std::vector<double> weights_;  // alpha_u, sums to 1
  mutable std::size_t read_count_ = 0;
};

// Weighted sum of the clients' item embeddings, accumulated in user-id
// order so the result is bit-reproducible.
Matrix aggregate_global(std::span<const ClientState> clients,
                        std::span<const double> weights);

// local <- beta * local + (1 - beta) * global, every row.
void knowledge_guidance(Matrix& local_items, const Matrix& global_items,
                        double beta);

// One gradient-descent step on (lambda/2)*||P - P_g||^2 with step size
// eta. Kept as the optimization-view counterpart of knowledge_guidance
// for equivalence testing; lambda is absorbed into beta at runtime.
Matrix regularized_step(const Matrix& local_items, const Matrix& global_items,
                        double lambda, double eta);

// Pre-sigmoid gate activation: w . [local | global | local - global] + b.
double gate_preactivation(const GateParams& gate,
                          std::span<const double> local_row,
                          std::span<const double> global_row);

// Gate value in (0,1).
double gate_forward(const GateParams& gate, std::span<const double> local_row,
                    std::span<const double> global_row);

// Guidance vector: 2 * g * global_row. At g = 0.5 this is the global row
// itself, so the adaptive path reduces to the fixed one.
void guidance_vector(double gate_value, std::span<const double> global_row,
                     std::span<double> out);

// Nested-training step 1: SGD on the gate parameters only, driven by the
// recommendation loss with temporarily fused item rows
// beta*local + 2*(1-beta)*g*global. Item and user embeddings are frozen.
TrainStats local_train_gate(ClientState& client, const Matrix& global_items,
                            const InteractionDataset& dataset,
                            const HyperParams& hp, Rng& rng);

// Nested-training step 2: recompute the gate on every item row from the
// pre-fusion embeddings and commit
// local <- beta*local + (1-beta)*2*g*global.
void apply_adaptive_guidance(ClientState& client, const Matrix& global_items,
                             double beta);

}  // namespace fedrkg
