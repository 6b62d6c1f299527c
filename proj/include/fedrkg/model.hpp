#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedrkg/dataset.hpp"
#include "fedrkg/matrix.hpp"
#include "fedrkg/privacy.hpp"
#include "fedrkg/rng.hpp"

namespace fedrkg {

// Per-user gating network: a linear layer over the concatenation
// [local row | global row | local - global], squashed by a sigmoid.
struct GateParams {
  std::vector<double> weights;  // 3d
  double bias = 0.0;

  friend bool operator==(const GateParams&, const GateParams&) = default;
};

struct HyperParams {
  std::size_t dim = 32;                    // d
  double eta = 0.1;                        // recommender learning rate
  double eta_gate = 0.01;                  // gate learning rate
  std::size_t local_epochs = 1;            // E
  std::size_t gate_epochs = 5;             // E_gate
  double beta = 0.99;                      // retention coefficient
  std::size_t rounds = 1000;               // T
  std::size_t guidance_interval = 100;     // T_int
  std::size_t clients_per_round = 0;       // n_s; 0 means all users
  std::size_t batch_size = 256;
  std::size_t negatives_per_positive = 4;
  std::uint64_t seed = 42;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// One user's private model. Scoring is the dot product between the user
// embedding and an item-embedding row, through a sigmoid for the loss.
struct ClientState {
  UserId user = 0;
  Matrix item_embeddings;              // m x d
  std::vector<double> user_embedding;  // d
  GateParams gate;

  friend bool operator==(const ClientState&, const ClientState&) = default;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Server-side initial item embeddings, N(0, 0.01^2) i.i.d.
Matrix init_global(std::size_t item_count, std::size_t dim, Rng& rng);

// Item embeddings copied from the global matrix; user embedding and gate
// weights N(0, 0.01^2); gate bias zero.
ClientState init_client(UserId user, const Matrix& global_items, Rng& rng);

double predict_logit(const ClientState& client, ItemId item);
double predict(const ClientState& client, ItemId item);

// Sum form: -sum_pos log(s) - sum_neg log(1 - s), scores clamped to
// [kScoreClamp, 1 - kScoreClamp] before the logs.
inline constexpr double kScoreClamp = 1e-7;
double bce_loss(std::span<const double> scores,
                std::span<const std::uint8_t> labels);

enum class ParamPhase { steady, guidance_peak, inference };

// steady/inference: m*d + 4d + 1. guidance_peak adds the temporary copy
// of the global item embeddings: 2*m*d + 4d + 1.
std::size_t count_parameters(const ClientState& client, ParamPhase phase);

struct TrainStats {
  std::size_t steps = 0;       // optimizer steps (batches) taken
  double last_epoch_loss = 0;  // summed BCE over the final epoch
};

// Local SGD on the recommender parameters: per epoch, fresh negatives and
// batches; per batch, gradients of the summed BCE w.r.t. the user
// embedding and the touched item rows, evaluated at pre-step values and
// applied simultaneously. Item-gradient sanitization (clip + noise) runs
// per optimizer step when privacy is enabled. The gate is untouched.
TrainStats local_train_rec(ClientState& client,
                           const InteractionDataset& dataset,
                           const HyperParams& hp, Rng& rng,
                           const PrivacyConfig& privacy, Rng& noise_rng);

}  // namespace fedrkg
