#pragma once

#include <cstdint>

#include "fedrkg/dataset.hpp"

namespace fedrkg {

// Deterministic implicit-feedback generator used when no real ratings
// file is at hand. Items carry a long-tail popularity and a latent
// cluster vector; users belong to a cluster with an individual quirk, so
// the corpus has both shared structure (global knowledge helps) and
// per-user specialization (replacing local models hurts).
struct SyntheticSpec {
  std::size_t users = 1372;
  std::size_t items = 19000;
  std::size_t clusters = 8;
  std::size_t latent_dim = 16;
  std::size_t min_interactions = 12;   // per user, before the tail draw
  double mean_extra = 5.0;             // exponential tail on top of the floor
  std::size_t max_interactions = 220;
  double popularity_skew = 0.52;       // Zipf exponent for item popularity
  double popularity_weight = 0.7;      // log-popularity term in the score
  double affinity_weight = 3.2;        // user-item latent term in the score
  double quirk_scale = 0.9;            // per-user deviation from the cluster
  double item_noise = 0.45;            // per-item deviation from the cluster
  std::uint64_t seed = 7;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

RawInteractions generate_synthetic(const SyntheticSpec& spec);

}  // namespace fedrkg
