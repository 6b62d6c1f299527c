#include "fedrkg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "fedrkg/matrix.hpp"
#include "fedrkg/rng.hpp"

namespace fedrkg {

namespace {

std::string padded_key(char prefix, std::size_t value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%06zu", prefix, value);
  return buf;
}

}  // namespace

RawInteractions generate_synthetic(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  const std::size_t latent = spec.latent_dim;

  Matrix centers(spec.clusters, latent);
  for (std::size_t c = 0; c < spec.clusters; ++c)
    for (double& v : centers.row(c)) v = rng.normal(0.0, 1.0);

  // Items: cluster membership, latent vector near the cluster center,
  // Zipf popularity over a random permutation of the catalog.
  Matrix item_vectors(spec.items, latent);
  std::vector<double> log_popularity(spec.items);
  std::vector<std::size_t> pop_rank(spec.items);
  std::iota(pop_rank.begin(), pop_rank.end(), 0);
  for (std::size_t k = spec.items; k > 1; --k)
    std::swap(pop_rank[k - 1], pop_rank[rng.below(k)]);
  for (std::size_t i = 0; i < spec.items; ++i) {
    const std::size_t cluster = rng.below(spec.clusters);
    auto row = item_vectors.row(i);
    const auto center = centers.row(cluster);
    for (std::size_t j = 0; j < latent; ++j)
      row[j] = center[j] + spec.item_noise * rng.normal(0.0, 1.0);
    log_popularity[i] = -spec.popularity_skew *
                        std::log(static_cast<double>(pop_rank[i]) + 1.0);
  }

  RawInteractions raw;
  std::vector<double> user_vector(latent);
  std::vector<std::pair<double, ItemId>> noisy_scores(spec.items);
  std::vector<std::int64_t> timestamps;

  for (std::size_t u = 0; u < spec.users; ++u) {
    const std::size_t cluster = rng.below(spec.clusters);
    const auto center = centers.row(cluster);
    for (std::size_t j = 0; j < latent; ++j)
      user_vector[j] = center[j] + spec.quirk_scale * rng.normal(0.0, 1.0);

    std::size_t count =
        spec.min_interactions +
        static_cast<std::size_t>(-spec.mean_extra * std::log(1.0 - rng.uniform()));
    count = std::min({count, spec.max_interactions, spec.items});

    // Gumbel top-k = sampling without replacement proportional to the
    // softmax of the scores.
    for (std::size_t i = 0; i < spec.items; ++i) {
      const double affinity = dot(user_vector, item_vectors.row(i));
      double uniform = rng.uniform();
      while (uniform == 0.0) uniform = rng.uniform();
      const double gumbel = -std::log(-std::log(uniform));
      noisy_scores[i] = {spec.affinity_weight * affinity / std::sqrt(latent) +
                             spec.popularity_weight * log_popularity[i] +
                             gumbel,
                         static_cast<ItemId>(i)};
    }
    std::partial_sort(noisy_scores.begin(), noisy_scores.begin() + count,
                      noisy_scores.end(), std::greater<>());

    timestamps.resize(count);
    for (auto& t : timestamps)
      t = 1'000'000'000 + static_cast<std::int64_t>(rng.below(20'000'000));
    std::sort(timestamps.begin(), timestamps.end());

    for (std::size_t k = 0; k < count; ++k) {
      RawRecord record;
      record.user_key = padded_key('u', u);
      record.item_key = padded_key('i', noisy_scores[k].second);
      record.rating = 1.0 + static_cast<double>(rng.below(5));
      record.timestamp = timestamps[k];
      raw.records.push_back(std::move(record));
    }
  }
  return raw;
}

}  // namespace fedrkg
