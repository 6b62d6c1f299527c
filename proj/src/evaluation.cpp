#include "fedrkg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedrkg/parallel.hpp"

namespace fedrkg {

std::string split_name(Split split) {
  return split == Split::validation ? "val" : "test";
}

std::uint32_t rank_heldout(const ClientState& client,
                           const InteractionDataset& dataset, Split split,
                           bool exclude_val_when_test) {
  const UserId u = client.user;
  const ItemId heldout =
      split == Split::test ? dataset.test(u) : dataset.val(u);
  if (dataset.in_train(u, heldout))
    throw std::runtime_error("held-out item is in the train set of user " +
                             dataset.user_key(u));
  const bool drop_val = split == Split::test && exclude_val_when_test;
  const ItemId val_item = dataset.val(u);

  const double heldout_score = predict_logit(client, heldout);
  std::uint32_t ahead = 0;
  const std::size_t m = dataset.item_count();
  for (ItemId i = 0; i < m; ++i) {
    if (i == heldout) continue;
    if (drop_val && i == val_item) continue;
    if (dataset.in_train(u, i)) continue;
    const double score = predict_logit(client, i);
    if (score > heldout_score || (score == heldout_score && i < heldout))
      ++ahead;
  }
  return ahead + 1;
}

double recall_at_k(std::span<const std::uint32_t> ranks, int k) {
  if (ranks.empty()) throw std::runtime_error("recall_at_k: no users");
  std::size_t hits = 0;
  for (std::uint32_t r : ranks)
    if (r <= static_cast<std::uint32_t>(k)) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double ndcg_at_k(std::span<const std::uint32_t> ranks, int k) {
  if (ranks.empty()) throw std::runtime_error("ndcg_at_k: no users");
  double sum = 0.0;
  for (std::uint32_t r : ranks)
    if (r <= static_cast<std::uint32_t>(k))
      sum += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  return 100.0 * sum / static_cast<double>(ranks.size());
}

MetricsRecord metrics_from_ranks(std::vector<std::uint32_t> ranks,
                                 std::span<const int> ks, std::size_t round,
                                 Split split) {
  MetricsRecord record;
  record.round = round;
  record.split = split;
  for (int k : ks) {
    record.recall_at[k] = recall_at_k(ranks, k);
    record.ndcg_at[k] = ndcg_at_k(ranks, k);
  }
  record.per_user_ranks = std::move(ranks);
  return record;
}

MetricsRecord evaluate(std::span<const ClientState> clients,
                       const InteractionDataset& dataset, Split split,
                       std::size_t round, const EvalOptions& options) {
  std::vector<std::uint32_t> ranks(clients.size());
  parallel_for(clients.size(), options.workers, [&](std::size_t u) {
    ranks[u] = rank_heldout(clients[u], dataset, split,
                            options.exclude_val_when_test);
  });
  return metrics_from_ranks(std::move(ranks), options.ks, round, split);
}

std::vector<std::uint32_t> select_ranks(const MetricsRecord& record,
                                        std::span<const UserId> members) {
  std::vector<std::uint32_t> out;
  out.reserve(members.size());
  for (UserId u : members) out.push_back(record.per_user_ranks.at(u));
  return out;
}

std::string group_label_name(GroupLabel label) {
  switch (label) {
    case GroupLabel::cold: return "cold";
    case GroupLabel::warm: return "warm";
    case GroupLabel::follower: return "follower";
    case GroupLabel::distinct_taste: return "distinct";
  }
  return "?";
}

ActivityGroups group_by_activity(const InteractionDataset& dataset,
                                 double fraction) {
  if (fraction <= 0.0 || fraction >= 0.5)
    throw std::runtime_error("activity fraction must be in (0, 0.5)");
  const std::size_t n = dataset.user_count();
  std::vector<UserId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](UserId a, UserId b) {
    const std::size_t ca = dataset.train(a).size();
    const std::size_t cb = dataset.train(b).size();
    if (ca != cb) return ca > cb;
    return a < b;
  });
  const auto take = static_cast<std::size_t>(fraction * static_cast<double>(n));

  ActivityGroups groups;
  groups.warm.label = GroupLabel::warm;
  groups.cold.label = GroupLabel::cold;
  groups.warm.members.assign(order.begin(), order.begin() + take);
  groups.cold.members.assign(order.end() - take, order.end());
  std::sort(groups.warm.members.begin(), groups.warm.members.end());
  std::sort(groups.cold.members.begin(), groups.cold.members.end());
  return groups;
}

namespace {

std::vector<UserId> sample_without_replacement(std::vector<UserId> pool,
                                               std::size_t count, Rng& rng) {
  count = std::min(count, pool.size());
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + rng.below(pool.size() - k);
    std::swap(pool[k], pool[pick]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

PopularityGroups group_by_popularity_affinity(
    const InteractionDataset& dataset, double item_fraction,
    double user_fraction, std::size_t sample_count, Rng& rng) {
  if (item_fraction <= 0.0 || item_fraction > 0.5 || user_fraction <= 0.0 ||
      user_fraction > 0.5)
    throw std::runtime_error("popularity fractions must be in (0, 0.5]");

  const std::size_t m = dataset.item_count();
  const std::size_t n = dataset.user_count();

  std::vector<std::size_t> item_counts(m, 0);
  for (UserId u = 0; u < n; ++u)
    for (ItemId i : dataset.train(u)) ++item_counts[i];

  std::vector<ItemId> item_order(m);
  std::iota(item_order.begin(), item_order.end(), 0);
  std::sort(item_order.begin(), item_order.end(), [&](ItemId a, ItemId b) {
    if (item_counts[a] != item_counts[b])
      return item_counts[a] > item_counts[b];
    return a < b;
  });
  const auto popular_count =
      static_cast<std::size_t>(item_fraction * static_cast<double>(m));

  PopularityGroups groups;
  groups.popular_items.assign(item_order.begin(),
                              item_order.begin() + popular_count);
  std::sort(groups.popular_items.begin(), groups.popular_items.end());

  std::vector<double> share(n, 0.0);
  for (UserId u = 0; u < n; ++u) {
    const auto& train = dataset.train_sorted(u);
    std::size_t popular = 0;
    for (ItemId i : train)
      if (std::binary_search(groups.popular_items.begin(),
                             groups.popular_items.end(), i))
        ++popular;
    share[u] =
        static_cast<double>(popular) / static_cast<double>(train.size());
  }

  std::vector<UserId> user_order(n);
  std::iota(user_order.begin(), user_order.end(), 0);
  std::sort(user_order.begin(), user_order.end(), [&](UserId a, UserId b) {
    if (share[a] != share[b]) return share[a] > share[b];
    return a < b;
  });
  const auto segment =
      static_cast<std::size_t>(user_fraction * static_cast<double>(n));

  groups.followers_full.label = GroupLabel::follower;
  groups.followers_full.members.assign(user_order.begin(),
                                       user_order.begin() + segment);
  groups.distinct_full.label = GroupLabel::distinct_taste;
  groups.distinct_full.members.assign(user_order.end() - segment,
                                      user_order.end());
  std::sort(groups.followers_full.members.begin(),
            groups.followers_full.members.end());
  std::sort(groups.distinct_full.members.begin(),
            groups.distinct_full.members.end());

  groups.followers.label = GroupLabel::follower;
  groups.followers.members =
      sample_without_replacement(groups.followers_full.members,
                                 sample_count, rng);
  groups.distinct_users.label = GroupLabel::distinct_taste;
  groups.distinct_users.members =
      sample_without_replacement(groups.distinct_full.members,
                                 sample_count, rng);
  return groups;
}

std::optional<double> relative_change_pct(double after, double before) {
  if (before == 0.0) return std::nullopt;
  return 100.0 * (after - before) / before;
}

GuidanceEffect guidance_effect(const MetricsRecord& before,
                               const MetricsRecord& after) {
  if (before.per_user_ranks.size() != after.per_user_ranks.size())
    throw std::runtime_error("guidance_effect: user sets differ");
  if (before.split != after.split)
    throw std::runtime_error("guidance_effect: split mismatch");

  GuidanceEffect effect;
  for (const auto& [k, value] : before.recall_at)
    effect.relative_change_pct["R@" + std::to_string(k)] =
        relative_change_pct(after.recall_at.at(k), value);
  for (const auto& [k, value] : before.ndcg_at)
    effect.relative_change_pct["N@" + std::to_string(k)] =
        relative_change_pct(after.ndcg_at.at(k), value);

  for (std::size_t u = 0; u < before.per_user_ranks.size(); ++u) {
    const std::uint32_t rank_before = before.per_user_ranks[u];
    const std::uint32_t rank_after = after.per_user_ranks[u];
    if (rank_after < rank_before)
      ++effect.improved;
    else if (rank_after > rank_before)
      ++effect.declined;
    else
      ++effect.unchanged;
  }
  return effect;
}

GateStatistics gate_statistics(std::span<const ClientState> clients,
                               const Matrix& global_items,
                               std::span<const ItemId> item_set,
                               std::span<const UserId> members) {
  if (members.empty() || item_set.empty())
    throw std::runtime_error("gate_statistics: empty group or item set");
  double value_sum = 0.0;
  double logit_sum = 0.0;
  for (UserId u : members) {
    const ClientState& client = clients[u];
    for (ItemId i : item_set) {
      const double logit = gate_preactivation(
          client.gate, client.item_embeddings.row(i), global_items.row(i));
      logit_sum += logit;
      value_sum += sigmoid(logit);
    }
  }
  const double count =
      static_cast<double>(members.size()) * static_cast<double>(item_set.size());
  return {value_sum / count, logit_sum / count};
}

}  // namespace fedrkg
