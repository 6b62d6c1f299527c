#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedrkg/dataset.hpp"
#include "fedrkg/guidance.hpp"
#include "fedrkg/model.hpp"

namespace fedrkg {

enum class Split { validation, test };
std::string split_name(Split split);

// Recall@K / NDCG@K as percentages, plus the per-user ranks they were
// computed from (index = user id).
struct MetricsRecord {
  std::size_t round = 0;
  Split split = Split::validation;
  std::map<int, double> recall_at;
  std::map<int, double> ndcg_at;
  std::vector<std::uint32_t> per_user_ranks;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

struct EvalOptions {
  std::vector<int> ks = {5, 10};
  // Test-split candidate sets drop the val item (it selected the
  // checkpoint); validation candidate sets keep the test item since it
  // is unobserved at that point.
  bool exclude_val_when_test = true;
  std::size_t workers = 1;
};

// Full ranking: the held-out item is scored against every candidate item
// (all items outside train(u), minus the val item per EvalOptions).
// Rank = 1 + #candidates with a strictly higher score + #equal-scored
// candidates with a smaller item id.
std::uint32_t rank_heldout(const ClientState& client,
                           const InteractionDataset& dataset, Split split,
                           bool exclude_val_when_test = true);

double recall_at_k(std::span<const std::uint32_t> ranks, int k);
double ndcg_at_k(std::span<const std::uint32_t> ranks, int k);

MetricsRecord metrics_from_ranks(std::vector<std::uint32_t> ranks,
                                 std::span<const int> ks, std::size_t round,
                                 Split split);

MetricsRecord evaluate(std::span<const ClientState> clients,
                       const InteractionDataset& dataset, Split split,
                       std::size_t round, const EvalOptions& options);

// Ranks of a record restricted to a user subset (for group metrics).
std::vector<std::uint32_t> select_ranks(const MetricsRecord& record,
                                        std::span<const UserId> members);

enum class GroupLabel { cold, warm, follower, distinct_taste };
std::string group_label_name(GroupLabel label);

struct UserGroup {
  GroupLabel label = GroupLabel::cold;
  std::vector<UserId> members;  // ascending
};

// Top fraction of users by train-interaction count (ties by user id)
// become warm, the bottom fraction cold.
struct ActivityGroups {
  UserGroup warm, cold;
};
ActivityGroups group_by_activity(const InteractionDataset& dataset,
                                 double fraction);

// Popular items = top item_fraction of items by train interactions.
// Users ranked by the share of their train items that are popular; the
// top/bottom user_fraction segments are followers / distinct users, and
// sample_count users are drawn from each segment for paired analysis.
struct PopularityGroups {
  std::vector<ItemId> popular_items;    // ascending
  UserGroup followers, distinct_users;  // sampled
  UserGroup followers_full, distinct_full;
};
PopularityGroups group_by_popularity_affinity(
    const InteractionDataset& dataset, double item_fraction,
    double user_fraction, std::size_t sample_count, Rng& rng);

// Relative change of each metric after a guidance application, plus the
// user movement counts. before/after must cover the same users; the
// change is undefined (nullopt) where the before value is zero. A user
// counts as improved when the held-out item's rank got smaller.
struct GuidanceEffect {
  std::map<std::string, std::optional<double>> relative_change_pct;
  std::size_t improved = 0;
  std::size_t declined = 0;
  std::size_t unchanged = 0;
};
GuidanceEffect guidance_effect(const MetricsRecord& before,
                               const MetricsRecord& after);

// Mean gate value and mean pre-sigmoid logit over a user group and an
// item set, against the given global embeddings.
struct GateStatistics {
  double mean_value = 0.0;
  double mean_logit = 0.0;
};
GateStatistics gate_statistics(std::span<const ClientState> clients,
                               const Matrix& global_items,
                               std::span<const ItemId> item_set,
                               std::span<const UserId> members);

// 100 * (a - b) / b, the delta formula used for group comparisons.
std::optional<double> relative_change_pct(double after, double before);

}  // namespace fedrkg
