#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fedrkg/rng.hpp"

namespace fedrkg {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

struct RawRecord {
  std::string user_key;
  std::string item_key;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

struct RawInteractions {
  std::vector<RawRecord> records;
};

// Raw-file layouts:
//   ml1m   "user::item::rating::timestamp"
//   csv    "user,item,rating,timestamp"
//   tsv    tab-separated, same four fields
//   space  whitespace-separated, 3 or 4 fields; 3-field lines (FilmTrust,
//          LastFM-2K carry no timestamps) get timestamp = 1-based line number
enum class RawFormat { ml1m, csv, tsv, space };

RawFormat parse_raw_format(std::string_view tag);
std::string format_tag(RawFormat format);

RawInteractions load_raw(const std::filesystem::path& path, RawFormat format);

// Reindexed implicit-feedback dataset with per-user chronological
// train / val / test split (one held-out item each for val and test).
class InteractionDataset {
 public:
  std::size_t user_count() const { return train_by_time_.size(); }
  std::size_t item_count() const { return item_keys_.size(); }

  // Train items in interaction-time order.
  const std::vector<ItemId>& train(UserId u) const { return train_by_time_[u]; }
  // Same items sorted by id, for membership tests.
  const std::vector<ItemId>& train_sorted(UserId u) const {
    return train_sorted_[u];
  }
  ItemId val(UserId u) const { return val_[u]; }
  ItemId test(UserId u) const { return test_[u]; }

  bool in_train(UserId u, ItemId i) const;

  const std::string& user_key(UserId u) const { return user_keys_[u]; }
  const std::string& item_key(ItemId i) const { return item_keys_[i]; }
  UserId user_id(const std::string& key) const { return user_index_.at(key); }
  ItemId item_id(const std::string& key) const { return item_index_.at(key); }
  bool has_user(const std::string& key) const {
    return user_index_.count(key) > 0;
  }

  // train + val + test.
  std::size_t interaction_count() const;

  friend bool operator==(const InteractionDataset&,
                         const InteractionDataset&) = default;

  friend InteractionDataset preprocess(const RawInteractions& raw,
                                       std::size_t min_interactions);
  friend InteractionDataset load_dataset_cache(
      const std::filesystem::path& path);

 private:
  std::vector<std::vector<ItemId>> train_by_time_;
  std::vector<std::vector<ItemId>> train_sorted_;
  std::vector<ItemId> val_;
  std::vector<ItemId> test_;
  std::vector<std::string> user_keys_;
  std::vector<std::string> item_keys_;
  std::unordered_map<std::string, UserId> user_index_;
  std::unordered_map<std::string, ItemId> item_index_;

  void rebuild_indexes();
};

// Collapse duplicate (user,item) pairs keeping the latest timestamp, then
// drop users with fewer than min_interactions distinct items. Output
// order is deterministic: records sorted by (user key, item key).
RawInteractions collapse_and_filter(const RawInteractions& raw,
                                    std::size_t min_interactions);

// Full pipeline: collapse/filter, drop empty items, reindex densely
// (keys sorted ascending), chronological per-user split. Requires
// min_interactions >= 3 so every user keeps at least one train item.
InteractionDataset preprocess(const RawInteractions& raw,
                              std::size_t min_interactions);

// One user's interactions ready for splitting.
struct SplitEntry {
  ItemId item;
  std::int64_t timestamp;
  std::string_view raw_key;  // tie-break on equal timestamps
};

struct SplitResult {
  std::vector<ItemId> train;  // time-ascending
  ItemId val;
  ItemId test;
};

// Sort by (timestamp, raw item key) ascending; last entry becomes the
// test item, second-to-last the val item. Needs >= 3 entries.
SplitResult chrono_split(std::vector<SplitEntry> entries);

// count_per_positive * |train(u)| draws, uniform over the items the user
// has not trained on (val/test items stay in the pool), with replacement.
std::vector<ItemId> sample_negatives(const InteractionDataset& dataset,
                                     UserId u, std::size_t count_per_positive,
                                     Rng& rng);

struct TrainingBatch {
  UserId user;
  std::vector<ItemId> items;
  std::vector<std::uint8_t> labels;  // 1 = interacted, 0 = sampled negative
};

// Positives plus fresh negatives, shuffled together, chunked to
// batch_size. Call once per epoch so negatives are resampled.
std::vector<TrainingBatch> build_batches(const InteractionDataset& dataset,
                                         UserId u, std::size_t batch_size,
                                         std::size_t negatives_per_positive,
                                         Rng& rng);

// Versioned binary cache of a preprocessed dataset.
void save_dataset_cache(const InteractionDataset& dataset,
                        const std::filesystem::path& path);
InteractionDataset load_dataset_cache(const std::filesystem::path& path);

}  // namespace fedrkg
