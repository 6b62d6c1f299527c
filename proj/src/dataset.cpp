#include "fedrkg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fedrkg {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path,
                             std::size_t line_no, const std::string& why) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                           ": " + why);
}

double parse_rating(std::string_view field, const std::filesystem::path& path,
                    std::size_t line_no) {
  // std::from_chars for double is incomplete on some libstdc++ versions,
  // so go through strtod with an end check.
  std::string buf(field);
  char* end = nullptr;
  const double value = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || buf.empty() || !std::isfinite(value))
    parse_fail(path, line_no, "bad rating '" + buf + "'");
  return value;
}

std::int64_t parse_timestamp(std::string_view field,
                             const std::filesystem::path& path,
                             std::size_t line_no) {
  std::int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    parse_fail(path, line_no,
               "bad timestamp '" + std::string(field) + "'");
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line,
                                           std::string_view separator) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(separator, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + separator.size();
  }
  return fields;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) fields.push_back(line.substr(start, pos - start));
  }
  return fields;
}

}  // namespace

RawFormat parse_raw_format(std::string_view tag) {
  if (tag == "ml1m" || tag == "ml-1m") return RawFormat::ml1m;
  if (tag == "csv") return RawFormat::csv;
  if (tag == "tsv" || tag == "tab") return RawFormat::tsv;
  if (tag == "space") return RawFormat::space;
  throw std::runtime_error("unknown raw format tag '" + std::string(tag) +
                           "' (expected ml1m, csv, tsv, or space)");
}

std::string format_tag(RawFormat format) {
  switch (format) {
    case RawFormat::ml1m: return "ml1m";
    case RawFormat::csv: return "csv";
    case RawFormat::tsv: return "tsv";
    case RawFormat::space: return "space";
  }
  return "?";
}

RawInteractions load_raw(const std::filesystem::path& path, RawFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  RawInteractions raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    switch (format) {
      case RawFormat::ml1m: fields = split_fields(line, "::"); break;
      case RawFormat::csv: fields = split_fields(line, ","); break;
      case RawFormat::tsv: fields = split_fields(line, "\t"); break;
      case RawFormat::space: fields = split_whitespace(line); break;
    }

    const bool want_three = format == RawFormat::space && fields.size() == 3;
    if (fields.size() != 4 && !want_three)
      parse_fail(path, line_no,
                 "expected 4 fields, got " + std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty())
      parse_fail(path, line_no, "empty user or item key");

    RawRecord record;
    record.user_key = std::string(fields[0]);
    record.item_key = std::string(fields[1]);
    record.rating = parse_rating(fields[2], path, line_no);
    record.timestamp = want_three
                           ? static_cast<std::int64_t>(line_no)
                           : parse_timestamp(fields[3], path, line_no);
    raw.records.push_back(std::move(record));
  }
  return raw;
}

RawInteractions collapse_and_filter(const RawInteractions& raw,
                                    std::size_t min_interactions) {
  // Latest timestamp wins for duplicate (user, item) pairs; the rating is
  // irrelevant after binarization but the winning record's value is kept.
  std::map<std::pair<std::string, std::string>, RawRecord> collapsed;
  for (const RawRecord& record : raw.records) {
    auto key = std::make_pair(record.user_key, record.item_key);
    auto [it, inserted] = collapsed.try_emplace(std::move(key), record);
    if (!inserted && record.timestamp >= it->second.timestamp)
      it->second = record;
  }

  std::map<std::string, std::size_t> per_user;
  for (const auto& [key, record] : collapsed) ++per_user[key.first];

  RawInteractions out;
  for (auto& [key, record] : collapsed)
    if (per_user[key.first] >= min_interactions)
      out.records.push_back(std::move(record));
  return out;
}

SplitResult chrono_split(std::vector<SplitEntry> entries) {
  if (entries.size() < 3)
    throw std::logic_error("chrono_split: user reached splitting with " +
                           std::to_string(entries.size()) +
                           " interactions (needs >= 3)");
  std::sort(entries.begin(), entries.end(),
            [](const SplitEntry& a, const SplitEntry& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.raw_key < b.raw_key;
            });
  SplitResult result;
  result.test = entries.back().item;
  result.val = entries[entries.size() - 2].item;
  result.train.reserve(entries.size() - 2);
  for (std::size_t k = 0; k + 2 < entries.size(); ++k)
    result.train.push_back(entries[k].item);
  return result;
}

void InteractionDataset::rebuild_indexes() {
  user_index_.clear();
  item_index_.clear();
  for (UserId u = 0; u < user_keys_.size(); ++u) user_index_[user_keys_[u]] = u;
  for (ItemId i = 0; i < item_keys_.size(); ++i) item_index_[item_keys_[i]] = i;
}

bool InteractionDataset::in_train(UserId u, ItemId i) const {
  const auto& sorted = train_sorted_[u];
  return std::binary_search(sorted.begin(), sorted.end(), i);
}

std::size_t InteractionDataset::interaction_count() const {
  std::size_t count = 2 * user_count();
  for (const auto& items : train_by_time_) count += items.size();
  return count;
}

InteractionDataset preprocess(const RawInteractions& raw,
                              std::size_t min_interactions) {
  if (min_interactions < 3)
    throw std::runtime_error(
        "min_interactions must be >= 3 (train, val and test each need one)");

  const RawInteractions kept = collapse_and_filter(raw, min_interactions);
  if (kept.records.empty())
    throw std::runtime_error("dataset is empty after filtering");

  // Dense ids assigned in ascending raw-key order.
  std::set<std::string> user_key_set, item_key_set;
  for (const RawRecord& record : kept.records) {
    user_key_set.insert(record.user_key);
    item_key_set.insert(record.item_key);
  }

  InteractionDataset dataset;
  dataset.user_keys_.assign(user_key_set.begin(), user_key_set.end());
  dataset.item_keys_.assign(item_key_set.begin(), item_key_set.end());
  dataset.rebuild_indexes();

  std::vector<std::vector<SplitEntry>> per_user(dataset.user_keys_.size());
  for (const RawRecord& record : kept.records) {
    const UserId u = dataset.user_index_.at(record.user_key);
    const ItemId i = dataset.item_index_.at(record.item_key);
    per_user[u].push_back({i, record.timestamp, dataset.item_keys_[i]});
  }

  const std::size_t n = dataset.user_keys_.size();
  dataset.train_by_time_.resize(n);
  dataset.train_sorted_.resize(n);
  dataset.val_.resize(n);
  dataset.test_.resize(n);
  for (UserId u = 0; u < n; ++u) {
    SplitResult split = chrono_split(std::move(per_user[u]));
    dataset.val_[u] = split.val;
    dataset.test_[u] = split.test;
    dataset.train_sorted_[u] = split.train;
    std::sort(dataset.train_sorted_[u].begin(), dataset.train_sorted_[u].end());
    dataset.train_by_time_[u] = std::move(split.train);
  }
  return dataset;
}

std::vector<ItemId> sample_negatives(const InteractionDataset& dataset,
                                     UserId u, std::size_t count_per_positive,
                                     Rng& rng) {
  const std::size_t m = dataset.item_count();
  const std::size_t pool = m - dataset.train_sorted(u).size();
  if (pool == 0)
    throw std::runtime_error("user " + dataset.user_key(u) +
                             " has trained on every item; no negative pool");

  const std::size_t count = count_per_positive * dataset.train(u).size();
  std::vector<ItemId> negatives;
  negatives.reserve(count);
  while (negatives.size() < count) {
    // Rejection keeps the draw exactly uniform over the pool.
    const auto candidate = static_cast<ItemId>(rng.below(m));
    if (!dataset.in_train(u, candidate)) negatives.push_back(candidate);
  }
  return negatives;
}

std::vector<TrainingBatch> build_batches(const InteractionDataset& dataset,
                                         UserId u, std::size_t batch_size,
                                         std::size_t negatives_per_positive,
                                         Rng& rng) {
  const std::vector<ItemId>& positives = dataset.train(u);
  const std::vector<ItemId> negatives =
      sample_negatives(dataset, u, negatives_per_positive, rng);

  std::vector<std::pair<ItemId, std::uint8_t>> samples;
  samples.reserve(positives.size() + negatives.size());
  for (ItemId i : positives) samples.emplace_back(i, 1);
  for (ItemId i : negatives) samples.emplace_back(i, 0);

  // Fisher-Yates on our own generator.
  for (std::size_t k = samples.size(); k > 1; --k)
    std::swap(samples[k - 1], samples[rng.below(k)]);

  std::vector<TrainingBatch> batches;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t stop = std::min(start + batch_size, samples.size());
    TrainingBatch batch;
    batch.user = u;
    batch.items.reserve(stop - start);
    batch.labels.reserve(stop - start);
    for (std::size_t k = start; k < stop; ++k) {
      batch.items.push_back(samples[k].first);
      batch.labels.push_back(samples[k].second);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace fedrkg
