#include "fedrkg/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

#include "fedrkg/dataset.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace fedrkg {

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
}

void BinaryWriter::u32(std::uint32_t value) {
  out_.write(reinterpret_cast<const char*>(&value), sizeof(value));
}
void BinaryWriter::u64(std::uint64_t value) {
  out_.write(reinterpret_cast<const char*>(&value), sizeof(value));
}
void BinaryWriter::f64(double value) {
  out_.write(reinterpret_cast<const char*>(&value), sizeof(value));
}
void BinaryWriter::f64_span(std::span<const double> values) {
  out_.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
}
void BinaryWriter::str(const std::string& value) {
  u64(value.size());
  out_.write(value.data(), static_cast<std::streamsize>(value.size()));
}
void BinaryWriter::magic(const char* tag) {
  if (std::strlen(tag) != 8) throw std::logic_error("magic must be 8 bytes");
  out_.write(tag, 8);
}
void BinaryWriter::close() {
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
  out_.close();
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw std::runtime_error("cannot open " + path.string());
}

void BinaryReader::read_bytes(void* dst, std::size_t count) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in_.gcount()) != count)
    throw std::runtime_error("truncated file: " + path_.string());
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t value = 0;
  read_bytes(&value, sizeof(value));
  return value;
}
std::uint64_t BinaryReader::u64() {
  std::uint64_t value = 0;
  read_bytes(&value, sizeof(value));
  return value;
}
double BinaryReader::f64() {
  double value = 0;
  read_bytes(&value, sizeof(value));
  return value;
}
void BinaryReader::f64_span(std::span<double> values) {
  read_bytes(values.data(), values.size() * sizeof(double));
}
std::string BinaryReader::str() {
  const std::uint64_t size = u64();
  std::string value(size, '\0');
  read_bytes(value.data(), size);
  return value;
}
void BinaryReader::expect_magic(const char* tag) {
  char buf[9] = {};
  read_bytes(buf, 8);
  if (std::string_view(buf, 8) != std::string_view(tag, 8))
    throw std::runtime_error(path_.string() + ": bad header, expected " + tag);
}

// Dataset cache, version 1: counts, key tables, then per-user train list
// (time order) followed by val and test ids.
namespace {
constexpr const char* kDatasetMagic = "FRKGDS01";
}

void save_dataset_cache(const InteractionDataset& dataset,
                        const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic(kDatasetMagic);
  w.u64(dataset.user_count());
  w.u64(dataset.item_count());
  for (UserId u = 0; u < dataset.user_count(); ++u)
    w.str(dataset.user_key(u));
  for (ItemId i = 0; i < dataset.item_count(); ++i)
    w.str(dataset.item_key(i));
  for (UserId u = 0; u < dataset.user_count(); ++u) {
    const auto& train = dataset.train(u);
    w.u64(train.size());
    for (ItemId i : train) w.u32(i);
    w.u32(dataset.val(u));
    w.u32(dataset.test(u));
  }
  w.close();
}

InteractionDataset load_dataset_cache(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kDatasetMagic);
  const std::uint64_t n = r.u64();
  const std::uint64_t m = r.u64();

  InteractionDataset dataset;
  dataset.user_keys_.resize(n);
  for (auto& key : dataset.user_keys_) key = r.str();
  dataset.item_keys_.resize(m);
  for (auto& key : dataset.item_keys_) key = r.str();
  dataset.rebuild_indexes();

  dataset.train_by_time_.resize(n);
  dataset.train_sorted_.resize(n);
  dataset.val_.resize(n);
  dataset.test_.resize(n);
  for (UserId u = 0; u < n; ++u) {
    const std::uint64_t count = r.u64();
    auto& train = dataset.train_by_time_[u];
    train.resize(count);
    for (auto& item : train) item = r.u32();
    dataset.train_sorted_[u] = train;
    std::sort(dataset.train_sorted_[u].begin(),
              dataset.train_sorted_[u].end());
    dataset.val_[u] = r.u32();
    dataset.test_[u] = r.u32();
  }
  return dataset;
}

}  // namespace fedrkg
