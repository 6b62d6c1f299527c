#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace fedrkg {

// Little-endian binary stream helpers shared by the dataset cache and
// run snapshots. Layouts are documented in docs/file-formats.md.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);
  void u32(std::uint32_t value);
  void u64(std::uint64_t value);
  void f64(double value);
  void f64_span(std::span<const double> values);
  void str(const std::string& value);
  void magic(const char* tag);  // fixed 8 bytes
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64_span(std::span<double> values);
  std::string str();
  void expect_magic(const char* tag);

 private:
  void read_bytes(void* dst, std::size_t count);
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace fedrkg
