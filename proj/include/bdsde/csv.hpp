#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdsde::csv {

/// Shortest round-trip decimal form of a double. All numeric output goes
/// through here so identical runs produce identical bytes.
std::string number(double v);

/// Column-oriented CSV writer.
class Writer {
  public:
    explicit Writer(const std::filesystem::path& path, const std::vector<std::string>& columns);

    void comment(const std::string& line);  // only valid before the header row is flushed
    void row(std::span<const double> values);
    void row(const std::vector<std::string>& cells);
    const std::filesystem::path& path() const { return path_; }

  private:
    void flush_header();

    std::filesystem::path path_;
    std::ofstream os_;
    std::vector<std::string> columns_;
    bool header_written_ = false;
};

/// FNV-1a over a file's bytes; used for output inventories in run manifests.
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace bdsde::csv
