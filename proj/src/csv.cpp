#include "bdsde/csv.hpp"

#include <charconv>

namespace bdsde::csv {

std::string number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : path_(path), columns_(columns) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    os_.open(path);
    if (!os_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void Writer::comment(const std::string& line) {
    if (header_written_) throw std::logic_error("csv comment after header");
    os_ << "# " << line << "\n";
}

void Writer::flush_header() {
    if (header_written_) return;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        os_ << columns_[i] << (i + 1 < columns_.size() ? "," : "");
    os_ << "\n";
    header_written_ = true;
}

void Writer::row(std::span<const double> values) {
    flush_header();
    for (std::size_t i = 0; i < values.size(); ++i)
        os_ << number(values[i]) << (i + 1 < values.size() ? "," : "");
    os_ << "\n";
}

void Writer::row(const std::vector<std::string>& cells) {
    flush_header();
    for (std::size_t i = 0; i < cells.size(); ++i)
        os_ << cells[i] << (i + 1 < cells.size() ? "," : "");
    os_ << "\n";
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string() + " for checksum");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!is) break;
    }
    return h;
}

}  // namespace bdsde::csv
