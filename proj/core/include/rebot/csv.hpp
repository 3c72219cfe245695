#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rebot/errors.hpp"

namespace rebot {

/// Locale-independent shortest-roundtrip formatting (std::to_chars), so CSV
/// bytes are identical across runs and environments.
inline std::string csv_format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string csv_format(std::int64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Header-first comma-separated writer. One record per line, UTF-8, '\n'
/// line endings, no quoting (callers never emit commas in strings).
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw Error("cannot open CSV for writing: " + path.string());
    write_line(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw ContractViolation("CSV row width mismatch");
    write_line(fields);
  }

  void flush() { out_.flush(); }

 private:
  void write_line(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace rebot
