#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogmove/common.hpp"

namespace cogmove {

// Shortest decimal form that parses back to the identical bits.
std::string format_double(double v);

// FNV-1a over the canonical text; stable across runs and platforms.
std::uint64_t fnv1a_hash(const std::string& text);

// Writes the file or throws FileError; parent directories are created.
void write_text_file(const std::string& path, const std::string& content);

// Row-oriented CSV assembly with round-trip float formatting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  std::string str() const { return body_; }
  static std::string cell(double v) { return format_double(v); }

 private:
  std::size_t columns_;
  std::string body_;
};

}  // namespace cogmove
