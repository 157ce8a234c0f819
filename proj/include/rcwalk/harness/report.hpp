#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "rcwalk/harness/config.hpp"

namespace rcwalk {

inline constexpr const char* kVersion = "0.1.0";

// Shortest round-trip decimal rendering (std::to_chars); bit-identical output
// for bit-identical doubles, which is what the reproducibility contract needs.
std::string fmt_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t width_;
};

void write_text_file(const std::string& path, const std::string& content);
void ensure_dir(const std::string& path);

// Plain-text provenance block: config echo, config hash, version, seed.
// Deliberately timestamp-free so reruns are byte-identical.
std::string provenance_block(const Config& cfg);

}  // namespace rcwalk
