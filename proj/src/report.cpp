#include "rcwalk/harness/report.hpp"

#include <charconv>
#include <filesystem>
#include <stdexcept>

namespace rcwalk {

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path), width_(header.size()) {
  if (!out_) throw std::runtime_error("csv: cannot open " + path);
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("csv: row width mismatch in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
}

void ensure_dir(const std::string& path) { std::filesystem::create_directories(path); }

std::string provenance_block(const Config& cfg) {
  std::string s;
  s += "# provenance\n";
  s += "version = ";
  s += kVersion;
  s += "\nconfig_hash = ";
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(cfg.hash()));
  s += buf;
  s += "\nmaster_seed = " + std::to_string(cfg.seed());
  s += "\n# config (canonical)\n";
  s += cfg.canonical();
  return s;
}

}  // namespace rcwalk
