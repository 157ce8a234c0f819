#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rcwalk/environment.hpp"
#include "rcwalk/walk.hpp"

namespace rcwalk {

// Flat key = value experiment configuration ('#' starts a comment). The full
// key list is documented in the README; unknown keys are rejected so typos
// fail loudly.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  // Typed views of the standard blocks.
  int dim() const { return static_cast<int>(get_int("dim", 3)); }
  std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int("seed", 1)); }
  Environment environment() const;
  LatticePoint start() const;
  StopRule stop_rule() const;
  int replicas() const { return static_cast<int>(get_int("walk.replicas", 1)); }
  int threads() const { return static_cast<int>(get_int("threads", 1)); }
  std::string out_dir() const { return get("out", "out"); }

  std::vector<double> alpha_grid() const;  // analysis.alpha = lo:hi:step or comma list
  int n_min() const { return static_cast<int>(get_int("analysis.n_min", 6)); }
  int n_max() const { return static_cast<int>(get_int("analysis.n_max", 12)); }
  double eps() const { return get_double("analysis.eps", 0.3); }

  void validate() const;  // cross-field invariants

  // Canonical serialization (sorted keys) and its FNV-1a hash; both back the
  // provenance block, so identical configs hash identically.
  std::string canonical() const;
  std::uint64_t hash() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  ConductanceLaw law_from(const std::string& prefix) const;
  std::map<std::string, std::string> kv_;
};

}  // namespace rcwalk
