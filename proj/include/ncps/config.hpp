#pragma once

// Run configuration: a flat, sectioned key = value text format.
//
//   # comment
//   [system]
//   d = 10
//   gamma = nearest_neighbor(1)     | all_pairs(g) | none | matrix(r1; r2; ...)
//   b = sin                         | one catalog name, or d names separated by ';'
//   sigma = halfsin2
//   x0 = arithmetic(1, 1)           | explicit list "0, 1, 3"
//   T = 1
//
//   [experiment]
//   schemes = SIM, SIEM
//   k_min = 1
//   k_max = 5
//   M = 1000
//   seed = 2019
//   level = 5                       (simulate: grid level)
//   paths = 1                       (simulate: paths per scheme)
//
//   [solver]
//   tol = 1e-12
//   max_iter = 100
//
//   [output]
//   directory = out
//   formats = csv

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ncps/implicit_solver.hpp"
#include "ncps/model.hpp"
#include "ncps/schemes.hpp"

namespace ncps {

/// Configuration problem tied to a "section.key" path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Ordered "section.key" -> value pairs as written in the file.
struct RawConfig {
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(const std::string& key) const;
  void set(const std::string& key, std::string value);
};

RawConfig parse_config_text(const std::string& text);
RawConfig load_config_file(const std::string& path);

/// Applies "section.key=value"; throws ConfigError when malformed.
void apply_override(RawConfig& raw, const std::string& assignment);

struct RunConfig {
  // system
  std::size_t d = 0;
  std::string gamma_spec;
  std::string b_spec;
  std::string sigma_spec;
  std::string x0_spec;
  double horizon = 1.0;
  ParticleSystem system;
  std::vector<std::string> warnings;

  // experiment
  std::vector<SchemeKind> schemes{SchemeKind::SIM, SchemeKind::SIEM};
  unsigned k_min = 1;
  unsigned k_max = 5;
  std::size_t paths_mc = 1000;  // M
  std::uint64_t seed = 1;
  unsigned level = 5;
  std::size_t paths_simulate = 1;

  SolverOptions solver;

  // output
  std::string output_dir = "out";
  std::vector<std::string> formats{"csv"};
};

/// Parses and validates; every failure is a ConfigError naming its key.
RunConfig build_run_config(const RawConfig& raw);

/// Canonical text that build_run_config(parse_config_text(...)) reads back to
/// an equivalent RunConfig.
std::string dump_config(const RunConfig& cfg);

InteractionMatrix parse_gamma(const std::string& spec, std::size_t d);
std::vector<double> parse_x0(const std::string& spec, std::size_t d);

}  // namespace ncps
