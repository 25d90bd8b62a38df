#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nls/groundstate.hpp"

namespace nlscli {

// Validation failure; key is "section.name".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& msg)
      : std::runtime_error("config key '" + key + "': " + msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  // [model]
  std::string nonlinearity = "cubic_quintic";  // cubic, cubic_quintic, polynomial
  std::vector<double> coeffs{1.0, -0.05};      // coefficients of s, s^2, ...

  // [soliton]
  double omega = 0.3;
  double family_lo = 0.2, family_hi = 1.0;
  int family_steps = 16;
  double r_max = 56;
  int n = 1792;

  // [operator]  profile: linearization at the ground state; synthetic: Gaussian wells
  std::string op_kind = "profile";
  double op_omega = 1.0;
  double a_amp = 2.64, b_amp = 0.0, width = 1.0;
  double background_amp = 1.0, background_width = 1.0;
  double op_r_max = 24;
  int op_n = 768;

  // [fgr]
  std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  double agree_tol = 0.02;

  // [reduced]
  double z0 = 0.5;
  double reduced_T = 1000, reduced_dt = 0.1;
  double reduced_gamma = -1;  // < 0: take it from the fgr stage

  // [dynamics]
  double epsilon = 0.01;
  double T = 400, dt = 0.025;
  int order = 4;
  double half_width = 64;
  int points = 256;
  double cadence = 0.5;
  double sponge_width = 8, sponge_strength = 1.0;
  double weight_s = 2.0;
  double transient = 50;

  // [waveop]
  double box_radius = 250;
  std::vector<double> times{10, 20, 40};
  double compare_radius = 12;
  double test_width = 1.5;
  std::vector<double> lp_exponents{};  // empty: skip the L^p probe

  // [bench]
  double bench_half_width = 32;
  int bench_points = 128;
  double bench_T = 20, bench_dt = 0.02, bench_s = 1.5;
  int family_size = 3;
  double decay_lo = 2, decay_hi = 32;
  int decay_points = 5;
  double decay_s = 1.0;

  // [run]
  std::vector<std::string> stages{"groundstate", "spectrum", "fgr", "reduced-ode", "simulate", "waveop",
                                  "bench-estimates"};
  std::uint64_t seed = 1;
  int refine = 1;

  bool operator==(const ExperimentConfig&) const = default;

  nls::NonlinearitySpec beta() const;
  void validate() const;  // throws ConfigError
};

ExperimentConfig parse_config(const std::string& text);  // throws ConfigError
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& c);
// SHA-256 of the serialized config, first 16 hex digits
std::string config_hash(const ExperimentConfig& c);

// Shortest decimal that reads back to the same double.
std::string format_double(double x);

}  // namespace nlscli
