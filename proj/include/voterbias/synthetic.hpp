#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "voterbias/estimator.hpp"
#include "voterbias/records.hpp"

namespace voterbias::synth {

/// SplitMix64 (Steele, Lea, Flood 2014). Seed 1234567 yields
/// 6457827717110365317, 3203168211198807973, 9817491932198370423, ...
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Independent child stream.
  SplitMix64 split() noexcept { return SplitMix64((*this)()); }

 private:
  std::uint64_t state_;
};

/// Standard normal deviates by the Box-Muller transform over SplitMix64.
/// Uniforms are ((x >> 11) + 1) * 2^-53, in (0, 1]. Deviates come in pairs
/// r cos(theta), r sin(theta).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) noexcept : rng_(seed) {}
  double next();

 private:
  SplitMix64 rng_;
  double spare_ = 0;
  bool has_spare_ = false;
};

/// Z ~ N(0, sz^2), U ~ N(0, su^2), X_j = alpha_j Z_j + delta U + nu_j,
/// Y = sum_j beta_j X_j + gamma U + eps. One instrument per exposure.
struct ScenarioSpec {
  std::string name = "scenario";
  long n = 1000;
  std::vector<double> beta{0.5};
  double gamma = 0.9;
  std::vector<double> alpha{1.0};
  double delta = 1.0;
  double sigma_z = 1.0;
  double sigma_u = 1.0;
  double sigma_nu = 1.0;
  double sigma_eps = 1.0;
  std::uint64_t seed = 42;

  std::size_t exposures() const noexcept { return beta.size(); }
  /// Throws UsageError.
  void validate() const;
  bool operator==(const ScenarioSpec&) const = default;
};

/// beta = 0.5, gamma = 0.9, alpha = delta = 1, unit variances.
ScenarioSpec reference_scenario(long n = 100000, std::uint64_t seed = 42);

/// Exposures X1..Xp, instruments Z1..Zp, outcome Y. U is not emitted.
est::DesignMatrix generate(const ScenarioSpec& spec);

struct PlimResult {
  std::vector<double> ols;
  std::vector<double> tsls;
};

/// Probability limits from the population moments:
/// ols = beta + Var(X)^-1 * gamma delta su^2 * 1, tsls = beta. Throws
/// SingularDesignError when Var(X) is singular.
PlimResult scenario_plim(const ScenarioSpec& spec);

/// Two exposures: X1 continuous (vote-like) and X2 the descending rank of
/// X1 + alpha2 Z2 + sigma_rank eta within consecutive groups of
/// `group_size` rows (position-like). Y = beta1 X1 + beta2 X2 + gamma U + eps.
struct JointScenarioSpec {
  std::string name = "joint";
  long n = 1000;
  double beta1 = 0.4;
  double beta2 = 0.3;
  double gamma = 0.9;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double delta = 1.0;
  double sigma_z = 1.0;
  double sigma_u = 1.0;
  double sigma_nu = 1.0;
  double sigma_eps = 1.0;
  double sigma_rank = 0.5;
  long group_size = 5;
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const JointScenarioSpec&) const = default;
};

/// Throws SingularDesignError when X2 is exactly the within-group rank of
/// X1 in every group (no ranking noise).
est::DesignMatrix generate_joint_scenario(const JointScenarioSpec& spec);

using Scenario = std::variant<ScenarioSpec, JointScenarioSpec>;

/// INI syntax, same conventions as model files:
///
///   version = 1
///   [scenario]
///   kind = single | joint
///   n = 100000
///   beta = 0.5            (joint: beta = 0.4, 0.3)
///   ...
std::string serialize_scenario(const Scenario& scenario);
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

/// Records-schema table (one row per observation, site = stratum name,
/// columns named after the design).
records::RecordTable to_records(const est::DesignMatrix& d);

}  // namespace voterbias::synth
