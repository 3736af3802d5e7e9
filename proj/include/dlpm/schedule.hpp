// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "dlpm/random.hpp"

namespace dlpm {

enum class ScheduleKind { scale_preserving, scale_exploding };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Per-step (gamma_t, sigma_t), t = 1..T, with cumulative gamma_{1->t} and
/// sigma_{1->t} cached at construction:
///
///   gamma_{1->t} = prod_{i<=t} gamma_i,
///   sigma_{1->t}^alpha = gamma_t^alpha sigma_{1->t-1}^alpha + sigma_t^alpha.
///
/// Index 0 holds the empty-chain values gamma_{1->0} = 1 (empty product) and
/// sigma_{1->0} = 0. Immutable once built.
class NoiseSchedule {
public:
  /// General constructor from per-step factors; gammas[i], sigmas[i] belong to
  /// step t = i + 1.
  static NoiseSchedule from_steps(double alpha, std::vector<double> gammas,
                                  std::vector<double> sigmas, ScheduleKind kind);

  int horizon() const { return horizon_; }
  double alpha() const { return alpha_; }
  ScheduleKind kind() const { return kind_; }

  double gamma(int t) const;
  double sigma(int t) const;
  double gamma_cum(int t) const;
  double sigma_cum(int t) const;
  /// sigma_{1->t}^alpha, kept separately to avoid a pow round trip.
  double sigma_cum_pow(int t) const;

private:
  NoiseSchedule() = default;
  void check_step(int t) const;
  void check_cum(int t) const;

  int horizon_ = 0;
  double alpha_ = 2.0;
  ScheduleKind kind_ = ScheduleKind::scale_preserving;
  std::vector<double> gamma_;      // [0] unused
  std::vector<double> sigma_;      // [0] unused
  std::vector<double> gamma_cum_;  // [0] = 1
  std::vector<double> sigma_cum_;  // [0] = 0
  std::vector<double> sigma_cum_pow_;
};

/// Serializable identification of a schedule: (kind, T, alpha).
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::scale_preserving;
  int horizon = 100;
  double alpha = 2.0;

  bool operator==(const ScheduleSpec&) const = default;
};

/// Cosine beta_t (offset s = 0.008, clipped at 0.999) mapped to a
/// scale-preserving schedule: gamma_t = (1 - beta_t)^{1/alpha},
/// sigma_t = beta_t^{1/alpha}, so sigma_{1->t}^alpha + gamma_{1->t}^alpha = 1.
NoiseSchedule build_cosine_schedule(int horizon, double alpha);

/// Scale-preserving specs build the cosine schedule; scale-exploding specs use
/// a geometric sigma_{1->t} grid from 0.01 to 1.
NoiseSchedule build_schedule(const ScheduleSpec& spec);

/// gamma_t = 1 with a strictly increasing sigma_{1->t} grid (t = 1..T).
NoiseSchedule build_scale_exploding_schedule(double alpha, std::span<const double> sigma_cum);

/// Sigma_{1->t}(A_{1:t}) = sum_k (gamma_{1->t} / gamma_{1->k})^2 A_k sigma_k^2,
/// evaluated with the recursion Sigma_{1->t} = sigma_t^2 A_t + gamma_t^2 Sigma_{1->t-1}.
double sigma_cumulative_squared(const NoiseSchedule& schedule, int t, std::span<const double> a_seq);

/// Gamma_t(A_{1:t}) = 1 - gamma_t^2 Sigma_{1->t-1} / Sigma_{1->t}, computed as
/// A_t sigma_t^2 / Sigma_{1->t} so that it always lies in [0, 1].
double gamma_t_factor(const NoiseSchedule& schedule, int t, std::span<const double> a_seq);

/// The two positive-stable draws that stand in for a whole A_{1:t} sequence
/// when only (Y_0, Y_{t-1}, Y_t) are needed.
struct BridgeDraw {
  int t = 1;
  double a0 = 0.0;                ///< zero when t = 1
  double a1 = 0.0;
  double sigma_prime_prev = 0.0;  ///< sigma_{1->t-1}^2 a0
  double sigma_prime = 0.0;       ///< sigma_t^2 a1 + gamma_t^2 sigma_prime_prev
  double gamma_prime = 1.0;       ///< sigma_t^2 a1 / sigma_prime
};

/// Derived fields for given (a0, a1); a0 is ignored (treated as 0) at t = 1.
BridgeDraw bridge_from(const NoiseSchedule& schedule, int t, double a0, double a1);

class PositiveStableSampler;

/// Draws (a0, a1) from the positive-stable law of the schedule's alpha.
BridgeDraw make_bridge_draw(const NoiseSchedule& schedule, int t, RandomStream& rng);
BridgeDraw make_bridge_draw(const NoiseSchedule& schedule, int t, RandomStream& rng,
                            const PositiveStableSampler& mixing);

} // namespace dlpm
