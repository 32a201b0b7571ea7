#pragma once

#include <cmath>
#include <span>

#include "rhgn/error.hpp"
#include "rhgn/sim/geometry.hpp"

namespace rhgn::sim {

struct Wall {
  Segment segment;
  double attenuation_db = 100.0;
};

struct RadioParams {
  double exponent = 2.5;
  double tx_power_dbm = 12.0;
  double shadow_sigma_db = 3.0;
  double ref_distance_m = 1.0;
  double ref_loss_db = 53.25;
  double noise_floor_dbm = -95.0;
  double snr_threshold_db = 10.0;
  double jammer_power_dbm = 3.0;

  void validate() const {
    if (!(exponent > 0.0)) throw Error(Errc::InvalidArgument, "path loss exponent must be positive");
    if (!(shadow_sigma_db >= 0.0)) throw Error(Errc::InvalidArgument, "shadow sigma must be non-negative");
    if (!(ref_distance_m > 0.0)) throw Error(Errc::InvalidArgument, "reference distance must be positive");
  }
};

inline double dbm_to_mw(double dbm) noexcept { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) noexcept { return 10.0 * std::log10(mw); }

// Mean log-distance loss, no shadowing, no walls. Distances below d0 clamp.
inline double mean_path_loss(const RadioParams& r, double d) noexcept {
  const double dd = std::max(d, r.ref_distance_m);
  return r.ref_loss_db + 10.0 * r.exponent * std::log10(dd / r.ref_distance_m);
}

inline double wall_loss(std::span<const Wall> walls, Vec2 a, Vec2 b) noexcept {
  double loss = 0.0;
  const Segment path{a, b};
  for (const auto& w : walls)
    if (intersects(path, w.segment)) loss += w.attenuation_db;
  return loss;
}

inline double mean_received(const RadioParams& r, double tx_dbm, Vec2 tx, Vec2 rx, std::span<const Wall> walls) noexcept {
  return tx_dbm - mean_path_loss(r, distance(tx, rx)) - wall_loss(walls, tx, rx);
}

// Received power with one shadowing draw (in dB, added to the loss).
inline double received_power(const RadioParams& r, Vec2 tx, Vec2 rx, std::span<const Wall> walls, double shadow_db) noexcept {
  return mean_received(r, r.tx_power_dbm, tx, rx, walls) - shadow_db;
}

}  // namespace rhgn::sim
