// Constant-curvature beam statics for a single-actuator SMA soft limb.
//
// Units: N, mm, rad. Angles are radians everywhere; convert at I/O.
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace smaprop::beam {

inline constexpr double kMaxBend = std::numbers::pi / 2.0;

// sin^2(theta)/theta peaks where tan(theta) = 2 theta. Past this bend the arc's
// tip swings back toward the base, so force and tip displacement are no longer
// one-to-one with the angle. The limb's bend stop sits here.
inline constexpr double kPeakBend = 1.1655611852072112;

/// Geometry and material of the limb treated as a rectangular cantilever.
struct LimbParams {
  double elastic_modulus = 1.79;  // N/mm^2
  double width = 60.0;            // b, mm
  double thickness = 3.5;         // h, mm
  double length = 105.0;          // L, mm
  double moment_arm = 3.5;        // w, SMA offset from the centerline, mm

  /// I = b h^3 / 12
  double area_moment() const { return width * thickness * thickness * thickness / 12.0; }

  /// Angle-to-force stiffness constant, 4 E I / (L w), in N.
  double zeta() const {
    return 4.0 * elastic_modulus * area_moment() / (length * moment_arm);
  }

  /// Cantilever tip-load compliance L^3 / (3 E I), mm/N.
  double tip_compliance() const {
    return length * length * length / (3.0 * elastic_modulus * area_moment());
  }

  /// Largest tip displacement of the constant-curvature arc (at kPeakBend).
  double max_displacement() const;

  /// Muscle force that bends the free limb to its stop at kPeakBend.
  double max_free_force() const;

  void validate() const {
    if (!(elastic_modulus > 0 && width > 0 && thickness > 0 && length > 0 && moment_arm > 0)) {
      throw std::domain_error("LimbParams: all fields must be strictly positive");
    }
  }
};

inline double zeta_from_geometry(double elastic_modulus, double width, double thickness,
                                 double length, double moment_arm) {
  LimbParams p{elastic_modulus, width, thickness, length, moment_arm};
  p.validate();
  return p.zeta();
}

namespace detail {

inline void check_angle(double theta) {
  if (!(theta >= 0.0 && theta <= kMaxBend)) {
    throw std::domain_error("bend angle " + std::to_string(theta) + " rad outside [0, pi/2]");
  }
}

// sin^2(theta)/theta with its limit 0 at theta = 0.
inline double arc_shape(double theta) {
  if (theta == 0.0) return 0.0;
  const double s = std::sin(theta);
  return s * s / theta;
}

// Bisection for scale * arc_shape(theta) = y on the rising branch [0, hi].
inline double rising_root(double y, double scale, double hi) {
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo >= 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (scale * arc_shape(mid) < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline double LimbParams::max_displacement() const { return length * detail::arc_shape(kPeakBend); }
inline double LimbParams::max_free_force() const { return zeta() * detail::arc_shape(kPeakBend); }

/// Tip displacement of a constant-curvature arc of length L bent by theta.
inline double tip_displacement(double theta, double length) {
  detail::check_angle(theta);
  return length * detail::arc_shape(theta);
}

/// F_SMA = zeta sin^2(theta)/theta. Rises up to kPeakBend, then falls; F(pi/4) = F(pi/2).
inline double sma_force_from_angle(double theta, double zeta) {
  detail::check_angle(theta);
  return zeta * detail::arc_shape(theta);
}

/// Inverts sma_force_from_angle by bisection on [0, pi/2]. Below F(pi/2) the
/// root is unique and lies in [0, pi/4]; at exactly F(pi/2) this returns pi/2.
inline double angle_from_force(double force, double zeta) {
  const double reach = zeta * detail::arc_shape(kMaxBend);
  if (!(force >= 0.0 && force <= reach)) {
    throw std::range_error("muscle force " + std::to_string(force) +
                           " N outside reachable range [0, " + std::to_string(reach) + "]");
  }
  if (force == 0.0) return 0.0;
  if (force == reach) return kMaxBend;
  return detail::rising_root(force, zeta, kMaxBend);
}

/// Rising-branch inverse on [0, kPeakBend]; continuous up to the bend stop.
inline double bend_from_force(double force, double zeta) {
  const double reach = zeta * detail::arc_shape(kPeakBend);
  if (!(force >= 0.0 && force <= reach)) {
    throw std::range_error("muscle force " + std::to_string(force) +
                           " N outside rising branch [0, " + std::to_string(reach) + "]");
  }
  if (force == 0.0) return 0.0;
  if (force == reach) return kPeakBend;
  return detail::rising_root(force, zeta, kPeakBend);
}

/// Angle whose constant-curvature tip displacement equals `displacement`.
inline double angle_from_displacement(double displacement, double length) {
  // The arc shape is the force map with zeta = L.
  return angle_from_force(displacement, length);
}

struct Statics {
  double theta = 0.0;          // rad
  double displacement = 0.0;   // delta_L, mm
  double external_force = 0.0;  // total external tip load carried by the limb, N
  double plate_force = 0.0;    // reaction from the plate alone, N
  bool at_plate = false;
};

/// Static equilibrium with an optional plate and an optional opposing tip load.
///
/// The muscle moment alone would put the tip at delta_free = (L/zeta) F_SMA.
/// A tip load P opposing the bend shifts it by -c_F P (superposition). The limb
/// cannot bend past its straight rest position or past kPeakBend, and a plate at
/// distance d stops the tip there, taking up the remaining load.
inline Statics loaded_statics(double muscle_force, std::optional<double> plate_dist,
                              double tip_load, const LimbParams& limb) {
  if (!(muscle_force >= 0.0)) throw std::domain_error("negative muscle force");
  if (plate_dist && !(*plate_dist > 0.0)) throw std::domain_error("plate distance must be > 0");
  if (!(tip_load >= 0.0)) throw std::domain_error("negative tip load");

  const double compliance = limb.tip_compliance();
  const double free_disp = limb.length / limb.zeta() * muscle_force;
  const double unplated = free_disp - compliance * tip_load;
  const double reach = limb.max_displacement();
  const double stop = plate_dist ? std::min(*plate_dist, reach) : reach;

  Statics out;
  out.external_force = tip_load;
  if (unplated <= 0.0) {
    // pushed flat against the rest stop
    return out;
  }
  if (unplated <= stop) {
    out.displacement = unplated;
    out.theta = bend_from_force(unplated, limb.length);
    return out;
  }
  out.displacement = stop;
  out.theta = bend_from_force(stop, limb.length);
  if (plate_dist && *plate_dist <= reach) {
    out.plate_force = (unplated - stop) / compliance;
    out.external_force += out.plate_force;
    out.at_plate = true;
  }
  return out;
}

/// Plate-contact statics: returns (theta, delta_L, F_ext).
inline Statics contact_statics(double muscle_force, double plate_dist, const LimbParams& limb) {
  return loaded_statics(muscle_force, plate_dist, 0.0, limb);
}

}  // namespace smaprop::beam
