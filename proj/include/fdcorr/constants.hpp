#pragma once

#include <string>

namespace fdcorr {

/// Characteristic quantities and gravitational parameters for the
/// Earth-Moon system. All dynamics run in nondimensional units built
/// from l_star (length) and t_star (time); gravitational parameters are
/// normalized so that mu_earth + mu_moon = 1.
struct SystemConstants {
    /// Moon/(Earth+Moon) mass ratio. Also the nd gravitational parameter
    /// of the Moon. The default reproduces the bundled periodic-DRO
    /// regression states to ~1e-13.
    double mass_ratio = 1.2150584269940354e-2;
    /// Mean Earth-Moon distance [km].
    double l_star_km = 384400.0;
    /// Combined Earth+Moon gravitational parameter [km^3/s^2].
    double gm_earth_moon_km3s2 = 403503.2423821478;
    /// Sun gravitational parameter [km^3/s^2].
    double gm_sun_km3s2 = 1.32712440018e11;
    /// Sun orbit radius about the Earth-Moon barycenter [km].
    double sun_distance_km = 149597870.7;

    /// Characteristic time [s]: sqrt(l*^3 / (GM_E + GM_M)).
    double t_star_s() const;
    /// nd gravitational parameter of the Earth (= 1 - mass_ratio).
    double mu_earth() const { return 1.0 - mass_ratio; }
    /// nd gravitational parameter of the Moon (= mass_ratio).
    double mu_moon() const { return mass_ratio; }
    /// nd gravitational parameter of the Sun.
    double mu_sun() const { return gm_sun_km3s2 / gm_earth_moon_km3s2; }
    /// nd Sun distance from the Earth-Moon barycenter.
    double sun_distance() const { return sun_distance_km / l_star_km; }
    /// nd inertial angular rate of the Sun line about the barycenter.
    double sun_rate() const;
    /// Dimensional mean angular rate of the Earth about the Moon [rad/s].
    /// Consistent with the unit nd rotation rate of the rotating frame.
    double n_earth_rad_s() const { return 1.0 / t_star_s(); }

    /// Convert a span in Julian years to nd time.
    double years_to_nd(double years) const;
};

/// Built-in defaults, optionally overridden by a JSON constants file
/// (see load_constants). The mass ratio default reproduces the bundled
/// periodic DRO regression states.
SystemConstants default_constants();

/// Load constants from a JSON file. Missing keys fall back to defaults.
/// Recognized keys: mass_ratio_nd, l_star_km, gm_earth_moon_km3s2,
/// gm_sun_km3s2, sun_distance_km.
SystemConstants load_constants(const std::string& path);

}  // namespace fdcorr
