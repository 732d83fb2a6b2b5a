#include "fdcorr/constants.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fdcorr {

double SystemConstants::t_star_s() const {
    return std::sqrt(l_star_km * l_star_km * l_star_km / gm_earth_moon_km3s2);
}

double SystemConstants::sun_rate() const {
    // Two-body rate of the Sun / Earth-Moon barycenter system, in nd time.
    const double gm = (gm_sun_km3s2 + gm_earth_moon_km3s2) / gm_earth_moon_km3s2;
    const double a = sun_distance();
    return std::sqrt(gm / (a * a * a));
}

double SystemConstants::years_to_nd(double years) const {
    return years * 365.25 * 86400.0 / t_star_s();
}

SystemConstants default_constants() { return SystemConstants{}; }

SystemConstants load_constants(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open constants file: " + path);
    nlohmann::json j;
    in >> j;
    SystemConstants c = default_constants();
    if (j.contains("mass_ratio_nd")) c.mass_ratio = j["mass_ratio_nd"].get<double>();
    if (j.contains("l_star_km")) c.l_star_km = j["l_star_km"].get<double>();
    if (j.contains("gm_earth_moon_km3s2")) c.gm_earth_moon_km3s2 = j["gm_earth_moon_km3s2"].get<double>();
    if (j.contains("gm_sun_km3s2")) c.gm_sun_km3s2 = j["gm_sun_km3s2"].get<double>();
    if (j.contains("sun_distance_km")) c.sun_distance_km = j["sun_distance_km"].get<double>();
    return c;
}

}  // namespace fdcorr
