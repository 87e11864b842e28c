#pragma once

#include <string>

namespace stomech {

/// Physical dimension as an exponent vector over (length, time, mass).
/// Exponents are stored in half-integer steps so that quantities like the
/// diffusion amplitude sigma (length / sqrt(time)) stay representable.
struct Dimension {
    // twice the exponent of length, time, mass
    int length2 = 0;
    int time2 = 0;
    int mass2 = 0;

    static Dimension dimensionless() { return {}; }
    static Dimension make(int length, int time, int mass) {
        return {2 * length, 2 * time, 2 * mass};
    }

    double length() const { return length2 / 2.0; }
    double time() const { return time2 / 2.0; }
    double mass() const { return mass2 / 2.0; }

    bool operator==(const Dimension&) const = default;

    Dimension operator+(const Dimension& o) const {
        return {length2 + o.length2, time2 + o.time2, mass2 + o.mass2};
    }
    Dimension operator-(const Dimension& o) const {
        return {length2 - o.length2, time2 - o.time2, mass2 - o.mass2};
    }

    std::string str() const;
};

inline const Dimension dim_length = Dimension::make(1, 0, 0);
inline const Dimension dim_time = Dimension::make(0, 1, 0);
inline const Dimension dim_mass = Dimension::make(0, 0, 1);
inline const Dimension dim_speed = Dimension::make(1, -1, 0);
// gravitational constant: L^3 T^-2 M^-1
inline const Dimension dim_gravity = Dimension::make(3, -2, -1);
// diffusion coefficient sigma^2: L^2 T^-1
inline const Dimension dim_diffusion = Dimension::make(2, -1, 0);

/// Dimensioned scalar. Addition requires equal dimensions; products and
/// quotients combine exponent vectors. Violations throw std::invalid_argument
/// with the offending exponent named.
struct Quantity {
    double value = 0.0;
    Dimension dim;

    Quantity() = default;
    Quantity(double v, Dimension d) : value(v), dim(d) {}
    static Quantity scalar(double v) { return {v, Dimension::dimensionless()}; }

    Quantity operator+(const Quantity& o) const;
    Quantity operator-(const Quantity& o) const;
    Quantity operator*(const Quantity& o) const {
        return {value * o.value, dim + o.dim};
    }
    Quantity operator/(const Quantity& o) const {
        return {value / o.value, dim - o.dim};
    }
    Quantity operator*(double s) const { return {value * s, dim}; }
    Quantity operator/(double s) const { return {value / s, dim}; }
};

Quantity sqrt(const Quantity& q);
Quantity pow_int(const Quantity& q, int n);

/// Compiled-in constants of the galactic application; overridable from a
/// config file but immutable once constructed.
struct PhysicalConstants {
    double solar_mass_kg = 1.98e30;
    double parsec_km = 3.086e13;
    // configured display value of G, in kpc km^2 s^-2 Msun^-1
    double G_galactic_value = 4.3e-6;
    std::string G_galactic_unit = "kpc.km2.s-2.Msun-1";

    double kpc_km() const { return parsec_km * 1e3; }
    double kpc_m() const { return parsec_km * 1e6; }
    /// G in the coherent (kpc, s, Msun) basis: the configured mixed-unit
    /// value with km^2 rescaled to kpc^2.
    double G_galactic_coherent() const {
        double km_per_kpc = kpc_km();
        return G_galactic_value / (km_per_kpc * km_per_kpc);
    }
};

/// Loads constants from a "key = value [unit]" text file ('#' comments).
/// Unknown keys are rejected.
PhysicalConstants load_constants(const std::string& path,
                                 PhysicalConstants defaults = {});

enum class UnitSystemName { Natural, Galactic };

/// A coherent unit system: SI conversion factors for the three base
/// dimensions plus a display factor for speeds (the galactic system prints
/// speeds in km/s even though its coherent speed unit is kpc/s).
struct UnitSystem {
    UnitSystemName name = UnitSystemName::Natural;
    // base unit sizes expressed in SI (m, s, kg)
    double length_unit = 1.0;
    double time_unit = 1.0;
    double mass_unit = 1.0;
    // display unit for speeds, in SI m/s
    double speed_unit = 1.0;
    Quantity G{1.0, dim_gravity};

    static UnitSystem natural();
    static UnitSystem galactic(const PhysicalConstants& c = {});

    /// SI magnitude of the coherent unit carrying dimension d.
    double si_factor(const Dimension& d) const;
};

/// Re-expresses q in the target system. Pure rescale; the dimension tag is
/// preserved. Round-trips are exact to ~1 ulp per factor.
Quantity convert(const Quantity& q, const UnitSystem& from, const UnitSystem& to);

/// Characteristic Kepler scales of the stochastic model:
///   r0 = 2 sigma^4 / (G M),   v0 = sqrt(2 G M / r0) = G M / sigma^2.
/// Both closed forms of v0 are evaluated and must agree to 1e-12 relative.
struct KeplerScales {
    Quantity r0;
    Quantity v0;
};
KeplerScales kepler_scales(const Quantity& G, const Quantity& M, const Quantity& sigma);

/// Inverse identification used by the galaxy estimates: given the flat
/// rotation speed, sigma^2 = G M / v0 and r0 = 2 G M / v0^2.
struct KeplerScalesFromSpeed {
    Quantity r0;
    Quantity sigma;
    Quantity sigma_squared;
};
KeplerScalesFromSpeed kepler_scales_from_speed(const Quantity& G, const Quantity& M,
                                               const Quantity& v0);

} // namespace stomech
