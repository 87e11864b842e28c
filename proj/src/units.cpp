#include "stomech/units.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stomech {

namespace {

std::string exponent_str(const char* base, int twice) {
    if (twice == 0) return "";
    std::ostringstream os;
    os << base;
    if (twice != 2) {
        os << "^";
        if (twice % 2 == 0)
            os << twice / 2;
        else
            os << twice / 2.0;
    }
    os << " ";
    return os.str();
}

[[noreturn]] void dimension_error(const char* op, const Dimension& a, const Dimension& b) {
    std::ostringstream os;
    os << "dimension mismatch in " << op << ": ";
    if (a.length2 != b.length2)
        os << "length exponent " << a.length() << " vs " << b.length();
    else if (a.time2 != b.time2)
        os << "time exponent " << a.time() << " vs " << b.time();
    else
        os << "mass exponent " << a.mass() << " vs " << b.mass();
    throw std::invalid_argument(os.str());
}

} // namespace

std::string Dimension::str() const {
    std::string s = exponent_str("L", length2) + exponent_str("T", time2) + exponent_str("M", mass2);
    if (s.empty()) return "1";
    s.pop_back();
    return s;
}

Quantity Quantity::operator+(const Quantity& o) const {
    if (dim != o.dim) dimension_error("addition", dim, o.dim);
    return {value + o.value, dim};
}

Quantity Quantity::operator-(const Quantity& o) const {
    if (dim != o.dim) dimension_error("subtraction", dim, o.dim);
    return {value - o.value, dim};
}

Quantity sqrt(const Quantity& q) {
    if (q.value < 0.0) throw std::domain_error("sqrt of negative quantity");
    return {std::sqrt(q.value), {q.dim.length2 / 2, q.dim.time2 / 2, q.dim.mass2 / 2}};
}

Quantity pow_int(const Quantity& q, int n) {
    return {std::pow(q.value, n), {q.dim.length2 * n, q.dim.time2 * n, q.dim.mass2 * n}};
}

UnitSystem UnitSystem::natural() {
    UnitSystem s;
    s.name = UnitSystemName::Natural;
    s.G = Quantity{1.0, dim_gravity};
    return s;
}

UnitSystem UnitSystem::galactic(const PhysicalConstants& c) {
    UnitSystem s;
    s.name = UnitSystemName::Galactic;
    s.length_unit = c.kpc_m();        // kpc
    s.time_unit = 1.0;                // s
    s.mass_unit = c.solar_mass_kg;    // Msun
    s.speed_unit = 1e3;               // km/s, display only
    s.G = Quantity{c.G_galactic_coherent(), dim_gravity};
    return s;
}

double UnitSystem::si_factor(const Dimension& d) const {
    return std::pow(length_unit, d.length()) * std::pow(time_unit, d.time()) *
           std::pow(mass_unit, d.mass());
}

Quantity convert(const Quantity& q, const UnitSystem& from, const UnitSystem& to) {
    if (from.name == to.name) return q;
    double f = from.si_factor(q.dim) / to.si_factor(q.dim);
    return {q.value * f, q.dim};
}

KeplerScales kepler_scales(const Quantity& G, const Quantity& M, const Quantity& sigma) {
    if (G.value <= 0.0 || M.value <= 0.0 || sigma.value <= 0.0)
        throw std::domain_error("kepler_scales requires strictly positive G, M, sigma");
    if (G.dim != dim_gravity)
        throw std::invalid_argument("kepler_scales: G must carry dimension " + dim_gravity.str());
    Quantity GM = G * M;
    Quantity r0 = pow_int(sigma, 4) * 2.0 / GM;
    Quantity v0 = sqrt(GM * 2.0 / r0);
    Quantity v0_alt = GM / (sigma * sigma);
    if (v0.dim != v0_alt.dim) dimension_error("kepler_scales v0", v0.dim, v0_alt.dim);
    double rel = std::abs(v0.value - v0_alt.value) / v0_alt.value;
    if (rel > 1e-12)
        throw std::runtime_error("kepler_scales: v0 closed forms disagree beyond 1e-12");
    return {r0, v0};
}

KeplerScalesFromSpeed kepler_scales_from_speed(const Quantity& G, const Quantity& M,
                                               const Quantity& v0) {
    if (G.value <= 0.0 || M.value <= 0.0 || v0.value <= 0.0)
        throw std::domain_error("kepler_scales_from_speed requires strictly positive inputs");
    Quantity GM = G * M;
    Quantity r0 = GM * 2.0 / (v0 * v0);
    Quantity s2 = GM / v0;
    return {r0, sqrt(s2), s2};
}

PhysicalConstants load_constants(const std::string& path, PhysicalConstants defaults) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open constants file: " + path);
    PhysicalConstants c = defaults;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::istringstream key_in(line.substr(0, eq));
        std::istringstream val_in(line.substr(eq + 1));
        std::string key, unit;
        double value = 0.0;
        key_in >> key;
        if (!(val_in >> value))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad numeric value");
        val_in >> unit; // optional unit string, informational

        if (key == "solar_mass_kg")
            c.solar_mass_kg = value;
        else if (key == "parsec_km")
            c.parsec_km = value;
        else if (key == "G_galactic") {
            c.G_galactic_value = value;
            if (!unit.empty()) c.G_galactic_unit = unit;
        } else
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown constant '" + key + "'");
    }
    return c;
}

} // namespace stomech
