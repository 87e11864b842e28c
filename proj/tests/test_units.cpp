#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stomech/units.hpp"

using namespace stomech;

TEST_CASE("quantity arithmetic tracks exponent vectors") {
    Quantity len{3.0, dim_length}, t{2.0, dim_time};
    Quantity speed = len / t;
    CHECK(speed.dim == dim_speed);
    CHECK(speed.value == doctest::Approx(1.5));
    CHECK_THROWS_AS(len + t, std::invalid_argument);
    CHECK((len + len).value == doctest::Approx(6.0));
    CHECK(pow_int(len, 2).dim == Dimension::make(2, 0, 0));
}

TEST_CASE("addition error names the offending exponent") {
    Quantity len{1.0, dim_length}, mass{1.0, dim_mass};
    try {
        auto q = len + mass;
        (void)q;
        FAIL("expected a dimension error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("length exponent") != std::string::npos);
    }
}

TEST_CASE("sigma^2 = GM/v0 carries the diffusion dimension") {
    Quantity G{1.0, dim_gravity}, M{1.0, dim_mass}, v0{1.0, dim_speed};
    Quantity s2 = G * M / v0;
    CHECK(s2.dim == dim_diffusion);
    // sigma itself lives at half-integer exponents
    Quantity sigma = sqrt(s2);
    CHECK(sigma.dim.length2 == 2);
    CHECK(sigma.dim.time2 == -1);
}

TEST_CASE("galactic constants match the configured values") {
    PhysicalConstants c;
    CHECK(c.solar_mass_kg == doctest::Approx(1.98e30));
    CHECK(c.parsec_km == doctest::Approx(3.086e13));
    CHECK(c.G_galactic_value == doctest::Approx(4.3e-6));
    // 1 pc in km through the unit system
    UnitSystem gal = UnitSystem::galactic(c);
    UnitSystem nat = UnitSystem::natural();
    Quantity kpc{1.0, dim_length};
    Quantity si = convert(kpc, gal, nat); // natural = SI factors of 1
    CHECK(si.value == doctest::Approx(3.086e19)); // metres in a kpc
}

TEST_CASE("conversion round trip is identity to 1e-12") {
    PhysicalConstants c;
    UnitSystem gal = UnitSystem::galactic(c);
    UnitSystem nat = UnitSystem::natural();
    Quantity q{7.25, dim_gravity};
    Quantity back = convert(convert(q, gal, nat), nat, gal);
    CHECK(back.value == doctest::Approx(q.value).epsilon(1e-12));
    Quantity same = convert(q, nat, nat);
    CHECK(same.value == q.value);
}

TEST_CASE("kepler scales in natural units") {
    Quantity G{1.0, dim_gravity}, M{1.0, dim_mass};
    Quantity sigma{1.0, {2, -1, 0}};
    auto s = kepler_scales(G, M, sigma);
    CHECK(s.r0.value == doctest::Approx(2.0));
    CHECK(s.v0.value == doctest::Approx(1.0));
    CHECK(s.r0.dim == dim_length);
    CHECK(s.v0.dim == dim_speed);
    // v0^2 r0 = 2 G M exactly up to rounding
    CHECK((s.v0 * s.v0 * s.r0).value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(kepler_scales(Quantity{-1.0, dim_gravity}, M, sigma), std::domain_error);
}

TEST_CASE("galactic radius estimate reproduces 4.1 kpc at p = 10") {
    PhysicalConstants c;
    UnitSystem gal = UnitSystem::galactic(c);
    double v0_kms = 144.0;
    double v0_coherent = v0_kms * gal.speed_unit / (gal.length_unit / gal.time_unit);
    auto inv = kepler_scales_from_speed(gal.G, Quantity{1e10, dim_mass},
                                        Quantity{v0_coherent, dim_speed});
    CHECK(inv.r0.value == doctest::Approx(4.147).epsilon(5e-3)); // kpc
    // and the round trip through kepler_scales agrees
    auto s = kepler_scales(gal.G, Quantity{1e10, dim_mass}, inv.sigma);
    CHECK(s.v0.value == doctest::Approx(v0_coherent).epsilon(1e-10));
    CHECK(s.r0.value == doctest::Approx(inv.r0.value).epsilon(1e-10));
}

TEST_CASE("constants loadable from a config file") {
    std::string path = "test_constants.cfg";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fprintf(f, "# overrides\nG_galactic = 4.5e-6 kpc.km2.s-2.Msun-1\nparsec_km = 3.1e13\n");
        std::fclose(f);
    }
    PhysicalConstants c = load_constants(path);
    CHECK(c.G_galactic_value == doctest::Approx(4.5e-6));
    CHECK(c.parsec_km == doctest::Approx(3.1e13));
    CHECK(c.solar_mass_kg == doctest::Approx(1.98e30)); // untouched default
    std::remove(path.c_str());
    CHECK_THROWS(load_constants("does_not_exist.cfg"));
}
