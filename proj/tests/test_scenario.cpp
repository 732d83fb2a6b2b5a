#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "fdcorr/scenario.hpp"

using namespace fdcorr;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const std::string path = "/tmp/fdcorr_" + name;
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("bundled scenarios parse and validate") {
    for (const char* name :
         {"dro_periodic.json", "dro_quasi_refine.json", "dro_correct_single.json",
          "dro_correct_single_ci.json", "nrho_seed_torus.json", "elfo_constellation.json"}) {
        CAPTURE(name);
        const Scenario sc = load_scenario(std::string(FDCORR_SCENARIO_DIR "/") + name);
        CHECK(sc.format_version == 1);
    }
}

TEST_CASE("the CI targeting scenario carries the reference structure") {
    const Scenario sc =
        load_scenario(FDCORR_SCENARIO_DIR "/dro_correct_single_ci.json");
    REQUIRE(sc.states.size() == 1);
    CHECK(sc.states[0][0] == doctest::Approx(0.929817046666844).epsilon(1e-15));
    REQUIRE(sc.targets.size() == 2);
    CHECK(*sc.targets[0].nu == doctest::Approx(8.663312798369873).epsilon(1e-15));
    CHECK(*sc.targets[1].amplitude == doctest::Approx(0.01));
    CHECK(sc.n_samples == 4096);
    CHECK(sc.sample_dt() > 0.0);
}

TEST_CASE("element satellites produce native-frame states") {
    const Scenario sc = load_scenario(FDCORR_SCENARIO_DIR "/elfo_constellation.json");
    CHECK(sc.model == ModelId::HFEM);
    CHECK(sc.provider == "bicircular");
    REQUIRE(sc.states.size() == 3);
    REQUIRE(sc.element_sets.size() == 3);
    // lunar orbit at 10000 km: nd radius well below 0.1 from the Moon
    for (const auto& s : sc.states) CHECK(s.head<3>().norm() < 0.1);
    // per-target channels parsed
    REQUIRE(sc.sat_targets.size() == 3);
    REQUIRE(sc.sat_targets[0].size() == 2);
    CHECK(sc.sat_targets[0][0].recipe->component == 2);
    CHECK(sc.sat_targets[1][0].phase_relative_to_reference);
}

TEST_CASE("malformed scenarios fail with a field diagnostic") {
    const std::string path = write_temp("bad_field.json", R"({
        "model": "cr3bp",
        "signal": { "component": "x", "frame": "brf", "n_samples": 7, "span_nd": 1.0 }
    })");
    try {
        load_scenario(path);
        FAIL("expected a scenario error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("n_samples") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("parse errors carry the byte offset") {
    const std::string path = write_temp("parse.json", "{ not json");
    try {
        load_scenario(path);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("coupled frequency and amplitude targets are rejected") {
    const std::string path = write_temp("coupled.json", R"({
        "model": "cr3bp",
        "initial_state": { "position_nd": [1,0,0], "velocity_nd": [0,1,0] },
        "signal": { "component": "x", "frame": "brf", "n_samples": 64, "span_nd": 1.0 },
        "targets": [ { "match": "peak", "peak_index": 1, "nu_nd": 1.0, "amplitude_nd": 0.1 } ]
    })");
    CHECK_THROWS_AS(load_scenario(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("patchpoint csv round trip") {
    std::vector<Vector6d> states(3);
    std::vector<double> epochs = {0.0, 0.5, 1.0};
    for (int s = 0; s < 3; ++s)
        for (int c = 0; c < 6; ++c) states[s][c] = 0.1 * s + 0.01 * c;
    const std::string path = "/tmp/fdcorr_patch.csv";
    write_patchpoints_csv(path, states, epochs);
    std::vector<double> back_epochs;
    const auto back = read_patchpoints_csv(path, back_epochs);
    REQUIRE(back.size() == 3);
    for (int s = 0; s < 3; ++s) {
        CHECK(back_epochs[s] == doctest::Approx(epochs[s]));
        CHECK((back[s] - states[s]).norm() < 1e-15);
    }
    std::remove(path.c_str());
}

TEST_CASE("constants file overrides merge with defaults") {
    const std::string path = write_temp("constants.json", R"({ "l_star_km": 380000.0 })");
    const SystemConstants c = load_constants(path);
    CHECK(c.l_star_km == doctest::Approx(380000.0));
    CHECK(c.mass_ratio == doctest::Approx(default_constants().mass_ratio));
    std::remove(path.c_str());
}
