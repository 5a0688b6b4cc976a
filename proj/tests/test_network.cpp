#include <doctest.h>

#include <nlohmann/json.hpp>

#include "microgrid/io.hpp"
#include "microgrid/network.hpp"

using namespace microgrid;
using nlohmann::json;

namespace {

const char* kFixture = MICROGRID_FIXTURE_DIR "/ceder.json";

NetworkModel fixture() { return load_network(kFixture); }

json minimal_doc() {
    return json::parse(R"({
      "buses": [
        {"id": 0, "v_nominal_kv": 0.4, "kind": "ac"},
        {"id": 1, "v_nominal_kv": 0.4, "kind": "ac"}
      ],
      "lines": [
        {"from": 0, "to": 1, "length_km": 1.0, "r_ohm_per_km": 0.5,
         "x_ohm_per_km": 0.1, "i_max_ka": 1.0, "kind": "ac"}
      ],
      "external_grids": [{"bus": 0, "mode": "either"}]
    })");
}

}  // namespace

TEST_CASE("fixture parses with expected record counts") {
    NetworkModel m = fixture();
    CHECK(m.buses.size() == 9);
    CHECK(m.lines.size() == 2);
    CHECK(m.transformers.size() == 1);
    CHECK(m.converters.size() == 5);
    CHECK(m.generators.size() == 4);
    CHECK(m.loads.size() == 2);
    CHECK(m.storages.size() == 1);
    CHECK(m.external_grids.size() == 1);
    CHECK(m.omega_rad_per_s == doctest::Approx(314.1592653589793).epsilon(1e-15));

    CHECK(m.bus(3).kind == CurrentKind::dc);
    CHECK(m.bus(0).kind == CurrentKind::ac);
    CHECK(m.bus(5).v_nominal_kv == doctest::Approx(0.86));
    CHECK(m.bus(4).v_max_pu == doctest::Approx(1.05));
    CHECK(m.bus(4).v_min_pu == doctest::Approx(0.95));
    CHECK(m.generators[0].p_nom_kw == doctest::Approx(22.14));
    CHECK(m.generators[0].p_min_kw == doctest::Approx(0.5));
    CHECK(m.generators[0].econ.cf_pct == doctest::Approx(33.5));
    CHECK(m.converters[2].efficiency == doctest::Approx(0.86));
    CHECK(m.converters[1].control == ConverterControl::grid_forming);
    CHECK(m.converters[0].control == ConverterControl::grid_following);
}

TEST_CASE("line impedance scales with length and frequency") {
    NetworkModel m = fixture();
    BranchImpedance z = branch_impedance(m.lines[0], m.omega_rad_per_s);
    CHECK(z.r_ohm == doctest::Approx(0.075).epsilon(1e-12));
    CHECK(z.x_ohm == doctest::Approx(0.0525).epsilon(1e-12));
    CHECK(z.b_siemens == doctest::Approx(4.712388980384689e-06).epsilon(1e-12));

    BranchImpedance zdc = branch_impedance(m.lines[1], m.omega_rad_per_s);
    CHECK(zdc.r_ohm == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(zdc.x_ohm == 0.0);
    CHECK(zdc.b_siemens == 0.0);
}

TEST_CASE("transformer impedance from short-circuit percentages") {
    NetworkModel m = fixture();
    BranchImpedance z = branch_impedance(m.transformers[0]);
    // |z| = 1.5% of 0.4^2*1000/250 ohm, r = 1.0%, x fills the magnitude
    CHECK(z.r_ohm == doctest::Approx(0.0064).epsilon(1e-12));
    CHECK(std::hypot(z.r_ohm, z.x_ohm) == doctest::Approx(0.0096).epsilon(1e-12));
    CHECK(z.x_ohm == doctest::Approx(0.0071554175279993255).epsilon(1e-12));
}

TEST_CASE("per-unit bases use bus nominal voltage") {
    NetworkModel m = per_unit_normalize(fixture(), 100.0);
    REQUIRE(m.normalized());
    const PerUnitSystem& pu = *m.pu;
    CHECK(pu.s_base_kva == 100.0);
    CHECK(pu.z_base_ohm(1) == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(pu.z_base_ohm(0) == doctest::Approx(2250.0).epsilon(1e-12));
    CHECK(pu.z_base_ohm(4) == doctest::Approx(6.4).epsilon(1e-12));
    CHECK(pu.i_base_ka(1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pu.i_base_ka(0) == doctest::Approx(100.0 / 15000.0).epsilon(1e-12));
}

TEST_CASE("per-unit admittances match hand-derived values") {
    NetworkModel m = per_unit_normalize(fixture(), 100.0);
    REQUIRE(m.line_admittances.size() == 2);
    REQUIRE(m.transformer_admittances.size() == 1);

    const BranchAdmittance& ac = m.line_admittances[0];
    CHECK(ac.conductance_pu == doctest::Approx(14.317673378076064).epsilon(1e-12));
    CHECK(ac.susceptance_pu == doctest::Approx(-10.022371364653244).epsilon(1e-12));
    CHECK(ac.shunt_pu == doctest::Approx(7.5398223686155025e-06).epsilon(1e-12));

    const BranchAdmittance& dc = m.line_admittances[1];
    CHECK(dc.conductance_pu == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(dc.susceptance_pu == 0.0);
    CHECK(dc.shunt_pu == 0.0);

    // Transformer referred to the 0.4 kV winding (bus 1): r=0.004, x~0.004472
    const BranchAdmittance& xf = m.transformer_admittances[0];
    double r = 0.004, x = 0.0071554175279993255 / 1.6;
    double m2 = r * r + x * x;
    CHECK(xf.conductance_pu == doctest::Approx(r / m2).epsilon(1e-12));
    CHECK(xf.susceptance_pu == doctest::Approx(-x / m2).epsilon(1e-12));
    CHECK(xf.shunt_pu == 0.0);
}

TEST_CASE("denormalize round-trips the physical records") {
    NetworkModel original = fixture();
    NetworkModel back = denormalize(per_unit_normalize(original, 100.0));
    CHECK_FALSE(back.normalized());
    CHECK(back.line_admittances.empty());
    REQUIRE(back.buses.size() == original.buses.size());
    for (size_t i = 0; i < original.buses.size(); ++i) {
        CHECK(back.buses[i].id == original.buses[i].id);
        CHECK(back.buses[i].v_nominal_kv == original.buses[i].v_nominal_kv);
    }
    REQUIRE(back.lines.size() == original.lines.size());
    for (size_t i = 0; i < original.lines.size(); ++i) {
        CHECK(back.lines[i].r_ohm_per_km == original.lines[i].r_ohm_per_km);
        CHECK(back.lines[i].length_km == original.lines[i].length_km);
    }
    CHECK(back.generators[0].p_nom_kw == original.generators[0].p_nom_kw);
    CHECK(back.omega_rad_per_s == original.omega_rad_per_s);
}

TEST_CASE("parse rejects malformed documents with a record locus") {
    json doc = minimal_doc();

    SUBCASE("duplicate bus id") {
        doc["buses"][1]["id"] = 0;
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("duplicate bus id"),
                             ParseError);
    }
    SUBCASE("non-contiguous bus ids") {
        doc["buses"][1]["id"] = 5;
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("contiguous"), ParseError);
    }
    SUBCASE("unknown bus reference") {
        doc["lines"][0]["to"] = 7;
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("lines[0]: unknown bus id 7"),
                             ParseError);
    }
    SUBCASE("reactive parameter on dc line") {
        doc["buses"][0]["kind"] = "dc";
        doc["buses"][1]["kind"] = "dc";
        doc["lines"][0]["kind"] = "dc";
        CHECK_THROWS_WITH_AS(parse_network(doc),
                             doctest::Contains("reactive parameter on dc line"), ParseError);
    }
    SUBCASE("non-positive length") {
        doc["lines"][0]["length_km"] = 0.0;
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("length_km"), ParseError);
    }
    SUBCASE("non-positive nominal voltage") {
        doc["buses"][0]["v_nominal_kv"] = -0.4;
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("v_nominal_kv"), ParseError);
    }
    SUBCASE("missing required field") {
        doc["lines"][0].erase("i_max_ka");
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("missing field 'i_max_ka'"),
                             ParseError);
    }
    SUBCASE("inverted voltage band") {
        doc["buses"][0]["v_min_pu"] = 1.2;
        CHECK_THROWS_AS(parse_network(doc), ParseError);
    }
    SUBCASE("converter efficiency out of range") {
        doc["converters"] = json::array(
            {{{"from", 0}, {"to", 1}, {"s_n_kva", 10.0}, {"efficiency", 1.2},
              {"control", "grid_following"}}});
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("efficiency"), ParseError);
    }
    SUBCASE("transformer resistive part above short-circuit voltage") {
        doc["transformers"] = json::array(
            {{{"from", 0}, {"to", 1}, {"s_n_kva", 100.0}, {"v_ccl_pct", 1.0},
              {"v_rccl_pct", 2.0}, {"v_ln_kv", 0.4}}});
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("v_rccl_pct"), ParseError);
    }
    SUBCASE("transformer v_ln matching no endpoint") {
        doc["transformers"] = json::array(
            {{{"from", 0}, {"to", 1}, {"s_n_kva", 100.0}, {"v_ccl_pct", 1.5},
              {"v_rccl_pct", 1.0}, {"v_ln_kv", 22.0}}});
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("neither endpoint"),
                             ParseError);
    }
    SUBCASE("generator bounds inverted") {
        doc["generators"] = json::array(
            {{{"bus", 0}, {"p_nom_kw", 1.0}, {"p_min_kw", 2.0}}});
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("p_min_kw"), ParseError);
    }
    SUBCASE("unknown enum value") {
        doc["buses"][0]["kind"] = "hvdc";
        CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("'ac' or 'dc'"), ParseError);
    }
}

TEST_CASE("validate accepts the fixture") {
    CHECK(validate(fixture()).empty());
}

TEST_CASE("validate flags structural problems") {
    SUBCASE("disconnected network") {
        json doc = minimal_doc();
        doc["buses"].push_back({{"id", 2}, {"v_nominal_kv", 0.4}, {"kind", "ac"}});
        NetworkModel m = parse_network(doc);
        auto diagnostics = validate(m);
        REQUIRE_FALSE(diagnostics.empty());
        bool found = false;
        for (const std::string& d : diagnostics) found = found || d.find("not connected") != std::string::npos;
        CHECK(found);
    }
    SUBCASE("island without a voltage reference") {
        json doc = minimal_doc();
        doc["external_grids"] = json::array();
        NetworkModel m = parse_network(doc);
        auto diagnostics = validate(m);
        REQUIRE_FALSE(diagnostics.empty());
        CHECK(diagnostics.front().find("no voltage reference") != std::string::npos);
    }
    SUBCASE("grid-forming output counts as a reference") {
        json doc = minimal_doc();
        doc["external_grids"] = json::array();
        doc["buses"].push_back({{"id", 2}, {"v_nominal_kv", 0.8}, {"kind", "dc"}});
        doc["converters"] = json::array(
            {{{"from", 2}, {"to", 0}, {"s_n_kva", 10.0}, {"efficiency", 0.99},
              {"control", "grid_forming"}}});
        // bus 2 itself still lacks a reference; only the output-side island gains one
        NetworkModel m = parse_network(doc);
        auto diagnostics = validate(m);
        CHECK(diagnostics.empty());  // single island, reference present at bus 0
    }
    SUBCASE("degenerate converter endpoints") {
        json doc = minimal_doc();
        doc["converters"] = json::array(
            {{{"from", 1}, {"to", 1}, {"s_n_kva", 10.0}, {"efficiency", 0.99},
              {"control", "grid_following"}}});
        NetworkModel m = parse_network(doc);
        auto diagnostics = validate(m);
        REQUIRE_FALSE(diagnostics.empty());
        CHECK(diagnostics.front().find("distinct") != std::string::npos);
    }
    SUBCASE("line kind not matching its buses") {
        json doc = minimal_doc();
        doc["buses"][0]["kind"] = "dc";
        NetworkModel m = parse_network(doc);
        auto diagnostics = validate(m);
        REQUIRE_FALSE(diagnostics.empty());
        CHECK(diagnostics.front().find("mix ac and dc") != std::string::npos);
    }
}

TEST_CASE("normalization requires a positive power base") {
    CHECK_THROWS_AS(per_unit_normalize(fixture(), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(per_unit_normalize(fixture(), -5.0), std::invalid_argument);
}
