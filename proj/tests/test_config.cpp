#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "topocaps/config.hpp"
#include "topocaps/errors.hpp"

using namespace topocaps;
using topocaps::io::Config;

TEST_CASE("sections, comments and lookups") {
    const Config c = Config::parse_string(
        "# top comment\n"
        "[model]\n"
        "variant = tvae   # trailing comment\n"
        "n_capsules = 8\n"
        "\n"
        "[train]\n"
        "lr = 1e-3\n"
        "deterministic = true\n"
        "layers = 256, 128, 64\n");
    CHECK(c.get("model.variant") == "tvae");
    CHECK(c.get_int("model.n_capsules", 0) == 8);
    CHECK(c.get_double("train.lr", 0.0) == doctest::Approx(1e-3));
    CHECK(c.get_bool("train.deterministic", false));
    CHECK(c.get_sizes("train.layers") == std::vector<std::size_t>{256, 128, 64});
    CHECK(c.has("train.lr"));
    CHECK(!c.has("train.missing"));
    CHECK(c.get("train.missing", "fallback") == "fallback");
    CHECK(c.get_int("train.missing", 42) == 42);
}

TEST_CASE("errors name the offending key") {
    const Config c = Config::parse_string("[a]\nx = not_a_number\n");
    try {
        c.get_int("a.x", 0);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("a.x") != std::string::npos);
    }
    CHECK_THROWS_AS(c.get("a.missing"), ConfigError);
    CHECK_THROWS_AS(c.get_sizes("a.x"), ConfigError);
}

TEST_CASE("malformed lines and files are rejected") {
    CHECK_THROWS_AS(Config::parse_string("[a]\njust a dangling token\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_file("/nonexistent/config.ini"), ConfigError);
}
