#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rpf/config.hpp"

using namespace rpf;
using namespace rpf::config;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream is(std::string(RPF_SOURCE_DIR) + "/configs/" + name);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string error_of(const std::string& text) {
    try {
        parse_run_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const std::string base = "map = {family = \"mp\", s = 0.5}\n";

}  // namespace

TEST(Document, ScalarsListsTablesAndComments) {
    auto doc = parse_document("# header\n\na = 1.5e-3  # trailing\nb = \"x # y\"\nc = [1, -2, 3]\nd = {p = 1, q = \"z\"}\n");
    ASSERT_EQ(doc.size(), 4u);
    EXPECT_EQ(doc[0].key, "a");
    EXPECT_EQ(doc[0].line, 3);
    EXPECT_DOUBLE_EQ(doc[0].value.number, 1.5e-3);
    EXPECT_EQ(doc[1].value.text, "x # y");
    ASSERT_EQ(doc[2].value.items.size(), 3u);
    EXPECT_EQ(doc[2].value.items[1].number, -2.0);
    ASSERT_NE(doc[3].value.find("q"), nullptr);
    EXPECT_EQ(doc[3].value.find("q")->text, "z");
    EXPECT_EQ(doc[3].value.find("r"), nullptr);
}

TEST(Document, SyntaxErrorsCarryLineNumbers) {
    auto msg = [](const std::string& t) {
        try {
            parse_document(t);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(msg("a = 1\nb = \n").find("line 2"), std::string::npos);
    EXPECT_NE(msg("a = 1\na = 2\n").find("line 2"), std::string::npos);
    EXPECT_NE(msg("a = \"open\n").find("line 1"), std::string::npos);
    EXPECT_NE(msg("a = {b = {c = 1}}\n").find("line 1"), std::string::npos);
    EXPECT_NE(msg("x\n").find("line 1"), std::string::npos);
    EXPECT_NE(msg("a = 1 2\n").find("line 1"), std::string::npos);
}

TEST(Expression, PrecedenceAndFunctions) {
    EXPECT_DOUBLE_EQ(Expression::compile("1 + 2 * 3")(0.0), 7.0);
    EXPECT_DOUBLE_EQ(Expression::compile("(1 + 2) * 3")(0.0), 9.0);
    EXPECT_DOUBLE_EQ(Expression::compile("8 / 4 / 2")(0.0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::compile("-x - -1")(0.25), 0.75);
    EXPECT_DOUBLE_EQ(Expression::compile("2*pi")(0.0), 2.0 * std::numbers::pi);
    auto f = Expression::compile("0.2*cos(2*pi*x) + 0.1*sin(4*pi*x)");
    for (double x : {0.0, 0.13, 0.5, 0.77})
        EXPECT_NEAR(f(x), 0.2 * std::cos(2 * std::numbers::pi * x) + 0.1 * std::sin(4 * std::numbers::pi * x), 1e-15);
    EXPECT_THROW(Expression::compile("exp(x)"), ConfigError);
    EXPECT_THROW(Expression::compile("1 +"), ConfigError);
    EXPECT_THROW(Expression::compile("cos x"), ConfigError);
    EXPECT_THROW(Expression::compile("(1"), ConfigError);
}

TEST(RunConfig, DefaultsWithMapOnly) {
    auto c = parse_run_config(base);
    EXPECT_EQ(c.map.family, "mp");
    EXPECT_EQ(c.omega.family, "ab");
    EXPECT_DOUBLE_EQ(c.omega.alpha, 0.75);
    EXPECT_TRUE(c.Omega.is_legendre());
    EXPECT_EQ(c.grid, 16384u);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_TRUE(c.c_sweep.empty());
    EXPECT_EQ(c.potential_expr()(0.3), 0.0);
}

TEST(RunConfig, ShippedConfigsParse) {
    auto a = parse_run_config(slurp("power_law.cfg"));
    EXPECT_EQ(a.c_sweep, (std::vector<double>{0.1, 0.05, 0.025}));
    EXPECT_EQ(a.gibbs.centers, 100u);
    EXPECT_EQ(a.gibbs.n_max, 12u);
    EXPECT_NEAR(a.potential_expr()(0.0), 0.2, 1e-15);
    auto b = parse_run_config(slurp("iterated_log.cfg"));
    EXPECT_EQ(b.map.family, "ilog");
    EXPECT_EQ(b.omega.family, "ilog-pair");
    EXPECT_EQ(b.Omega.powers, (std::vector<double>{0.0, 1.0}));
    EXPECT_EQ(b.Omega.build().provenance().kind, ModulusKind::ilog_composite);
    auto c = parse_run_config(slurp("boundary.cfg"));
    EXPECT_DOUBLE_EQ(c.omega.alpha, 0.5);
    EXPECT_EQ(c.grid, 4096u);
}

TEST(RunConfig, FieldDiagnostics) {
    EXPECT_EQ(error_of("map = {family = \"mp\", s = 1.5}\n"), "config line 1, field 'map.s': need 0 < s < 1");
    EXPECT_NE(error_of(base + "grid = 100\n").find("line 2, field 'grid'"), std::string::npos);
    EXPECT_NE(error_of(base + "gird = 1024\n").find("field 'gird': unknown key"), std::string::npos);
    EXPECT_NE(error_of(base + "gibbs = {r = 0.05, radius = 1}\n").find("gibbs.radius"), std::string::npos);
    EXPECT_NE(error_of(base + "potential = \"x\"\n").find("not 1-periodic"), std::string::npos);
    EXPECT_NE(error_of(base + "potential = \"cosh(x)\"\n").find("field 'potential'"), std::string::npos);
    EXPECT_NE(error_of(base + "c_sweep = [0.1, 0.2]\n").find("c_sweep"), std::string::npos);
    EXPECT_NE(error_of(base + "Omega = {family = \"legendre\", tau = 0.5}\n").find("Omega.tau"), std::string::npos);
    EXPECT_NE(error_of(base + "omega = \"legendre\"\n").find("omega"), std::string::npos);
    EXPECT_NE(error_of("grid = 1024\n").find("'map': missing"), std::string::npos);
    EXPECT_NE(error_of(base + "seed = -1\n").find("seed"), std::string::npos);
}

TEST(RunConfig, CeilingOnCDependsOnExponent) {
    // s = 0.9 caps c at 2^-2.9 ~ 0.134
    EXPECT_FALSE(error_of("map = {family = \"mp\", s = 0.9}\nc_sweep = [0.135]\n").empty());
    EXPECT_TRUE(error_of("map = {family = \"mp\", s = 0.9}\nc_sweep = [0.1339]\n").empty());
    EXPECT_TRUE(error_of("map = {family = \"ilog\", k = 2, A = 1}\nc_sweep = [0.25]\n").empty());
    EXPECT_FALSE(error_of("map = {family = \"ilog\", k = 2, A = 1}\nc_sweep = [0.26]\n").empty());
}
