#include "lmc/catalog.hpp"
#include "lmc/commands.hpp"
#include "lmc/config.hpp"
#include "lmc/errors.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace lmc;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
    try {
        (void)parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

json base() { return find_preset("brownian-linear").config; }

}  // namespace

TEST(Config, EveryPresetParses) {
    for (const auto& entry : catalog()) {
        EXPECT_NO_THROW((void)parse_config(entry.config)) << entry.name;
    }
    EXPECT_THROW((void)find_preset("no-such-preset"), ConfigError);
}

TEST(Config, ResolvedConfigIsAFixedPoint) {
    for (const auto& entry : catalog()) {
        const auto once = resolved_json(parse_config(entry.config));
        const auto twice = resolved_json(parse_config(once));
        EXPECT_EQ(once, twice) << entry.name;
    }
}

TEST(Config, ResolvedConfigOmitsThreadsAndOutput) {
    auto j = base();
    j["mc"]["threads"] = 3;
    j["output"] = {{"path", "/tmp/x.json"}};
    auto r = resolved_json(parse_config(j));
    EXPECT_FALSE(r["mc"].contains("threads"));
    EXPECT_FALSE(r["output"].contains("path"));
    j["mc"]["threads"] = 1;
    j.erase("output");
    EXPECT_EQ(r, resolved_json(parse_config(j)));
}

TEST(Config, ErrorsNameTheFieldPath) {
    auto j = base();
    j["mc"]["n_paths"] = -1;
    EXPECT_EQ(error_of(j).rfind("mc.n_paths:", 0), 0u) << error_of(j);

    j = base();
    j["mc"]["bogus"] = 1;
    EXPECT_EQ(error_of(j).rfind("mc.bogus: unknown field", 0), 0u) << error_of(j);

    j = base();
    j["diffusion"]["drift"] = {"x +"};
    EXPECT_EQ(error_of(j).rfind("diffusion.drift[0]:", 0), 0u) << error_of(j);

    j = base();
    j["plan"]["levels"] = {4, 2};
    EXPECT_EQ(error_of(j).rfind("plan", 0), 0u) << error_of(j);

    j = base();
    j["t"] = 0;
    EXPECT_EQ(error_of(j).rfind("t:", 0), 0u) << error_of(j);
}

TEST(Config, InfinityStrings) {
    auto j = find_preset("bessel3-inverse").config;
    auto c = parse_config(j);
    ASSERT_TRUE(c.diffusion.has_value());
    EXPECT_TRUE(std::isinf(c.diffusion->interval[0].upper));
    EXPECT_EQ(resolved_json(c)["diffusion"]["interval"][0][1], "inf");
}

TEST(Config, MergeJson) {
    json a = {{"mc", {{"seed", 1}, {"n_paths", 10}}}, {"t", 1}};
    json b = {{"mc", {{"seed", 2}}}, {"t", 2}};
    auto m = merge_json(a, b);
    EXPECT_EQ(m["mc"]["seed"], 2);
    EXPECT_EQ(m["mc"]["n_paths"], 10);
    EXPECT_EQ(m["t"], 2);
}

TEST(Commands, ExitCodes) {
    EXPECT_EQ(exit_code_for(ConfigError("x")), 1);
    EXPECT_EQ(exit_code_for(ValidationError("x")), 1);
    EXPECT_EQ(exit_code_for(QuadratureFailure("x")), 2);
    EXPECT_EQ(exit_code_for(UnboundedOnCompact("x")), 2);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), 2);
}

TEST(Commands, ReportsCarryProvenanceFields) {
    auto c = parse_config(find_preset("brownian-zero").config);
    auto r = run_command("classify", c);
    for (const char* k : {"command", "resolved_config", "diagnostics", "version"}) {
        EXPECT_TRUE(r.json.contains(k)) << k;
    }
    EXPECT_EQ(r.json["command"], "classify");
    EXPECT_FALSE(r.csv.empty());
    EXPECT_THROW((void)run_command("nonsense", c), ConfigError);
}

TEST(Commands, ErrorReport) {
    auto j = error_report("deficit", ConfigError("mc.seed: bad"));
    EXPECT_EQ(j["error"]["kind"], "ConfigError");
    EXPECT_EQ(j["command"], "deficit");
}

TEST(Commands, JsonNumber) {
    EXPECT_EQ(json_number(1.5), 1.5);
    EXPECT_EQ(json_number(kInf), "inf");
    EXPECT_EQ(json_number(-kInf), "-inf");
}
