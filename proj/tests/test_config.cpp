#include "disagg/config.hpp"
#include "disagg/errors.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace disagg;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.ini");
}

std::string usage_message(const std::string& text) {
    try {
        parse(text);
    } catch (const UsageError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, EmptyGivesDefaults) {
    const RunConfig c = parse("");
    EXPECT_EQ(c.seed, 2024u);
    EXPECT_EQ(c.method, Method::Both);
    EXPECT_TRUE(c.days.empty());
    EXPECT_EQ(c.srrm.iterations, 30);
    EXPECT_EQ(c.srrm.train_fraction, 0.33);
    EXPECT_EQ(c.pri.optimize.beta, 2.0);
    EXPECT_EQ(c.scene.lst_noise_sd, 5.0);
    EXPECT_EQ(c.scene.ppt_noise_sd, 1.0);
    EXPECT_EQ(c.scene.sm_noise_sd, 0.03);
    EXPECT_EQ(c.scene.lai_noise_sd, 0.1);
    EXPECT_EQ(c.search.k_values.size(), 7u);
    EXPECT_EQ(c.eval.histogram.bins, 50);
}

TEST(Config, OverridesAndLists) {
    const RunConfig c = parse(
        "; comment\n"
        "[run]\nseed = 7\ndays = 39,135\nmethod = srrm\n"
        "[srrm]\nk_values = 2,3\nmu_values = 0.1, 1\nsubsample = rows\n"
        "[pri]\nstep = 0.002\nsigma = auto\n"
        "[calendar]\ncorn = 61-139\ncotton = none\n"
        "[eval]\nkld_range = auto\nkld_direction = estimate_to_truth\n");
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.days, (std::vector<int>{39, 135}));
    EXPECT_EQ(c.method, Method::Srrm);
    EXPECT_EQ(c.search.k_values, (std::vector<int>{2, 3}));
    EXPECT_EQ(c.search.mu_values, (std::vector<double>{0.1, 1.0}));
    EXPECT_EQ(c.srrm.subsample, itclust::Subsample::Rows);
    EXPECT_EQ(c.pri.optimize.step, 0.002);
    EXPECT_FALSE(c.pri.optimize.sigma.has_value());
    EXPECT_EQ(c.calendar.entries().size(), 1u);
    EXPECT_FALSE(c.eval.histogram.range.has_value());
    EXPECT_EQ(c.eval.histogram.direction, metrics::KlDirection::EstimateToTruth);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_NE(usage_message("[run]\nseed = 1\nbogus = 3\n").find("test.ini:3"), std::string::npos);
    EXPECT_NE(usage_message("[srrm]\n\nk_values = 2,x\n").find("test.ini:3"), std::string::npos);
    EXPECT_NE(usage_message("[run]\nmethod = fast\n").find("test.ini:2"), std::string::npos);
    EXPECT_NE(usage_message("[run\nseed = 1\n").find("test.ini:1"), std::string::npos);
    EXPECT_NE(usage_message("[nowhere]\nx = 1\n").find("test.ini:2"), std::string::npos);
}

TEST(Config, CrossFieldValidation) {
    EXPECT_THROW(parse("[srrm]\ntrain_fraction = 0.5\n"), UsageError);
    EXPECT_THROW(parse("[synth]\ncoarse_factor = 7\n"), UsageError);
    EXPECT_THROW(parse("[run]\ndays = 0\n"), UsageError);
    EXPECT_THROW(parse("[calendar]\ncorn = 139-61\n"), UsageError);
}

TEST(Config, PrintedConfigParsesBack) {
    RunConfig c = parse("[run]\nseed = 99\ndays = 40,223\n[srrm]\nmu_values = 0.001,10\n[pri]\nbeta = 3.5\n");
    std::ostringstream out;
    write_config(out, c);
    std::istringstream in(out.str());
    const RunConfig back = parse_config(in, "printed");
    std::ostringstream again;
    write_config(again, back);
    EXPECT_EQ(out.str(), again.str());
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(back.pri.optimize.beta, 3.5);
}

TEST(Config, ForeignSectionsIgnoredOnRequest) {
    std::istringstream in("[dataset]\nformat = 1\n[run]\nseed = 3\n");
    EXPECT_EQ(parse_config(in, "m", {"dataset"}).seed, 3u);
    EXPECT_THROW(parse("[dataset]\nformat = 1\n"), UsageError);
}

TEST(Config, DayListAndMethod) {
    EXPECT_TRUE(parse_day_list("all").empty());
    EXPECT_EQ(parse_day_list("354, 39"), (std::vector<int>{39, 354}));
    EXPECT_THROW(parse_day_list("400"), UsageError);
    EXPECT_EQ(parse_method("pri"), Method::Pri);
    EXPECT_EQ(to_string(Method::Both), "both");
    EXPECT_THROW(parse_method("x"), UsageError);
}
