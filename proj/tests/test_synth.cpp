#include "disagg/errors.hpp"
#include "disagg/synth.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace disagg;
using namespace disagg::synth;
using disagg::testing::correlation;

namespace {

std::set<int> classes(const Grid& lc) {
    std::set<int> s;
    for (double v : lc.values()) s.insert(static_cast<int>(v));
    return s;
}

}  // namespace

TEST(Calendar, StandardWindows) {
    const CropCalendar c = CropCalendar::standard();
    EXPECT_FALSE(c.active(LandCover::Corn, 60));
    EXPECT_TRUE(c.active(LandCover::Corn, 61));
    EXPECT_TRUE(c.active(LandCover::Corn, 139));
    EXPECT_FALSE(c.active(LandCover::Corn, 140));
    EXPECT_TRUE(c.active(LandCover::Corn, 183));
    EXPECT_TRUE(c.active(LandCover::Cotton, 222));
    EXPECT_FALSE(c.active(LandCover::Cotton, 333));
}

TEST(Calendar, RejectsBadWindows) {
    EXPECT_THROW(CropCalendar({{LandCover::Corn, 100, 90}}), DomainError);
    EXPECT_THROW(CropCalendar({{LandCover::Corn, 0, 90}}), DomainError);
    EXPECT_THROW(CropCalendar({{LandCover::Bare, 10, 90}}), DomainError);
    EXPECT_THROW(CropCalendar({{LandCover::Corn, 10, 90}, {LandCover::Corn, 80, 120}}), DomainError);
}

TEST(Landcover, EvaluationDays) {
    const SceneSpec spec;
    const CropCalendar cal = CropCalendar::standard();
    EXPECT_EQ(classes(generate_landcover(spec, cal, 39)), std::set<int>{0});
    const auto mixed = classes(generate_landcover(spec, cal, 222));
    EXPECT_TRUE(mixed.count(1) && mixed.count(2));
}

TEST(Landcover, PlantingBoundary) {
    const SceneSpec spec;
    const CropCalendar cal({{LandCover::Corn, 61, 139}});
    EXPECT_EQ(classes(generate_landcover_base(spec, cal, 60)), std::set<int>{0});
    EXPECT_TRUE(classes(generate_landcover_base(spec, cal, 61)).count(1));
}

TEST(Scene, Deterministic) {
    const SceneSpec spec;
    const Scene a = generate_scene(spec, CropCalendar::standard(), 223, 7);
    const Scene b = generate_scene(spec, CropCalendar::standard(), 223, 7);
    EXPECT_EQ(a.true_sm, b.true_sm);
    EXPECT_EQ(a.lst, b.lst);
    EXPECT_EQ(a.ppt, b.ppt);
    EXPECT_EQ(a.lai, b.lai);
    EXPECT_EQ(a.coarse_sm, b.coarse_sm);
    ASSERT_EQ(a.insitu.size(), b.insitu.size());
    for (std::size_t i = 0; i < a.insitu.size(); ++i) EXPECT_EQ(a.insitu[i].pixel, b.insitu[i].pixel);
    EXPECT_NE(a.lst, generate_scene(spec, CropCalendar::standard(), 223, 8).lst);
}

TEST(Scene, ShapesAndCleanCoarse) {
    const SceneSpec spec;
    const Scene s = generate_scene(spec, CropCalendar::standard(), 157, 3);
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.fine_rows(), 50u);
    EXPECT_EQ(s.coarse_sm.rows(), 5u);
    EXPECT_EQ(s.coarse_factor(), 10u);
    const Grid agg = aggregate(s.true_sm, 10);
    for (std::size_t i = 0; i < agg.size(); ++i) EXPECT_NEAR(agg[i], s.coarse_sm_clean[i], 1e-12);
    EXPECT_EQ(s.insitu.size(), 825u);
    for (const auto& o : s.insitu) EXPECT_EQ(o.value, s.true_sm[o.pixel]);
}

TEST(Scene, SignsOfResponse) {
    const SceneSpec spec;
    for (int day : {157, 355}) {
        const Scene s = generate_scene(spec, CropCalendar::standard(), day, 11);
        EXPECT_GT(correlation(s.true_sm, s.ppt), 0.0) << day;
        EXPECT_LT(correlation(s.true_sm, s.lst), 0.0) << day;
    }
}

TEST(Scene, PhysicalBandAndBareLai) {
    SceneSpec spec;
    spec.lai_noise_sd = 0.0;
    for (int day : {1, 40, 100, 223, 300}) {
        const Scene s = generate_scene(spec, CropCalendar::standard(), day, 5);
        for (double v : s.true_sm.values()) {
            EXPECT_GE(v, spec.sm_min);
            EXPECT_LE(v, spec.sm_max);
        }
        if (day == 40) {
            for (double v : s.lai.values()) EXPECT_EQ(v, 0.0);
        }
        for (double v : s.lai.values()) EXPECT_GE(v, 0.0);
    }
}

TEST(Scene, VegetatedLaiPeaksInSeason) {
    SceneSpec spec;
    spec.lai_noise_sd = 0.0;
    auto corn_mean = [&](int day) {
        const Scene s = generate_scene(spec, CropCalendar::standard(), day, 5);
        double sum = 0;
        int n = 0;
        for (std::size_t i = 0; i < s.lai.size(); ++i) {
            if (s.lc[i] == 1.0) {
                sum += s.lai[i];
                ++n;
            }
        }
        return n ? sum / n : 0.0;
    };
    EXPECT_GT(corn_mean(100), corn_mean(64));
    EXPECT_GT(corn_mean(100), corn_mean(136));
}

TEST(Season, DaysAndNearest) {
    const auto days = season_days();
    EXPECT_EQ(days.size(), 122u);
    EXPECT_EQ(days.front(), 1);
    EXPECT_EQ(days.back(), 364);
    for (int e : kEvaluationDays) {
        const int d = nearest_season_day(e);
        EXPECT_LE(std::abs(d - e), 1);
        EXPECT_TRUE(std::find(days.begin(), days.end(), d) != days.end());
    }
    EXPECT_EQ(nearest_season_day(39), 40);
    EXPECT_EQ(nearest_season_day(2), 1);
}

TEST(Season, FullSeason) {
    const SceneSpec spec;
    const auto scenes = generate_season(spec, CropCalendar::standard(), 2024);
    ASSERT_EQ(scenes.size(), 122u);
    for (const auto& s : scenes) {
        EXPECT_NO_THROW(s.validate());
        EXPECT_EQ(s.lc, generate_landcover(spec, CropCalendar::standard(), s.day));
    }
}

TEST(Spec, Validation) {
    SceneSpec s;
    s.coarse_factor = 7;
    EXPECT_THROW(s.validate(), DimensionError);
    s = SceneSpec{};
    s.corn_share = 0.8;
    EXPECT_THROW(s.validate(), DomainError);
    s = SceneSpec{};
    s.lst_noise_sd = -1;
    EXPECT_THROW(s.validate(), DomainError);
    EXPECT_THROW(generate_scene(SceneSpec{}, CropCalendar::standard(), 0, 1), DomainError);
}
