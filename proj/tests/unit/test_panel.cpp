#include "gistcast/common.hpp"
#include "gistcast/panel.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace gistcast;

namespace {

QuarterlyIpcSeries series(std::initializer_list<std::pair<const char*, double>> pts) {
    QuarterlyIpcSeries s;
    s.country = "ML";
    for (const auto& [m, v] : pts) s.points.push_back({YearMonth::parse(m), v});
    return s;
}

double value_at(const std::vector<MonthValue>& v, const char* month) {
    const auto m = YearMonth::parse(month);
    for (const auto& x : v)
        if (x.month == m) return x.value;
    FAIL("month not in output");
    return 0.0;
}

}  // namespace

TEST_CASE("year-month arithmetic") {
    const auto m = YearMonth::parse("2019-12");
    CHECK(m.plus(1) == YearMonth{2020, 1});
    CHECK(m.plus(-12) == YearMonth{2018, 12});
    CHECK(months_between({2017, 1}, {2020, 8}) == 43);
    CHECK(m.str() == "2019-12");
    CHECK_THROWS_AS(YearMonth::parse("2019-13"), Error);
    CHECK_THROWS_AS(YearMonth::parse("2019/01"), Error);
    CHECK_THROWS_AS(YearMonth::parse("19-01"), Error);
}

TEST_CASE("interpolation examples") {
    SUBCASE("single anchor holds") {
        const auto out = interpolate_ipc(series({{"2017-01", 2.0}}), YearMonth{2016, 10}, YearMonth{2017, 6});
        CHECK(out.size() == 9);
        for (const auto& v : out) CHECK(v.value == 2.0);
    }
    SUBCASE("one-third steps") {
        const auto out = interpolate_ipc(series({{"2017-01", 2.0}, {"2017-04", 3.0}}));
        REQUIRE(out.size() == 4);
        CHECK(value_at(out, "2017-02") == doctest::Approx(7.0 / 3).epsilon(1e-15));
        CHECK(value_at(out, "2017-03") == doctest::Approx(8.0 / 3).epsilon(1e-15));
        CHECK(value_at(out, "2017-04") == 3.0);
    }
    SUBCASE("constant segment") {
        for (const auto& v : interpolate_ipc(series({{"2017-01", 1.0}, {"2017-04", 1.0}}))) CHECK(v.value == 1.0);
    }
    SUBCASE("holds after the last anchor") {
        const auto out = interpolate_ipc(series({{"2017-01", 2.0}, {"2017-04", 3.0}}), std::nullopt, YearMonth{2017, 9});
        CHECK(value_at(out, "2017-09") == 3.0);
    }
}

TEST_CASE("interpolation errors") {
    CHECK_THROWS_WITH_AS(interpolate_ipc(series({})), doctest::Contains("no anchors"), Error);
    CHECK_THROWS_WITH_AS(interpolate_ipc(series({{"2017-04", 2.0}, {"2017-01", 3.0}})),
                         doctest::Contains("unsorted series"), Error);
    CHECK_THROWS_AS(interpolate_ipc(series({{"2017-01", 6.0}})), Error);
}

TEST_CASE("interpolation is exact at anchors and affine between them") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        QuarterlyIpcSeries s;
        s.country = "X";
        YearMonth m{2017, 1 + static_cast<int>(rng.below(12))};
        const int anchors = 1 + static_cast<int>(rng.below(8));
        for (int a = 0; a < anchors; ++a) {
            s.points.push_back({m, rng.uniform(1.0, 5.0)});
            m = m.plus(1 + static_cast<int>(rng.below(6)));
        }
        const auto out = interpolate_ipc(s);
        for (const auto& p : s.points) CHECK(value_at(out, p.month.str().c_str()) == p.phase);
        for (std::size_t i = 0; i + 2 < out.size(); ++i) {
            // Midpoint property inside a single segment.
            bool anchor_inside = false;
            for (const auto& p : s.points) anchor_inside |= p.month == out[i + 1].month;
            if (anchor_inside) continue;
            CHECK(std::abs(out[i + 1].value - 0.5 * (out[i].value + out[i + 2].value)) <= 1e-12);
        }
        for (const auto& v : out) CHECK((v.value >= 1.0 && v.value <= 5.0));
    }
}

TEST_CASE("split counts by direct month count") {
    SUBCASE("nine countries by 44 months") {
        const auto a = make_splits(testutil::panel_keys(9, 44), 10);
        // Jan 2017-Mar 2019 = 27 months, Apr-Dec 2019 = 9, Jan-Aug 2020 = 8.
        CHECK(a.train_samples == 27 * 9 * 10);
        CHECK(a.dev_samples == 9 * 9 * 10);
        CHECK(a.test_samples == 8 * 9 * 10);
    }
    SUBCASE("one country by 44 months") {
        const auto a = make_splits(testutil::panel_keys(1, 44), 10);
        CHECK(a.train_samples == 270);
        CHECK(a.dev_samples == 90);
        CHECK(a.test_samples == 80);
    }
    SUBCASE("Jan-Mar 2017 only") {
        const auto a = make_splits(testutil::panel_keys(1, 3), 1);
        CHECK(a.train_samples == 3);
        CHECK(a.dev_samples == 0);
        CHECK(a.test_samples == 0);
    }
    SUBCASE("boundary months") {
        const SplitBoundaries b;
        CHECK(classify({2019, 3}, b) == Split::Train);
        CHECK(classify({2019, 4}, b) == Split::Dev);
        CHECK(classify({2019, 12}, b) == Split::Dev);
        CHECK(classify({2020, 1}, b) == Split::Test);
    }
}

TEST_CASE("splits partition the keys") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const int countries = 1 + static_cast<int>(rng.below(5));
        const int months = 1 + static_cast<int>(rng.below(60));
        const int folds = 1 + static_cast<int>(rng.below(10));
        const auto keys = testutil::panel_keys(countries, months, YearMonth{2016, 1}.plus(static_cast<int>(rng.below(36))));
        const auto a = make_splits(keys, folds);
        CHECK(a.assignment.size() == keys.size());
        CHECK(a.train_samples + a.dev_samples + a.test_samples == keys.size() * static_cast<std::size_t>(folds));
    }
}

TEST_CASE("labels CSV") {
    const std::string header = "country,month,fci,food_price,social_events\n";
    SUBCASE("direct parse") {
        const auto rows = parse_labels(header + "ML,2018-07,2.4,118.2,14\n");
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].key.country == "ML");
        CHECK(rows[0].key.month == YearMonth{2018, 7});
        CHECK(rows[0].fci == 2.4);
        CHECK(*rows[0].food_price == 118.2);
        CHECK(*rows[0].social_events == 14.0);
        CHECK(rows[0].complete());
    }
    SUBCASE("optional targets") {
        const auto rows = parse_labels("# comment\n" + header + "ML,2018-07,2.4,,\n");
        CHECK_FALSE(rows[0].food_price.has_value());
        CHECK_FALSE(rows[0].complete());
    }
    SUBCASE("errors") {
        CHECK_THROWS_WITH_AS(parse_labels(header + "ML,2018-07,6.0,1,1\n"), doctest::Contains("fci"), Error);
        CHECK_THROWS_WITH_AS(parse_labels(header + "ML,2018-07,2.0,1\n"), doctest::Contains("line 2"), Error);
        CHECK_THROWS_AS(parse_labels(header + "ML,2018-07,2,1,1\nML,2018-07,3,1,1\n"), Error);
        CHECK_THROWS_AS(parse_labels("country,month,fci\nML,2018-07,2\n"), Error);
        CHECK_THROWS_AS(parse_labels(header + "ML,2018-07,2,-1,1\n"), Error);
    }
    SUBCASE("round trip") {
        std::vector<LabelRow> rows;
        Rng rng(1);
        for (int i = 0; i < 20; ++i) {
            LabelRow r;
            r.key = {"C" + std::to_string(i % 3), YearMonth{2017, 1}.plus(i)};
            r.fci = rng.uniform(1.0, 5.0);
            if (i % 4) r.food_price = rng.uniform(0.0, 300.0);
            if (i % 5) r.social_events = std::floor(rng.uniform(0.0, 40.0));
            rows.push_back(r);
        }
        const auto back = parse_labels(serialize_labels(rows));
        REQUIRE(back.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(back[i].key == rows[i].key);
            CHECK(back[i].fci == rows[i].fci);
            CHECK(back[i].food_price == rows[i].food_price);
            CHECK(back[i].social_events == rows[i].social_events);
        }
    }
}

TEST_CASE("corpus JSONL") {
    SUBCASE("zero sentences rejected") {
        CHECK_THROWS_AS(parse_corpus(R"({"article_id":"a","country":"ML","month":"2018-01","sentences":[]})"), Error);
    }
    SUBCASE("duplicate ids rejected") {
        const std::string line = R"({"article_id":"a","country":"ML","month":"2018-01","sentences":["x"]})";
        CHECK_THROWS_AS(parse_corpus(line + "\n" + line + "\n"), Error);
    }
    SUBCASE("malformed line names its number") {
        CHECK_THROWS_WITH_AS(parse_corpus("\n{oops\n"), doctest::Contains("2"), Error);
    }
    SUBCASE("round trip") {
        auto arts = testutil::articles_for({"ML", {2018, 1}}, 3, 4);
        const auto more = testutil::articles_for({"NE", {2019, 5}}, 2, 1);
        arts.insert(arts.end(), more.begin(), more.end());
        arts[0].sentences[0] = "quotes \" and tabs \t survive";
        const auto back = parse_corpus(serialize_corpus(arts));
        REQUIRE(back.size() == arts.size());
        for (std::size_t i = 0; i < arts.size(); ++i) {
            CHECK(back[i].article_id == arts[i].article_id);
            CHECK(back[i].key == arts[i].key);
            CHECK(back[i].sentences == arts[i].sentences);
        }
        CHECK(group_by_key(back).size() == 2);
    }
}

TEST_CASE("IPC CSV") {
    const auto s = parse_ipc("country,month,phase\nML,2017-01,2\nML,2017-04,3\nNE,2017-01,1\n");
    REQUIRE(s.size() == 2);
    CHECK(s.at("ML").points.size() == 2);
    CHECK(s.at("ML").points[1].phase == 3.0);
    CHECK_THROWS_AS(parse_ipc("country,month\nML,2017-01\n"), Error);
}
