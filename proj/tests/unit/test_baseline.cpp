#include "gistcast/baseline.hpp"

#include "gistcast/common.hpp"

#include <doctest.h>

#include <cmath>

using namespace gistcast;

namespace {

CountryMonthKey key(const std::string& c, int index, YearMonth start = {2017, 1}) { return {c, start.plus(index)}; }

// y_t = phi * y_{t-3} + eps per country, after a burn-in.
Series<CountryMonthKey> ar_panel(int countries, int months, double phi, double sigma, std::uint64_t seed,
                                 YearMonth start = {2010, 1}) {
    Rng rng(seed);
    Series<CountryMonthKey> s;
    const int burn = 60;
    for (int c = 0; c < countries; ++c) {
        std::vector<double> y;
        for (int t = 0; t < 3; ++t) y.push_back(sigma / std::sqrt(1 - phi * phi) * rng.normal());
        for (int t = 3; t < months + burn; ++t) y.push_back(phi * y[static_cast<std::size_t>(t - 3)] + sigma * rng.normal());
        for (int t = 0; t < months; ++t) s[key("A" + std::to_string(c), t, start)] = y[static_cast<std::size_t>(t + burn)];
    }
    return s;
}

// Ridge objective gradient in original units; the penalty acts on
// coefficients of population-standardized columns, intercept exempt.
Eigen::VectorXd ridge_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                               double lambda, int intercept) {
    Eigen::VectorXd g = X.transpose() * (X * beta - y);
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        if (c == intercept) continue;
        const double mean = intercept >= 0 ? X.col(c).mean() : 0.0;
        double var = (X.col(c).array() - mean).square().mean();
        if (std::sqrt(var) <= 1e-12) var = 1.0;
        g[c] += lambda * var * beta[c];
    }
    return g;
}

}  // namespace

TEST_CASE("keyword features") {
    CorpusArticle a;
    a.article_id = "a";
    a.key = key("ML", 0);
    std::string text;
    for (int i = 0; i < 297; ++i) text += "word ";
    a.sentences = {text, "Drought, DROUGHT and drought."};
    // 297 + 4 tokens, "and" included.
    CorpusArticle b{"b", key("ML", 1), {"nothing relevant here"}};
    CorpusArticle empty{"c", key("ML", 2), {""}};
    const auto f = keyword_features({a, b, empty}, KeywordConfig{{"drought", "famine"}});
    CHECK(f.at(key("ML", 0))[0] == doctest::Approx(3.0 / 301).epsilon(1e-15));
    CHECK(f.at(key("ML", 0))[1] == 0.0);
    CHECK(f.at(key("ML", 1)) == std::vector<double>{0.0, 0.0});
    CHECK(f.at(key("ML", 2)) == std::vector<double>{0.0, 0.0});

    CorpusArticle exact{"d", key("NE", 0), {}};
    for (int i = 0; i < 100; ++i) exact.sentences.push_back(i < 3 ? "drought x y" : "a b c");
    CHECK(keyword_features({exact}, KeywordConfig{{"drought"}}).at(key("NE", 0))[0] == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(word_tokens("Rain-fed, 2x!") == std::vector<std::string>{"rain", "fed", "2x"});
}

TEST_CASE("keyword config") {
    const auto k = KeywordConfig::parse("# expert list\ndrought\n\n famine \n");
    CHECK(k.keywords == std::vector<std::string>{"drought", "famine"});
    CHECK_THROWS_AS(KeywordConfig::parse("# nothing\n"), Error);
    CHECK_THROWS_AS(KeywordConfig::parse("a\na\n"), Error);
    CHECK_THROWS_AS(KeywordConfig::parse("Drought\n"), Error);
}

TEST_CASE("design rows need the full lag history") {
    DesignInputs in;
    for (int t = 0; t < 8; ++t) in.target[key("AA", t)] = t;
    CHECK_THROWS_AS(build_design(in), Error);
    for (int t = 0; t < 9; ++t) in.target[key("BB", t)] = 10 + t;
    const auto d = build_design(in);
    REQUIRE(d.keys.size() == 1);
    CHECK(d.keys[0] == key("BB", 8));
    CHECK(d.y[0] == 18.0);
    // fci lags 3..8 of month 8 are months 5..0.
    CHECK(d.X.row(0).head(6) == (Eigen::RowVectorXd(6) << 15, 14, 13, 12, 11, 10).finished());
    CHECK(d.dropped.size() == 8 + 8);
}

TEST_CASE("column layout and count") {
    DesignInputs in;
    Series<CountryMonthKey> f1, f2;
    for (int t = 0; t < 12; ++t) {
        in.target[key("AA", t)] = t;
        f1[key("AA", t)] = 2 * t;
        f2[key("AA", t)] = -t;
    }
    in.time_varying = {{"rainfall", f1}, {"ndvi", f2}};
    for (const char* name : {"i1", "i2", "i3", "i4"}) in.time_invariant.push_back({name, {{"AA", 1.0}}});
    const auto d = build_design(in);
    CHECK(d.columns.size() == 6 + 12 + 4 + 1);
    CHECK(d.X.cols() == 23);
    CHECK(d.columns[0] == "fci_lag3");
    CHECK(d.columns[6] == "rainfall_lag3");
    CHECK(d.columns[17] == "ndvi_lag8");
    CHECK(d.columns[18] == "i1");
    CHECK(d.columns.back() == "intercept");
    CHECK(d.X(0, 6) == 2.0 * (8 - 3));

    // Randomized feature sets: (1 + tv) * lags + ti + dummies + 1.
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        DesignInputs r;
        const int countries = 1 + static_cast<int>(rng.below(3));
        const int tv = static_cast<int>(rng.below(4)), ti = static_cast<int>(rng.below(4));
        const LagSpec lags{1 + static_cast<int>(rng.below(3)), 4 + static_cast<int>(rng.below(3))};
        r.country_dummies = rng.below(2) == 0;
        for (int f = 0; f < tv; ++f) r.time_varying.push_back({"f" + std::to_string(f), {}});
        for (int f = 0; f < ti; ++f) r.time_invariant.push_back({"g" + std::to_string(f), {}});
        for (int c = 0; c < countries; ++c) {
            const auto name = "C" + std::to_string(c);
            for (int t = 0; t < 10; ++t) {
                r.target[key(name, t)] = rng.normal();
                for (auto& [n, s] : r.time_varying) s[key(name, t)] = rng.normal();
            }
            for (auto& [n, s] : r.time_invariant) s[name] = rng.normal();
        }
        const auto d = build_design(r, lags);
        const int width = lags.lag_max - lags.lag_min + 1;
        CHECK(d.columns.size() ==
              static_cast<std::size_t>((1 + tv) * width + ti + (r.country_dummies ? countries - 1 : 0) + 1));
        CHECK(d.keys.size() == static_cast<std::size_t>(countries * (10 - lags.lag_max)));
    }
}

TEST_CASE("design is shift consistent") {
    const auto a = ar_panel(2, 30, 0.5, 1.0, 4, {2010, 1});
    const auto b = ar_panel(2, 30, 0.5, 1.0, 4, {2013, 7});
    DesignInputs ia, ib;
    ia.target = a;
    ib.target = b;
    const auto da = build_design(ia), db = build_design(ib);
    CHECK(da.X == db.X);
    CHECK(da.y == db.y);
}

TEST_CASE("fit_adl exact and limiting cases") {
    Eigen::MatrixXd X(5, 1);
    X << 1, 2, 3, 4, 5;
    const Eigen::VectorXd y = 2.0 * X.col(0);
    const auto m = fit_adl(X, y, {"x"}, 0.0);
    CHECK(m.coefficient("x") == doctest::Approx(2.0).epsilon(1e-12));

    Eigen::MatrixXd Xi(5, 2);
    Xi << 1, 1, 2, 1, 3, 1, 4, 1, 6, 1;
    Eigen::VectorXd yi(5);
    yi << 3, 1, 4, 1, 5;
    const auto big = fit_adl(Xi, yi, {"x", "intercept"}, 1e12);
    CHECK(std::abs(big.coefficient("x")) < 1e-9);
    CHECK(big.coefficient("intercept") == doctest::Approx(yi.mean()).epsilon(1e-9));

    const auto exact = fit_adl(Xi, 0.5 * Xi.col(0) + Eigen::VectorXd::Constant(5, 2.0), {"x", "intercept"}, 0.0);
    const auto pred = predict_adl(exact, Xi, {"x", "intercept"});
    for (int i = 0; i < 5; ++i) CHECK(pred[i] == doctest::Approx(0.5 * Xi(i, 0) + 2.0).epsilon(1e-12));
    Eigen::MatrixXd at_mean(1, 2);
    at_mean << Xi.col(0).mean(), 1.0;
    CHECK(predict_adl(exact, at_mean, {"x", "intercept"})[0] == doctest::Approx(exact.beta_scaled[1]).epsilon(1e-12));
}

TEST_CASE("ridge optimality and least-squares orthogonality") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 30 + static_cast<int>(rng.below(30)), p = 2 + static_cast<int>(rng.below(6));
        Eigen::MatrixXd X(n, p);
        std::vector<std::string> cols;
        for (int c = 0; c < p; ++c) cols.push_back("c" + std::to_string(c));
        cols.back() = "intercept";
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < p; ++c) X(r, c) = c == p - 1 ? 1.0 : rng.uniform(-3.0, 3.0) * (c + 1);
        Eigen::VectorXd y(n);
        for (int r = 0; r < n; ++r) y[r] = rng.normal() + X(r, 0);
        for (double lambda : {1e-3, 0.7, 25.0}) {
            const auto m = fit_adl(X, y, cols, lambda);
            const auto g = ridge_gradient(X, y, m.beta, lambda, p - 1);
            CHECK(g.norm() <= 1e-8 * (X.transpose() * y).norm());
        }
        const auto ls = fit_adl(X, y, cols, 0.0);
        const Eigen::VectorXd r = y - X * ls.beta;
        CHECK((X.transpose() * r).norm() <= 1e-8 * (X.transpose() * y).norm());
    }
}

TEST_CASE("rank deficiency with lambda 0") {
    Eigen::MatrixXd X(4, 3);
    X << 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1;
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(4, 0, 3);
    CHECK_THROWS_WITH_AS(fit_adl(X, y, {"a", "b", "intercept"}, 0.0), doctest::Contains("lambda > 0"), Error);
    CHECK_NOTHROW(fit_adl(X, y, {"a", "b", "intercept"}, 1e-3));
}

TEST_CASE("AR(3) panel oracle") {
    DesignInputs in;
    in.target = ar_panel(40, 600, 0.5, 0.01, 11);
    const auto d = build_design(in);
    const auto m = fit_adl(d.X, d.y, d.columns);
    MESSAGE("lag3 " << m.coefficient("fci_lag3"));
    CHECK(std::abs(m.coefficient("fci_lag3") - 0.5) <= 0.02);
    for (int l = 4; l <= 8; ++l) CHECK(std::abs(m.coefficient(lag_column("fci", l))) <= 0.05);

    DesignInputs fresh;
    fresh.target = ar_panel(5, 120, 0.5, 0.01, 12);
    const auto t = build_design(fresh);
    const Eigen::VectorXd err = predict_adl(m, t.X, t.columns) - t.y;
    const double r = std::sqrt(err.squaredNorm() / double(err.size()));
    MESSAGE("held-out RMSE " << r);
    CHECK(r <= 2 * 0.01);
}

TEST_CASE("predict checks the schema") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 1, 2, 1, 3, 1;
    const auto m = fit_adl(X, Eigen::Vector3d(1, 2, 3), {"x", "intercept"});
    CHECK_THROWS_WITH_AS(predict_adl(m, X, {"z", "intercept"}), doctest::Contains("'z'"), Error);
    CHECK_THROWS_AS(predict_adl(m, X.leftCols(1), {"x"}), Error);
    CHECK_THROWS_AS(m.coefficient("nope"), Error);
}

TEST_CASE("traditional CSV round trip") {
    std::vector<TraditionalRow> rows;
    Rng rng(2);
    for (int t = 0; t < 4; ++t) {
        TraditionalRow r;
        r.key = key("UG", t);
        for (auto& v : r.time_varying) v = rng.normal();
        r.time_invariant = {1234.5, 0.25, 0.5, 1e6};
        rows.push_back(r);
    }
    const auto text = serialize_traditional(rows);
    CHECK(text.rfind("country,month,rainfall,ndvi,food_price_index,conflict_events,terrain_ruggedness,district_size,"
                     "cropland_share,pasture_share,population\n",
                     0) == 0);
    const auto back = parse_traditional("# comment\n" + text);
    REQUIRE(back.size() == 4);
    CHECK(back[2].key == rows[2].key);
    CHECK(back[2].time_varying == rows[2].time_varying);
    CHECK(serialize_traditional(back) == text);

    auto bad = rows;
    bad[0].time_invariant[1] = 1.5;
    CHECK_THROWS_AS(parse_traditional(serialize_traditional(bad)), Error);
    bad = rows;
    bad[1].key = bad[0].key;
    CHECK_THROWS_AS(parse_traditional(serialize_traditional(bad)), Error);
    CHECK_THROWS_AS(parse_traditional("country,month\n"), Error);
}

TEST_CASE("assemble_inputs") {
    std::vector<LabelRow> labels{{key("UG", 0), 2.0, 1.0, 1.0}, {key("UG", 1), 3.0, 1.0, 1.0}};
    TraditionalRow tr;
    tr.key = key("UG", 0);
    tr.time_varying = {1, 2, 3, 4, 5};
    tr.time_invariant = {10, 0.1, 0.2, 30};
    std::map<CountryMonthKey, std::vector<double>> kw{{key("UG", 0), {0.5}}};
    const auto in = assemble_inputs(labels, {tr}, kw, KeywordConfig{{"drought"}});
    CHECK(in.target.size() == 2);
    REQUIRE(in.time_varying.size() == 6);
    CHECK(in.time_varying[2].first == "food_price_index");
    CHECK(in.time_varying[5].first == "kw_drought");
    CHECK(in.time_varying[5].second.at(key("UG", 0)) == 0.5);
    CHECK(in.time_varying[5].second.at(key("UG", 1)) == 0.0);
    REQUIRE(in.time_invariant.size() == 4);
    CHECK(in.time_invariant[3].second.at("UG") == 30.0);
}

TEST_CASE("model JSON names every coefficient") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 1, 2, 1, 3, 1;
    const auto m = fit_adl(X, Eigen::Vector3d(1, 2, 3), {"x", "intercept"});
    const auto j = adl_model_json(m, "h", 3);
    CHECK(j.find("\"x\"") != std::string::npos);
    CHECK(j.find("\"intercept\"") != std::string::npos);
    CHECK(m.named().size() == 2);
}
