#pragma once

#include "gistcast/panel.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gistcast {

inline constexpr std::array<std::string_view, 5> kTimeVaryingFactors{"rainfall", "ndvi", "food_price_index",
                                                                     "conflict_events", "terrain_ruggedness"};
inline constexpr std::array<std::string_view, 4> kTimeInvariantFactors{"district_size", "cropland_share",
                                                                       "pasture_share", "population"};

/// Traditional risk factors for one country-month. The time-invariant values
/// repeat on every row of a country.
struct TraditionalRow {
    CountryMonthKey key;
    std::array<double, kTimeVaryingFactors.size()> time_varying{};
    std::array<double, kTimeInvariantFactors.size()> time_invariant{};
};

std::vector<TraditionalRow> parse_traditional(std::string_view csv);
std::vector<TraditionalRow> load_traditional(const std::filesystem::path& path);
std::string serialize_traditional(const std::vector<TraditionalRow>& rows);

struct KeywordConfig {
    std::vector<std::string> keywords;  // lowercase, unique

    void validate() const;
    /// One term per line; blank lines and '#' comments ignored.
    static KeywordConfig parse(std::string_view text);
};

/// Lowercased alphanumeric tokens, no filtering.
std::vector<std::string> word_tokens(std::string_view text);

/// Per country-month keyword counts divided by that month's total token count.
std::map<CountryMonthKey, std::vector<double>> keyword_features(const std::vector<CorpusArticle>& corpus,
                                                                const KeywordConfig& cfg);

struct LagSpec {
    int lag_min = 3;
    int lag_max = 8;
};

template <typename K>
using Series = std::map<K, double>;

struct DesignInputs {
    Series<CountryMonthKey> target;
    std::vector<std::pair<std::string, Series<CountryMonthKey>>> time_varying;
    std::vector<std::pair<std::string, Series<std::string>>> time_invariant;  // keyed by country
    bool country_dummies = false;
};

/// Target = fci. Time-varying = the traditional factors plus one series per
/// keyword ("kw_<term>"). Time-invariant = the static traditional factors.
DesignInputs assemble_inputs(const std::vector<LabelRow>& labels, const std::vector<TraditionalRow>& traditional,
                             const std::map<CountryMonthKey, std::vector<double>>& keyword_freq,
                             const KeywordConfig& keywords);

struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<CountryMonthKey> keys;
    std::vector<std::string> columns;
    std::vector<CountryMonthKey> dropped;  // target months lacking some lag
};

/// Columns: target lags, each time-varying series' lags, time-invariant
/// values, optional country dummies, then "intercept".
Design build_design(const DesignInputs& in, const LagSpec& lags = {});
std::string lag_column(std::string_view feature, int lag);

struct AdlModel {
    std::vector<std::string> columns;
    int intercept_col = -1;
    double lambda = 1e-3;
    Eigen::VectorXd center;       // per column; 0 for the intercept
    Eigen::VectorXd scale;        // per column; 1 for the intercept
    Eigen::VectorXd beta_scaled;  // coefficients on standardized columns
    Eigen::VectorXd beta;         // coefficients in original units

    double coefficient(const std::string& column) const;
    std::map<std::string, double> named() const;
};

/// Ridge fit on internally standardized columns; the intercept is neither
/// standardized nor penalized. With lambda == 0 a rank-deficient design is
/// an error.
AdlModel fit_adl(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& columns,
                 double lambda = 1e-3);

Eigen::VectorXd predict_adl(const AdlModel& model, const Eigen::MatrixXd& X, const std::vector<std::string>& columns);

std::string adl_model_json(const AdlModel& model, std::string_view config_hash = {}, std::uint64_t seed = 0);

}  // namespace gistcast
