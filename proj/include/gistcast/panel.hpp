#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gistcast {

/// Calendar month. Ordered by (year, month).
struct YearMonth {
    int year = 2017;
    int month = 1;  // 1..12

    auto operator<=>(const YearMonth&) const = default;

    /// Months since year 0, so consecutive months differ by exactly 1.
    int index() const { return year * 12 + (month - 1); }
    static YearMonth from_index(int idx);
    YearMonth plus(int months) const { return from_index(index() + months); }

    /// Parses "YYYY-MM"; throws Error("parse") on anything else.
    static YearMonth parse(std::string_view text);
    std::string str() const;
};

int months_between(YearMonth from, YearMonth to);

struct CountryMonthKey {
    std::string country;
    YearMonth month;

    auto operator<=>(const CountryMonthKey&) const = default;
    std::string str() const { return country + "/" + month.str(); }
};

/// One country-month of targets. fci is the interpolated Food Crisis Index;
/// price and social may be absent, which makes the row ineligible for
/// multi-task training.
struct LabelRow {
    CountryMonthKey key;
    double fci = 1.0;
    std::optional<double> food_price;
    std::optional<double> social_events;

    bool complete() const { return food_price.has_value() && social_events.has_value(); }
};

struct IpcPoint {
    YearMonth month;
    double phase = 1.0;
};

struct QuarterlyIpcSeries {
    std::string country;
    std::vector<IpcPoint> points;
};

struct MonthValue {
    YearMonth month;
    double value = 0.0;
};

/// Piecewise-affine interpolation of IPC anchors over month index. Values are
/// held constant before the first and after the last anchor. The output spans
/// [first, last]; when unset these default to the first and last anchors.
std::vector<MonthValue> interpolate_ipc(const QuarterlyIpcSeries& series,
                                        std::optional<YearMonth> first = std::nullopt,
                                        std::optional<YearMonth> last = std::nullopt);

struct CorpusArticle {
    std::string article_id;
    CountryMonthKey key;
    std::vector<std::string> sentences;
};

enum class Split { Train, Dev, Test };
std::string_view to_string(Split s);

struct SplitBoundaries {
    YearMonth train_end{2019, 3};
    YearMonth dev_end{2019, 12};
};

struct SplitAssignment {
    YearMonth train_end;
    YearMonth dev_end;
    std::map<CountryMonthKey, Split> assignment;
    std::size_t train_samples = 0;
    std::size_t dev_samples = 0;
    std::size_t test_samples = 0;
};

Split classify(YearMonth month, const SplitBoundaries& b);

/// Assigns each key to a split; sample counts are (#keys in split) * folds.
SplitAssignment make_splits(const std::vector<CountryMonthKey>& keys, int folds,
                            const SplitBoundaries& boundaries = {});

// Loaders. Lines starting with '#' are metadata comments and skipped.
std::vector<LabelRow> load_labels(const std::filesystem::path& path);
std::vector<LabelRow> parse_labels(std::string_view csv);
std::string serialize_labels(const std::vector<LabelRow>& rows);

std::vector<CorpusArticle> load_corpus(const std::filesystem::path& path);
std::vector<CorpusArticle> parse_corpus(std::string_view jsonl);
std::string serialize_corpus(const std::vector<CorpusArticle>& articles);

std::map<std::string, QuarterlyIpcSeries> load_ipc(const std::filesystem::path& path);
std::map<std::string, QuarterlyIpcSeries> parse_ipc(std::string_view csv);

/// Groups articles by country-month key, preserving input order within a key.
std::map<CountryMonthKey, std::vector<CorpusArticle>> group_by_key(const std::vector<CorpusArticle>& corpus);

}  // namespace gistcast
