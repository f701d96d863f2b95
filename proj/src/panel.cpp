#include "gistcast/panel.hpp"

#include "gistcast/common.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gistcast {

using nlohmann::json;

YearMonth YearMonth::from_index(int idx) {
    int year = idx / 12;
    int rem = idx % 12;
    if (rem < 0) {
        rem += 12;
        --year;
    }
    return {year, rem + 1};
}

YearMonth YearMonth::parse(std::string_view text) {
    const std::string t = trim(text);
    if (t.size() != 7 || t[4] != '-') throw Error("parse", "bad month '" + t + "', expected YYYY-MM");
    const auto year = parse_int(t.substr(0, 4), "year");
    const auto month = parse_int(t.substr(5, 2), "month");
    if (month < 1 || month > 12) throw Error("parse", "month out of range in '" + t + "'");
    return {static_cast<int>(year), static_cast<int>(month)};
}

std::string YearMonth::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

int months_between(YearMonth from, YearMonth to) { return to.index() - from.index(); }

std::vector<MonthValue> interpolate_ipc(const QuarterlyIpcSeries& series, std::optional<YearMonth> first,
                                        std::optional<YearMonth> last) {
    const auto& pts = series.points;
    if (pts.empty()) throw Error("no_anchors", "no anchors for country '" + series.country + "'");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!(pts[i].phase >= 1.0 && pts[i].phase <= 5.0))
            throw Error("validation", "IPC phase outside [1,5] at " + pts[i].month.str());
        if (i > 0 && !(pts[i - 1].month < pts[i].month))
            throw Error("unsorted_series", "unsorted series for country '" + series.country + "' at " +
                                               pts[i].month.str());
    }
    const YearMonth lo = first.value_or(pts.front().month);
    const YearMonth hi = last.value_or(pts.back().month);

    std::vector<MonthValue> out;
    std::size_t seg = 0;
    for (int idx = lo.index(); idx <= hi.index(); ++idx) {
        const YearMonth ym = YearMonth::from_index(idx);
        double v;
        if (idx <= pts.front().month.index()) {
            v = pts.front().phase;
        } else if (idx >= pts.back().month.index()) {
            v = pts.back().phase;
        } else {
            while (pts[seg + 1].month.index() < idx) ++seg;
            const int a = pts[seg].month.index();
            const int b = pts[seg + 1].month.index();
            if (idx == b) {
                v = pts[seg + 1].phase;
            } else {
                const double t = static_cast<double>(idx - a) / static_cast<double>(b - a);
                v = pts[seg].phase + t * (pts[seg + 1].phase - pts[seg].phase);
            }
        }
        out.push_back({ym, v});
    }
    return out;
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

Split classify(YearMonth month, const SplitBoundaries& b) {
    if (month <= b.train_end) return Split::Train;
    if (month <= b.dev_end) return Split::Dev;
    return Split::Test;
}

SplitAssignment make_splits(const std::vector<CountryMonthKey>& keys, int folds, const SplitBoundaries& boundaries) {
    SplitAssignment out;
    out.train_end = boundaries.train_end;
    out.dev_end = boundaries.dev_end;
    const auto f = static_cast<std::size_t>(std::max(folds, 0));
    for (const auto& k : keys) {
        const Split s = classify(k.month, boundaries);
        if (!out.assignment.emplace(k, s).second) continue;
        switch (s) {
            case Split::Train: out.train_samples += f; break;
            case Split::Dev: out.dev_samples += f; break;
            case Split::Test: out.test_samples += f; break;
        }
    }
    return out;
}

namespace {

struct CsvLine {
    std::size_t number;
    std::vector<std::string> fields;
};

// Splits into data lines (header removed and checked). Comment lines start with '#'.
std::vector<CsvLine> csv_lines(std::string_view text, std::string_view expected_header, const std::string& what) {
    std::vector<CsvLine> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (trim(line) != expected_header)
                throw Error("parse", what + " line " + std::to_string(number) + ": expected header '" +
                                         std::string(expected_header) + "'");
            header_seen = true;
            continue;
        }
        out.push_back({number, split(line, ',')});
    }
    if (!header_seen) throw Error("parse", what + ": missing header");
    return out;
}

}  // namespace

std::vector<LabelRow> parse_labels(std::string_view csv) {
    std::vector<LabelRow> rows;
    std::set<CountryMonthKey> seen;
    for (const auto& [number, f] : csv_lines(csv, "country,month,fci,food_price,social_events", "labels")) {
        const std::string where = "labels line " + std::to_string(number);
        if (f.size() != 5) throw Error("parse", where + ": expected 5 fields, got " + std::to_string(f.size()));
        LabelRow r;
        try {
            r.key.country = trim(f[0]);
            if (r.key.country.empty()) throw Error("parse", "empty country");
            r.key.month = YearMonth::parse(f[1]);
            r.fci = parse_double(f[2], "fci");
            if (!trim(f[3]).empty()) r.food_price = parse_double(f[3], "food_price");
            if (!trim(f[4]).empty()) r.social_events = parse_double(f[4], "social_events");
        } catch (const Error& e) {
            throw Error("parse", where + ": " + e.what());
        }
        if (r.fci < 1.0 || r.fci > 5.0) throw Error("validation", where + ": fci outside [1,5]");
        if (r.food_price && *r.food_price < 0.0) throw Error("validation", where + ": negative food_price");
        if (r.social_events && *r.social_events < 0.0) throw Error("validation", where + ": negative social_events");
        if (!seen.insert(r.key).second) throw Error("validation", where + ": duplicate key " + r.key.str());
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<LabelRow> load_labels(const std::filesystem::path& path) { return parse_labels(read_file(path)); }

std::string serialize_labels(const std::vector<LabelRow>& rows) {
    std::string out = "country,month,fci,food_price,social_events\n";
    for (const auto& r : rows) {
        out += r.key.country + ',' + r.key.month.str() + ',' + format_double(r.fci) + ',';
        if (r.food_price) out += format_double(*r.food_price);
        out += ',';
        if (r.social_events) out += format_double(*r.social_events);
        out += '\n';
    }
    return out;
}

std::vector<CorpusArticle> parse_corpus(std::string_view jsonl) {
    std::vector<CorpusArticle> out;
    std::set<std::string> ids;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        const std::string where = "corpus line " + std::to_string(number);
        CorpusArticle a;
        try {
            const json j = json::parse(line);
            a.article_id = j.at("article_id").get<std::string>();
            a.key.country = j.at("country").get<std::string>();
            a.key.month = YearMonth::parse(j.at("month").get<std::string>());
            a.sentences = j.at("sentences").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw Error("parse", where + ": " + e.what());
        } catch (const Error& e) {
            throw Error("parse", where + ": " + e.what());
        }
        if (a.sentences.empty()) throw Error("validation", where + ": article '" + a.article_id + "' has no sentences");
        for (const auto& s : a.sentences)
            if (s.empty()) throw Error("validation", where + ": empty sentence in '" + a.article_id + "'");
        if (!ids.insert(a.article_id).second)
            throw Error("validation", where + ": duplicate article_id '" + a.article_id + "'");
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<CorpusArticle> load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

std::string serialize_corpus(const std::vector<CorpusArticle>& articles) {
    std::string out;
    for (const auto& a : articles) {
        json j;
        j["article_id"] = a.article_id;
        j["country"] = a.key.country;
        j["month"] = a.key.month.str();
        j["sentences"] = a.sentences;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::map<std::string, QuarterlyIpcSeries> parse_ipc(std::string_view csv) {
    std::map<std::string, QuarterlyIpcSeries> out;
    for (const auto& [number, f] : csv_lines(csv, "country,month,phase", "ipc")) {
        const std::string where = "ipc line " + std::to_string(number);
        if (f.size() != 3) throw Error("parse", where + ": expected 3 fields");
        IpcPoint p;
        std::string country;
        try {
            country = trim(f[0]);
            p.month = YearMonth::parse(f[1]);
            p.phase = parse_double(f[2], "phase");
        } catch (const Error& e) {
            throw Error("parse", where + ": " + e.what());
        }
        auto& s = out[country];
        s.country = country;
        s.points.push_back(p);
    }
    return out;
}

std::map<std::string, QuarterlyIpcSeries> load_ipc(const std::filesystem::path& path) {
    return parse_ipc(read_file(path));
}

std::map<CountryMonthKey, std::vector<CorpusArticle>> group_by_key(const std::vector<CorpusArticle>& corpus) {
    std::map<CountryMonthKey, std::vector<CorpusArticle>> out;
    for (const auto& a : corpus) out[a.key].push_back(a);
    return out;
}

}  // namespace gistcast
