#include "gistcast/baseline.hpp"

#include "gistcast/common.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gistcast {

using nlohmann::json;

namespace {

std::string traditional_header() {
    std::string h = "country,month";
    for (auto f : kTimeVaryingFactors) (h += ',') += f;
    for (auto f : kTimeInvariantFactors) (h += ',') += f;
    return h;
}

}  // namespace

std::vector<TraditionalRow> parse_traditional(std::string_view csv) {
    std::vector<TraditionalRow> rows;
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t number = 0;
    bool header = false;
    const std::size_t fields = 2 + kTimeVaryingFactors.size() + kTimeInvariantFactors.size();
    std::set<CountryMonthKey> seen;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        const std::string where = "traditional line " + std::to_string(number);
        if (!header) {
            if (trim(line) != traditional_header()) throw Error("parse", where + ": expected header '" + traditional_header() + "'");
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != fields) throw Error("parse", where + ": expected " + std::to_string(fields) + " fields");
        TraditionalRow r;
        try {
            r.key = {trim(f[0]), YearMonth::parse(f[1])};
            for (std::size_t i = 0; i < r.time_varying.size(); ++i)
                r.time_varying[i] = parse_double(f[2 + i], std::string(kTimeVaryingFactors[i]));
            for (std::size_t i = 0; i < r.time_invariant.size(); ++i)
                r.time_invariant[i] =
                    parse_double(f[2 + r.time_varying.size() + i], std::string(kTimeInvariantFactors[i]));
        } catch (const Error& e) {
            throw Error("parse", where + ": " + e.what());
        }
        for (std::size_t i : {std::size_t{1}, std::size_t{2}})
            if (r.time_invariant[i] < 0.0 || r.time_invariant[i] > 1.0)
                throw Error("validation", where + ": " + std::string(kTimeInvariantFactors[i]) + " outside [0,1]");
        if (!seen.insert(r.key).second) throw Error("validation", where + ": duplicate key " + r.key.str());
        rows.push_back(r);
    }
    if (!header) throw Error("parse", "traditional: missing header");
    return rows;
}

std::vector<TraditionalRow> load_traditional(const std::filesystem::path& path) {
    return parse_traditional(read_file(path));
}

std::string serialize_traditional(const std::vector<TraditionalRow>& rows) {
    std::string out = traditional_header() + "\n";
    for (const auto& r : rows) {
        out += r.key.country + ',' + r.key.month.str();
        for (double v : r.time_varying) (out += ',') += format_double(v);
        for (double v : r.time_invariant) (out += ',') += format_double(v);
        out += '\n';
    }
    return out;
}

void KeywordConfig::validate() const {
    if (keywords.empty()) throw Error("config", "keyword list is empty");
    std::set<std::string> seen;
    for (const auto& k : keywords) {
        if (k.empty()) throw Error("config", "empty keyword");
        for (char c : k)
            if (std::isupper(static_cast<unsigned char>(c))) throw Error("config", "keyword '" + k + "' is not lowercase");
        if (!seen.insert(k).second) throw Error("config", "duplicate keyword '" + k + "'");
    }
}

KeywordConfig KeywordConfig::parse(std::string_view text) {
    KeywordConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        cfg.keywords.push_back(t);
    }
    cfg.validate();
    return cfg;
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::map<CountryMonthKey, std::vector<double>> keyword_features(const std::vector<CorpusArticle>& corpus,
                                                                const KeywordConfig& cfg) {
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < cfg.keywords.size(); ++i) slot.emplace(cfg.keywords[i], i);
    std::map<CountryMonthKey, std::vector<double>> counts;
    std::map<CountryMonthKey, std::size_t> totals;
    for (const auto& a : corpus) {
        auto& c = counts[a.key];
        c.resize(cfg.keywords.size(), 0.0);
        auto& total = totals[a.key];
        for (const auto& s : a.sentences) {
            for (const auto& tok : word_tokens(s)) {
                ++total;
                const auto it = slot.find(tok);
                if (it != slot.end()) c[it->second] += 1.0;
            }
        }
    }
    for (auto& [key, c] : counts) {
        const auto total = totals[key];
        for (double& v : c) v = total == 0 ? 0.0 : v / static_cast<double>(total);
    }
    return counts;
}

DesignInputs assemble_inputs(const std::vector<LabelRow>& labels, const std::vector<TraditionalRow>& traditional,
                             const std::map<CountryMonthKey, std::vector<double>>& keyword_freq,
                             const KeywordConfig& keywords) {
    DesignInputs in;
    for (const auto& r : labels) in.target[r.key] = r.fci;
    for (std::size_t f = 0; f < kTimeVaryingFactors.size(); ++f) {
        Series<CountryMonthKey> s;
        for (const auto& r : traditional) s[r.key] = r.time_varying[f];
        in.time_varying.emplace_back(std::string(kTimeVaryingFactors[f]), std::move(s));
    }
    for (std::size_t k = 0; k < keywords.keywords.size(); ++k) {
        Series<CountryMonthKey> s;
        for (const auto& [key, v] : keyword_freq) s[key] = v.at(k);
        // Months without articles have zero keyword frequency.
        for (const auto& r : labels) s.emplace(r.key, 0.0);
        in.time_varying.emplace_back("kw_" + keywords.keywords[k], std::move(s));
    }
    for (std::size_t f = 0; f < kTimeInvariantFactors.size(); ++f) {
        Series<std::string> s;
        for (const auto& r : traditional) s[r.key.country] = r.time_invariant[f];
        in.time_invariant.emplace_back(std::string(kTimeInvariantFactors[f]), std::move(s));
    }
    return in;
}

std::string lag_column(std::string_view feature, int lag) { return std::string(feature) + "_lag" + std::to_string(lag); }

Design build_design(const DesignInputs& in, const LagSpec& lags) {
    if (lags.lag_min < 1 || lags.lag_min > lags.lag_max) throw Error("config", "invalid lag range");
    Design d;
    for (int l = lags.lag_min; l <= lags.lag_max; ++l) d.columns.push_back(lag_column("fci", l));
    for (const auto& [name, s] : in.time_varying)
        for (int l = lags.lag_min; l <= lags.lag_max; ++l) d.columns.push_back(lag_column(name, l));
    for (const auto& [name, s] : in.time_invariant) d.columns.push_back(name);

    std::vector<std::string> countries;
    for (const auto& [key, v] : in.target)
        if (countries.empty() || countries.back() != key.country) countries.push_back(key.country);
    if (in.country_dummies)
        for (std::size_t c = 1; c < countries.size(); ++c) d.columns.push_back("country=" + countries[c]);
    d.columns.push_back("intercept");

    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    for (const auto& [key, y] : in.target) {
        std::vector<double> row;
        row.reserve(d.columns.size());
        bool ok = true;
        auto lagged = [&](const Series<CountryMonthKey>& s) {
            for (int l = lags.lag_min; l <= lags.lag_max && ok; ++l) {
                const auto it = s.find({key.country, key.month.plus(-l)});
                if (it == s.end())
                    ok = false;
                else
                    row.push_back(it->second);
            }
        };
        lagged(in.target);
        for (const auto& [name, s] : in.time_varying) lagged(s);
        for (const auto& [name, s] : in.time_invariant) {
            if (!ok) break;
            const auto it = s.find(key.country);
            if (it == s.end())
                ok = false;
            else
                row.push_back(it->second);
        }
        if (!ok) {
            d.dropped.push_back(key);
            continue;
        }
        if (in.country_dummies)
            for (std::size_t c = 1; c < countries.size(); ++c) row.push_back(key.country == countries[c] ? 1.0 : 0.0);
        row.push_back(1.0);
        rows.push_back(std::move(row));
        ys.push_back(y);
        d.keys.push_back(key);
    }
    if (rows.empty()) throw Error("no_rows", "no usable design rows: every target month lacks some lag");
    d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d.columns.size()));
    d.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        d.y[static_cast<Eigen::Index>(r)] = ys[r];
    }
    return d;
}

double AdlModel::coefficient(const std::string& column) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == column) return beta[static_cast<Eigen::Index>(i)];
    throw Error("schema", "no coefficient for column '" + column + "'");
}

std::map<std::string, double> AdlModel::named() const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < columns.size(); ++i) out[columns[i]] = beta[static_cast<Eigen::Index>(i)];
    return out;
}

AdlModel fit_adl(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& columns,
                 double lambda) {
    const Eigen::Index n = X.rows(), p = X.cols();
    if (n < 1) throw Error("validation", "fit_adl needs at least one row");
    if (static_cast<std::size_t>(p) != columns.size()) throw Error("schema", "column names do not match X");
    if (y.size() != n) throw Error("shape", "y length does not match X rows");
    if (!(lambda >= 0.0)) throw Error("config", "ridge lambda must be >= 0");

    AdlModel m;
    m.columns = columns;
    m.lambda = lambda;
    for (Eigen::Index c = 0; c < p; ++c)
        if (columns[static_cast<std::size_t>(c)] == "intercept") m.intercept_col = static_cast<int>(c);

    // Centering is only valid when an intercept can absorb it.
    const bool center = m.intercept_col >= 0;
    m.center = Eigen::VectorXd::Zero(p);
    m.scale = Eigen::VectorXd::Ones(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        if (c == m.intercept_col) continue;
        const double mean = center ? X.col(c).mean() : 0.0;
        const double sd = std::sqrt((X.col(c).array() - mean).square().sum() / static_cast<double>(n));
        m.center[c] = mean;
        m.scale[c] = sd > 1e-12 ? sd : 1.0;
    }
    Eigen::MatrixXd Z = (X.rowwise() - m.center.transpose()).array().rowwise() / m.scale.transpose().array();

    // Ridge as augmented least squares: [Z; sqrt(lambda) P] b = [y; 0].
    const Eigen::Index penalized = p - (m.intercept_col >= 0 ? 1 : 0);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + (lambda > 0.0 ? penalized : 0), p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(A.rows());
    A.topRows(n) = Z;
    rhs.head(n) = y;
    if (lambda > 0.0) {
        Eigen::Index r = n;
        for (Eigen::Index c = 0; c < p; ++c)
            if (c != m.intercept_col) A(r++, c) = std::sqrt(lambda);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < p)
        throw Error("rank_deficient", "rank-deficient design (rank " + std::to_string(qr.rank()) + " < " +
                                          std::to_string(p) + "); use ridge lambda > 0");
    m.beta_scaled = qr.solve(rhs);

    m.beta = m.beta_scaled.array() / m.scale.array();
    if (m.intercept_col >= 0) {
        double shift = 0.0;
        for (Eigen::Index c = 0; c < p; ++c)
            if (c != m.intercept_col) shift += m.beta[c] * m.center[c];
        m.beta[m.intercept_col] = m.beta_scaled[m.intercept_col] - shift;
    }
    if (!m.beta.allFinite()) throw Error("non_finite", "non-finite ADL coefficients");
    return m;
}

Eigen::VectorXd predict_adl(const AdlModel& model, const Eigen::MatrixXd& X, const std::vector<std::string>& columns) {
    const std::size_t n = std::max(columns.size(), model.columns.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= columns.size()) throw Error("schema", "missing column '" + model.columns[i] + "'");
        if (i >= model.columns.size() || columns[i] != model.columns[i])
            throw Error("schema", "unexpected column '" + columns[i] + "' at position " + std::to_string(i));
    }
    if (static_cast<std::size_t>(X.cols()) != columns.size()) throw Error("schema", "X width does not match columns");
    return X * model.beta;
}

std::string adl_model_json(const AdlModel& model, std::string_view config_hash, std::uint64_t seed) {
    json j;
    j["lambda"] = model.lambda;
    json coefs = json::object();
    for (const auto& [name, v] : model.named()) coefs[name] = v;
    j["coefficients"] = coefs;
    j["columns"] = model.columns;
    if (!config_hash.empty()) j["meta"] = {{"config_hash", std::string(config_hash)}, {"seed", seed}};
    return j.dump(1) + "\n";
}

}  // namespace gistcast
