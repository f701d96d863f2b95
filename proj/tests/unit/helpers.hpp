#pragma once

#include "gistcast/panel.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("gistcast_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// `articles` articles of `sentences` sentences for one key.
inline std::vector<gistcast::CorpusArticle> articles_for(const gistcast::CountryMonthKey& key, int articles,
                                                         int sentences) {
    std::vector<gistcast::CorpusArticle> out;
    for (int a = 0; a < articles; ++a) {
        gistcast::CorpusArticle art;
        art.article_id = key.country + "-" + key.month.str() + "-" + std::to_string(a);
        art.key = key;
        for (int s = 0; s < sentences; ++s)
            art.sentences.push_back("sentence " + std::to_string(s) + " of " + art.article_id);
        out.push_back(std::move(art));
    }
    return out;
}

/// Every (country, month) pair for `countries` x `months` from Jan 2017.
inline std::vector<gistcast::CountryMonthKey> panel_keys(int countries, int months,
                                                         gistcast::YearMonth start = {2017, 1}) {
    std::vector<gistcast::CountryMonthKey> keys;
    for (int c = 0; c < countries; ++c)
        for (int m = 0; m < months; ++m) keys.push_back({"C" + std::to_string(c), start.plus(m)});
    return keys;
}

}  // namespace testutil
