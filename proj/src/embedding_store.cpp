#include "gistcast/embedding_store.hpp"

#include "gistcast/common.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include <json.hpp>

namespace gistcast {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "embedding I/O assumes a little-endian host");

EmbeddingTable::EmbeddingTable(std::uint32_t dim, std::vector<std::string> ids, std::vector<float> data)
    : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
    if (dim_ == 0) throw Error("validation", "embedding dim must be > 0");
    if (data_.size() != ids_.size() * dim_)
        throw Error("validation", "embedding data size does not match ids x dim");
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (!index_.emplace(ids_[i], i).second) throw Error("validation", "duplicate sentence id '" + ids_[i] + "'");
    for (float v : data_)
        if (!std::isfinite(v)) throw Error("validation", "non-finite embedding value");
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t EmbeddingTable::require(const std::string& id) const {
    const auto r = find(id);
    if (!r) throw Error("missing_id", "sentence id not in embedding table: '" + id + "'");
    return *r;
}

std::vector<std::size_t> resolve_pool(const SentencePool& pool, const EmbeddingTable& table) {
    std::vector<std::size_t> rows;
    rows.reserve(pool.entries.size());
    for (const auto& e : pool.entries) rows.push_back(table.require(e.sentence_id));
    return rows;
}

namespace {

Eigen::VectorXd mean_rows(const PseudoArticle& pseudo, const std::vector<std::size_t>& rows,
                          const EmbeddingTable& table) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(table.dim());
    for (auto p : pseudo.picks) {
        const auto r = table.row(rows.at(p));
        for (std::uint32_t k = 0; k < table.dim(); ++k) acc[k] += static_cast<double>(r[k]);
    }
    if (!pseudo.picks.empty()) acc /= static_cast<double>(pseudo.picks.size());
    return acc;
}

}  // namespace

Eigen::VectorXd pool_article(const PseudoArticle& pseudo, const SentencePool& pool, const EmbeddingTable& table) {
    std::vector<std::size_t> rows(pool.entries.size(), 0);
    for (auto p : pseudo.picks) rows.at(p) = table.require(pool.entries.at(p).sentence_id);
    return mean_rows(pseudo, rows, table);
}

CollectionEmbedding embed_collection(const PseudoCollection& coll, const std::vector<std::size_t>& rows,
                                     const EmbeddingTable& table) {
    CollectionEmbedding out;
    out.key = coll.key;
    out.fold = coll.fold;
    out.matrix.resize(static_cast<Eigen::Index>(coll.articles.size()), table.dim());
    for (std::size_t i = 0; i < coll.articles.size(); ++i)
        out.matrix.row(static_cast<Eigen::Index>(i)) = mean_rows(coll.articles[i], rows, table).transpose();
    return out;
}

CollectionEmbedding embed_collection(const PseudoCollection& coll, const SentencePool& pool,
                                     const EmbeddingTable& table) {
    return embed_collection(coll, resolve_pool(pool, table), table);
}

std::filesystem::path ids_sidecar(const std::filesystem::path& path) {
    auto p = path;
    p += ".ids.jsonl";
    return p;
}

std::string encode_table(const EmbeddingTable& table) {
    std::string out = "EMB1";
    const std::uint32_t dim = table.dim();
    const std::uint64_t rows = table.rows();
    out.append(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.append(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.append(reinterpret_cast<const char*>(table.data().data()), table.data().size() * sizeof(float));
    return out;
}

std::string encode_sidecar(const EmbeddingTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        json j;
        j["row"] = i;
        j["sentence_id"] = table.ids()[i];
        out += j.dump();
        out += '\n';
    }
    return out;
}

EmbeddingTable decode_table(std::string_view payload, std::string_view sidecar, std::optional<std::uint32_t> expected_dim) {
    constexpr std::size_t header = 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t);
    if (payload.size() < 4 || payload.substr(0, 4) != "EMB1") throw Error("bad_magic", "bad magic: expected EMB1");
    if (payload.size() < header) throw Error("truncated_payload", "truncated payload: incomplete header");
    std::uint32_t dim = 0;
    std::uint64_t rows = 0;
    std::memcpy(&dim, payload.data() + 4, sizeof dim);
    std::memcpy(&rows, payload.data() + 8, sizeof rows);
    if (dim == 0) throw Error("dim_mismatch", "dim mismatch: header dim is 0");
    if (expected_dim && *expected_dim != dim)
        throw Error("dim_mismatch", "dim mismatch: file has " + std::to_string(dim) + ", expected " +
                                        std::to_string(*expected_dim));

    std::vector<std::string> ids;
    std::istringstream in{std::string(sidecar)};
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            if (j.at("row").get<std::uint64_t>() != ids.size())
                throw Error("manifest_mismatch", "id manifest rows out of order at row " + std::to_string(ids.size()));
            ids.push_back(j.at("sentence_id").get<std::string>());
        } catch (const json::exception& e) {
            throw Error("parse", std::string("id manifest: ") + e.what());
        }
    }

    const std::size_t body = payload.size() - header;
    const std::size_t row_bytes = static_cast<std::size_t>(dim) * sizeof(float);
    const std::size_t payload_rows = body / row_bytes;
    if (ids.size() > payload_rows || rows > payload_rows || body % row_bytes != 0)
        throw Error("truncated_payload", "truncated payload: " + std::to_string(payload_rows) + " complete rows for " +
                                             std::to_string(std::max<std::uint64_t>(rows, ids.size())) + " ids");
    if (ids.size() != rows || payload_rows != rows)
        throw Error("manifest_mismatch", "row count mismatch: header " + std::to_string(rows) + ", manifest " +
                                             std::to_string(ids.size()) + ", payload " + std::to_string(payload_rows));

    std::vector<float> data(rows * dim);
    std::memcpy(data.data(), payload.data() + header, data.size() * sizeof(float));
    return EmbeddingTable(dim, std::move(ids), std::move(data));
}

void write_table(const EmbeddingTable& table, const std::filesystem::path& path) {
    write_file_atomic(path, encode_table(table));
    write_file_atomic(ids_sidecar(path), encode_sidecar(table));
}

EmbeddingTable read_table(const std::filesystem::path& path, std::optional<std::uint32_t> expected_dim) {
    return decode_table(read_file(path), read_file(ids_sidecar(path)), expected_dim);
}

}  // namespace gistcast
