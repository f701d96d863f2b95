#pragma once

#include "gistcast/bootstrap.hpp"
#include "gistcast/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace gistcast {

/// Sentence embeddings, one row per sentence id. Stored as 32-bit floats,
/// promoted to double on use.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::uint32_t dim, std::vector<std::string> ids, std::vector<float> data);

    std::uint32_t dim() const { return dim_; }
    std::size_t rows() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<float>& data() const { return data_; }

    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::optional<std::size_t> find(const std::string& id) const;
    /// Row for id; throws Error("missing_id") naming the id.
    std::size_t require(const std::string& id) const;

private:
    std::uint32_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Pool index -> table row, resolved once per pool.
std::vector<std::size_t> resolve_pool(const SentencePool& pool, const EmbeddingTable& table);

/// Mean of the picked sentence rows, counted with multiplicity.
Eigen::VectorXd pool_article(const PseudoArticle& pseudo, const SentencePool& pool, const EmbeddingTable& table);

struct CollectionEmbedding {
    CountryMonthKey key;
    int fold = 0;
    Eigen::MatrixXd matrix;  // m x dim; row i embeds pseudo-article i
};

CollectionEmbedding embed_collection(const PseudoCollection& coll, const SentencePool& pool,
                                     const EmbeddingTable& table);
/// Same, with the pool already resolved via resolve_pool.
CollectionEmbedding embed_collection(const PseudoCollection& coll, const std::vector<std::size_t>& rows,
                                     const EmbeddingTable& table);

// Binary: "EMB1", u32 dim, u64 rows, rows*dim little-endian f32.
// Sidecar "<file>.ids.jsonl": {"row": i, "sentence_id": "..."} per line.
std::filesystem::path ids_sidecar(const std::filesystem::path& path);
std::string encode_table(const EmbeddingTable& table);
std::string encode_sidecar(const EmbeddingTable& table);
EmbeddingTable decode_table(std::string_view payload, std::string_view sidecar,
                            std::optional<std::uint32_t> expected_dim = std::nullopt);

void write_table(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable read_table(const std::filesystem::path& path, std::optional<std::uint32_t> expected_dim = std::nullopt);

}  // namespace gistcast
