#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gistcast {

/// Base error for every failure the toolkit reports. `code()` is a short
/// machine-readable tag ("bad_magic", "validation", ...), `what()` the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Deterministic 64-bit generator (splitmix64 seeding into xoshiro256**).
/// Distributions are implemented here rather than taken from <random> so
/// draws are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, bound) without modulo bias. bound must be > 0.
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal (Box-Muller, one cached spare).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
/// Order-sensitive mix of a running hash with another 64-bit value.
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);
std::string hex64(std::uint64_t v);

/// Worker count from GISTCAST_THREADS (>= 1); defaults to hardware concurrency.
std::size_t thread_count();

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Callers write
/// results into pre-sized slots so output order never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Writes through a temporary file in the same directory and renames over
/// the destination, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);
double parse_double(std::string_view s, const std::string& context);
long long parse_int(std::string_view s, const std::string& context);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

}  // namespace gistcast
