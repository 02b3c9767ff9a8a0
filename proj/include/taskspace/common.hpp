#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace taskspace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input record; carries the 1-based line number when known.
class ParseError : public Error {
  public:
    ParseError(const std::string& file, std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

/// Cross-table reference that does not resolve.
class IntegrityError : public Error {
  public:
    using Error::Error;
};

/// Non-fatal diagnostics collected by operations that skip bad input.
using Warnings = std::vector<std::string>;

using Timestamp = std::int64_t;  // UTC epoch seconds

Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp t);
Timestamp utc_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                        int second = 0);
int utc_year(Timestamp t);
/// Minute of the UTC day, 0..1439.
int day_minute(Timestamp t);

constexpr int kMinutesPerDay = 1440;

// ---------------------------------------------------------------------------
// Deterministic randomness.
//
// std::mt19937_64 output is fully specified by the standard, but the std::
// distributions are not; the helpers below keep draws identical across
// standard libraries.

using Rng = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for the substream `name` of a master seed.
std::uint64_t substream_seed(std::uint64_t master, std::string_view name);
/// Seed for the `index`-th draw of a counter-based stream.
std::uint64_t counter_seed(std::uint64_t master, std::uint64_t index);

/// Uniform on [0, 1).
double uniform01(Rng& rng);
/// Uniform integer on [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
bool bernoulli(Rng& rng, double p);
double standard_normal(Rng& rng);
/// Gamma(shape, 1) by Marsaglia-Tsang.
double gamma_draw(Rng& rng, double shape);

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

// ---------------------------------------------------------------------------
// Numerics

/// ln C(n, k) for 0 <= k <= n; -inf outside the support.
double log_binomial(double n, double k);
double log_factorial(double n);

/// Percentile with linear interpolation between order statistics (R type 7).
double percentile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Text I/O

std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view s);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
std::string file_hash_hex(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

}  // namespace taskspace
