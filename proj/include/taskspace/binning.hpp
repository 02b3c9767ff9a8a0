#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace taskspace {

struct BinRow {
    std::size_t bin = 0;
    double lo = 0, hi = 0;  // score range inside the bin
    std::size_t n = 0;
    std::size_t successes = 0;
    double p_hat = 0;
    double se = 0;  // sqrt(p (1 - p) / n)
    double ci_lo = 0, ci_hi = 0;
};

/// Sorts observations by score (ties by input position) and cuts them into
/// `bins` groups whose sizes differ by at most one; per bin reports the
/// success share with a 1.96 sigma normal interval. Throws when there are
/// fewer observations than bins, or when the score is constant and
/// `allow_constant` is false.
std::vector<BinRow> equal_size_bins(std::span<const double> score, std::span<const std::uint8_t> outcome, std::size_t bins,
                                    bool allow_constant = false);

/// `bin,lo,hi,n,p_hat,ci_lo,ci_hi`
std::string bin_table_csv(std::span<const BinRow> rows);

}  // namespace taskspace
