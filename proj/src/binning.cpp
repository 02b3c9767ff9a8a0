#include "taskspace/binning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "taskspace/common.hpp"

namespace taskspace {

std::vector<BinRow> equal_size_bins(std::span<const double> score, std::span<const std::uint8_t> outcome, std::size_t bins,
                                    bool allow_constant) {
    if (score.size() != outcome.size()) throw Error("equal_size_bins: score and outcome lengths differ");
    if (bins == 0) throw Error("equal_size_bins: need at least one bin");
    const std::size_t n = score.size();
    if (n < bins) throw Error("equal_size_bins: fewer observations than bins");
    if (!allow_constant && std::all_of(score.begin(), score.end(), [&](double s) { return s == score[0]; }))
        throw Error("equal_size_bins: constant score, bins undefined");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });

    std::vector<BinRow> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t first = b * n / bins, last = (b + 1) * n / bins;
        BinRow& r = out[b];
        r.bin = b;
        r.n = last - first;
        r.lo = score[order[first]];
        r.hi = score[order[last - 1]];
        for (std::size_t i = first; i < last; ++i) r.successes += outcome[order[i]];
        r.p_hat = static_cast<double>(r.successes) / static_cast<double>(r.n);
        r.se = std::sqrt(r.p_hat * (1 - r.p_hat)) / std::sqrt(static_cast<double>(r.n));
        r.ci_lo = r.p_hat - 1.96 * r.se;
        r.ci_hi = r.p_hat + 1.96 * r.se;
    }
    return out;
}

std::string bin_table_csv(std::span<const BinRow> rows) {
    std::string out = "bin,lo,hi,n,p_hat,ci_lo,ci_hi\n";
    for (const auto& r : rows)
        out += std::to_string(r.bin) + "," + format_double(r.lo) + "," + format_double(r.hi) + "," +
               std::to_string(r.n) + "," + format_double(r.p_hat) + "," + format_double(r.ci_lo) + "," +
               format_double(r.ci_hi) + "\n";
    return out;
}

}  // namespace taskspace
