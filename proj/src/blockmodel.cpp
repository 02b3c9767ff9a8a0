#include "taskspace/blockmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <numeric>
#include <tuple>

#include <json.hpp>

namespace taskspace {

// ---------------------------------------------------------------------------
// Graph and partition containers

BipartiteGraph::BipartiteGraph(std::size_t num_tags, std::size_t num_questions,
                               std::span<const std::pair<NodeIndex, NodeIndex>> edges)
    : tag_adj_(num_tags), question_adj_(num_questions) {
    for (auto [t, q] : edges) {
        if (t >= num_tags || q >= num_questions) throw Error("edge endpoint out of range");
        tag_adj_[t].push_back(q);
        question_adj_[q].push_back(t);
    }
    for (auto& adj : tag_adj_) {
        std::sort(adj.begin(), adj.end());
        if (std::adjacent_find(adj.begin(), adj.end()) != adj.end()) throw Error("duplicate edge in bipartite graph");
    }
    for (auto& adj : question_adj_) std::sort(adj.begin(), adj.end());
    num_edges_ = edges.size();
    tag_ids.resize(num_tags);
    question_ids.resize(num_questions);
    std::iota(tag_ids.begin(), tag_ids.end(), 0);
    std::iota(question_ids.begin(), question_ids.end(), 0);
}

std::vector<std::pair<NodeIndex, NodeIndex>> BipartiteGraph::edges() const {
    std::vector<std::pair<NodeIndex, NodeIndex>> out;
    out.reserve(num_edges_);
    for (NodeIndex t = 0; t < tag_adj_.size(); ++t)
        for (NodeIndex q : tag_adj_[t]) out.emplace_back(t, q);
    return out;
}

Partition Partition::from_sides(std::span<const BlockId> tag_blocks, std::span<const BlockId> question_blocks) {
    Partition p;
    BlockId offset = 0;
    for (BlockId b : tag_blocks) offset = std::max(offset, b + 1);
    p.assignment.assign(tag_blocks.begin(), tag_blocks.end());
    for (BlockId b : question_blocks) p.assignment.push_back(b + offset);
    return p;
}

std::vector<BlockId> canonical_labels(std::span<const BlockId> labels) {
    std::map<BlockId, BlockId> seen;
    std::vector<BlockId> out;
    out.reserve(labels.size());
    for (BlockId b : labels) {
        auto [it, inserted] = seen.emplace(b, static_cast<BlockId>(seen.size()));
        out.push_back(it->second);
    }
    return out;
}

std::vector<BlockId> Partition::tag_blocks(const BipartiteGraph& g) const {
    return block_structure(g, *this).tag_block;
}

std::vector<BlockId> Partition::question_blocks(const BipartiteGraph& g) const {
    return block_structure(g, *this).question_block;
}

BlockStructure block_structure(const BipartiteGraph& g, const Partition& p) {
    if (p.assignment.size() != g.num_nodes())
        throw Error("partition size " + std::to_string(p.assignment.size()) + " does not match graph with " +
                    std::to_string(g.num_nodes()) + " nodes");
    const std::span<const BlockId> all(p.assignment);
    const auto tags = all.first(g.num_tags());
    const auto questions = all.subspan(g.num_tags());
    const std::set<BlockId> tag_labels(tags.begin(), tags.end());
    for (BlockId b : questions)
        if (tag_labels.count(b)) throw Error("block " + std::to_string(b) + " mixes tag and question nodes");

    BlockStructure s;
    s.tag_block = canonical_labels(tags);
    s.question_block = canonical_labels(questions);
    for (BlockId b : s.tag_block) s.num_tag_blocks = std::max<std::size_t>(s.num_tag_blocks, b + 1);
    for (BlockId b : s.question_block) s.num_question_blocks = std::max<std::size_t>(s.num_question_blocks, b + 1);
    s.edge_counts = CountMatrix::Zero(static_cast<Eigen::Index>(s.num_tag_blocks),
                                      static_cast<Eigen::Index>(s.num_question_blocks));
    s.tag_block_sizes.assign(s.num_tag_blocks, 0);
    s.question_block_sizes.assign(s.num_question_blocks, 0);
    for (BlockId b : s.tag_block) ++s.tag_block_sizes[b];
    for (BlockId b : s.question_block) ++s.question_block_sizes[b];
    for (NodeIndex t = 0; t < g.num_tags(); ++t)
        for (NodeIndex q : g.tag_neighbors(t)) ++s.edge_counts(s.tag_block[t], s.question_block[q]);
    return s;
}

// ---------------------------------------------------------------------------
// Description length

namespace {

/// ln n! for integers, tabulated up to a cap and lgamma beyond.
class LogFactorials {
  public:
    explicit LogFactorials(std::int64_t max_n = 0) { reserve(max_n); }

    void reserve(std::int64_t max_n) {
        max_n = std::min<std::int64_t>(max_n, kCap);
        if (max_n < static_cast<std::int64_t>(table_.size())) return;
        std::size_t i = table_.size();
        table_.resize(static_cast<std::size_t>(max_n) + 1);
        for (; i < table_.size(); ++i) table_[i] = i < 2 ? 0.0 : table_[i - 1] + std::log(static_cast<double>(i));
    }

    double operator()(std::int64_t n) const {
        if (n < static_cast<std::int64_t>(table_.size())) return table_[static_cast<std::size_t>(n)];
        return std::lgamma(static_cast<double>(n) + 1.0);
    }

    double binomial(std::int64_t n, std::int64_t k) const {
        if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
        if (k == 0 || k == n) return 0.0;
        return (*this)(n) - (*this)(k) - (*this)(n - k);
    }

  private:
    static constexpr std::int64_t kCap = 1 << 22;
    std::vector<double> table_{0.0};
};

struct Terms {
    const LogFactorials* lf;
    bool dc;
    std::int64_t num_edges;
    std::int64_t num_tags;
    std::int64_t num_questions;

    double cell(std::int64_t n_r, std::int64_t n_s, std::int64_t e) const {
        if (e == 0) return 0.0;
        return dc ? -(*lf)(e) : lf->binomial(n_r * n_s, e);
    }

    /// Block-local part: -ln n_r! of the partition prior, plus for the
    /// degree-corrected model ln e_r! and the degree-sequence prior.
    double block(std::int64_t n, std::int64_t e_total) const {
        if (n == 0) return 0.0;
        double v = -(*lf)(n);
        if (dc) v += (*lf)(e_total) + lf->binomial(n + e_total - 1, e_total);
        return v;
    }

    double side_prior(std::int64_t n, std::int64_t b) const {
        if (n == 0) return 0.0;
        return std::log(static_cast<double>(n)) + lf->binomial(n - 1, b - 1) + (*lf)(n);
    }

    double edge_prior(std::int64_t bt, std::int64_t bq) const {
        if (num_edges == 0) return 0.0;
        return lf->binomial(bt * bq + num_edges - 1, num_edges);
    }

    double global(std::int64_t bt, std::int64_t bq) const {
        return edge_prior(bt, bq) + side_prior(num_tags, bt) + side_prior(num_questions, bq);
    }
};

double degree_constant(const BipartiteGraph& g, const LogFactorials& lf) {
    double c = 0;
    for (NodeIndex t = 0; t < g.num_tags(); ++t) c += lf(static_cast<std::int64_t>(g.tag_degree(t)));
    for (NodeIndex q = 0; q < g.num_questions(); ++q) c += lf(static_cast<std::int64_t>(g.question_degree(q)));
    return c;
}

std::int64_t max_factorial_arg(const BipartiteGraph& g) {
    return static_cast<std::int64_t>(g.num_tags() * g.num_questions() + g.num_nodes() + 2 * g.num_edges() + 2);
}

}  // namespace

DescriptionLength description_length(const BipartiteGraph& g, const Partition& p, bool degree_corrected) {
    const BlockStructure s = block_structure(g, p);
    LogFactorials lf(max_factorial_arg(g));
    const Terms terms{&lf, degree_corrected, static_cast<std::int64_t>(g.num_edges()),
                      static_cast<std::int64_t>(g.num_tags()), static_cast<std::int64_t>(g.num_questions())};

    DescriptionLength dl;
    const auto bt = static_cast<std::int64_t>(s.num_tag_blocks);
    const auto bq = static_cast<std::int64_t>(s.num_question_blocks);
    dl.edge_matrix_prior = terms.edge_prior(bt, bq);
    dl.partition_prior = terms.side_prior(terms.num_tags, bt) + terms.side_prior(terms.num_questions, bq);
    for (auto n : s.tag_block_sizes) dl.partition_prior -= lf(n);
    for (auto n : s.question_block_sizes) dl.partition_prior -= lf(n);

    if (!degree_corrected) {
        for (Eigen::Index r = 0; r < bt; ++r)
            for (Eigen::Index c = 0; c < bq; ++c)
                dl.likelihood_term += terms.cell(s.tag_block_sizes[r], s.question_block_sizes[c], s.edge_counts(r, c));
    } else {
        for (Eigen::Index r = 0; r < bt; ++r) {
            const std::int64_t er = s.edge_counts.row(r).sum();
            dl.likelihood_term += lf(er);
            dl.degree_prior += lf.binomial(s.tag_block_sizes[r] + er - 1, er);
        }
        for (Eigen::Index c = 0; c < bq; ++c) {
            const std::int64_t ec = s.edge_counts.col(c).sum();
            dl.likelihood_term += lf(ec);
            dl.degree_prior += lf.binomial(s.question_block_sizes[c] + ec - 1, ec);
        }
        for (Eigen::Index r = 0; r < bt; ++r)
            for (Eigen::Index c = 0; c < bq; ++c) dl.likelihood_term -= lf(s.edge_counts(r, c));
        dl.likelihood_term -= degree_constant(g, lf);
    }
    dl.total = dl.likelihood_term + dl.edge_matrix_prior + dl.partition_prior + dl.degree_prior;
    return dl;
}

// ---------------------------------------------------------------------------
// Incremental search state

namespace {

constexpr int kTagSide = 0;
constexpr int kQuestionSide = 1;
constexpr double kImprovement = 1e-9;

class SearchState {
  public:
    SearchState(const BipartiteGraph& g, const LogFactorials& lf, bool dc, std::vector<BlockId> tag_blocks,
                std::vector<BlockId> question_blocks)
        : g_(&g),
          terms_{&lf, dc, static_cast<std::int64_t>(g.num_edges()), static_cast<std::int64_t>(g.num_tags()),
                 static_cast<std::int64_t>(g.num_questions())},
          dc_constant_(dc ? -degree_constant(g, lf) : 0.0) {
        block_[kTagSide] = std::move(tag_blocks);
        block_[kQuestionSide] = std::move(question_blocks);
        rebuild();
    }

    std::size_t num_blocks(int side) const { return size_[side].size(); }
    std::size_t num_nodes(int side) const { return block_[side].size(); }
    std::int64_t block_size(int side, BlockId b) const { return size_[side][b]; }
    BlockId block_of(int side, NodeIndex v) const { return block_[side][v]; }
    const std::vector<BlockId>& blocks(int side) const { return block_[side]; }

    double total() const {
        double t = dc_constant_ + terms_.global(static_cast<std::int64_t>(num_blocks(0)),
                                                static_cast<std::int64_t>(num_blocks(1)));
        for (std::size_t r = 0; r < num_blocks(0); ++r)
            for (std::size_t c = 0; c < num_blocks(1); ++c)
                t += terms_.cell(size_[0][r], size_[1][c], e_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        for (int side = 0; side < 2; ++side)
            for (std::size_t r = 0; r < num_blocks(side); ++r) t += terms_.block(size_[side][r], etot_[side][r]);
        return t;
    }

    /// DL change of moving node v to block `to`; to == num_blocks(side) opens a new block.
    double move_delta(int side, NodeIndex v, BlockId to) {
        const BlockId from = block_[side][v];
        if (to == from) return 0.0;
        const std::size_t nb = num_blocks(side);
        const int other = 1 - side;
        const std::int64_t n_from = size_[side][from];
        const std::int64_t n_to = to < nb ? size_[side][to] : 0;
        const std::int64_t k = load_neighbor_counts(side, v);
        double delta = 0.0;
        for (std::size_t c = 0; c < num_blocks(other); ++c) {
            const std::int64_t nc = size_[other][c];
            const std::int64_t kc = scratch_[c];
            const std::int64_t ef = cell(side, from, c);
            const std::int64_t et = to < nb ? cell(side, to, c) : 0;
            if (terms_.dc) {
                if (kc == 0) continue;
                delta += terms_.cell(0, 0, ef - kc) - terms_.cell(0, 0, ef) + terms_.cell(0, 0, et + kc) -
                         terms_.cell(0, 0, et);
            } else {
                delta += terms_.cell(n_from - 1, nc, ef - kc) - terms_.cell(n_from, nc, ef);
                delta += terms_.cell(n_to + 1, nc, et + kc) - terms_.cell(n_to, nc, et);
            }
        }
        const std::int64_t e_from = etot_[side][from];
        const std::int64_t e_to = to < nb ? etot_[side][to] : 0;
        delta += terms_.block(n_from - 1, e_from - k) - terms_.block(n_from, e_from);
        delta += terms_.block(n_to + 1, e_to + k) - terms_.block(n_to, e_to);
        const std::size_t new_nb = nb - (n_from == 1 ? 1 : 0) + (to == nb ? 1 : 0);
        if (new_nb != nb) delta += global_with(side, new_nb) - global_with(side, nb);
        return delta;
    }

    void move(int side, NodeIndex v, BlockId to) {
        const BlockId from = block_[side][v];
        if (to == from) return;
        if (to == num_blocks(side)) add_block(side);
        const int other = 1 - side;
        for (NodeIndex u : neighbors(side, v)) {
            const BlockId c = block_[other][u];
            --cell(side, from, c);
            ++cell(side, to, c);
        }
        const auto k = static_cast<std::int64_t>(neighbors(side, v).size());
        --size_[side][from];
        ++size_[side][to];
        etot_[side][from] -= k;
        etot_[side][to] += k;
        block_[side][v] = to;
        if (size_[side][from] == 0) remove_block(side, from);
    }

    double merge_delta(int side, BlockId a, BlockId b) const {
        const int other = 1 - side;
        const std::int64_t na = size_[side][a], nb = size_[side][b];
        double delta = 0.0;
        for (std::size_t c = 0; c < num_blocks(other); ++c) {
            const std::int64_t ea = cell(side, a, c), eb = cell(side, b, c);
            if (ea == 0 && eb == 0) continue;
            const std::int64_t nc = size_[other][c];
            delta += terms_.cell(na + nb, nc, ea + eb) - terms_.cell(na, nc, ea) - terms_.cell(nb, nc, eb);
        }
        delta += terms_.block(na + nb, etot_[side][a] + etot_[side][b]) - terms_.block(na, etot_[side][a]) -
                 terms_.block(nb, etot_[side][b]);
        delta += global_with(side, num_blocks(side) - 1) - global_with(side, num_blocks(side));
        return delta;
    }

    /// Relabel blocks of one side through `mapping` (old block -> new block).
    void relabel(int side, const std::vector<BlockId>& mapping) {
        for (auto& b : block_[side]) b = mapping[b];
        block_[side] = canonical_labels(block_[side]);
        rebuild();
    }

  private:
    std::span<const NodeIndex> neighbors(int side, NodeIndex v) const {
        return side == kTagSide ? g_->tag_neighbors(v) : g_->question_neighbors(v);
    }

    std::int64_t& cell(int side, std::size_t r, std::size_t c) {
        return side == kTagSide ? e_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))
                                : e_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
    }
    std::int64_t cell(int side, std::size_t r, std::size_t c) const {
        return side == kTagSide ? e_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))
                                : e_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
    }

    double global_with(int side, std::size_t nb) const {
        const auto bt = static_cast<std::int64_t>(side == kTagSide ? nb : num_blocks(0));
        const auto bq = static_cast<std::int64_t>(side == kQuestionSide ? nb : num_blocks(1));
        return terms_.global(bt, bq);
    }

    std::int64_t load_neighbor_counts(int side, NodeIndex v) {
        const int other = 1 - side;
        scratch_.assign(num_blocks(other), 0);
        for (NodeIndex u : neighbors(side, v)) ++scratch_[block_[other][u]];
        return static_cast<std::int64_t>(neighbors(side, v).size());
    }

    void add_block(int side) {
        size_[side].push_back(0);
        etot_[side].push_back(0);
        if (side == kTagSide) {
            e_.conservativeResize(e_.rows() + 1, e_.cols());
            e_.row(e_.rows() - 1).setZero();
        } else {
            e_.conservativeResize(e_.rows(), e_.cols() + 1);
            e_.col(e_.cols() - 1).setZero();
        }
    }

    void remove_block(int side, BlockId r) {
        const auto last = static_cast<BlockId>(num_blocks(side) - 1);
        if (r != last) {
            if (side == kTagSide) e_.row(r) = e_.row(last);
            else e_.col(r) = e_.col(last);
            size_[side][r] = size_[side][last];
            etot_[side][r] = etot_[side][last];
            for (auto& b : block_[side])
                if (b == last) b = r;
        }
        size_[side].pop_back();
        etot_[side].pop_back();
        if (side == kTagSide) e_.conservativeResize(e_.rows() - 1, e_.cols());
        else e_.conservativeResize(e_.rows(), e_.cols() - 1);
    }

    void rebuild() {
        for (int side = 0; side < 2; ++side) {
            std::size_t nb = 0;
            for (BlockId b : block_[side]) nb = std::max<std::size_t>(nb, b + 1);
            size_[side].assign(nb, 0);
            etot_[side].assign(nb, 0);
            for (NodeIndex v = 0; v < block_[side].size(); ++v) {
                ++size_[side][block_[side][v]];
                etot_[side][block_[side][v]] += static_cast<std::int64_t>(neighbors(side, v).size());
            }
        }
        e_ = CountMatrix::Zero(static_cast<Eigen::Index>(num_blocks(0)), static_cast<Eigen::Index>(num_blocks(1)));
        for (NodeIndex t = 0; t < g_->num_tags(); ++t)
            for (NodeIndex q : g_->tag_neighbors(t)) ++e_(block_[0][t], block_[1][q]);
    }

    const BipartiteGraph* g_;
    Terms terms_;
    double dc_constant_;
    std::vector<BlockId> block_[2];
    std::vector<std::int64_t> size_[2];
    std::vector<std::int64_t> etot_[2];
    CountMatrix e_;
    std::vector<std::int64_t> scratch_;
};

struct Bounds {
    std::size_t min_blocks[2];
    std::size_t max_blocks[2];
};

/// One pass of greedy single-node moves in a seeded random order. Returns
/// the number of accepted moves; each strictly lowers the DL.
std::size_t sweep(SearchState& s, const Bounds& bounds, Rng& rng) {
    std::vector<std::pair<int, NodeIndex>> order;
    order.reserve(s.num_nodes(0) + s.num_nodes(1));
    for (int side = 0; side < 2; ++side)
        for (NodeIndex v = 0; v < s.num_nodes(side); ++v) order.emplace_back(side, v);
    shuffle(order, rng);

    std::size_t accepted = 0;
    for (auto [side, v] : order) {
        const std::size_t nb = s.num_blocks(side);
        const BlockId from = s.block_of(side, v);
        // Emptying a block is only allowed above the lower bound.
        const bool singleton = s.block_size(side, from) == 1;
        if (singleton && nb <= bounds.min_blocks[side]) continue;

        double best = -kImprovement;
        std::optional<BlockId> target;
        for (BlockId to = 0; to < nb; ++to) {
            if (to == from) continue;
            const double d = s.move_delta(side, v, to);
            if (d < best) {
                best = d;
                target = to;
            }
        }
        if (!singleton && nb < bounds.max_blocks[side]) {
            const double d = s.move_delta(side, v, static_cast<BlockId>(nb));
            if (d < best) {
                best = d;
                target = static_cast<BlockId>(nb);
            }
        }
        if (target) {
            s.move(side, v, *target);
            ++accepted;
        }
    }
    return accepted;
}

std::size_t run_sweeps(SearchState& s, const Bounds& bounds, int max_sweeps, Rng& rng) {
    std::size_t total = 0;
    for (int i = 0; i < max_sweeps; ++i) {
        const std::size_t moved = sweep(s, bounds, rng);
        total += moved;
        if (moved == 0) break;
    }
    return total;
}

struct UnionFind {
    std::vector<BlockId> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    BlockId find(BlockId x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(BlockId a, BlockId b) {
        a = find(a);
        b = find(b);
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

struct MergeProposal {
    double delta;
    int side;
    BlockId a, b;
};

/// One agglomerative round: each block proposes its best merge among
/// sampled partners; proposals are applied best-first until the total block
/// count is halved.
void merge_round(SearchState& s, const Bounds& bounds, std::size_t candidates, Rng& rng) {
    std::vector<MergeProposal> proposals;
    for (int side = 0; side < 2; ++side) {
        const std::size_t nb = s.num_blocks(side);
        if (nb <= bounds.min_blocks[side]) continue;
        for (BlockId a = 0; a < nb; ++a) {
            std::vector<BlockId> partners;
            if (nb - 1 <= candidates) {
                for (BlockId b = 0; b < nb; ++b)
                    if (b != a) partners.push_back(b);
            } else {
                for (std::size_t i = 0; i < candidates; ++i) {
                    auto b = static_cast<BlockId>(uniform_index(rng, nb - 1));
                    partners.push_back(b >= a ? b + 1 : b);
                }
            }
            std::optional<MergeProposal> best;
            for (BlockId b : partners) {
                const double d = s.merge_delta(side, a, b);
                if (!best || d < best->delta || (d == best->delta && b < best->b)) best = MergeProposal{d, side, a, b};
            }
            if (best) proposals.push_back(*best);
        }
    }
    std::sort(proposals.begin(), proposals.end(), [](const MergeProposal& x, const MergeProposal& y) {
        return std::tie(x.delta, x.side, x.a, x.b) < std::tie(y.delta, y.side, y.a, y.b);
    });

    const std::size_t total = s.num_blocks(0) + s.num_blocks(1);
    const std::size_t floor_total = bounds.min_blocks[0] + bounds.min_blocks[1];
    const std::size_t target = std::max(floor_total, (total + 1) / 2);
    std::size_t budget[2] = {s.num_blocks(0) - std::min(s.num_blocks(0), bounds.min_blocks[0]),
                             s.num_blocks(1) - std::min(s.num_blocks(1), bounds.min_blocks[1])};
    std::size_t needed = total > target ? total - target : 0;

    UnionFind uf[2] = {UnionFind(s.num_blocks(0)), UnionFind(s.num_blocks(1))};
    for (const auto& p : proposals) {
        if (needed == 0) break;
        if (budget[p.side] == 0) continue;
        if (uf[p.side].find(p.a) == uf[p.side].find(p.b)) continue;
        uf[p.side].unite(p.a, p.b);
        --budget[p.side];
        --needed;
    }
    for (int side = 0; side < 2; ++side) {
        std::vector<BlockId> mapping(s.num_blocks(side));
        for (BlockId b = 0; b < mapping.size(); ++b) mapping[b] = uf[side].find(b);
        s.relabel(side, mapping);
    }
}

/// Exhaustive best pairwise merge; applied when it lowers the DL.
bool best_merge(SearchState& s, const Bounds& bounds) {
    std::optional<MergeProposal> best;
    for (int side = 0; side < 2; ++side) {
        const std::size_t nb = s.num_blocks(side);
        if (nb <= bounds.min_blocks[side]) continue;
        for (BlockId a = 0; a < nb; ++a)
            for (BlockId b = a + 1; b < nb; ++b) {
                const double d = s.merge_delta(side, a, b);
                if (d < -kImprovement && (!best || d < best->delta)) best = MergeProposal{d, side, a, b};
            }
    }
    if (!best) return false;
    std::vector<BlockId> mapping(s.num_blocks(best->side));
    std::iota(mapping.begin(), mapping.end(), 0);
    mapping[best->b] = best->a;
    s.relabel(best->side, mapping);
    return true;
}

}  // namespace

InferenceResult infer_partition(const BipartiteGraph& g, const InferenceConfig& config) {
    const std::size_t nt = g.num_tags(), nq = g.num_questions();
    if (nt == 0) throw Error("infer_partition: graph has no tag nodes");

    const auto auto_max = static_cast<std::size_t>(std::ceil(2.0 * std::sqrt(static_cast<double>(g.num_edges()))));
    std::size_t max_tags = config.max_tag_blocks ? config.max_tag_blocks : std::min(nt, std::max<std::size_t>(1, auto_max));
    max_tags = std::min(max_tags, nt);
    const std::size_t min_tags = std::clamp<std::size_t>(config.min_tag_blocks, 1, max_tags);
    const Bounds search{{min_tags, nq ? 1u : 0u}, {nt, nq}};
    const Bounds refine{{min_tags, nq ? 1u : 0u}, {max_tags, nq}};

    LogFactorials lf(max_factorial_arg(g));
    Rng rng(config.seed);

    std::vector<BlockId> tags(nt), questions(nq);
    std::iota(tags.begin(), tags.end(), 0);
    std::iota(questions.begin(), questions.end(), 0);
    SearchState state(g, lf, config.degree_corrected, tags, questions);

    InferenceResult result;
    result.initial_dl = description_length(g, Partition::from_sides(tags, questions), config.degree_corrected);

    std::optional<SearchState> best;
    double best_dl = std::numeric_limits<double>::infinity();
    auto record = [&] {
        if (state.num_blocks(0) > max_tags || state.num_blocks(0) < min_tags) return;
        const double dl = state.total();
        if (dl < best_dl - kImprovement) {
            best_dl = dl;
            best = state;
        }
    };

    result.accepted_moves += run_sweeps(state, search, config.max_sweeps, rng);
    record();
    while (state.num_blocks(0) > search.min_blocks[0] || state.num_blocks(1) > search.min_blocks[1]) {
        merge_round(state, search, config.merge_candidates, rng);
        result.accepted_moves += run_sweeps(state, search, config.max_sweeps, rng);
        ++result.rounds;
        record();
    }
    if (!best) {
        best = state;
        best_dl = state.total();
    }

    // Local refinement of the best visited state.
    SearchState s = *best;
    for (;;) {
        result.accepted_moves += run_sweeps(s, refine, std::max(1, config.max_sweeps), rng);
        if (!best_merge(s, refine)) break;
    }

    result.partition = Partition::from_sides(canonical_labels(s.blocks(0)), canonical_labels(s.blocks(1)));
    result.dl = description_length(g, result.partition, config.degree_corrected);
    return result;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

std::vector<std::vector<BlockId>> enumerate_set_partitions(std::size_t n, std::size_t max_blocks) {
    std::vector<std::vector<BlockId>> out;
    if (n == 0) {
        out.emplace_back();
        return out;
    }
    if (max_blocks == 0) max_blocks = n;
    std::vector<BlockId> rgs(n, 0);
    std::vector<BlockId> prefix_max(n, 0);  // max label among rgs[0..i]
    for (;;) {
        out.push_back(rgs);
        // Increment the restricted growth string from the right.
        bool advanced = false;
        for (std::size_t i = n - 1; i >= 1 && !advanced; --i) {
            const BlockId limit = prefix_max[i - 1] + 1;
            if (rgs[i] < limit && rgs[i] + 1 < max_blocks) {
                ++rgs[i];
                prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
                for (std::size_t j = i + 1; j < n; ++j) {
                    rgs[j] = 0;
                    prefix_max[j] = prefix_max[i];
                }
                advanced = true;
            }
        }
        if (!advanced) break;
    }
    return out;
}

EnumerationResult oracle_enumerate(const BipartiteGraph& g, std::size_t max_left_nodes, std::size_t max_tag_blocks,
                                   std::optional<std::vector<BlockId>> fixed_question_blocks, bool degree_corrected) {
    if (max_left_nodes > 10) throw Error("oracle_enumerate: max_left_nodes must be <= 10");
    if (g.num_tags() > max_left_nodes)
        throw Error("oracle_enumerate: " + std::to_string(g.num_tags()) + " tags exceed the limit of " +
                    std::to_string(max_left_nodes));

    const auto tag_partitions = enumerate_set_partitions(g.num_tags(), max_tag_blocks);
    std::vector<std::vector<BlockId>> question_partitions;
    if (fixed_question_blocks) {
        if (fixed_question_blocks->size() != g.num_questions()) throw Error("oracle_enumerate: bad question partition");
        question_partitions.push_back(canonical_labels(*fixed_question_blocks));
    } else if (g.num_questions() <= 6) {
        question_partitions = enumerate_set_partitions(g.num_questions());
    } else {
        // Structural equivalence: questions with identical tag sets share a block.
        std::map<std::vector<NodeIndex>, BlockId> classes;
        std::vector<BlockId> qb(g.num_questions());
        for (NodeIndex q = 0; q < g.num_questions(); ++q) {
            const auto nb = g.question_neighbors(q);
            auto [it, inserted] =
                classes.emplace(std::vector<NodeIndex>(nb.begin(), nb.end()), static_cast<BlockId>(classes.size()));
            qb[q] = it->second;
        }
        question_partitions.push_back(canonical_labels(qb));
    }

    LogFactorials lf(max_factorial_arg(g));
    const Terms terms{&lf, degree_corrected, static_cast<std::int64_t>(g.num_edges()),
                      static_cast<std::int64_t>(g.num_tags()), static_cast<std::int64_t>(g.num_questions())};
    const double dc_constant = degree_corrected ? -degree_constant(g, lf) : 0.0;
    const auto edges = g.edges();

    EnumerationResult result;
    double best = std::numeric_limits<double>::infinity();
    const std::vector<BlockId>* best_t = nullptr;
    const std::vector<BlockId>* best_q = nullptr;
    CountMatrix e;
    for (const auto& qp : question_partitions) {
        const std::size_t bq = qp.empty() ? 0 : *std::max_element(qp.begin(), qp.end()) + 1u;
        std::vector<std::int64_t> nq(bq, 0), eq(bq, 0);
        for (NodeIndex q = 0; q < qp.size(); ++q) {
            ++nq[qp[q]];
            eq[qp[q]] += static_cast<std::int64_t>(g.question_degree(q));
        }
        double q_blocks = 0;
        for (std::size_t c = 0; c < bq; ++c) q_blocks += terms.block(nq[c], eq[c]);
        for (const auto& tp : tag_partitions) {
            const std::size_t bt = tp.empty() ? 0 : *std::max_element(tp.begin(), tp.end()) + 1u;
            e.setZero(static_cast<Eigen::Index>(bt), static_cast<Eigen::Index>(bq));
            std::vector<std::int64_t> nt(bt, 0), et(bt, 0);
            for (NodeIndex t = 0; t < tp.size(); ++t) {
                ++nt[tp[t]];
                et[tp[t]] += static_cast<std::int64_t>(g.tag_degree(t));
            }
            for (auto [t, q] : edges) ++e(tp[t], qp[q]);
            double dl = dc_constant + q_blocks +
                        terms.global(static_cast<std::int64_t>(bt), static_cast<std::int64_t>(bq));
            for (std::size_t r = 0; r < bt; ++r) {
                dl += terms.block(nt[r], et[r]);
                for (std::size_t c = 0; c < bq; ++c)
                    dl += terms.cell(nt[r], nq[c], e(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            }
            ++result.partitions_evaluated;
            if (dl < best) {
                best = dl;
                best_t = &tp;
                best_q = &qp;
            }
        }
    }
    result.partition = Partition::from_sides(*best_t, *best_q);
    result.dl = description_length(g, result.partition, degree_corrected);
    return result;
}

// ---------------------------------------------------------------------------
// partition.json

std::string partition_json(const BipartiteGraph& g, const Partition& p, double dl_nats) {
    const BlockStructure s = block_structure(g, p);
    nlohmann::json blocks = nlohmann::json::array();
    std::vector<std::vector<std::uint64_t>> tag_members(s.num_tag_blocks), question_members(s.num_question_blocks);
    for (NodeIndex t = 0; t < g.num_tags(); ++t) tag_members[s.tag_block[t]].push_back(g.tag_ids[t]);
    for (NodeIndex q = 0; q < g.num_questions(); ++q) question_members[s.question_block[q]].push_back(g.question_ids[q]);
    BlockId id = 0;
    for (auto& m : tag_members) blocks.push_back({{"block_id", id++}, {"side", "tag"}, {"members", m}});
    for (auto& m : question_members) blocks.push_back({{"block_id", id++}, {"side", "question"}, {"members", m}});
    nlohmann::json j;
    j["blocks"] = std::move(blocks);
    j["dl_nats"] = dl_nats;
    return j.dump() + "\n";
}

Partition parse_partition_json(const BipartiteGraph& g, const std::string& text, double* dl_nats) {
    const auto j = nlohmann::json::parse(text);
    std::map<std::uint64_t, NodeIndex> tag_pos, question_pos;
    for (NodeIndex t = 0; t < g.num_tags(); ++t) tag_pos[g.tag_ids[t]] = t;
    for (NodeIndex q = 0; q < g.num_questions(); ++q) question_pos[g.question_ids[q]] = q;
    Partition p;
    p.assignment.assign(g.num_nodes(), std::numeric_limits<BlockId>::max());
    for (const auto& b : j.at("blocks")) {
        const auto id = b.at("block_id").get<BlockId>();
        const bool is_tag = b.at("side").get<std::string>() == "tag";
        for (const auto& m : b.at("members")) {
            const auto ext = m.get<std::uint64_t>();
            auto& pos = is_tag ? tag_pos : question_pos;
            auto it = pos.find(ext);
            if (it == pos.end()) throw Error("partition.json references unknown node " + std::to_string(ext));
            p.assignment[is_tag ? it->second : g.num_tags() + it->second] = id;
        }
    }
    if (std::find(p.assignment.begin(), p.assignment.end(), std::numeric_limits<BlockId>::max()) != p.assignment.end())
        throw Error("partition.json does not cover every node");
    if (dl_nats) *dl_nats = j.at("dl_nats").get<double>();
    return p;
}

}  // namespace taskspace
