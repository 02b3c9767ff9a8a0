#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "taskspace/common.hpp"

namespace taskspace {

using NodeIndex = std::uint32_t;
using BlockId = std::uint32_t;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Simple bipartite graph between tags (left layer) and questions (right
/// layer). Node indices are dense per layer; external ids are kept alongside.
class BipartiteGraph {
  public:
    BipartiteGraph() = default;
    /// Throws on out-of-range endpoints or duplicate edges.
    BipartiteGraph(std::size_t num_tags, std::size_t num_questions,
                   std::span<const std::pair<NodeIndex, NodeIndex>> edges);

    std::size_t num_tags() const { return tag_adj_.size(); }
    std::size_t num_questions() const { return question_adj_.size(); }
    std::size_t num_nodes() const { return num_tags() + num_questions(); }
    std::size_t num_edges() const { return num_edges_; }

    /// Sorted question neighbours of a tag.
    std::span<const NodeIndex> tag_neighbors(NodeIndex t) const { return tag_adj_[t]; }
    /// Sorted tag neighbours of a question.
    std::span<const NodeIndex> question_neighbors(NodeIndex q) const { return question_adj_[q]; }
    std::size_t tag_degree(NodeIndex t) const { return tag_adj_[t].size(); }
    std::size_t question_degree(NodeIndex q) const { return question_adj_[q].size(); }

    std::vector<std::pair<NodeIndex, NodeIndex>> edges() const;

    /// External ids (tag ids / question ids); default to the dense index.
    std::vector<std::uint64_t> tag_ids;
    std::vector<std::uint64_t> question_ids;

  private:
    std::vector<std::vector<NodeIndex>> tag_adj_;
    std::vector<std::vector<NodeIndex>> question_adj_;
    std::size_t num_edges_ = 0;
};

/// Block assignment over all nodes of a bipartite graph: tags occupy node
/// positions [0, num_tags), questions [num_tags, num_nodes). Block ids are
/// arbitrary labels; a valid partition never mixes layers within a block.
struct Partition {
    std::vector<BlockId> assignment;

    static Partition from_sides(std::span<const BlockId> tag_blocks, std::span<const BlockId> question_blocks);

    /// Dense per-layer labels in order of first appearance.
    std::vector<BlockId> tag_blocks(const BipartiteGraph& g) const;
    std::vector<BlockId> question_blocks(const BipartiteGraph& g) const;
};

/// Per-layer relabelled view of a validated partition.
struct BlockStructure {
    std::vector<BlockId> tag_block;       // dense 0..num_tag_blocks-1
    std::vector<BlockId> question_block;  // dense 0..num_question_blocks-1
    std::size_t num_tag_blocks = 0;
    std::size_t num_question_blocks = 0;
    CountMatrix edge_counts;                // e_rs, tag block x question block
    std::vector<std::int64_t> tag_block_sizes;
    std::vector<std::int64_t> question_block_sizes;
};

/// Throws if the partition does not cover the graph or mixes layers.
BlockStructure block_structure(const BipartiteGraph& g, const Partition& p);

struct DescriptionLength {
    double total = 0;
    double likelihood_term = 0;
    double edge_matrix_prior = 0;
    double partition_prior = 0;
    double degree_prior = 0;  // zero unless degree corrected
};

/// Microcanonical bipartite SBM description length in nats.
///
/// Non-degree-corrected:
///   likelihood        = sum_rs ln C(n_r n_s, e_rs)
///   edge matrix prior = ln C(B_t B_q + E - 1, E)
///   partition prior   = sum over layers of ln N + ln C(N-1, B-1) + ln N! - sum_r ln n_r!
/// Degree-corrected replaces the likelihood by
///   sum_r ln e_r! - sum_rs ln e_rs! - sum_i ln k_i!
/// and adds a uniform degree-sequence prior sum_r ln C(n_r + e_r - 1, e_r).
DescriptionLength description_length(const BipartiteGraph& g, const Partition& p,
                                      bool degree_corrected = false);

struct InferenceConfig {
    std::uint64_t seed = 1;
    int max_sweeps = 10;
    std::size_t min_tag_blocks = 1;  // B_min
    std::size_t max_tag_blocks = 0;  // B_max; 0 = min(N_tags, ceil(2 sqrt(E)))
    std::size_t merge_candidates = 10;
    bool degree_corrected = false;
};

struct InferenceResult {
    Partition partition;
    DescriptionLength dl;
    DescriptionLength initial_dl;
    std::size_t rounds = 0;
    std::size_t accepted_moves = 0;
};

/// Agglomerative merges (halving the block count per round) interleaved with
/// greedy single-node move sweeps; returns the lowest-DL state visited,
/// after a final local refinement. Deterministic given config.seed.
InferenceResult infer_partition(const BipartiteGraph& g, const InferenceConfig& config = {});

struct EnumerationResult {
    Partition partition;
    DescriptionLength dl;
    std::size_t partitions_evaluated = 0;
};

/// Exhaustive search for the DL-minimal partition. Tag partitions with at
/// most `max_tag_blocks` blocks are enumerated; questions are enumerated
/// jointly when there are at most 6 of them, otherwise held at
/// `fixed_question_blocks`, defaulting to classes of questions with identical
/// tag sets.
EnumerationResult oracle_enumerate(const BipartiteGraph& g, std::size_t max_left_nodes = 10,
                                   std::size_t max_tag_blocks = 0,
                                   std::optional<std::vector<BlockId>> fixed_question_blocks = std::nullopt,
                                   bool degree_corrected = false);

/// All set partitions of n items as restricted growth strings with at most
/// max_blocks blocks (0 = unbounded).
std::vector<std::vector<BlockId>> enumerate_set_partitions(std::size_t n, std::size_t max_blocks = 0);

/// Relabel to first-appearance order so equal partitions compare equal.
std::vector<BlockId> canonical_labels(std::span<const BlockId> labels);

std::string partition_json(const BipartiteGraph& g, const Partition& p, double dl_nats);
/// Parses partition.json against a graph whose external ids match.
Partition parse_partition_json(const BipartiteGraph& g, const std::string& text, double* dl_nats = nullptr);

}  // namespace taskspace
