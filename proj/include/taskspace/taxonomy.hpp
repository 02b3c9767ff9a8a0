#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "taskspace/blockmodel.hpp"
#include "taskspace/corpus.hpp"

namespace taskspace {

using TaskId = std::uint32_t;

/// Tag-question graph restricted to `tags`. Questions carrying none of the
/// selected tags are left out; graph.tag_ids / question_ids hold the corpus ids.
BipartiteGraph tag_question_graph(const Corpus& corpus, std::span<const TagId> tags);

/// Weighted tag x tag co-occurrence on shared questions, zero diagonal.
struct TagProjection {
    std::vector<TagId> tags;           // row/column order
    Eigen::SparseMatrix<double> weight;

    static TagProjection from_graph(const BipartiteGraph& g);
};

struct Overrepresentation {
    Eigen::MatrixXd O;               // tag x community
    std::vector<bool> zero_weight;   // rows with no co-occurrence at all
};

/// O_tc = (w_tc / sum_c' w_tc') / (sum_t' w_t'c / sum_t'c' w_t'c').
/// `community[i]` is the dense community of projection row i.
Overrepresentation tag_overrepresentation(const TagProjection& projection, std::span<const BlockId> community);

struct Task {
    TaskId task_id = 0;
    BlockId community = 0;      // SBM block the task came from
    std::vector<TagId> tags;    // ascending
    std::string short_label;
    std::string long_label;
    Eigen::VectorXd embedding;  // empty until labels are attached
};

/// Disjoint set of tasks with a partial tag -> task map.
class TaskTaxonomy {
  public:
    TaskTaxonomy() = default;
    /// Task ids are assigned in the order given.
    explicit TaskTaxonomy(std::vector<Task> tasks);

    std::size_t size() const { return tasks_.size(); }
    const Task& task(TaskId id) const { return tasks_.at(id); }
    std::span<const Task> tasks() const { return tasks_; }

    std::optional<TaskId> task_of(TagId tag) const;
    /// Sorted distinct tasks touched by a tag set.
    std::vector<TaskId> tasks_of(std::span<const TagId> tags) const;

    /// Attaches labels by task id; every task must be covered and every
    /// embedding must share one dimension.
    void attach_labels(std::span<const TaskLabelRecord> labels);
    bool has_labels() const;

  private:
    std::vector<Task> tasks_;
    std::map<TagId, TaskId> tag_task_;
};

/// Removes the floor(drop_frac * size) tags with the lowest own-community O in
/// every community (ties: higher usage_count survives, then lower tag id),
/// then drops communities with fewer than min_size survivors. Surviving
/// communities become tasks ordered by their smallest tag id.
TaskTaxonomy prune_taxonomy(const TagProjection& projection, std::span<const BlockId> community,
                            const Eigen::MatrixXd& O, std::span<const Tag> tag_table, double drop_frac = 0.2,
                            std::size_t min_size = 3);

/// Maps every language tag to a canonical language name. A rule wins over the
/// tag table's canonical_language, which wins over the tag's own name. Rules
/// naming unknown tags are skipped with a warning.
std::map<TagId, std::string> canonicalize_languages(std::span<const Tag> tags, std::span<const LanguageRule> rules,
                                                    Warnings* warnings = nullptr);

std::string taxonomy_json(const TaskTaxonomy& taxonomy, std::span<const Tag> tag_table);
/// Inverse of taxonomy_json; tag names are resolved against the corpus.
TaskTaxonomy parse_taxonomy_json(const std::string& text, const Corpus& corpus);

}  // namespace taskspace
