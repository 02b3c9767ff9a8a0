#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taskspace/binning.hpp"
#include "taskspace/corpus.hpp"
#include "taskspace/taxonomy.hpp"

namespace taskspace {

/// Throws on zero-norm input.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class MatchStrategy { label, main_tag, mean_tags, closest_tag };
MatchStrategy parse_match_strategy(const std::string& name);

/// Per task, the embedding rows a requirement is compared against; a task's
/// score is its best row.
using TaskCandidates = std::vector<Eigen::MatrixXd>;

/// Candidates from the taxonomy's label embeddings.
TaskCandidates label_candidates(const TaskTaxonomy& taxonomy);
/// Candidates from per-task tag embeddings (row 0 = main tag).
TaskCandidates tag_candidates(std::span<const Eigen::MatrixXd> tag_embeddings, MatchStrategy strategy);

struct RequirementMatch {
    TaskId task = 0;
    double cosine = 0;
};

/// Best task if its cosine reaches the threshold; ties go to the lower id.
std::optional<RequirementMatch> match_requirement(const Eigen::VectorXd& requirement, const TaskCandidates& tasks,
                                                  double threshold = 0.3);

struct JobTaskVector {
    std::uint64_t job_id = 0;
    int year = 0;
    std::optional<double> salary;
    Eigen::VectorXd required;          // 0/1 per task
    std::map<TaskId, double> cosine;   // best matching cosine per required task

    std::size_t num_tasks() const { return cosine.size(); }
};

JobTaskVector job_task_vector(const JobAdRecord& job, const TaskCandidates& tasks, double threshold = 0.3);

struct MaskTable {
    std::vector<BinRow> bins;
    std::size_t cells = 0;
    std::size_t masked = 0;
    std::size_t masked_ones = 0;
};

/// Masks round(mask_frac * cells) of the stacked (job, task) cells uniformly
/// at random, scores each masked cell by the density of the job's unmasked
/// requirements around the task (row-normalized R; isolated rows score 0)
/// and bins the masked cells into equal-size density bins.
MaskTable masked_prediction_table(std::span<const JobTaskVector> jobs, const Eigen::MatrixXd& R,
                                  double mask_frac = 0.4, std::size_t bins = 10, std::uint64_t seed = 1);

/// `job_id,task_id,cosine`
std::string job_vectors_csv(std::span<const JobTaskVector> jobs);

}  // namespace taskspace
