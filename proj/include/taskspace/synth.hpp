#pragma once

// Synthetic data with planted structure, used by the test suites and by the
// `synth` CLI subcommand that produces the bundled mini-corpus.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "taskspace/blockmodel.hpp"
#include "taskspace/jobmatch.hpp"
#include "taskspace/relatedness.hpp"
#include "taskspace/valuation.hpp"

namespace taskspace::synth {

struct PlantedGraph {
    BipartiteGraph graph;
    std::vector<BlockId> tag_blocks;
    std::vector<BlockId> question_blocks;
};

/// Tags and questions are split into `blocks` contiguous groups; a tag and a
/// question are linked with probability p_in inside a group, p_out across.
PlantedGraph planted_bipartite(std::size_t blocks, std::size_t num_tags, std::size_t num_questions, double p_in,
                               double p_out, std::uint64_t seed);

/// Erdos-Renyi bipartite graph.
BipartiteGraph random_bipartite(std::size_t num_tags, std::size_t num_questions, double p, std::uint64_t seed);

/// Job task vectors over `blocks` contiguous task groups: each job draws a
/// home group and requires each task there with probability p_in, every
/// other task with probability p_cross.
std::vector<JobTaskVector> planted_jobs(std::size_t num_jobs, std::size_t num_tasks, std::size_t blocks, double p_in,
                                        double p_cross, std::uint64_t seed);

struct EntryFixture {
    std::map<int, UserTaskMatrix> windows;  // experience before the year, sample S2
    std::map<int, UserTaskMatrix> years;    // activity in the year, sample S2
    RelatednessMatrix R;                    // sample S1
    TaskValues values;
};

/// One year (2020) of users with random prior experience over a dense random
/// relatedness matrix. A user enters an at-risk task with probability
/// 1 / (1 + exp(-(intercept + slope * density))).
EntryFixture planted_entry(std::size_t num_users, std::size_t num_tasks, double intercept, double slope,
                           std::uint64_t seed);

/// A complete synthetic input set: Q&A corpus over six planted tag
/// communities with language tags, survey, job ads, language shares, a
/// language rule file and an exclusion list.
struct MiniCorpus {
    std::vector<Tag> tags;
    std::vector<Question> questions;
    std::vector<Answer> answers;
    std::vector<SurveyRecord> survey;
    std::vector<JobAdRecord> jobs;
    std::vector<LanguageShareRecord> shares;
    std::vector<LanguageRule> rules;
    std::set<std::string> excluded;
    std::map<std::string, std::size_t> community_of;    // general tag -> planted community
    std::vector<Eigen::VectorXd> community_vectors;     // unit embedding per community
};

MiniCorpus mini_corpus(std::size_t num_questions, std::uint64_t seed);

/// Label records for a taxonomy built on a mini corpus: each label embedding
/// is the normalized mean of its tags' community vectors plus small noise.
std::vector<TaskLabelRecord> mini_task_labels(const MiniCorpus& mini, const TaskTaxonomy& taxonomy,
                                              std::span<const Tag> tag_table, std::uint64_t seed);

/// Writes questions.jsonl, answers.jsonl, tags.csv, survey.csv, job_ads.jsonl,
/// language_shares.csv, language_rules.csv and exclude_languages.txt.
void write_mini_corpus(const MiniCorpus& mini, const std::filesystem::path& dir);

}  // namespace taskspace::synth
