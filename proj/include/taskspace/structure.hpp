#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taskspace/activity.hpp"
#include "taskspace/blockmodel.hpp"
#include "taskspace/corpus.hpp"
#include "taskspace/taxonomy.hpp"

namespace taskspace {

/// Task x language user counts for one window; languages sorted by name.
struct TaskLanguageMatrix {
    CountMatrix U;
    Eigen::MatrixXi A;  // U >= threshold
    std::vector<std::string> languages;
    std::string window;

    Eigen::Index language_index(const std::string& language) const;  // throws when unknown
};

/// U[t][l] = distinct users with an in-window answer to a question carrying a
/// tag of task t and a tag whose canonical language is l. Languages in
/// `excluded` are dropped.
TaskLanguageMatrix task_language_matrix(const Corpus& corpus, const TaskTaxonomy& taxonomy,
                                        const std::map<TagId, std::string>& languages, const Window& window,
                                        std::int64_t user_threshold = 10, const std::set<std::string>& excluded = {});

/// One language name per line; blank lines and '#' comments skipped.
std::set<std::string> read_exclusion_list(const std::filesystem::path& path);

struct NodfScore {
    double total = 0;
    double rows = 0;
    double columns = 0;
};

/// Unweighted NODF. Each unordered pair with unequal degrees scores the share
/// of the smaller one's ones that the larger one also has (x100); equal
/// degrees score 0. Components average over row pairs and column pairs; the
/// total averages over both sets of pairs together.
NodfScore nodf(const Eigen::MatrixXi& A);

struct TopLanguageRow {
    int year = 0;
    std::string language;
    std::size_t top_task_count = 0;
};

/// Position of each language per task: users descending, then name ascending.
/// Tasks without users have no ranking.
std::vector<std::size_t> language_order(const TaskLanguageMatrix& m, Eigen::Index task);

/// Per year and language, the number of tasks where the language ranks first.
std::vector<TopLanguageRow> top_language_series(const std::map<int, TaskLanguageMatrix>& years);

struct FootprintRow {
    TaskId task = 0;
    std::size_t rank = 0;
};

/// Tasks where the language has users and ranks within the top k.
std::vector<FootprintRow> language_footprint(const TaskLanguageMatrix& m, const std::string& language,
                                             std::size_t k = 3);

/// U'[t][l] = U[t][l] * external_l / platform_l for the given year. Languages
/// without an external share keep weight 1 and add a warning.
Eigen::MatrixXd reweight_languages(const TaskLanguageMatrix& m, std::span<const LanguageShareRecord> shares, int year,
                                   Warnings* warnings = nullptr);

struct DominanceRow {
    int year = 0;
    std::size_t a_over_b = 0;
    std::size_t b_over_a = 0;
};

/// Strict per-task majorities of language a over b and the reverse.
std::vector<DominanceRow> pairwise_dominance(const std::map<int, TaskLanguageMatrix>& years, const std::string& a,
                                             const std::string& b);

/// `task_id,language,users,present`
std::string task_language_csv(const TaskLanguageMatrix& m);
std::string nodf_json(const NodfScore& s, const TaskLanguageMatrix& m);
/// `year,language,top_task_count`
std::string top_language_series_csv(std::span<const TopLanguageRow> rows);
/// `language,task_id,rank`
std::string footprint_csv(const std::string& language, std::span<const FootprintRow> rows);
/// `year,language_a,language_b,a_over_b,b_over_a`
std::string dominance_csv(const std::string& a, const std::string& b, std::span<const DominanceRow> rows);

}  // namespace taskspace
