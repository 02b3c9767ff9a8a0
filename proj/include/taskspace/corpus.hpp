#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "taskspace/common.hpp"

namespace taskspace {

using PostId = std::uint64_t;
using UserId = std::uint64_t;
using TagId = std::uint32_t;  // dense index into the tag table

struct Tag {
    TagId tag_id = 0;
    std::string name;
    std::int64_t usage_count = 0;
    bool is_language = false;
    std::optional<std::string> canonical_language;
};

struct Question {
    PostId question_id = 0;
    Timestamp created_at = 0;
    std::vector<TagId> tag_ids;  // sorted, unique
};

struct Answer {
    PostId answer_id = 0;
    PostId question_id = 0;
    UserId user_id = 0;
    Timestamp created_at = 0;
    std::int64_t votes = 0;
};

/// Immutable question/answer/tag store with referential integrity and
/// question->answers and user->answers indices. Tables are sorted by id.
class Corpus {
  public:
    Corpus() = default;
    /// Validates and indexes; throws IntegrityError on dangling or duplicate ids.
    Corpus(std::vector<Tag> tags, std::vector<Question> questions, std::vector<Answer> answers);

    std::span<const Tag> tags() const { return tags_; }
    std::span<const Question> questions() const { return questions_; }
    std::span<const Answer> answers() const { return answers_; }
    /// Distinct answering users, ascending.
    std::span<const UserId> users() const { return users_; }

    const Tag& tag(TagId id) const { return tags_.at(id); }
    std::optional<TagId> find_tag(std::string_view name) const;

    std::optional<std::size_t> question_index(PostId id) const;
    /// Index into questions() of the question answered by answers()[answer_index].
    std::size_t question_of_answer(std::size_t answer_index) const { return answer_question_[answer_index]; }

    /// Indices into answers() for a question index, ordered by answer id.
    std::span<const std::size_t> answers_of_question(std::size_t question_index) const;
    /// Indices into answers() for a user, ordered by answer id; empty if unknown.
    std::span<const std::size_t> answers_of_user(UserId user) const;

    std::pair<Timestamp, Timestamp> time_range() const { return {t_min_, t_max_}; }

  private:
    std::vector<Tag> tags_;
    std::vector<Question> questions_;
    std::vector<Answer> answers_;
    std::vector<UserId> users_;
    std::unordered_map<std::string, TagId> tag_by_name_;
    std::unordered_map<PostId, std::size_t> question_pos_;
    std::vector<std::size_t> answer_question_;
    std::vector<std::size_t> q_offsets_, q_answers_;
    std::vector<std::size_t> u_offsets_, u_answers_;
    Timestamp t_min_ = 0, t_max_ = 0;
};

// ---------------------------------------------------------------------------
// Auxiliary datasets

struct SurveyRecord {
    std::uint64_t respondent_id = 0;
    double salary = 0;
    std::vector<std::string> tags;
};

struct Requirement {
    std::string text;
    Eigen::VectorXd embedding;
};

struct JobAdRecord {
    std::uint64_t job_id = 0;
    int year = 0;
    std::optional<double> salary;
    std::vector<Requirement> requirements;
};

struct TaskLabelRecord {
    std::uint32_t task_id = 0;
    std::string short_label;
    std::string long_label;
    Eigen::VectorXd embedding;
};

struct LanguageShareRecord {
    std::string language;
    int year = 0;
    double external_share = 0;
};

struct LanguageRule {
    std::string tag;
    std::string canonical_language;
};

/// Input files of a corpus. Only questions/answers/tags are mandatory.
struct CorpusPaths {
    std::filesystem::path questions;
    std::filesystem::path answers;
    std::filesystem::path tags;

    static CorpusPaths in_directory(const std::filesystem::path& dir);
};

Corpus load_corpus(const CorpusPaths& paths);

std::vector<Tag> read_tags_csv(const std::filesystem::path& path);
std::vector<SurveyRecord> read_survey_csv(const std::filesystem::path& path);
std::vector<JobAdRecord> read_job_ads(const std::filesystem::path& path);
std::vector<TaskLabelRecord> read_task_labels(const std::filesystem::path& path);
std::vector<LanguageShareRecord> read_language_shares(const std::filesystem::path& path);
std::vector<LanguageRule> read_language_rules(const std::filesystem::path& path);

std::string questions_jsonl(const Corpus& corpus);
std::string answers_jsonl(const Corpus& corpus);
std::string tags_csv(std::span<const Tag> tags);
std::string survey_csv(std::span<const SurveyRecord> survey);
std::string job_ads_jsonl(std::span<const JobAdRecord> jobs);
std::string task_labels_jsonl(std::span<const TaskLabelRecord> labels);
std::string language_shares_csv(std::span<const LanguageShareRecord> shares);
std::string language_rules_csv(std::span<const LanguageRule> rules);

/// Writes questions.jsonl, answers.jsonl, tags.csv and index.json (counts,
/// file hashes and the user id <-> dense index map) into `dir`.
void save_snapshot(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_snapshot(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Filters

/// Tags with usage_count >= min_uses, split into general and language tags.
struct TagSelection {
    std::vector<TagId> general;
    std::vector<TagId> languages;
    std::vector<TagId> all() const;
};
TagSelection filter_tags(const Corpus& corpus, std::int64_t min_uses = 1000);

/// Users with at least `min_answers` answers in total, ascending.
std::vector<UserId> select_active_users(const Corpus& corpus, std::int64_t min_answers = 10);

struct UserSplit {
    std::vector<UserId> s1;
    std::vector<UserId> s2;
};
/// Seeded random halving; |s1| = ceil(n/2). Both halves sorted ascending.
UserSplit split_users(std::span<const UserId> users, std::uint64_t seed);

}  // namespace taskspace
