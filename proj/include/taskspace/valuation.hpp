#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taskspace/activity.hpp"
#include "taskspace/corpus.hpp"

namespace taskspace {

struct SurveyRespondent {
    std::uint64_t respondent_id = 0;
    double salary = 0;
    std::vector<TagId> tags;  // sorted, unique
};

/// Survey with an inverted tag index for overlap counting.
class Survey {
  public:
    Survey() = default;
    /// Throws on non-positive salaries, empty tag sets or duplicate ids.
    explicit Survey(std::vector<SurveyRespondent> respondents);

    std::span<const SurveyRespondent> respondents() const { return respondents_; }
    std::size_t size() const { return respondents_.size(); }
    /// Respondent positions carrying a tag.
    std::span<const std::size_t> holders(TagId tag) const;

  private:
    std::vector<SurveyRespondent> respondents_;
    std::map<TagId, std::vector<std::size_t>> holders_;
};

/// Resolves survey technology names to tag ids: direct tag name, then the
/// alias table, then the canonical language map. Unresolved names are dropped
/// with a warning; respondents left without tags are dropped too.
Survey survey_from_records(std::span<const SurveyRecord> records, const Corpus& corpus,
                           const std::map<std::string, std::string>& aliases = {}, Warnings* warnings = nullptr);

struct MatchEntry {
    std::uint64_t respondent_id = 0;
    std::int64_t overlap = 0;
    double salary = 0;
};

/// Sorted by overlap descending, respondent id ascending.
struct RespondentMatch {
    std::vector<MatchEntry> entries;
};

/// Top-k respondents by raw tag overlap; zero overlaps excluded.
RespondentMatch match_respondents(std::span<const TagId> user_tags, const Survey& survey, std::size_t k = 300);

/// Overlap-weighted mean salary. Throws "unmatched user" when empty.
double impute_user_value(const RespondentMatch& match);

/// Distinct tags of the questions a user answered inside the window.
std::vector<TagId> user_tag_set(const Corpus& corpus, UserId user, const Window& window);

struct UserValues {
    std::vector<UserId> users;  // ascending
    std::vector<double> value;
    std::vector<std::size_t> matched_k;
};

UserValues impute_user_values(const Corpus& corpus, std::span<const UserId> users, const Survey& survey,
                              const Window& window, std::size_t k = 300);

struct TaskValues {
    Eigen::VectorXd value;  // NaN where no valued user is active
    std::vector<std::size_t> contributing_users;
    std::string window;

    bool valued(Eigen::Index task) const { return !std::isnan(value(task)); }
};

/// V_t = sum_u X_ut V_u / sum_u X_ut over users with a value.
TaskValues task_values(const UserValues& users, const UserTaskMatrix& X);

std::string task_values_csv(const TaskValues& v);
std::string user_values_csv(const UserValues& v);
TaskValues parse_task_values_csv(const std::string& text, std::size_t num_tasks);

}  // namespace taskspace
