#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "taskspace/corpus.hpp"
#include "taskspace/taxonomy.hpp"

namespace taskspace {

using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Half-open time interval [begin, end) with a label for provenance.
struct Window {
    Timestamp begin = 0;
    Timestamp end = 0;
    std::string label;

    bool contains(Timestamp t) const { return t >= begin && t < end; }

    /// Jan 1 of t-2 through Dec 31 of t-1; labelled by t.
    static Window preceding(int year);
    static Window calendar(int year);
    /// Whole days from `first` through `last` inclusive.
    static Window days(Timestamp first, Timestamp last, std::string label);
};

/// Tasks touched by each question, precomputed once per (corpus, taxonomy).
class QuestionTasks {
  public:
    QuestionTasks(const Corpus& corpus, const TaskTaxonomy& taxonomy);
    std::span<const TaskId> operator[](std::size_t question_index) const {
        return std::span<const TaskId>(tasks_).subspan(offsets_[question_index],
                                                      offsets_[question_index + 1] - offsets_[question_index]);
    }

  private:
    std::vector<std::size_t> offsets_;
    std::vector<TaskId> tasks_;
};

/// X[theta] = the user's in-window answers whose question touches task theta.
/// Unknown users get a zero vector.
CountVector experience_vector(const Corpus& corpus, const TaskTaxonomy& taxonomy, UserId user, const Window& window);
CountVector experience_vector(const Corpus& corpus, const TaskTaxonomy& taxonomy, UserId user, int year);

/// Task x user counts; columns follow `users` sorted ascending.
struct UserTaskMatrix {
    Eigen::SparseMatrix<double> T;  // exact integer counts
    std::vector<UserId> users;
    Window window;
    std::string sample;  // provenance, e.g. "S1"

    /// Column of a user, or -1.
    Eigen::Index column(UserId user) const;
    CountVector column_counts(Eigen::Index col) const;
};

UserTaskMatrix experience_matrix(const Corpus& corpus, const TaskTaxonomy& taxonomy, std::span<const UserId> users,
                                 const Window& window, std::string sample = {});
UserTaskMatrix experience_matrix(const Corpus& corpus, const QuestionTasks& qtasks, std::size_t num_tasks,
                                 std::span<const UserId> users, const Window& window, std::string sample = {});

struct ShareChange {
    int year_a = 0, year_b = 0;
    Eigen::VectorXd share_a, share_b, delta;
};

/// Shares of user-task incidences per calendar year; deltas sum to zero.
ShareChange task_share_change(const Corpus& corpus, const TaskTaxonomy& taxonomy, int year_a, int year_b);

/// `user_id,year,task_id,count` rows for nonzero cells.
std::string experience_csv(const UserTaskMatrix& m);
std::string shares_csv(const ShareChange& s);

}  // namespace taskspace
