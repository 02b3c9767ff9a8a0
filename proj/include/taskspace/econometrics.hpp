#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taskspace/activity.hpp"
#include "taskspace/binning.hpp"
#include "taskspace/jobmatch.hpp"
#include "taskspace/relatedness.hpp"
#include "taskspace/valuation.hpp"

namespace taskspace {

/// Column store of named double columns with equal length. Factor columns
/// (fixed effects, clusters) hold integer codes.
class Table {
  public:
    std::size_t rows() const { return rows_; }
    const std::vector<std::string>& names() const { return names_; }
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    void add(const std::string& name, Eigen::VectorXd values);
    const Eigen::VectorXd& col(const std::string& name) const;
    Eigen::MatrixXd cols(std::span<const std::string> names) const;

    /// Rows at the given positions, in order.
    Table select(std::span<const std::size_t> rows) const;
    std::string csv() const;

  private:
    std::size_t rows_ = 0;
    std::vector<std::string> names_;
    std::vector<Eigen::VectorXd> columns_;
    std::map<std::string, std::size_t> index_;
};

struct RegressionSpec {
    std::string outcome;
    std::vector<std::string> regressors;     // exogenous
    std::vector<std::string> fixed_effects;  // at most two factor columns
    std::optional<std::string> cluster;
    std::vector<std::string> endogenous;     // 2SLS only
    std::vector<std::string> instruments;    // 2SLS only
};

struct EstimationResult {
    std::vector<std::string> names;  // "(intercept)" first when no fixed effects
    Eigen::VectorXd coef;
    Eigen::MatrixXd vcov;
    std::size_t n_obs = 0;
    std::size_t dof_absorbed = 0;  // fixed-effect degrees of freedom
    std::size_t clusters = 0;      // 0 when heteroskedasticity-robust (HC1)
    double r2 = 0;
    double within_r2 = 0;          // NaN without fixed effects
    std::optional<double> first_stage_f;
    Warnings warnings;

    Eigen::Index index(const std::string& name) const;
    double se(Eigen::Index i) const { return std::sqrt(vcov(i, i)); }
};

/// Least squares after absorbing up to two fixed effects (one: group
/// demeaning; two: alternating projections to 1e-10, at most 10000 sweeps).
/// HC1 covariance, or CR1 with G/(G-1) (N-1)/(N-K) when a cluster is set,
/// K counting coefficients plus absorbed fixed-effect levels. Throws on
/// rank deficiency naming the collinear columns.
EstimationResult fit_ols_fe(const Table& data, const RegressionSpec& spec);

/// 2SLS with the same absorption and covariance options; the first stage
/// regresses the endogenous columns on instruments plus exogenous columns.
/// Residuals use the actual endogenous values. A first-stage F below 1 adds
/// a warning.
EstimationResult fit_2sls(const Table& data, const RegressionSpec& spec);

/// Demeans columns of `m` within the given factors in place.
void absorb_fixed_effects(Eigen::MatrixXd& m, const std::vector<std::vector<std::size_t>>& factors,
                          std::size_t num_levels_hint = 0);

// ---------------------------------------------------------------------------
// Instrument

/// Circular mean of day-minutes on the 1440-minute clock, in [0, 1440).
/// Falls back to the arithmetic mean when the resultant vanishes.
double circular_mean_minute(std::span<const int> minutes);
/// Shortest distance between two day-minutes on the circle.
double circular_distance(double a, double b);

/// M[t][m] = sum_u X_tu max(0, 1 - dist(m, mbar_u) / width); mbar_u from the
/// user's in-window answers. Users without such answers are skipped.
Eigen::MatrixXd minute_task_counts(const Corpus& corpus, const UserTaskMatrix& X, double width = 720);

// ---------------------------------------------------------------------------
// Dataset builders

/// First answer: earliest created_at, then lowest id. Top answer: most votes,
/// then earliest, then lowest id.
std::size_t first_answer(const Corpus& corpus, std::size_t question_index);
std::size_t top_answer(const Corpus& corpus, std::size_t question_index);

/// One row per (question, task of the question) for first answers written by
/// users present in the experience matrix of the answer's year. Columns:
/// question_id answer_id user_id task year top_answer log_votes
/// log_experience log_answers log_total_votes qminute instrument gap_seconds
/// task_year task_qminute.
Table build_voting_rows(const Corpus& corpus, const QuestionTasks& qtasks,
                        const std::map<int, UserTaskMatrix>& experience,
                        const std::map<int, Eigen::MatrixXd>& minute_counts);

struct EntryRows {
    Table rows;  // user_id year task entered log_value density log_value_std density_std
    std::size_t dropped_unvalued = 0;
};

/// At-risk (user, year, task) cells for users active in the preceding window.
/// `windows[t]` holds the two-year experience X^t and `years[t]` the activity
/// of calendar year t, both from sample S2; R must come from S1.
EntryRows build_entry_rows(const std::map<int, UserTaskMatrix>& windows, const std::map<int, UserTaskMatrix>& years,
                           const RelatednessMatrix& R, const TaskValues& values);

/// Equal-size bins of a score column with the success share of a 0/1 column.
std::vector<BinRow> binned_probability(const Table& rows, const std::string& score, const std::string& outcome,
                                       std::size_t bins = 10);

struct SalaryRows {
    Table rows;  // job_id year log_salary vbar rbar log_n_tasks
    std::size_t dropped_unvalued = 0;
};

/// Jobs with a salary and at least one valued task. vbar averages log task
/// values over valued required tasks; rbar averages the density of the job's
/// other requirements around each required task.
SalaryRows build_salary_rows(std::span<const JobTaskVector> jobs, const Eigen::MatrixXd& R, const TaskValues& values);

struct PlaceboSplit {
    Table within_24h;
    Table after_24h;
};

PlaceboSplit placebo_split(const Table& voting_rows);

/// Standardized copy: (x - mean) / sd with the sample standard deviation.
Eigen::VectorXd standardize(const Eigen::VectorXd& x);

/// Significance stars for a two-sided normal test: *** 0.01, ** 0.05, * 0.1.
std::string stars(double coef, double se);

}  // namespace taskspace
