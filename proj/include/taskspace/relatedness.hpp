#pragma once

#include <string>

#include <Eigen/Dense>

#include "taskspace/activity.hpp"
#include "taskspace/blockmodel.hpp"

namespace taskspace {

/// C = B B^T with B = (T > 0); C_tt counts users active in t.
CountMatrix cooccurrence_counts(const UserTaskMatrix& m);
CountMatrix cooccurrence_counts(const Eigen::SparseMatrix<double>& T);

/// Symmetric clipped PMI with optional credible intervals and provenance.
struct RelatednessMatrix {
    Eigen::MatrixXd R;
    Eigen::MatrixXd ci_lo, ci_hi;  // empty unless intervals were computed
    std::string sample;
    std::string window;

    Eigen::Index size() const { return R.rows(); }
    bool has_intervals() const { return ci_lo.size() == R.size() && R.size() > 0; }
    /// Throws unless the matrix was built from `sample`.
    void require_sample(const std::string& expected) const;
};

/// p = C / sum C (diagonal included), p_t = sum_g p_tg,
/// R = max(0, ln(p_tk / (p_t p_k))), zero where p_tk = 0.
RelatednessMatrix pmi_matrix(const CountMatrix& C);

struct CredibleIntervals {
    Eigen::MatrixXd lo, hi;
};

/// Dirichlet(prior_alpha + counts) posterior over the unordered cells of C
/// (an off-diagonal cell pools C_tk + C_kt and is split evenly back).
/// Percentiles 2.5 / 97.5 of the unclipped PMI per cell. Draw d uses the
/// generator seeded with counter_seed(seed, d).
CredibleIntervals pmi_credible_intervals(const CountMatrix& C, int draws = 1000, double prior_alpha = 1.0,
                                         std::uint64_t seed = 1);

/// Rows scaled to sum to one; zero rows stay zero.
Eigen::MatrixXd row_normalized(const Eigen::MatrixXd& R);

/// D_t = sum_k (R_tk / sum_g R_tg) x_k. Throws "isolated task" for zero rows.
double density(const Eigen::MatrixXd& R, const Eigen::VectorXd& x, Eigen::Index task);

/// `task_a,task_b,pmi,ci_lo,ci_hi` over a <= b; pmi is the clipped value.
std::string relatedness_csv(const RelatednessMatrix& r);
/// `source,target,weight` for a < b with R > 0.
std::string relatedness_edges_csv(const RelatednessMatrix& r);
RelatednessMatrix parse_relatedness_csv(const std::string& text, std::size_t num_tasks);

}  // namespace taskspace
