#include <doctest.h>

#include <algorithm>

#include "taskspace/jobmatch.hpp"
#include "taskspace/relatedness.hpp"
#include "taskspace/synth.hpp"

using namespace taskspace;

namespace {

TaskCandidates unit_labels(Eigen::Index n, Eigen::Index dim) {
    TaskCandidates c;
    for (Eigen::Index t = 0; t < n; ++t) {
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, dim);
        row(0, t % dim) = 1;
        if (t >= dim) row(0, (t + 1) % dim) = 1;
        c.push_back(row);
    }
    return c;
}

// Relatedness from the co-occurrence of an independent set of jobs.
Eigen::MatrixXd job_relatedness(const std::vector<JobTaskVector>& jobs) {
    const Eigen::Index nt = jobs.front().required.size();
    Eigen::MatrixXd b(nt, static_cast<Eigen::Index>(jobs.size()));
    for (std::size_t j = 0; j < jobs.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = jobs[j].required;
    return pmi_matrix(cooccurrence_counts(Eigen::SparseMatrix<double>(b.sparseView()))).R;
}

}  // namespace

TEST_CASE("requirement matching") {
    const auto labels = unit_labels(15, 13);
    Eigen::VectorXd same = labels[12].row(0).transpose();
    const auto m = match_requirement(same, labels);
    REQUIRE(m);
    CHECK(m->task == 12);
    CHECK(m->cosine == doctest::Approx(1.0));

    // orthogonal to every label
    TaskCandidates two = {Eigen::RowVector3d(1, 0, 0), Eigen::RowVector3d(0, 1, 0)};
    CHECK_FALSE(match_requirement(Eigen::Vector3d(0, 0, 1), two));
    // exact tie goes to the lower task id
    const auto tie = match_requirement(Eigen::Vector3d(1, 1, 0), two);
    REQUIRE(tie);
    CHECK(tie->task == 0);
    // threshold is inclusive and applies to the best task only
    CHECK(match_requirement(Eigen::Vector3d(1, 0, 3), two, 0.3));
    CHECK_FALSE(match_requirement(Eigen::Vector3d(1, 0, 3.2), two, 0.3));
    CHECK_THROWS_AS(match_requirement(Eigen::Vector3d::Zero(), two), Error);
}

TEST_CASE("tag-embedding strategies") {
    std::vector<Eigen::MatrixXd> tags = {Eigen::MatrixXd(2, 2), Eigen::MatrixXd(1, 2)};
    tags[0] << 1, 0, 0, 1;
    tags[1] << 1, 1;
    Eigen::Vector2d req(0, 1);
    CHECK(match_requirement(req, tag_candidates(tags, MatchStrategy::main_tag))->task == 1);
    CHECK(match_requirement(req, tag_candidates(tags, MatchStrategy::closest_tag))->task == 0);
    const auto mean = tag_candidates(tags, MatchStrategy::mean_tags);
    CHECK(mean[0].isApprox(Eigen::RowVector2d(0.5, 0.5)));
    CHECK(parse_match_strategy("closest_tag") == MatchStrategy::closest_tag);
    CHECK_THROWS_AS(parse_match_strategy("nearest"), Error);
}

TEST_CASE("job task vectors are unions of per-requirement matches") {
    const auto labels = unit_labels(6, 6);
    JobAdRecord none{1, 2022, std::nullopt, {{"x", Eigen::VectorXd::Ones(6) * -1}}};
    CHECK(job_task_vector(none, labels).required.isZero());

    auto req = [](Eigen::Index hot, double other) {
        Eigen::VectorXd v = Eigen::VectorXd::Constant(6, other);
        v(hot) = 1;
        return Requirement{"r", v};
    };
    JobAdRecord job{7, 2023, 90000.0, {req(2, 0.1), req(2, 0.0), req(4, 0.2), req(5, -0.9)}};
    const auto v = job_task_vector(job, labels);
    CHECK(v.required.sum() == 3);
    CHECK(v.cosine.at(2) == doctest::Approx(1.0));
    // oracle: match each requirement, take the union
    Eigen::VectorXd want = Eigen::VectorXd::Zero(6);
    for (const auto& r : job.requirements)
        if (auto m = match_requirement(r.embedding, labels)) want(m->task) = 1;
    CHECK(v.required == want);
    // order of requirements does not matter
    auto shuffled = job;
    std::reverse(shuffled.requirements.begin(), shuffled.requirements.end());
    CHECK(job_task_vector(shuffled, labels).required == v.required);
    CHECK(job_task_vector(shuffled, labels).cosine == v.cosine);
    CHECK(job_vectors_csv(std::vector<JobTaskVector>{v}).rfind("job_id,task_id,cosine\n7,2,", 0) == 0);
}

TEST_CASE("masked prediction on planted co-requirements") {
    auto jobs = synth::planted_jobs(5000, 20, 2, 0.6, 0.02, 1);
    const auto R = job_relatedness(synth::planted_jobs(5000, 20, 2, 0.6, 0.02, 2));
    std::erase_if(jobs, [](const JobTaskVector& j) { return j.required.sum() < 3; });
    const auto table = masked_prediction_table(jobs, R, 0.4, 10, 7);
    CHECK(table.masked == static_cast<std::size_t>(std::llround(0.4 * static_cast<double>(table.cells))));
    std::size_t n = 0, ones = 0, lo = table.masked, hi = 0;
    for (const auto& b : table.bins) {
        n += b.n;
        ones += b.successes;
        lo = std::min(lo, b.n);
        hi = std::max(hi, b.n);
        CHECK(b.lo <= b.hi);
    }
    CHECK(n == table.masked);
    CHECK(ones == table.masked_ones);
    CHECK(hi - lo <= 1);
    CHECK(table.bins.back().p_hat >= 5 * table.bins.front().p_hat);
    // reproducible under the seed
    const auto again = masked_prediction_table(jobs, R, 0.4, 10, 7);
    CHECK(bin_table_csv(again.bins) == bin_table_csv(table.bins));
}

TEST_CASE("masked prediction edge cases") {
    std::vector<JobTaskVector> zero(50);
    for (auto& j : zero) j.required = Eigen::VectorXd::Zero(4);
    const Eigen::MatrixXd R = Eigen::MatrixXd::Ones(4, 4);
    const auto t = masked_prediction_table(zero, R, 0.4, 10, 1);
    for (const auto& b : t.bins) CHECK(b.p_hat == 0.0);
    CHECK_THROWS_AS(masked_prediction_table(std::vector<JobTaskVector>(zero.begin(), zero.begin() + 2), R, 0.4, 10, 1), Error);
}
