#include "taskspace/synth.hpp"

#include <cmath>

namespace taskspace::synth {

PlantedGraph planted_bipartite(std::size_t blocks, std::size_t num_tags, std::size_t num_questions, double p_in,
                               double p_out, std::uint64_t seed) {
    if (blocks == 0) throw Error("planted_bipartite: need at least one block");
    Rng rng(seed);
    PlantedGraph out;
    for (std::size_t t = 0; t < num_tags; ++t) out.tag_blocks.push_back(static_cast<BlockId>(t * blocks / num_tags));
    for (std::size_t q = 0; q < num_questions; ++q)
        out.question_blocks.push_back(static_cast<BlockId>(q * blocks / num_questions));
    std::vector<std::pair<NodeIndex, NodeIndex>> edges;
    for (NodeIndex t = 0; t < num_tags; ++t)
        for (NodeIndex q = 0; q < num_questions; ++q)
            if (bernoulli(rng, out.tag_blocks[t] == out.question_blocks[q] ? p_in : p_out)) edges.emplace_back(t, q);
    out.graph = BipartiteGraph(num_tags, num_questions, edges);
    return out;
}

BipartiteGraph random_bipartite(std::size_t num_tags, std::size_t num_questions, double p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<NodeIndex, NodeIndex>> edges;
    for (NodeIndex t = 0; t < num_tags; ++t)
        for (NodeIndex q = 0; q < num_questions; ++q)
            if (bernoulli(rng, p)) edges.emplace_back(t, q);
    return BipartiteGraph(num_tags, num_questions, edges);
}

std::vector<JobTaskVector> planted_jobs(std::size_t num_jobs, std::size_t num_tasks, std::size_t blocks, double p_in,
                                        double p_cross, std::uint64_t seed) {
    if (blocks == 0 || num_tasks < blocks) throw Error("planted_jobs: need 1 <= blocks <= num_tasks");
    Rng rng(seed);
    std::vector<JobTaskVector> jobs(num_jobs);
    for (std::size_t j = 0; j < num_jobs; ++j) {
        auto& job = jobs[j];
        job.job_id = j + 1;
        job.required = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_tasks));
        const auto home = uniform_index(rng, blocks);
        for (std::size_t t = 0; t < num_tasks; ++t) {
            if (!bernoulli(rng, t * blocks / num_tasks == home ? p_in : p_cross)) continue;
            job.required(static_cast<Eigen::Index>(t)) = 1;
            job.cosine[static_cast<TaskId>(t)] = 1.0;
        }
    }
    return jobs;
}

EntryFixture planted_entry(std::size_t num_users, std::size_t num_tasks, double intercept, double slope,
                           std::uint64_t seed) {
    if (num_tasks < 2 || num_users == 0) throw Error("planted_entry: need two tasks and one user");
    Rng rng(seed);
    const auto nt = static_cast<Eigen::Index>(num_tasks);
    EntryFixture f;
    f.R.R = Eigen::MatrixXd::Zero(nt, nt);
    for (Eigen::Index a = 0; a < nt; ++a)
        for (Eigen::Index b = a + 1; b < nt; ++b) f.R.R(a, b) = f.R.R(b, a) = 2 * uniform01(rng);
    f.R.sample = "S1";
    f.values.value.resize(nt);
    for (Eigen::Index t = 0; t < nt; ++t) f.values.value(t) = 50000 * std::exp(0.3 * standard_normal(rng));
    const Eigen::MatrixXd W = row_normalized(f.R.R);

    const int year = 2020;
    std::vector<Eigen::Triplet<double>> xt, yt;
    std::vector<UserId> users;
    Eigen::VectorXd x(nt);
    for (std::size_t u = 0; u < num_users; ++u) {
        users.push_back(u + 1);
        x.setZero();
        while (x.sum() == 0)
            for (Eigen::Index t = 0; t < nt; ++t) x(t) = bernoulli(rng, 0.3) ? 1.0 + static_cast<double>(uniform_index(rng, 3)) : 0.0;
        const Eigen::VectorXd d = W * x;
        for (Eigen::Index t = 0; t < nt; ++t) {
            const auto col = static_cast<Eigen::Index>(u);
            if (x(t) > 0) {
                xt.emplace_back(t, col, x(t));
                if (bernoulli(rng, 0.5)) yt.emplace_back(t, col, 1.0);
            } else if (bernoulli(rng, 1 / (1 + std::exp(-(intercept + slope * d(t)))))) {
                yt.emplace_back(t, col, 1.0);
            }
        }
    }
    auto matrix = [&](const std::vector<Eigen::Triplet<double>>& trips, Window w) {
        UserTaskMatrix m;
        m.T.resize(nt, static_cast<Eigen::Index>(num_users));
        m.T.setFromTriplets(trips.begin(), trips.end());
        m.users = users;
        m.window = std::move(w);
        m.sample = "S2";
        return m;
    };
    f.windows.emplace(year, matrix(xt, Window::preceding(year)));
    f.years.emplace(year, matrix(yt, Window::calendar(year)));
    return f;
}

}  // namespace taskspace::synth
