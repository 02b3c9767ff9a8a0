#include "taskspace/jobmatch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "taskspace/relatedness.hpp"

namespace taskspace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw Error("cosine: dimension mismatch");
    const double na = a.norm(), nb = b.norm();
    if (na == 0 || nb == 0) throw Error("cosine: zero-norm embedding");
    return a.dot(b) / (na * nb);
}

MatchStrategy parse_match_strategy(const std::string& name) {
    if (name == "label") return MatchStrategy::label;
    if (name == "main_tag") return MatchStrategy::main_tag;
    if (name == "mean_tags") return MatchStrategy::mean_tags;
    if (name == "closest_tag") return MatchStrategy::closest_tag;
    throw Error("unknown match strategy '" + name + "'");
}

TaskCandidates label_candidates(const TaskTaxonomy& taxonomy) {
    if (!taxonomy.has_labels()) throw Error("label_candidates: taxonomy has no label embeddings");
    TaskCandidates out;
    for (const Task& t : taxonomy.tasks()) out.push_back(t.embedding.transpose());
    return out;
}

TaskCandidates tag_candidates(std::span<const Eigen::MatrixXd> tag_embeddings, MatchStrategy strategy) {
    TaskCandidates out;
    for (const auto& m : tag_embeddings) {
        if (m.rows() == 0) throw Error("tag_candidates: task without tag embeddings");
        switch (strategy) {
            case MatchStrategy::main_tag: out.push_back(m.topRows(1)); break;
            case MatchStrategy::mean_tags: out.push_back(m.colwise().mean()); break;
            case MatchStrategy::closest_tag: out.push_back(m); break;
            case MatchStrategy::label: throw Error("tag_candidates: label strategy needs label embeddings");
        }
    }
    return out;
}

std::optional<RequirementMatch> match_requirement(const Eigen::VectorXd& requirement, const TaskCandidates& tasks,
                                                  double threshold) {
    std::optional<RequirementMatch> best;
    for (std::size_t t = 0; t < tasks.size(); ++t)
        for (Eigen::Index r = 0; r < tasks[t].rows(); ++r) {
            const double c = cosine(requirement, tasks[t].row(r).transpose());
            if (!best || c > best->cosine) best = RequirementMatch{static_cast<TaskId>(t), c};
        }
    if (best && best->cosine >= threshold) return best;
    return std::nullopt;
}

JobTaskVector job_task_vector(const JobAdRecord& job, const TaskCandidates& tasks, double threshold) {
    JobTaskVector v;
    v.job_id = job.job_id;
    v.year = job.year;
    v.salary = job.salary;
    v.required = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tasks.size()));
    for (const auto& req : job.requirements) {
        const auto m = match_requirement(req.embedding, tasks, threshold);
        if (!m) continue;
        v.required(m->task) = 1;
        auto [it, inserted] = v.cosine.emplace(m->task, m->cosine);
        if (!inserted) it->second = std::max(it->second, m->cosine);
    }
    return v;
}

MaskTable masked_prediction_table(std::span<const JobTaskVector> jobs, const Eigen::MatrixXd& R, double mask_frac,
                                  std::size_t bins, std::uint64_t seed) {
    if (!(mask_frac > 0 && mask_frac < 1)) throw Error("masked_prediction_table: mask_frac must lie in (0, 1)");
    const Eigen::Index nt = R.rows();
    for (const auto& j : jobs)
        if (j.required.size() != nt) throw Error("masked_prediction_table: job vector length does not match R");

    MaskTable out;
    out.cells = jobs.size() * static_cast<std::size_t>(nt);
    out.masked = static_cast<std::size_t>(std::llround(mask_frac * static_cast<double>(out.cells)));
    if (out.masked < bins) throw Error("masked_prediction_table: fewer masked cells than bins");

    // Partial Fisher-Yates picks the masked cells; then restore stacking order.
    std::vector<std::size_t> cells(out.cells);
    std::iota(cells.begin(), cells.end(), 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < out.masked; ++i)
        std::swap(cells[i], cells[i + uniform_index(rng, out.cells - i)]);
    cells.resize(out.masked);
    std::sort(cells.begin(), cells.end());
    std::vector<bool> is_masked(out.cells, false);
    for (std::size_t c : cells) is_masked[c] = true;

    const Eigen::MatrixXd W = row_normalized(R);
    std::vector<double> score(out.masked);
    std::vector<std::uint8_t> outcome(out.masked);
    Eigen::VectorXd x(nt);
    std::size_t current_job = static_cast<std::size_t>(-1);
    for (std::size_t i = 0; i < out.masked; ++i) {
        const std::size_t job = cells[i] / static_cast<std::size_t>(nt);
        const auto task = static_cast<Eigen::Index>(cells[i] % static_cast<std::size_t>(nt));
        if (job != current_job) {
            current_job = job;
            for (Eigen::Index k = 0; k < nt; ++k)
                x(k) = (jobs[job].required(k) > 0 && !is_masked[job * static_cast<std::size_t>(nt) + static_cast<std::size_t>(k)]) ? 1.0 : 0.0;
        }
        score[i] = W.row(task).dot(x);
        outcome[i] = jobs[job].required(task) > 0;
        out.masked_ones += outcome[i];
    }
    out.bins = equal_size_bins(score, outcome, bins, true);
    return out;
}

std::string job_vectors_csv(std::span<const JobTaskVector> jobs) {
    std::string out = "job_id,task_id,cosine\n";
    for (const auto& j : jobs)
        for (const auto& [t, c] : j.cosine)
            out += std::to_string(j.job_id) + "," + std::to_string(t) + "," + format_double(c) + "\n";
    return out;
}

}  // namespace taskspace
