#include "taskspace/activity.hpp"

#include <algorithm>

namespace taskspace {

Window Window::preceding(int year) {
    return {utc_timestamp(year - 2, 1, 1), utc_timestamp(year, 1, 1), std::to_string(year)};
}

Window Window::calendar(int year) {
    return {utc_timestamp(year, 1, 1), utc_timestamp(year + 1, 1, 1), std::to_string(year)};
}

Window Window::days(Timestamp first, Timestamp last, std::string label) {
    const Timestamp day = 86400;
    const Timestamp b = first - ((first % day) + day) % day;
    const Timestamp e = last - ((last % day) + day) % day + day;
    if (e <= b) throw Error("empty window");
    return {b, e, std::move(label)};
}

QuestionTasks::QuestionTasks(const Corpus& corpus, const TaskTaxonomy& taxonomy) {
    offsets_.reserve(corpus.questions().size() + 1);
    offsets_.push_back(0);
    for (const Question& q : corpus.questions()) {
        const auto ts = taxonomy.tasks_of(q.tag_ids);
        tasks_.insert(tasks_.end(), ts.begin(), ts.end());
        offsets_.push_back(tasks_.size());
    }
}

CountVector experience_vector(const Corpus& corpus, const TaskTaxonomy& taxonomy, UserId user, const Window& window) {
    if (taxonomy.size() == 0) throw Error("experience_vector: empty taxonomy");
    CountVector x = CountVector::Zero(static_cast<Eigen::Index>(taxonomy.size()));
    for (std::size_t ai : corpus.answers_of_user(user)) {
        if (!window.contains(corpus.answers()[ai].created_at)) continue;
        for (TaskId t : taxonomy.tasks_of(corpus.questions()[corpus.question_of_answer(ai)].tag_ids)) ++x(t);
    }
    return x;
}

CountVector experience_vector(const Corpus& corpus, const TaskTaxonomy& taxonomy, UserId user, int year) {
    return experience_vector(corpus, taxonomy, user, Window::preceding(year));
}

Eigen::Index UserTaskMatrix::column(UserId user) const {
    auto it = std::lower_bound(users.begin(), users.end(), user);
    if (it == users.end() || *it != user) return -1;
    return it - users.begin();
}

CountVector UserTaskMatrix::column_counts(Eigen::Index col) const {
    CountVector x = CountVector::Zero(T.rows());
    for (Eigen::SparseMatrix<double>::InnerIterator it(T, col); it; ++it)
        x(it.row()) = static_cast<std::int64_t>(it.value());
    return x;
}

UserTaskMatrix experience_matrix(const Corpus& corpus, const QuestionTasks& qtasks, std::size_t num_tasks,
                                 std::span<const UserId> users, const Window& window, std::string sample) {
    if (users.empty()) throw Error("experience_matrix: no users");
    UserTaskMatrix m;
    m.users.assign(users.begin(), users.end());
    std::sort(m.users.begin(), m.users.end());
    m.users.erase(std::unique(m.users.begin(), m.users.end()), m.users.end());
    m.window = window;
    m.sample = std::move(sample);

    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t col = 0; col < m.users.size(); ++col)
        for (std::size_t ai : corpus.answers_of_user(m.users[col])) {
            if (!window.contains(corpus.answers()[ai].created_at)) continue;
            for (TaskId t : qtasks[corpus.question_of_answer(ai)])
                trip.emplace_back(static_cast<int>(t), static_cast<int>(col), 1.0);
        }
    m.T.resize(static_cast<Eigen::Index>(num_tasks), static_cast<Eigen::Index>(m.users.size()));
    m.T.setFromTriplets(trip.begin(), trip.end());  // duplicates are summed
    m.T.makeCompressed();
    return m;
}

UserTaskMatrix experience_matrix(const Corpus& corpus, const TaskTaxonomy& taxonomy, std::span<const UserId> users,
                                 const Window& window, std::string sample) {
    if (taxonomy.size() == 0) throw Error("experience_matrix: empty taxonomy");
    return experience_matrix(corpus, QuestionTasks(corpus, taxonomy), taxonomy.size(), users, window,
                             std::move(sample));
}

ShareChange task_share_change(const Corpus& corpus, const TaskTaxonomy& taxonomy, int year_a, int year_b) {
    const auto [t0, t1] = corpus.time_range();
    for (int y : {year_a, year_b})
        if (y < utc_year(t0) || y > utc_year(t1))
            throw Error("task_share_change: year " + std::to_string(y) + " outside the corpus range");
    const QuestionTasks qtasks(corpus, taxonomy);
    auto shares = [&](int year) {
        const auto m = experience_matrix(corpus, qtasks, taxonomy.size(), corpus.users(), Window::calendar(year));
        Eigen::VectorXd users_in = Eigen::VectorXd::Zero(m.T.rows());
        for (Eigen::Index k = 0; k < m.T.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(m.T, k); it; ++it)
                if (it.value() > 0) users_in(it.row()) += 1;
        const double total = users_in.sum();
        if (total == 0) throw Error("task_share_change: no task activity in " + std::to_string(year));
        return Eigen::VectorXd(users_in / total);
    };
    ShareChange s;
    s.year_a = year_a;
    s.year_b = year_b;
    s.share_a = shares(year_a);
    s.share_b = shares(year_b);
    s.delta = s.share_b - s.share_a;
    return s;
}

std::string experience_csv(const UserTaskMatrix& m) {
    std::string out = "user_id,year,task_id,count\n";
    for (Eigen::Index col = 0; col < m.T.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m.T, col); it; ++it)
            out += std::to_string(m.users[static_cast<std::size_t>(col)]) + "," + m.window.label + "," +
                   std::to_string(it.row()) + "," + std::to_string(static_cast<std::int64_t>(it.value())) + "\n";
    return out;
}

std::string shares_csv(const ShareChange& s) {
    std::string out = "task_id,yearA_share,yearB_share,delta\n";
    for (Eigen::Index t = 0; t < s.delta.size(); ++t)
        out += std::to_string(t) + "," + format_double(s.share_a(t)) + "," + format_double(s.share_b(t)) + "," +
               format_double(s.delta(t)) + "\n";
    return out;
}

}  // namespace taskspace
