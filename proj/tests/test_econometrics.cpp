#include <doctest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "taskspace/econometrics.hpp"
#include "taskspace/synth.hpp"

using namespace taskspace;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Eigen::VectorXd normals(Rng& rng, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
    return v;
}

// Normal-equation least squares on an explicit design.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    return (X.transpose() * X).llt().solve(X.transpose() * y);
}

Eigen::MatrixXd dummies(const Eigen::VectorXd& codes, bool drop_first) {
    std::set<double> levels(codes.data(), codes.data() + codes.size());
    std::vector<double> lv(levels.begin(), levels.end());
    if (drop_first) lv.erase(lv.begin());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(codes.size(), static_cast<Eigen::Index>(lv.size()));
    for (Eigen::Index i = 0; i < codes.size(); ++i)
        for (std::size_t g = 0; g < lv.size(); ++g)
            if (codes(i) == lv[g]) D(i, static_cast<Eigen::Index>(g)) = 1;
    return D;
}

// Cluster-robust sandwich written out observation by observation.
Eigen::MatrixXd cluster_sandwich(const Eigen::MatrixXd& X, const Eigen::VectorXd& e, const Eigen::VectorXd& cluster,
                                 double K) {
    const Eigen::Index k = X.cols();
    const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
    std::map<double, Eigen::VectorXd> score;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        auto [it, fresh] = score.emplace(cluster(i), Eigen::VectorXd::Zero(k));
        it->second += X.row(i).transpose() * e(i);
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (const auto& [g, s] : score) meat += s * s.transpose();
    const double G = static_cast<double>(score.size()), N = static_cast<double>(X.rows());
    return G / (G - 1) * (N - 1) / (N - K) * bread * meat * bread;
}

struct ClusterFixture {
    Table t;
    Eigen::VectorXd x1, x2, y, cl, fe;
};

ClusterFixture cluster_fixture(std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::Index n = 20 * 30;
    ClusterFixture f;
    f.x1 = normals(rng, n);
    f.x2 = normals(rng, n);
    f.cl.resize(n);
    f.fe.resize(n);
    f.y.resize(n);
    Eigen::VectorXd shock = normals(rng, 20);
    for (Eigen::Index i = 0; i < n; ++i) {
        f.cl(i) = static_cast<double>(i / 30);
        f.fe(i) = static_cast<double>(uniform_index(rng, 7));
        f.y(i) = 0.5 + 1.2 * f.x1(i) - 0.7 * f.x2(i) + f.fe(i) + shock(i / 30) + 0.5 * standard_normal(rng);
    }
    f.t.add("y", f.y);
    f.t.add("x1", f.x1);
    f.t.add("x2", f.x2);
    f.t.add("cl", f.cl);
    f.t.add("fe", f.fe);
    return f;
}

}  // namespace

TEST_CASE("table basics") {
    Table t;
    t.add("a", vec({1, 2, 3}));
    t.add("b", vec({4, 5, 6}));
    CHECK_THROWS(t.add("a", vec({1, 2, 3})));
    CHECK_THROWS(t.add("c", vec({1, 2})));
    CHECK_THROWS(t.col("zzz"));
    const std::vector<std::size_t> rows{2, 0};
    const Table s = t.select(rows);
    CHECK(s.rows() == 2);
    CHECK(s.col("b")(0) == 6);
    CHECK(t.csv() == "a,b\n1,4\n2,5\n3,6\n");
}

TEST_CASE("OLS without fixed effects") {
    SUBCASE("noiseless line is exact") {
        Table t;
        Eigen::VectorXd x = vec({0, 1, 2, 3, 4, 5, 6, 7});
        t.add("x", x);
        t.add("y", (3 + 2 * x.array()).matrix());
        const auto r = fit_ols_fe(t, {"y", {"x"}});
        CHECK(r.names == std::vector<std::string>{"(intercept)", "x"});
        CHECK(std::abs(r.coef(0) - 3) < 1e-10);
        CHECK(std::abs(r.coef(1) - 2) < 1e-10);
        CHECK(std::abs(r.r2 - 1) < 1e-12);
        CHECK(std::isnan(r.within_r2));
    }
    SUBCASE("planted noiseless multivariate DGP") {
        Rng rng(5);
        Table t;
        const Eigen::VectorXd a = normals(rng, 200), b = normals(rng, 200);
        t.add("a", a);
        t.add("b", b);
        t.add("y", (-1.25 + 0.75 * a.array() + 4 * b.array()).matrix());
        const auto r = fit_ols_fe(t, {"y", {"a", "b"}});
        CHECK(std::abs(r.coef(0) + 1.25) < 1e-10);
        CHECK(std::abs(r.coef(1) - 0.75) < 1e-10);
        CHECK(std::abs(r.coef(2) - 4) < 1e-10);
    }
    SUBCASE("residuals are orthogonal to regressors and HC1 matches direct evaluation") {
        auto f = cluster_fixture(11);
        const auto r = fit_ols_fe(f.t, {"y", {"x1", "x2"}});
        Eigen::MatrixXd X(f.y.size(), 3);
        X << Eigen::VectorXd::Ones(f.y.size()), f.x1, f.x2;
        const Eigen::VectorXd beta = normal_equations(X, f.y);
        CHECK((r.coef - beta).cwiseAbs().maxCoeff() < 1e-10);
        const Eigen::VectorXd e = f.y - X * r.coef;
        CHECK((X.transpose() * e).cwiseAbs().maxCoeff() < 1e-8 * static_cast<double>(f.y.size()));

        const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
        Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(3, 3);
        for (Eigen::Index i = 0; i < X.rows(); ++i) meat += e(i) * e(i) * X.row(i).transpose() * X.row(i);
        const double N = static_cast<double>(X.rows());
        const Eigen::MatrixXd V = N / (N - 3) * bread * meat * bread;
        CHECK((r.vcov - V).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(r.clusters == 0);
    }
    SUBCASE("collinear design names the columns") {
        Table t;
        t.add("x1", vec({1, 2, 3, 4, 5}));
        t.add("x2", vec({2, 4, 6, 8, 10}));
        t.add("y", vec({1, 3, 2, 5, 4}));
        try {
            fit_ols_fe(t, {"y", {"x1", "x2"}});
            FAIL("expected rank error");
        } catch (const Error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("collinear") != std::string::npos);
            CHECK((msg.find("x1") != std::string::npos || msg.find("x2") != std::string::npos));
        }
    }
    SUBCASE("too few observations") {
        Table t;
        t.add("x", vec({1, 2}));
        t.add("y", vec({1, 2}));
        CHECK_THROWS(fit_ols_fe(t, {"y", {"x"}}));
    }
}

TEST_CASE("fixed-effect absorption equals the dummy-variable regression") {
    SUBCASE("one factor, y = x + group constants") {
        Rng rng(2);
        const Eigen::Index n = 300;
        Eigen::VectorXd g(n), x = normals(rng, n), y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            g(i) = static_cast<double>(uniform_index(rng, 40));
            y(i) = x(i) + 3 * std::sin(g(i));
        }
        Table t;
        t.add("x", x);
        t.add("g", g);
        t.add("y", y);
        const auto r = fit_ols_fe(t, {"y", {"x"}, {"g"}});
        CHECK(std::abs(r.coef(0) - 1) < 1e-10);
        CHECK(r.names == std::vector<std::string>{"x"});
    }
    for (std::uint64_t seed : {1, 2, 3}) {
        CAPTURE(seed);
        auto f = cluster_fixture(seed);
        SUBCASE("one factor") {
            const auto r = fit_ols_fe(f.t, {"y", {"x1", "x2"}, {"fe"}, std::string("cl")});
            const Eigen::MatrixXd D = dummies(f.fe, false);
            Eigen::MatrixXd X(f.y.size(), 2 + D.cols());
            X << f.x1, f.x2, D;
            const Eigen::VectorXd beta = normal_equations(X, f.y);
            CHECK((r.coef - beta.head(2)).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(r.dof_absorbed == static_cast<std::size_t>(D.cols()));
            const Eigen::VectorXd e = f.y - X * beta;
            const Eigen::MatrixXd V = cluster_sandwich(X, e, f.cl, static_cast<double>(X.cols()));
            CHECK((r.vcov - V.topLeftCorner(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
            const double ssr = e.squaredNorm();
            const double tss = (f.y.array() - f.y.mean()).square().sum();
            CHECK(std::abs(r.r2 - (1 - ssr / tss)) < 1e-10);
            CHECK(r.within_r2 < r.r2 + 1e-12);
        }
        SUBCASE("two factors") {
            Eigen::VectorXd g2(f.y.size());
            Rng rng(seed + 100);
            for (Eigen::Index i = 0; i < g2.size(); ++i) g2(i) = static_cast<double>(uniform_index(rng, 12));
            Table t = f.t;
            t.add("g2", g2);
            const auto r = fit_ols_fe(t, {"y", {"x1", "x2"}, {"fe", "g2"}});
            const Eigen::MatrixXd D1 = dummies(f.fe, false), D2 = dummies(g2, true);
            Eigen::MatrixXd X(f.y.size(), 2 + D1.cols() + D2.cols());
            X << f.x1, f.x2, D1, D2;
            const Eigen::VectorXd beta = normal_equations(X, f.y);
            CHECK((r.coef - beta.head(2)).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(r.dof_absorbed == static_cast<std::size_t>(D1.cols() + D2.cols()));
        }
    }
    SUBCASE("disconnected two-factor design counts components") {
        // groups {0,1} x {a} and {2} x {b}: two components
        Table t;
        t.add("f1", vec({0, 0, 1, 1, 2, 2, 2, 2}));
        t.add("f2", vec({0, 0, 0, 0, 1, 1, 1, 1}));
        t.add("x", vec({1, 2, 0, 5, 3, 1, 4, 2}));
        t.add("y", vec({2, 1, 3, 5, 0, 2, 1, 6}));
        const auto r = fit_ols_fe(t, {"y", {"x"}, {"f1", "f2"}});
        CHECK(r.dof_absorbed == 3);
    }
    SUBCASE("regressor constant within groups, or constant outcome") {
        Table t;
        t.add("g", vec({0, 0, 0, 1, 1, 1}));
        t.add("x", vec({3, 3, 3, 7, 7, 7}));
        t.add("z", vec({1, 4, 2, 0, 5, 3}));
        t.add("y", vec({1, 2, 4, 0, 3, 8}));
        t.add("one", vec({1, 1, 1, 1, 1, 1}));
        CHECK_THROWS_WITH(fit_ols_fe(t, {"y", {"x", "z"}, {"g"}}), doctest::Contains("absorbed"));
        CHECK_THROWS_WITH(fit_ols_fe(t, {"one", {"z"}, {"g"}}), doctest::Contains("no variation"));
        CHECK_THROWS_WITH(fit_2sls(t, {"one", {}, {"g"}, {}, {"z"}, {"y"}}), doctest::Contains("no variation"));
    }
    CHECK_THROWS(fit_ols_fe(Table{}, {"y", {"x"}}));
}

TEST_CASE("clustered covariance without fixed effects matches the direct sandwich") {
    for (std::uint64_t seed : {4, 5, 6}) {
        auto f = cluster_fixture(seed);
        const auto r = fit_ols_fe(f.t, {"y", {"x1", "x2"}, {}, std::string("cl")});
        Eigen::MatrixXd X(f.y.size(), 3);
        X << Eigen::VectorXd::Ones(f.y.size()), f.x1, f.x2;
        const Eigen::VectorXd e = f.y - X * r.coef;
        const Eigen::MatrixXd V = cluster_sandwich(X, e, f.cl, 3);
        CHECK((r.vcov - V).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(r.clusters == 20);
        CHECK((r.vcov - r.vcov.transpose()).cwiseAbs().maxCoeff() == 0);
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.vcov).eigenvalues().minCoeff() > -1e-14);
    }
}

TEST_CASE("OLS confidence intervals cover the planted slope") {
    int covered = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        Rng rng(counter_seed(77, rep));
        const Eigen::Index n = 10000;
        const Eigen::VectorXd x = normals(rng, n);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y(i) = 1 + 0.5 * x(i) + (1 + std::abs(x(i))) * standard_normal(rng);
        Table t;
        t.add("x", x);
        t.add("y", y);
        const auto r = fit_ols_fe(t, {"y", {"x"}});
        covered += std::abs(r.coef(1) - 0.5) <= 1.96 * r.se(1);
    }
    CHECK(covered >= 90);
}

TEST_CASE("2SLS") {
    SUBCASE("instrument identical to the regressor reproduces OLS") {
        auto f = cluster_fixture(9);
        Table t = f.t;
        t.add("z", f.x1);
        const auto ols = fit_ols_fe(t, {"y", {"x1", "x2"}, {"fe"}, std::string("cl")});
        const auto iv = fit_2sls(t, {"y", {"x2"}, {"fe"}, std::string("cl"), {"x1"}, {"z"}});
        CHECK(iv.names == std::vector<std::string>{"x1", "x2"});
        CHECK((iv.coef - ols.coef).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((iv.vcov - ols.vcov).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(*iv.first_stage_f > 1e6);
        CHECK(iv.warnings.empty());
    }
    SUBCASE("confounded DGP recovers the causal slope") {
        Rng rng(2024);
        const Eigen::Index n = 10000;
        const Eigen::VectorXd z = normals(rng, n), u = normals(rng, n);
        const Eigen::VectorXd x = z + u;
        const Eigen::VectorXd y = 1.5 * x + u;
        Table t;
        t.add("x", x);
        t.add("z", z);
        t.add("y", y);
        const auto iv = fit_2sls(t, {"y", {}, {}, {}, {"x"}, {"z"}});
        const auto ols = fit_ols_fe(t, {"y", {"x"}});
        CHECK(iv.names == std::vector<std::string>{"x", "(intercept)"});
        CHECK(std::abs(iv.coef(0) - 1.5) < 0.05);
        CHECK(ols.coef(1) > 1.9);

        Eigen::MatrixXd Z(n, 2), X(n, 2);
        Z << Eigen::VectorXd::Ones(n), z;
        X << Eigen::VectorXd::Ones(n), x;
        const Eigen::VectorXd closed = (Z.transpose() * X).lu().solve(Z.transpose() * y);
        CHECK(std::abs(iv.coef(0) - closed(1)) < 1e-10);
        CHECK(std::abs(iv.coef(1) - closed(0)) < 1e-10);

        // classical first-stage F for one instrument equals t^2 of z in x ~ 1 + z
        const Eigen::VectorXd pi = normal_equations(Z, x);
        const Eigen::VectorXd v = x - Z * pi;
        const double s2 = v.squaredNorm() / static_cast<double>(n - 2);
        const double var_pi = s2 * (Z.transpose() * Z).inverse()(1, 1);
        CHECK(std::abs(*iv.first_stage_f - pi(1) * pi(1) / var_pi) < 1e-6 * *iv.first_stage_f);
    }
    SUBCASE("weak instruments warn") {
        int warned = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            const Eigen::Index n = 300;
            const Eigen::VectorXd z = normals(rng, n), x = normals(rng, n), y = x + normals(rng, n);
            Table t;
            t.add("x", x);
            t.add("z", z);
            t.add("y", y);
            const auto iv = fit_2sls(t, {"y", {}, {}, {}, {"x"}, {"z"}});
            CHECK((*iv.first_stage_f < 1) == !iv.warnings.empty());
            warned += !iv.warnings.empty();
        }
        CHECK(warned > 0);
    }
    SUBCASE("specification errors") {
        Table t;
        t.add("x", vec({1, 2, 3, 4}));
        t.add("z", vec({1, 0, 1, 1}));
        t.add("y", vec({1, 2, 2, 3}));
        CHECK_THROWS(fit_2sls(t, {"y", {}, {}, {}, {}, {"z"}}));
        CHECK_THROWS(fit_2sls(t, {"y", {}, {}, {}, {"x"}, {}}));
        CHECK_THROWS(fit_2sls(t, {"y", {"z"}, {}, {}, {"x"}, {"z"}}));
        CHECK_THROWS(fit_ols_fe(t, {"y", {"x"}, {"x", "y", "z"}}));
    }
}

TEST_CASE("circular day-minute helpers") {
    CHECK(circular_distance(10, 1430) == 20);
    CHECK(circular_distance(600, 960) == 360);
    CHECK(circular_distance(0, 720) == 720);
    const std::vector<int> wrap{1430, 10};
    CHECK(circular_distance(circular_mean_minute(wrap), 0) < 1e-9);
    const std::vector<int> opposite{0, 720};
    CHECK(circular_mean_minute(opposite) == doctest::Approx(360));
    const std::vector<int> one{600};
    CHECK(circular_mean_minute(one) == doctest::Approx(600));
    CHECK_THROWS(circular_mean_minute(std::vector<int>{}));
}

TEST_CASE("minute task counts") {
    const Timestamp day = utc_timestamp(2020, 3, 1);
    std::vector<Tag> tags{{0, "a", 5, false, std::nullopt}};
    std::vector<Question> qs{{100, day, {0}}};
    std::vector<Answer> as{{1, 100, 7, day + 600 * 60, 0}, {2, 100, 8, day + 10 * 60, 0}};
    const Corpus corpus(tags, qs, as);

    auto matrix = [](UserId user) {
        UserTaskMatrix m;
        m.T.resize(1, 1);
        m.T.insert(0, 0) = 5;
        m.users = {user};
        m.window = Window::calendar(2020);
        return m;
    };
    const Eigen::MatrixXd M7 = minute_task_counts(corpus, matrix(7));
    CHECK(M7.rows() == 1);
    CHECK(M7.cols() == 1440);
    CHECK(M7(0, 600) == doctest::Approx(5));
    CHECK(M7(0, 960) == doctest::Approx(2.5));
    CHECK(M7(0, 240) == doctest::Approx(2.5));
    CHECK(M7.minCoeff() >= 0);
    const Eigen::MatrixXd M8 = minute_task_counts(corpus, matrix(8));
    CHECK(M8(0, 1430) == doctest::Approx(5 * (1 - 20.0 / 720)));
    CHECK(M8(0, 1430) == doctest::Approx(4.8611).epsilon(1e-4));
    CHECK(M8(0, 30) == doctest::Approx(M8(0, 1430)));

    // answers outside the window are ignored
    UserTaskMatrix outside = matrix(7);
    outside.window = Window::calendar(2019);
    CHECK(minute_task_counts(corpus, outside).isZero());
    CHECK_THROWS(minute_task_counts(corpus, matrix(7), 0));
}

TEST_CASE("first and top answers") {
    const Timestamp t0 = utc_timestamp(2020, 1, 1);
    std::vector<Tag> tags{{0, "a", 5, false, std::nullopt}};
    std::vector<Question> qs{{100, t0, {0}}, {101, t0, {0}}};
    std::vector<Answer> as{{5, 100, 1, t0 + 50, 3}, {3, 100, 2, t0 + 50, 7}, {4, 100, 3, t0 + 40, 7},
                           {9, 101, 1, t0 + 10, 0}};
    const Corpus c(tags, qs, as);
    CHECK(c.answers()[first_answer(c, 0)].answer_id == 4);
    CHECK(c.answers()[top_answer(c, 0)].answer_id == 4);
    CHECK(c.answers()[top_answer(c, 1)].answer_id == 9);
}

TEST_CASE("voting rows match brute-force aggregates") {
    const Corpus corpus = testing::random_corpus(3, 40, 300, 900, 60);
    const TaskTaxonomy tax = testing::grouped_taxonomy(8);
    const QuestionTasks qtasks(corpus, tax);
    std::vector<UserId> users;
    for (UserId u = 1; u <= 50; ++u) users.push_back(u);  // users 51..60 are outside the sample

    std::set<int> years;
    for (const auto& a : corpus.answers()) years.insert(utc_year(a.created_at));
    std::map<int, UserTaskMatrix> xs;
    std::map<int, Eigen::MatrixXd> ms;
    for (int y : years) {
        xs.emplace(y, experience_matrix(corpus, tax, users, Window::preceding(y), "S2"));
        ms.emplace(y, minute_task_counts(corpus, xs.at(y)));
    }
    const Table rows = build_voting_rows(corpus, qtasks, xs, ms);

    // brute force over all answers
    std::size_t expected = 0, checked_single = 0;
    std::map<std::pair<std::uint64_t, std::uint32_t>, Eigen::Index> row_of;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(rows.rows()); ++i)
        row_of[{static_cast<std::uint64_t>(rows.col("question_id")(i)), static_cast<std::uint32_t>(rows.col("task")(i))}] = i;
    for (const auto& q : corpus.questions()) {
        std::vector<const Answer*> mine;
        for (const auto& a : corpus.answers())
            if (a.question_id == q.question_id) mine.push_back(&a);
        if (mine.empty()) continue;
        const Answer* first = mine[0];
        const Answer* top = mine[0];
        double votes = 0;
        for (const Answer* a : mine) {
            if (a->created_at < first->created_at || (a->created_at == first->created_at && a->answer_id < first->answer_id)) first = a;
            if (a->votes > top->votes || (a->votes == top->votes && (a->created_at < top->created_at ||
                                                                      (a->created_at == top->created_at && a->answer_id < top->answer_id))))
                top = a;
            votes += static_cast<double>(a->votes);
        }
        if (first->user_id > 50) continue;
        std::set<TaskId> tasks;
        for (TagId tag : q.tag_ids)
            if (auto t = tax.task_of(tag)) tasks.insert(*t);
        for (TaskId t : tasks) {
            ++expected;
            auto it = row_of.find({q.question_id, t});
            REQUIRE(it != row_of.end());
            const Eigen::Index i = it->second;
            const int year = utc_year(first->created_at);
            CHECK(rows.col("answer_id")(i) == static_cast<double>(first->answer_id));
            CHECK(rows.col("user_id")(i) == static_cast<double>(first->user_id));
            CHECK(rows.col("year")(i) == year);
            CHECK(rows.col("top_answer")(i) == (first == top ? 1.0 : 0.0));
            CHECK(rows.col("log_votes")(i) == doctest::Approx(std::log(first->votes + 1.0)));
            CHECK(rows.col("log_answers")(i) == doctest::Approx(std::log(static_cast<double>(mine.size()))));
            CHECK(rows.col("log_total_votes")(i) == doctest::Approx(std::log(1 + votes)));
            const auto xv = experience_vector(corpus, tax, first->user_id, Window::preceding(year));
            CHECK(rows.col("log_experience")(i) == doctest::Approx(std::log(static_cast<double>(xv(t)) + 1)));
            const int qm = day_minute(q.created_at);
            CHECK(rows.col("qminute")(i) == qm);
            CHECK(rows.col("instrument")(i) == ms.at(year)(t, qm));
            CHECK(rows.col("gap_seconds")(i) == static_cast<double>(first->created_at - q.created_at));
            CHECK(rows.col("task_year")(i) == t * 10000.0 + year);
            CHECK(rows.col("task_qminute")(i) == t * 1440.0 + qm);
            if (mine.size() == 1) {
                CHECK(rows.col("top_answer")(i) == 1);
                ++checked_single;
            }
        }
    }
    CHECK(rows.rows() == expected);
    CHECK(expected > 50);
    CHECK(checked_single > 0);

    SUBCASE("missing year throws") {
        std::map<int, UserTaskMatrix> partial;
        partial.emplace(*years.begin(), xs.at(*years.begin()));
        CHECK_THROWS(build_voting_rows(corpus, qtasks, partial, ms));
    }
    SUBCASE("placebo split partitions the rows") {
        const auto split = placebo_split(rows);
        CHECK(split.within_24h.rows() + split.after_24h.rows() == rows.rows());
        CHECK(split.after_24h.rows() == 0);  // fixture answers arrive after one minute
    }
}

TEST_CASE("placebo split boundary") {
    Table t;
    t.add("gap_seconds", vec({86400, 86401, 0, 10}));
    const auto s = placebo_split(t);
    CHECK(s.within_24h.rows() == 3);
    CHECK(s.after_24h.rows() == 1);
    CHECK(s.after_24h.col("gap_seconds")(0) == 86401);
    Table bad;
    bad.add("gap_seconds", vec({5, -1}));
    CHECK_THROWS(placebo_split(bad));
}

TEST_CASE("entry rows") {
    const Corpus corpus = testing::random_corpus(8, 40, 400, 1500, 40);
    const TaskTaxonomy tax = testing::grouped_taxonomy(8);
    std::vector<UserId> users;
    for (UserId u = 1; u <= 40; ++u) users.push_back(u);
    std::map<int, UserTaskMatrix> windows, years;
    for (int y : {2018, 2019}) {
        windows.emplace(y, experience_matrix(corpus, tax, users, Window::preceding(y), "S2"));
        years.emplace(y, experience_matrix(corpus, tax, users, Window::calendar(y), "S2"));
    }
    Rng rng(1);
    RelatednessMatrix R;
    R.R = Eigen::MatrixXd::Zero(8, 8);
    for (int a = 0; a < 8; ++a)
        for (int b = a + 1; b < 8; ++b) R.R(a, b) = R.R(b, a) = uniform01(rng);
    R.sample = "S1";
    TaskValues values;
    values.value = Eigen::VectorXd::Constant(8, 60000);
    for (int t = 0; t < 8; ++t) values.value(t) += 1000 * t;
    values.value(5) = std::nan("");

    const auto out = build_entry_rows(windows, years, R, values);
    const Table& rows = out.rows;

    // complement of the window activity per active user, minus unvalued tasks
    std::set<std::tuple<int, UserId, TaskId>> expected, got;
    std::size_t expected_dropped = 0;
    for (int y : {2018, 2019})
        for (UserId u : users) {
            const auto x = experience_vector(corpus, tax, u, Window::preceding(y));
            if (x.sum() == 0) continue;
            for (TaskId t = 0; t < 8; ++t) {
                if (x(t) != 0) continue;
                if (t == 5) ++expected_dropped;
                else expected.insert({y, u, t});
            }
        }
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(rows.rows()); ++i) {
        const int y = static_cast<int>(rows.col("year")(i));
        const auto u = static_cast<UserId>(rows.col("user_id")(i));
        const auto t = static_cast<TaskId>(rows.col("task")(i));
        got.insert({y, u, t});
        const auto x = experience_vector(corpus, tax, u, Window::preceding(y));
        const auto a = experience_vector(corpus, tax, u, Window::calendar(y));
        CHECK(rows.col("entered")(i) == (a(t) > 0 ? 1.0 : 0.0));
        CHECK(rows.col("log_value")(i) == doctest::Approx(std::log(values.value(t))));
        CHECK(rows.col("density")(i) == doctest::Approx(density(R.R, x.cast<double>(), t)));
    }
    CHECK(got == expected);
    CHECK(got.size() == rows.rows());
    CHECK(out.dropped_unvalued == expected_dropped);
    CHECK(rows.col("entered").sum() > 0);
    CHECK(std::abs(rows.col("density_std").mean()) < 1e-10);
    const Eigen::VectorXd z = rows.col("log_value_std");
    CHECK(std::sqrt(z.squaredNorm() / static_cast<double>(z.size() - 1)) == doctest::Approx(1.0));

    SUBCASE("provenance checks") {
        RelatednessMatrix wrong = R;
        wrong.sample = "S2";
        CHECK_THROWS(build_entry_rows(windows, years, wrong, values));
        auto w2 = windows;
        w2.begin()->second.sample = "S1";
        CHECK_THROWS(build_entry_rows(w2, years, R, values));
        auto y2 = years;
        y2.erase(2019);
        CHECK_THROWS(build_entry_rows(windows, y2, R, values));
    }
}

TEST_CASE("salary rows") {
    Eigen::MatrixXd R(3, 3);
    R << 0, 2, 2, 2, 0, 0, 2, 0, 0;
    TaskValues values;
    values.value = vec({40000, 80000, std::nan("")});
    auto job = [](std::uint64_t id, std::optional<double> salary, std::vector<TaskId> tasks) {
        JobTaskVector j;
        j.job_id = id;
        j.year = 2022;
        j.salary = salary;
        j.required = Eigen::VectorXd::Zero(3);
        for (TaskId t : tasks) {
            j.required(t) = 1;
            j.cosine[t] = 0.9;
        }
        return j;
    };
    const std::vector<JobTaskVector> jobs{job(1, 100000, {1}), job(2, 90000, {0, 1}), job(3, 50000, {2}),
                                          job(4, std::nullopt, {0}), job(5, 70000, {0, 2})};
    const auto out = build_salary_rows(jobs, R, values);
    CHECK(out.dropped_unvalued == 1);
    REQUIRE(out.rows.rows() == 3);
    const Table& t = out.rows;
    CHECK(t.col("job_id")(0) == 1);
    CHECK(t.col("vbar")(0) == doctest::Approx(std::log(80000)));
    CHECK(t.col("rbar")(0) == 0);
    CHECK(t.col("log_n_tasks")(0) == 0);
    CHECK(t.col("log_salary")(0) == doctest::Approx(std::log(100000)));
    // job 2: W row 0 = (0, .5, .5), row 1 = (1, 0, 0)
    CHECK(t.col("vbar")(1) == doctest::Approx((std::log(40000) + std::log(80000)) / 2));
    CHECK(t.col("rbar")(1) == doctest::Approx(0.75));
    CHECK(t.col("log_n_tasks")(1) == doctest::Approx(std::log(2)));
    // job 5: unvalued task 2 still counts for coherence and n_tasks
    CHECK(t.col("vbar")(2) == doctest::Approx(std::log(40000)));
    CHECK(t.col("rbar")(2) == doctest::Approx(0.75));

    TaskValues doubled = values;
    doubled.value *= 2;
    const auto out2 = build_salary_rows(jobs, R, doubled);
    const Eigen::VectorXd shift = out2.rows.col("vbar") - t.col("vbar");
    CHECK((shift.array() - std::log(2)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("binned probability") {
    Table t;
    Eigen::VectorXd score(1000), y = Eigen::VectorXd::Zero(1000);
    for (int i = 0; i < 1000; ++i) score(i) = i;
    for (int i = 0; i < 25; ++i) y(i * 4) = 1;
    t.add("score", score);
    t.add("y", y);
    const auto bins = binned_probability(t, "score", "y");
    REQUIRE(bins.size() == 10);
    CHECK(bins[0].n == 100);
    CHECK(bins[0].p_hat == doctest::Approx(0.25));
    CHECK(bins[0].se == doctest::Approx(0.0433).epsilon(1e-3));
    CHECK(bins[0].ci_lo == doctest::Approx(0.25 - 1.96 * std::sqrt(0.25 * 0.75 / 100)));
    for (std::size_t b = 1; b < 10; ++b) {
        CHECK(bins[b].p_hat == 0);
        CHECK(bins[b].ci_lo == 0);
        CHECK(bins[b].ci_hi == 0);
    }
    Table c;
    c.add("score", Eigen::VectorXd::Ones(50));
    c.add("y", Eigen::VectorXd::Zero(50));
    CHECK_THROWS(binned_probability(c, "score", "y"));
    Table bad;
    bad.add("score", score);
    bad.add("y", Eigen::VectorXd::Constant(1000, 2));
    CHECK_THROWS(binned_probability(bad, "score", "y"));
}

TEST_CASE("standardize and stars") {
    const Eigen::VectorXd z = standardize(vec({1, 2, 3, 4}));
    CHECK(std::abs(z.mean()) < 1e-15);
    CHECK(z(3) == doctest::Approx(1.5 / std::sqrt(5.0 / 3)));
    CHECK_THROWS(standardize(vec({2, 2, 2})));
    CHECK(stars(3, 1) == "***");
    CHECK(stars(2, 1) == "**");
    CHECK(stars(-1.7, 1) == "*");
    CHECK(stars(1, 1) == "");
    CHECK(stars(1, 0) == "");
}

TEST_CASE("entry LPM recovers a positive density effect") {
    int positive = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto f = synth::planted_entry(300, 10, -3, 2, counter_seed(31, seed));
        const auto rows = build_entry_rows(f.windows, f.years, f.R, f.values);
        const auto r = fit_ols_fe(rows.rows, {"entered", {"density_std", "log_value_std"}, {}, std::string("user_id")});
        positive += r.coef(r.index("density_std")) > 0;
    }
    CHECK(positive == 100);
}
