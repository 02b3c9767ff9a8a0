#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "taskspace/taxonomy.hpp"

using namespace taskspace;
using taskspace::testing::random_corpus;

namespace {

TagProjection dense_projection(const Eigen::MatrixXd& w) {
    TagProjection p;
    for (Eigen::Index i = 0; i < w.rows(); ++i) p.tags.push_back(static_cast<TagId>(i));
    p.weight = w.sparseView();
    return p;
}

std::vector<Tag> plain_tags(std::size_t n, std::int64_t usage = 100) {
    std::vector<Tag> tags;
    for (std::size_t i = 0; i < n; ++i) tags.push_back({static_cast<TagId>(i), "t" + std::to_string(i), usage, false, {}});
    return tags;
}

}  // namespace

TEST_CASE("projection counts shared questions and has a zero diagonal") {
    const auto c = random_corpus(4, 12, 400, 10, 5);
    std::vector<TagId> sel = {0, 2, 3, 5, 7, 8, 11};
    const auto g = tag_question_graph(c, sel);
    const auto p = TagProjection::from_graph(g);
    CHECK(p.tags == sel);
    const Eigen::MatrixXd w = p.weight;
    for (std::size_t a = 0; a < sel.size(); ++a)
        for (std::size_t b = 0; b < sel.size(); ++b) {
            double want = 0;
            if (a != b)
                for (const auto& q : c.questions()) {
                    const bool ha = std::binary_search(q.tag_ids.begin(), q.tag_ids.end(), sel[a]);
                    const bool hb = std::binary_search(q.tag_ids.begin(), q.tag_ids.end(), sel[b]);
                    want += ha && hb;
                }
            CHECK(w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) == want);
        }
    // every question with a selected tag appears, nothing else
    std::size_t touched = 0;
    for (const auto& q : c.questions())
        touched += std::any_of(q.tag_ids.begin(), q.tag_ids.end(),
                               [&](TagId t) { return std::find(sel.begin(), sel.end(), t) != sel.end(); });
    CHECK(g.num_questions() == touched);
}

TEST_CASE("overrepresentation closed-form cases") {
    SUBCASE("all weight in own community of two equal ones") {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
        w(0, 1) = w(1, 0) = 1;
        w(2, 3) = w(3, 2) = 1;
        std::vector<BlockId> comm = {0, 0, 1, 1};
        const auto o = tag_overrepresentation(dense_projection(w), comm);
        CHECK(o.O(0, 0) == 2.0);
        CHECK(o.O(0, 1) == 0.0);
    }
    SUBCASE("uniform spread in a balanced system") {
        Eigen::MatrixXd w = Eigen::MatrixXd::Ones(4, 4);
        w.diagonal().setZero();
        w(0, 1) = w(1, 0) = 2;
        w(2, 3) = w(3, 2) = 2;
        std::vector<BlockId> comm = {0, 0, 1, 1};
        const auto o = tag_overrepresentation(dense_projection(w), comm);
        CHECK((o.O.array() == 1.0).all());
    }
    SUBCASE("zero rows flagged, zero total rejected") {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
        w(0, 1) = w(1, 0) = 3;
        std::vector<BlockId> comm = {0, 0, 1};
        const auto o = tag_overrepresentation(dense_projection(w), comm);
        CHECK(o.zero_weight == std::vector<bool>{false, false, true});
        CHECK(o.O.row(2).isZero());
        CHECK_THROWS_AS(tag_overrepresentation(dense_projection(Eigen::MatrixXd::Zero(3, 3)), comm), Error);
    }
}

TEST_CASE("overrepresentation equals direct recomputation on random fixtures") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j) w(i, j) = w(j, i) = static_cast<double>(uniform_index(rng, 5));
        std::vector<BlockId> comm = {0, 1, 2, 0, 1, 2};
        const auto o = tag_overrepresentation(dense_projection(w), comm);
        double total = 0;
        double wc[6][3] = {};
        for (int t = 0; t < 6; ++t)
            for (int u = 0; u < 6; ++u) {
                wc[t][comm[static_cast<std::size_t>(u)]] += w(t, u);
                total += w(t, u);
            }
        for (int t = 0; t < 6; ++t)
            for (int c = 0; c < 3; ++c) {
                const double rt = wc[t][0] + wc[t][1] + wc[t][2];
                double col = 0;
                for (int u = 0; u < 6; ++u) col += wc[u][c];
                const double want = rt == 0 ? 0.0 : (wc[t][c] / rt) / (col / total);
                CHECK(o.O(t, c) == doctest::Approx(want).epsilon(1e-14));
            }
    }
}

TEST_CASE("pruning drops the weakest tags and small communities") {
    const auto tags = plain_tags(7);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(7, 7);
    TagProjection p = dense_projection(w);
    std::vector<BlockId> comm = {0, 0, 0, 0, 0, 1, 1};
    Eigen::MatrixXd O = Eigen::MatrixXd::Zero(7, 2);
    O.col(0) << 1.5, 0.7, 1.2, 1.1, 1.9, 0, 0;
    O.col(1) << 0, 0, 0, 0, 0, 2, 2;
    const auto tax = prune_taxonomy(p, comm, O, tags, 0.2, 3);
    REQUIRE(tax.size() == 1);
    CHECK(tax.task(0).tags == std::vector<TagId>{0, 2, 3, 4});
    CHECK_FALSE(tax.task_of(1).has_value());
    CHECK_FALSE(tax.task_of(5).has_value());

    SUBCASE("ties keep the more used tag") {
        auto used = plain_tags(7);
        used[1].usage_count = 500;
        O(1, 0) = O(3, 0) = 1.0;  // 1 and 3 tie for lowest
        const auto t2 = prune_taxonomy(p, comm, O, used, 0.2, 3);
        CHECK(t2.task(0).tags == std::vector<TagId>{0, 1, 2, 4});
    }
    CHECK_THROWS_AS(prune_taxonomy(p, comm, O, tags, 1.0, 3), Error);
}

TEST_CASE("pruning 247 random communities agrees with a set filter") {
    Rng rng(247);
    std::vector<BlockId> comm;
    std::vector<std::size_t> sizes(247);
    for (BlockId c = 0; c < 247; ++c) {
        sizes[c] = 1 + uniform_index(rng, 12);
        for (std::size_t k = 0; k < sizes[c]; ++k) comm.push_back(c);
    }
    // interleave so communities are not contiguous
    std::vector<std::size_t> order(comm.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::vector<BlockId> mixed(comm.size());
    for (std::size_t i = 0; i < comm.size(); ++i) mixed[i] = comm[order[i]];
    const auto tags = plain_tags(mixed.size());
    TagProjection p = dense_projection(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mixed.size()), static_cast<Eigen::Index>(mixed.size())));
    Eigen::MatrixXd O(static_cast<Eigen::Index>(mixed.size()), 247);
    for (Eigen::Index i = 0; i < O.rows(); ++i)
        for (Eigen::Index c = 0; c < 247; ++c) O(i, c) = uniform01(rng);

    std::vector<std::size_t> prev(247, 1000);
    for (double frac : {0.0, 0.1, 0.2, 0.35, 0.5, 0.9}) {
        const auto tax = prune_taxonomy(p, mixed, O, tags, frac, 3);
        std::size_t want = 0, survivors = 0;
        for (std::size_t s : sizes) {
            const std::size_t keep = s - static_cast<std::size_t>(std::floor(frac * static_cast<double>(s)));
            if (keep >= 3) {
                ++want;
                survivors += keep;
            }
        }
        CHECK(tax.size() == want);
        std::size_t covered = 0;
        std::set<TagId> seen;
        for (const auto& t : tax.tasks()) {
            covered += t.tags.size();
            for (TagId tag : t.tags) {
                seen.insert(tag);
                CHECK(mixed[tag] == t.community);  // never moved between communities
            }
            CHECK(t.tags.size() <= prev[t.community]);
            prev[t.community] = t.tags.size();
        }
        CHECK(covered == survivors);
        CHECK(seen.size() == covered);
        // ids ordered by smallest tag
        for (std::size_t i = 1; i < tax.size(); ++i) CHECK(tax.task(static_cast<TaskId>(i - 1)).tags.front() < tax.task(static_cast<TaskId>(i)).tags.front());
    }
}

TEST_CASE("language canonicalization") {
    std::vector<Tag> tags = {{0, "python", 10, true, {}},
                             {1, "python-3.x", 10, true, {}},
                             {2, "python-2.7", 10, true, {"python"}},
                             {3, "rust", 10, true, {}},
                             {4, "regex", 10, false, {}}};
    std::vector<LanguageRule> rules = {{"python-3.x", "python"}, {"cobol-85", "python"}};
    Warnings warn;
    const auto m = canonicalize_languages(tags, rules, &warn);
    CHECK(m.at(1) == "python");
    CHECK(m.at(2) == "python");
    CHECK(m.at(3) == "rust");
    CHECK(m.count(4) == 0);
    CHECK(warn.size() == 1);
    std::vector<LanguageRule> bad = {{"python-3.x", "klingon"}};
    CHECK_THROWS_AS(canonicalize_languages(tags, bad), Error);

    // Users of two version tags collapse onto one language before counting.
    std::vector<Question> qs = {{1, 0, {0}}, {2, 0, {1}}, {3, 0, {2, 3}}};
    std::vector<Answer> as = {{1, 1, 10, 0, 0}, {2, 2, 10, 0, 0}, {3, 2, 11, 0, 0}, {4, 3, 12, 0, 0}};
    const Corpus c(tags, qs, as);
    std::map<std::string, std::set<UserId>> users;
    for (std::size_t i = 0; i < c.answers().size(); ++i)
        for (TagId t : c.questions()[c.question_of_answer(i)].tag_ids)
            if (m.count(t)) users[m.at(t)].insert(c.answers()[i].user_id);
    CHECK(users["python"] == std::set<UserId>{10, 11, 12});
    CHECK(users["rust"] == std::set<UserId>{12});
}

TEST_CASE("taxonomy json round trip and labels") {
    const auto c = random_corpus(2, 10, 20, 5, 2);
    TaskTaxonomy tax({Task{0, 0, {4, 1, 2}, "", "", {}}, Task{0, 1, {7, 8, 9}, "", "", {}}});
    CHECK(tax.tasks_of(std::vector<TagId>{9, 1, 2, 3}) == std::vector<TaskId>{0, 1});
    std::vector<TaskLabelRecord> labels = {{1, "B", "long b", Eigen::Vector2d(0, 1)}, {0, "A", "long a", Eigen::Vector2d(1, 0)}};
    tax.attach_labels(labels);
    CHECK(tax.has_labels());
    CHECK(tax.task(1).short_label == "B");
    const auto text = taxonomy_json(tax, c.tags());
    const auto back = parse_taxonomy_json(text, c);
    CHECK(back.task(0).tags == std::vector<TagId>{1, 2, 4});
    CHECK(taxonomy_json(back, c.tags()) == text);

    std::vector<TaskLabelRecord> partial = {{0, "A", "", Eigen::Vector2d(1, 0)}};
    CHECK_THROWS_AS(tax.attach_labels(partial), Error);
    CHECK_THROWS_AS(TaskTaxonomy({Task{0, 0, {1}, "", "", {}}, Task{0, 1, {1}, "", "", {}}}), Error);
}
