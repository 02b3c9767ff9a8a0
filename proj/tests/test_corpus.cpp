#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>

#include "fixtures.hpp"

using namespace taskspace;
using taskspace::testing::random_corpus;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("taskspace_test_corpus_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_fixture(const fs::path& dir, bool dangling = false) {
    write_file(dir / "tags.csv",
               "tag,count,is_language,canonical_language\n"
               "python,1500,true,python\n"
               "python-3.x,1000,true,python\n"
               "pandas,999,false,\n"
               "regex,2000,false,\n");
    write_file(dir / "questions.jsonl",
               "{\"id\":30,\"created_at\":\"2019-03-01T10:00:00Z\",\"tags\":[\"python\",\"pandas\"]}\n"
               "{\"id\":10,\"created_at\":\"2018-01-01T00:00:00+01:00\",\"tags\":[\"regex\"]}\n"
               "{\"id\":20,\"created_at\":\"2020-06-30T23:59:59Z\",\"tags\":[\"python-3.x\",\"regex\",\"python\"]}\n");
    std::string answers =
        "{\"id\":1,\"question_id\":10,\"user_id\":7,\"created_at\":\"2018-01-02T00:00:00Z\",\"votes\":3}\n"
        "{\"id\":2,\"question_id\":10,\"user_id\":8,\"created_at\":\"2018-01-03T00:00:00Z\",\"votes\":0}\n"
        "{\"id\":3,\"question_id\":20,\"user_id\":7,\"created_at\":\"2020-07-01T00:00:00Z\",\"votes\":1}\n"
        "{\"id\":5,\"question_id\":30,\"user_id\":9,\"created_at\":\"2019-03-02T00:00:00Z\",\"votes\":2}\n"
        "{\"id\":4,\"question_id\":30,\"user_id\":7,\"created_at\":\"2019-03-01T12:00:00Z\",\"votes\":5}\n";
    if (dangling)
        answers += "{\"id\":6,\"question_id\":99,\"user_id\":7,\"created_at\":\"2019-03-01T12:00:00Z\",\"votes\":5}\n";
    write_file(dir / "answers.jsonl", answers);
}

}  // namespace

TEST_CASE("three-question fixture loads with sorted tables and indices") {
    const auto dir = scratch_dir("fixture");
    write_fixture(dir);
    const auto c = load_corpus(CorpusPaths::in_directory(dir));
    CHECK(c.questions().size() == 3);
    CHECK(c.answers().size() == 5);
    CHECK(c.questions()[0].question_id == 10);
    CHECK(c.questions()[0].created_at == utc_timestamp(2017, 12, 31, 23));
    CHECK(c.answers()[3].answer_id == 4);
    CHECK(c.questions()[1].tag_ids == std::vector<TagId>{0, 1, 3});
    CHECK(c.users().size() == 3);
    CHECK(c.answers_of_user(7).size() == 3);
    CHECK(c.answers_of_user(1234).empty());
    const auto q30 = *c.question_index(30);
    CHECK(c.answers_of_question(q30).size() == 2);
    CHECK(c.question_of_answer(3) == q30);
    CHECK(c.tag(1).canonical_language == "python");
    CHECK_FALSE(c.tag(2).canonical_language.has_value());
}

TEST_CASE("dangling answer reference is an integrity error naming the answer") {
    const auto dir = scratch_dir("dangling");
    write_fixture(dir, true);
    try {
        load_corpus(CorpusPaths::in_directory(dir));
        FAIL("expected an integrity error");
    } catch (const IntegrityError& e) {
        CHECK(std::string(e.what()).find("6") != std::string::npos);
    }
}

TEST_CASE("malformed records report their line number") {
    const auto dir = scratch_dir("malformed");
    write_fixture(dir);
    write_file(dir / "answers.jsonl",
               "{\"id\":1,\"question_id\":10,\"user_id\":7,\"created_at\":\"2018-01-02T00:00:00Z\",\"votes\":3}\n"
               "{\"id\":2,\"question_id\":10,\"user_id\":7,\"created_at\":\"not a date\",\"votes\":3}\n");
    try {
        load_corpus(CorpusPaths::in_directory(dir));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    write_fixture(dir);
    write_file(dir / "answers.jsonl",
               "{\"id\":1,\"question_id\":10,\"user_id\":7,\"created_at\":\"2018-01-02T00:00:00Z\",\"votes\":-1}\n");
    CHECK_THROWS_AS(load_corpus(CorpusPaths::in_directory(dir)), ParseError);
}

TEST_CASE("duplicate answer ids are rejected") {
    std::vector<Tag> tags = {{0, "a", 1, false, std::nullopt}};
    std::vector<Question> qs = {{1, 0, {0}}};
    std::vector<Answer> as = {{1, 1, 1, 0, 0}, {1, 1, 2, 0, 0}};
    CHECK_THROWS_AS(Corpus(tags, qs, as), IntegrityError);
}

TEST_CASE("snapshot round trip is bit identical on re-save") {
    const auto c = random_corpus(3, 40, 1000, 3000, 150);
    const auto a = scratch_dir("snap_a"), b = scratch_dir("snap_b");
    save_snapshot(c, a);
    const auto back = load_snapshot(a);
    save_snapshot(back, b);
    for (const char* f : {"questions.jsonl", "answers.jsonl", "tags.csv", "index.json"})
        CHECK(read_file(a / f) == read_file(b / f));
    CHECK(back.questions().size() == 1000);
    CHECK(back.answers().size() == 3000);

    // Tampering is detected through the recorded hashes.
    write_file(a / "tags.csv", read_file(a / "tags.csv") + "zz,1,false,\n");
    CHECK_THROWS_AS(load_snapshot(a), IntegrityError);
}

TEST_CASE("filter_tags boundaries and brute-force agreement") {
    const auto dir = scratch_dir("filter");
    write_fixture(dir);
    const auto c = load_corpus(CorpusPaths::in_directory(dir));
    const auto sel = filter_tags(c, 1000);
    CHECK(sel.general == std::vector<TagId>{3});        // pandas at 999 excluded
    CHECK(sel.languages == std::vector<TagId>{0, 1});   // python-3.x at 1000 included
    CHECK_THROWS_AS(filter_tags(c, 0), Error);

    const auto r = random_corpus(5, 200, 10, 10, 3);
    std::size_t prev = r.tags().size() + 1;
    for (std::int64_t m : {1, 10, 500, 1000, 2000, 2999, 3000}) {
        const auto got = filter_tags(r, m).all();
        std::vector<TagId> want;
        for (const auto& t : r.tags())
            if (t.usage_count >= m) want.push_back(t.tag_id);
        CHECK(got == want);
        CHECK(got.size() <= prev);
        prev = got.size();
    }
}

TEST_CASE("select_active_users boundaries and group-by agreement") {
    std::vector<Tag> tags = {{0, "a", 1, false, std::nullopt}};
    std::vector<Question> qs = {{1, 0, {0}}};
    std::vector<Answer> as;
    for (PostId i = 0; i < 9; ++i) as.push_back({i + 1, 1, 100, 0, 0});
    for (PostId i = 0; i < 10; ++i) as.push_back({i + 50, 1, 200, 0, 0});
    const Corpus c(tags, qs, as);
    CHECK(select_active_users(c, 10) == std::vector<UserId>{200});
    CHECK(select_active_users(c, 9) == std::vector<UserId>{100, 200});

    const auto r = random_corpus(9, 20, 300, 4000, 200);
    std::map<UserId, std::int64_t> counts;
    for (const auto& a : r.answers()) ++counts[a.user_id];
    std::size_t prev = counts.size() + 1;
    for (std::int64_t m = 1; m <= 40; m += 3) {
        std::vector<UserId> want;
        for (auto [u, n] : counts)
            if (n >= m) want.push_back(u);
        const auto got = select_active_users(r, m);
        CHECK(got == want);
        CHECK(got.size() <= prev);
        prev = got.size();
    }
}

TEST_CASE("split_users partitions deterministically") {
    std::vector<UserId> ten(10);
    std::iota(ten.begin(), ten.end(), 1);
    const auto a = split_users(ten, 7), b = split_users(ten, 7);
    CHECK(a.s1.size() == 5);
    CHECK(a.s2.size() == 5);
    CHECK(a.s1 == b.s1);
    CHECK(a.s2 == b.s2);

    std::vector<UserId> eleven(11);
    std::iota(eleven.begin(), eleven.end(), 100);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = split_users(eleven, seed);
        CHECK(s.s1.size() + s.s2.size() == 11);
        CHECK(std::max(s.s1.size(), s.s2.size()) - std::min(s.s1.size(), s.s2.size()) == 1);
        std::vector<UserId> all = s.s1;
        all.insert(all.end(), s.s2.begin(), s.s2.end());
        std::sort(all.begin(), all.end());
        CHECK(all == eleven);
    }
    CHECK_THROWS_AS(split_users(std::vector<UserId>{}, 1), Error);
    CHECK_THROWS_AS(split_users(std::vector<UserId>{1}, 1), Error);
}

TEST_CASE("auxiliary readers") {
    const auto dir = scratch_dir("aux");
    write_file(dir / "survey.csv", "respondent_id,salary,tags\n1,100000,python;regex\n2,50000,pandas\n");
    const auto survey = read_survey_csv(dir / "survey.csv");
    REQUIRE(survey.size() == 2);
    CHECK(survey[0].tags == std::vector<std::string>{"python", "regex"});
    write_file(dir / "bad_survey.csv", "respondent_id,salary,tags\n1,-5,python\n");
    CHECK_THROWS_AS(read_survey_csv(dir / "bad_survey.csv"), ParseError);
    write_file(dir / "wrong_header.csv", "id,salary,tags\n");
    CHECK_THROWS_AS(read_survey_csv(dir / "wrong_header.csv"), ParseError);

    write_file(dir / "jobs.jsonl",
               "{\"job_id\":1,\"year\":2022,\"salary\":null,\"requirements\":[{\"text\":\"AWS\",\"embedding\":[1,0]}]}\n"
               "{\"job_id\":2,\"year\":2023,\"salary\":90000,\"requirements\":[]}\n");
    const auto jobs = read_job_ads(dir / "jobs.jsonl");
    REQUIRE(jobs.size() == 2);
    CHECK_FALSE(jobs[0].salary.has_value());
    CHECK(jobs[1].salary == 90000.0);
    CHECK(read_job_ads(dir / "jobs.jsonl").size() == 2);
    write_file(dir / "jobs2.jsonl", job_ads_jsonl(jobs));
    CHECK(read_file(dir / "jobs2.jsonl") == job_ads_jsonl(read_job_ads(dir / "jobs2.jsonl")));
}
