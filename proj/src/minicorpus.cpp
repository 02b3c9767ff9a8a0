#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "taskspace/synth.hpp"

namespace taskspace::synth {

namespace {

constexpr int kFirstYear = 2016;
constexpr int kLastYear = 2023;
constexpr Eigen::Index kDim = 16;

struct Community {
    const char* name;
    std::array<const char*, 10> tags;
    std::array<const char*, 3> languages;
    double log_salary;
};

const std::array<Community, 6> kCommunities{{
    {"web", {"html", "css", "dom", "http", "rest-api", "cookies", "forms", "ajax", "routing", "templates"},
     {"javascript", "php", "jquery"}, 11.0},
    {"data", {"pandas", "numpy", "dataframe", "csv", "plotting", "regression", "statistics", "matrix", "sampling",
              "clustering"},
     {"python", "r", "python-3.x"}, 11.3},
    {"db", {"sql", "joins", "indexing", "transactions", "postgresql", "mysql", "orm", "migrations",
            "query-optimization", "stored-procedures"},
     {"java", "php", "python"}, 11.1},
    {"mobile", {"android", "ios", "layout", "gestures", "push-notifications", "app-store", "permissions", "camera",
                "geolocation", "widgets"},
     {"swift", "objective-c", "java"}, 11.2},
    {"systems", {"memory", "pointers", "threads", "mutex", "linker", "compiler", "segfault", "sockets", "signals",
                 "kernel"},
     {"c", "c++", "go"}, 11.4},
    {"devops", {"docker", "kubernetes", "ci", "deployment", "yaml", "nginx", "terraform", "monitoring", "logging",
                "bash"},
     {"go", "python", "javascript"}, 11.35},
}};

// Rarely used tags that the usage filter removes.
const std::array<std::pair<const char*, std::size_t>, 2> kRareTags{{{"legacy-cgi", 0}, {"fortran-io", 4}}};

const std::array<const char*, 12> kLanguages{"c",    "c++",        "go",    "java",        "javascript", "jquery",
                                             "objective-c", "php", "python", "python-3.x", "r",          "swift"};

Eigen::VectorXd unit_normal(Rng& rng) {
    Eigen::VectorXd v(kDim);
    for (Eigen::Index i = 0; i < kDim; ++i) v(i) = standard_normal(rng);
    return v.normalized();
}

Eigen::VectorXd noisy(const Eigen::VectorXd& base, double scale, Rng& rng) {
    Eigen::VectorXd v = base;
    for (Eigen::Index i = 0; i < kDim; ++i) v(i) += scale * standard_normal(rng) / std::sqrt(static_cast<double>(kDim));
    return v.normalized();
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[uniform_index(rng, v.size())];
}

// Language for a question of community c in a given year; swift replaces
// objective-c in mobile questions over the years.
std::string question_language(Rng& rng, std::size_t c, int year) {
    const auto& langs = kCommunities[c].languages;
    if (kCommunities[c].name == std::string("mobile") && bernoulli(rng, 0.8)) {
        const double p_swift = std::clamp((year - 2016) / 5.0, 0.05, 0.95);
        return bernoulli(rng, p_swift) ? "swift" : "objective-c";
    }
    const double u = uniform01(rng);
    return langs[u < 0.6 ? 0 : (u < 0.85 ? 1 : 2)];
}

}  // namespace

MiniCorpus mini_corpus(std::size_t num_questions, std::uint64_t seed) {
    if (num_questions < 100) throw Error("mini_corpus: need at least 100 questions");
    MiniCorpus m;
    Rng rng(substream_seed(seed, "mini.tags"));

    std::vector<std::vector<TagId>> community_tags(kCommunities.size());
    auto add_tag = [&](const std::string& name, std::int64_t usage, bool language) {
        const auto id = static_cast<TagId>(m.tags.size());
        m.tags.push_back({id, name, usage, language, std::nullopt});
        return id;
    };
    for (std::size_t c = 0; c < kCommunities.size(); ++c) {
        for (const char* name : kCommunities[c].tags) {
            community_tags[c].push_back(add_tag(name, 1000 + static_cast<std::int64_t>(uniform_index(rng, 60000)), false));
            m.community_of[name] = c;
        }
    }
    std::vector<TagId> rare;
    for (const auto& [name, c] : kRareTags) {
        rare.push_back(add_tag(name, 200 + static_cast<std::int64_t>(uniform_index(rng, 500)), false));
        m.community_of[name] = c;
    }
    std::map<std::string, TagId> language_tag;
    for (const char* name : kLanguages) language_tag[name] = add_tag(name, 20000 + static_cast<std::int64_t>(uniform_index(rng, 900000)), true);
    for (std::size_t c = 0; c < kCommunities.size(); ++c) m.community_vectors.push_back(unit_normal(rng));

    m.rules.push_back({"python-3.x", "python"});
    m.excluded.insert("jquery");

    // users: home community, secondary community, preferred day-minute, skill
    struct User {
        std::size_t home, second;
        int minute;
        double skill;
    };
    Rng urng(substream_seed(seed, "mini.users"));
    const std::size_t num_users = std::max<std::size_t>(40, num_questions / 7);
    std::vector<User> users;
    std::vector<std::vector<std::size_t>> by_community(kCommunities.size());
    for (std::size_t u = 0; u < num_users; ++u) {
        User x{uniform_index(urng, kCommunities.size()), uniform_index(urng, kCommunities.size()),
               static_cast<int>(uniform_index(urng, kMinutesPerDay)), 3 * uniform01(urng)};
        by_community[x.home].push_back(u);
        if (x.second != x.home) by_community[x.second].push_back(u);
        users.push_back(x);
    }

    // questions and answers
    Rng qrng(substream_seed(seed, "mini.posts"));
    const Timestamp start = utc_timestamp(kFirstYear, 1, 1), end = utc_timestamp(kLastYear, 12, 1);
    struct RawAnswer {
        std::size_t question;
        std::size_t user;
        Timestamp at;
        std::int64_t votes;
    };
    std::vector<RawAnswer> raw;
    std::vector<Question> qs;
    for (std::size_t i = 0; i < num_questions; ++i) {
        const std::size_t c = uniform_index(qrng, kCommunities.size());
        Question q;
        q.created_at = start + static_cast<Timestamp>(uniform_index(qrng, static_cast<std::uint64_t>(end - start)));
        const std::size_t k = 2 + uniform_index(qrng, 3);
        for (std::size_t j = 0; j < k; ++j) q.tag_ids.push_back(pick(qrng, community_tags[c]));
        if (bernoulli(qrng, 0.1)) q.tag_ids.push_back(pick(qrng, community_tags[uniform_index(qrng, kCommunities.size())]));
        if (bernoulli(qrng, 0.03)) q.tag_ids.push_back(rare[uniform_index(qrng, rare.size())]);
        if (bernoulli(qrng, 0.75)) q.tag_ids.push_back(language_tag.at(question_language(qrng, c, utc_year(q.created_at))));
        std::sort(q.tag_ids.begin(), q.tag_ids.end());
        q.tag_ids.erase(std::unique(q.tag_ids.begin(), q.tag_ids.end()), q.tag_ids.end());
        qs.push_back(q);

        const std::size_t n_answers = uniform_index(qrng, 6);  // 0..5
        const int qminute = day_minute(q.created_at);
        for (std::size_t a = 0; a < n_answers; ++a) {
            const std::size_t u = bernoulli(qrng, 0.8) && !by_community[c].empty() ? pick(qrng, by_community[c])
                                                                                    : uniform_index(qrng, num_users);
            // the answer lands near the user's preferred minute, sometimes days later
            const int wait = (users[u].minute - qminute + kMinutesPerDay) % kMinutesPerDay;
            Timestamp gap = 60 * (wait + static_cast<Timestamp>(uniform_index(qrng, 60)));
            if (bernoulli(qrng, 0.15)) gap += 86400 * static_cast<Timestamp>(1 + uniform_index(qrng, 4));
            const double mean = 1 + users[u].skill * (users[u].home == c ? 1.5 : 0.5);
            const auto votes = static_cast<std::int64_t>(std::floor(-std::log(1 - uniform01(qrng)) * mean));
            raw.push_back({i, u, q.created_at + gap, votes});
        }
    }
    // ids follow creation time
    std::vector<std::size_t> qorder(qs.size());
    std::iota(qorder.begin(), qorder.end(), 0);
    std::stable_sort(qorder.begin(), qorder.end(), [&](auto a, auto b) { return qs[a].created_at < qs[b].created_at; });
    std::vector<PostId> qid(qs.size());
    for (std::size_t r = 0; r < qorder.size(); ++r) {
        qid[qorder[r]] = r + 1;
        qs[qorder[r]].question_id = r + 1;
        m.questions.push_back(qs[qorder[r]]);
    }
    std::stable_sort(raw.begin(), raw.end(), [](const RawAnswer& a, const RawAnswer& b) { return a.at < b.at; });
    for (std::size_t r = 0; r < raw.size(); ++r)
        m.answers.push_back({100000 + r, qid[raw[r].question], 1000 + raw[r].user, raw[r].at, raw[r].votes});

    // survey
    Rng srng(substream_seed(seed, "mini.survey"));
    const std::size_t respondents = std::max<std::size_t>(100, num_questions / 3);
    for (std::size_t r = 0; r < respondents; ++r) {
        const std::size_t c = uniform_index(srng, kCommunities.size());
        SurveyRecord s;
        s.respondent_id = r + 1;
        s.salary = std::round(std::exp(kCommunities[c].log_salary + 0.25 * standard_normal(srng)));
        const std::size_t k = 3 + uniform_index(srng, 4);
        std::set<std::string> names;
        for (std::size_t j = 0; j < k; ++j) names.insert(kCommunities[c].tags[uniform_index(srng, 10)]);
        for (std::size_t j = uniform_index(srng, 3); j > 0; --j)
            names.insert(kCommunities[uniform_index(srng, kCommunities.size())].tags[uniform_index(srng, 10)]);
        names.insert(kCommunities[c].languages[0]);
        s.tags.assign(names.begin(), names.end());
        m.survey.push_back(s);
    }

    // job ads
    Rng jrng(substream_seed(seed, "mini.jobs"));
    const std::size_t num_jobs = std::max<std::size_t>(100, num_questions / 3);
    for (std::size_t j = 0; j < num_jobs; ++j) {
        const std::size_t c = uniform_index(jrng, kCommunities.size());
        JobAdRecord job;
        job.job_id = j + 1;
        job.year = 2019 + static_cast<int>(uniform_index(jrng, 5));
        const std::size_t k = 3 + uniform_index(jrng, 4);
        double log_salary = 0;
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t rc = bernoulli(jrng, 0.75) ? c : uniform_index(jrng, kCommunities.size());
            const char* tag = kCommunities[rc].tags[uniform_index(jrng, 10)];
            job.requirements.push_back({std::string("experience with ") + tag, noisy(m.community_vectors[rc], 0.35, jrng)});
            log_salary += kCommunities[rc].log_salary;
        }
        if (bernoulli(jrng, 0.3)) job.requirements.push_back({"team player", unit_normal(jrng)});
        if (bernoulli(jrng, 0.8))
            job.salary = std::round(std::exp(log_salary / static_cast<double>(k) + 0.2 * standard_normal(jrng)));
        m.jobs.push_back(std::move(job));
    }

    // external language shares; swift overtakes objective-c
    Rng lrng(substream_seed(seed, "mini.shares"));
    for (int y = kFirstYear; y <= kLastYear; ++y) {
        std::map<std::string, double> w;
        for (const char* name : kLanguages) {
            const std::string l = name;
            if (l == "python-3.x" || l == "jquery") continue;
            w[l] = 0.5 + uniform01(lrng);
        }
        w["swift"] = 0.2 + 0.25 * (y - kFirstYear);
        w["objective-c"] = std::max(0.1, 1.8 - 0.25 * (y - kFirstYear));
        double total = 0;
        for (const auto& [l, v] : w) total += v;
        for (const auto& [l, v] : w) m.shares.push_back({l, y, 0.9 * v / total});
    }
    return m;
}

std::vector<TaskLabelRecord> mini_task_labels(const MiniCorpus& mini, const TaskTaxonomy& taxonomy,
                                              std::span<const Tag> tag_table, std::uint64_t seed) {
    Rng rng(substream_seed(seed, "mini.labels"));
    std::vector<TaskLabelRecord> out;
    for (const Task& task : taxonomy.tasks()) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(kDim);
        std::string names;
        for (TagId t : task.tags) {
            const std::string& name = tag_table[t].name;
            auto it = mini.community_of.find(name);
            if (it == mini.community_of.end()) throw Error("mini_task_labels: tag '" + name + "' is not a planted tag");
            v += mini.community_vectors[it->second];
            names += (names.empty() ? "" : ", ") + name;
        }
        const std::string& main = tag_table[task.tags.front()].name;
        out.push_back({task.task_id, main + " and related", "Work involving " + names, noisy(v.normalized(), 0.1, rng)});
    }
    return out;
}

void write_mini_corpus(const MiniCorpus& mini, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const Corpus corpus(mini.tags, mini.questions, mini.answers);
    write_file(dir / "questions.jsonl", questions_jsonl(corpus));
    write_file(dir / "answers.jsonl", answers_jsonl(corpus));
    write_file(dir / "tags.csv", tags_csv(corpus.tags()));
    write_file(dir / "survey.csv", survey_csv(mini.survey));
    write_file(dir / "job_ads.jsonl", job_ads_jsonl(mini.jobs));
    write_file(dir / "language_shares.csv", language_shares_csv(mini.shares));
    write_file(dir / "language_rules.csv", language_rules_csv(mini.rules));
    std::string excl = "# canonical names that are frameworks rather than languages\n";
    for (const auto& l : mini.excluded) excl += l + "\n";
    write_file(dir / "exclude_languages.txt", excl);
}

}  // namespace taskspace::synth
