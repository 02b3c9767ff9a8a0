#include "taskspace/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace taskspace {

Survey::Survey(std::vector<SurveyRespondent> respondents) : respondents_(std::move(respondents)) {
    std::sort(respondents_.begin(), respondents_.end(),
              [](const auto& a, const auto& b) { return a.respondent_id < b.respondent_id; });
    for (std::size_t i = 0; i < respondents_.size(); ++i) {
        auto& r = respondents_[i];
        if (i > 0 && respondents_[i - 1].respondent_id == r.respondent_id)
            throw Error("duplicate respondent " + std::to_string(r.respondent_id));
        if (!(r.salary > 0)) throw Error("respondent " + std::to_string(r.respondent_id) + " has no positive salary");
        std::sort(r.tags.begin(), r.tags.end());
        r.tags.erase(std::unique(r.tags.begin(), r.tags.end()), r.tags.end());
        if (r.tags.empty()) throw Error("respondent " + std::to_string(r.respondent_id) + " has no tags");
        for (TagId t : r.tags) holders_[t].push_back(i);
    }
}

std::span<const std::size_t> Survey::holders(TagId tag) const {
    auto it = holders_.find(tag);
    if (it == holders_.end()) return {};
    return it->second;
}

Survey survey_from_records(std::span<const SurveyRecord> records, const Corpus& corpus,
                           const std::map<std::string, std::string>& aliases, Warnings* warnings) {
    std::map<std::string, TagId> canonical;
    for (const Tag& t : corpus.tags())
        if (t.canonical_language) canonical.emplace(*t.canonical_language, t.tag_id);
    std::set<std::string> unresolved;
    std::vector<SurveyRespondent> out;
    for (const auto& rec : records) {
        SurveyRespondent r{rec.respondent_id, rec.salary, {}};
        for (const auto& name : rec.tags) {
            auto id = corpus.find_tag(name);
            if (!id) {
                auto a = aliases.find(name);
                if (a != aliases.end()) id = corpus.find_tag(a->second);
            }
            if (!id) {
                auto c = canonical.find(name);
                if (c != canonical.end()) id = c->second;
            }
            if (id)
                r.tags.push_back(*id);
            else
                unresolved.insert(name);
        }
        if (r.tags.empty()) {
            if (warnings) warnings->push_back("respondent " + std::to_string(rec.respondent_id) + " has no known tags");
            continue;
        }
        out.push_back(std::move(r));
    }
    if (warnings)
        for (const auto& name : unresolved) warnings->push_back("survey technology '" + name + "' matches no tag");
    return Survey(std::move(out));
}

RespondentMatch match_respondents(std::span<const TagId> user_tags, const Survey& survey, std::size_t k) {
    if (survey.size() == 0) throw Error("match_respondents: empty survey");
    std::vector<TagId> tags(user_tags.begin(), user_tags.end());
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());

    std::vector<std::int64_t> overlap(survey.size(), 0);
    for (TagId t : tags)
        for (std::size_t r : survey.holders(t)) ++overlap[r];

    RespondentMatch m;
    for (std::size_t r = 0; r < survey.size(); ++r)
        if (overlap[r] > 0) {
            const auto& resp = survey.respondents()[r];
            m.entries.push_back({resp.respondent_id, overlap[r], resp.salary});
        }
    std::sort(m.entries.begin(), m.entries.end(), [](const MatchEntry& a, const MatchEntry& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        return a.respondent_id < b.respondent_id;
    });
    if (m.entries.size() > k) m.entries.resize(k);
    return m;
}

double impute_user_value(const RespondentMatch& match) {
    double num = 0, den = 0;
    for (const auto& e : match.entries) {
        num += static_cast<double>(e.overlap) * e.salary;
        den += static_cast<double>(e.overlap);
    }
    if (!(den > 0)) throw Error("unmatched user");
    return num / den;
}

std::vector<TagId> user_tag_set(const Corpus& corpus, UserId user, const Window& window) {
    std::vector<TagId> tags;
    for (std::size_t ai : corpus.answers_of_user(user)) {
        if (!window.contains(corpus.answers()[ai].created_at)) continue;
        const auto& q = corpus.questions()[corpus.question_of_answer(ai)];
        tags.insert(tags.end(), q.tag_ids.begin(), q.tag_ids.end());
    }
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    return tags;
}

UserValues impute_user_values(const Corpus& corpus, std::span<const UserId> users, const Survey& survey,
                              const Window& window, std::size_t k) {
    std::vector<UserId> sorted(users.begin(), users.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    UserValues out;
    for (UserId u : sorted) {
        const auto m = match_respondents(user_tag_set(corpus, u, window), survey, k);
        if (m.entries.empty()) continue;  // unmatched users carry no value
        out.users.push_back(u);
        out.value.push_back(impute_user_value(m));
        out.matched_k.push_back(m.entries.size());
    }
    return out;
}

TaskValues task_values(const UserValues& users, const UserTaskMatrix& X) {
    const Eigen::Index n = X.T.rows();
    Eigen::VectorXd num = Eigen::VectorXd::Zero(n), den = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity()), hi = -lo;
    TaskValues out;
    out.contributing_users.assign(static_cast<std::size_t>(n), 0);
    out.window = X.window.label;
    for (std::size_t i = 0; i < users.users.size(); ++i) {
        const Eigen::Index col = X.column(users.users[i]);
        if (col < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(X.T, col); it; ++it) {
            if (it.value() <= 0) continue;
            num(it.row()) += it.value() * users.value[i];
            den(it.row()) += it.value();
            lo(it.row()) = std::min(lo(it.row()), users.value[i]);
            hi(it.row()) = std::max(hi(it.row()), users.value[i]);
            ++out.contributing_users[static_cast<std::size_t>(it.row())];
        }
    }
    out.value.resize(n);
    // the clamp only absorbs rounding; the ratio is a convex combination
    for (Eigen::Index t = 0; t < n; ++t)
        out.value(t) = den(t) > 0 ? std::clamp(num(t) / den(t), lo(t), hi(t)) : std::nan("");
    return out;
}

std::string task_values_csv(const TaskValues& v) {
    std::string out = "task_id,value,contributing_users\n";
    for (Eigen::Index t = 0; t < v.value.size(); ++t)
        out += std::to_string(t) + "," + format_double(v.value(t)) + "," +
               std::to_string(v.contributing_users[static_cast<std::size_t>(t)]) + "\n";
    return out;
}

std::string user_values_csv(const UserValues& v) {
    std::string out = "user_id,value,matched_k\n";
    for (std::size_t i = 0; i < v.users.size(); ++i)
        out += std::to_string(v.users[i]) + "," + format_double(v.value[i]) + "," + std::to_string(v.matched_k[i]) +
               "\n";
    return out;
}

TaskValues parse_task_values_csv(const std::string& text, std::size_t num_tasks) {
    TaskValues v;
    v.value = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(num_tasks), std::nan(""));
    v.contributing_users.assign(num_tasks, 0);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "task_id,value,contributing_users") throw ParseError("task_values.csv", 1, "unexpected header");
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 3) throw ParseError("task_values.csv", line_no, "expected 3 fields");
        const auto t = std::stoul(f[0]);
        if (t >= num_tasks) throw ParseError("task_values.csv", line_no, "task id out of range");
        v.value(static_cast<Eigen::Index>(t)) = f[1] == "NA" ? std::nan("") : std::stod(f[1]);
        v.contributing_users[t] = std::stoul(f[2]);
    }
    return v;
}

}  // namespace taskspace
