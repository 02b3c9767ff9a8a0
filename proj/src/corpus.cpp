#include "taskspace/corpus.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace taskspace {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    const std::string text = read_file(path);
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) fn(line, line_no);
        start = end + 1;
    }
}

json parse_json_line(const std::filesystem::path& path, std::string_view line, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(path.string(), line_no, e.what());
    }
}

template <typename Fn>
void for_each_csv_row(const std::filesystem::path& path, std::span<const std::string_view> header,
                      Fn&& fn) {
    bool first = true;
    for_each_line(path, [&](std::string_view line, std::size_t line_no) {
        std::vector<std::string> fields;
        try {
            fields = split_csv_line(line);
        } catch (const Error& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
        if (first) {
            first = false;
            if (fields.size() != header.size() ||
                !std::equal(fields.begin(), fields.end(), header.begin(),
                            [](const std::string& a, std::string_view b) { return trim(a) == b; })) {
                std::string want;
                for (auto h : header) want += (want.empty() ? "" : ",") + std::string(h);
                throw ParseError(path.string(), line_no, "expected header '" + want + "'");
            }
            return;
        }
        if (fields.size() != header.size())
            throw ParseError(path.string(), line_no,
                             "expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        try {
            fn(fields, line_no);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    });
    if (first) throw ParseError(path.string(), 1, "missing header");
}

bool parse_bool(const std::string& s) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "True" || t == "TRUE") return true;
    if (t == "false" || t == "0" || t == "False" || t == "FALSE" || t.empty()) return false;
    throw Error("bad boolean '" + t + "'");
}

Eigen::VectorXd to_vector(const json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

json from_vector(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace

// ---------------------------------------------------------------------------

Corpus::Corpus(std::vector<Tag> tags, std::vector<Question> questions, std::vector<Answer> answers)
    : tags_(std::move(tags)), questions_(std::move(questions)), answers_(std::move(answers)) {
    for (std::size_t i = 0; i < tags_.size(); ++i) {
        Tag& t = tags_[i];
        if (t.tag_id != i) throw IntegrityError("tag ids must be dense and ordered");
        if (t.usage_count < 0) throw IntegrityError("negative usage count for tag '" + t.name + "'");
        if (t.canonical_language && !t.is_language)
            throw IntegrityError("tag '" + t.name + "' has a canonical language but is not a language");
        if (!tag_by_name_.emplace(t.name, t.tag_id).second)
            throw IntegrityError("duplicate tag '" + t.name + "'");
    }

    std::sort(questions_.begin(), questions_.end(),
              [](const Question& a, const Question& b) { return a.question_id < b.question_id; });
    std::sort(answers_.begin(), answers_.end(),
              [](const Answer& a, const Answer& b) { return a.answer_id < b.answer_id; });

    bool first = true;
    for (std::size_t i = 0; i < questions_.size(); ++i) {
        Question& q = questions_[i];
        if (i > 0 && questions_[i - 1].question_id == q.question_id)
            throw IntegrityError("duplicate question id " + std::to_string(q.question_id));
        std::sort(q.tag_ids.begin(), q.tag_ids.end());
        q.tag_ids.erase(std::unique(q.tag_ids.begin(), q.tag_ids.end()), q.tag_ids.end());
        if (q.tag_ids.empty())
            throw IntegrityError("question " + std::to_string(q.question_id) + " has no tags");
        if (q.tag_ids.back() >= tags_.size())
            throw IntegrityError("question " + std::to_string(q.question_id) + " references unknown tag");
        question_pos_.emplace(q.question_id, i);
        t_min_ = first ? q.created_at : std::min(t_min_, q.created_at);
        t_max_ = first ? q.created_at : std::max(t_max_, q.created_at);
        first = false;
    }

    std::vector<PostId> dangling;
    answer_question_.resize(answers_.size());
    for (std::size_t i = 0; i < answers_.size(); ++i) {
        const Answer& a = answers_[i];
        if (i > 0 && answers_[i - 1].answer_id == a.answer_id)
            throw IntegrityError("duplicate answer id " + std::to_string(a.answer_id));
        if (a.votes < 0)
            throw IntegrityError("answer " + std::to_string(a.answer_id) + " has negative votes");
        auto it = question_pos_.find(a.question_id);
        if (it == question_pos_.end()) {
            dangling.push_back(a.answer_id);
            continue;
        }
        answer_question_[i] = it->second;
        t_min_ = first ? a.created_at : std::min(t_min_, a.created_at);
        t_max_ = first ? a.created_at : std::max(t_max_, a.created_at);
        first = false;
    }
    if (!dangling.empty()) {
        std::string msg = "answers reference missing questions:";
        for (std::size_t i = 0; i < dangling.size() && i < 20; ++i) msg += " " + std::to_string(dangling[i]);
        if (dangling.size() > 20) msg += " ... (" + std::to_string(dangling.size()) + " total)";
        throw IntegrityError(msg);
    }

    // question -> answers (CSR)
    q_offsets_.assign(questions_.size() + 1, 0);
    for (std::size_t i = 0; i < answers_.size(); ++i) ++q_offsets_[answer_question_[i] + 1];
    for (std::size_t i = 0; i < questions_.size(); ++i) q_offsets_[i + 1] += q_offsets_[i];
    q_answers_.resize(answers_.size());
    {
        auto fill = q_offsets_;
        for (std::size_t i = 0; i < answers_.size(); ++i) q_answers_[fill[answer_question_[i]]++] = i;
    }

    // user -> answers (CSR)
    users_.reserve(answers_.size());
    for (const Answer& a : answers_) users_.push_back(a.user_id);
    std::sort(users_.begin(), users_.end());
    users_.erase(std::unique(users_.begin(), users_.end()), users_.end());
    u_offsets_.assign(users_.size() + 1, 0);
    std::vector<std::size_t> user_pos(answers_.size());
    for (std::size_t i = 0; i < answers_.size(); ++i) {
        user_pos[i] = static_cast<std::size_t>(
            std::lower_bound(users_.begin(), users_.end(), answers_[i].user_id) - users_.begin());
        ++u_offsets_[user_pos[i] + 1];
    }
    for (std::size_t i = 0; i < users_.size(); ++i) u_offsets_[i + 1] += u_offsets_[i];
    u_answers_.resize(answers_.size());
    {
        auto fill = u_offsets_;
        for (std::size_t i = 0; i < answers_.size(); ++i) u_answers_[fill[user_pos[i]]++] = i;
    }
}

std::optional<TagId> Corpus::find_tag(std::string_view name) const {
    auto it = tag_by_name_.find(std::string(name));
    if (it == tag_by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Corpus::question_index(PostId id) const {
    auto it = question_pos_.find(id);
    if (it == question_pos_.end()) return std::nullopt;
    return it->second;
}

std::span<const std::size_t> Corpus::answers_of_question(std::size_t qi) const {
    return std::span<const std::size_t>(q_answers_).subspan(q_offsets_[qi], q_offsets_[qi + 1] - q_offsets_[qi]);
}

std::span<const std::size_t> Corpus::answers_of_user(UserId user) const {
    auto it = std::lower_bound(users_.begin(), users_.end(), user);
    if (it == users_.end() || *it != user) return {};
    const auto u = static_cast<std::size_t>(it - users_.begin());
    return std::span<const std::size_t>(u_answers_).subspan(u_offsets_[u], u_offsets_[u + 1] - u_offsets_[u]);
}

// ---------------------------------------------------------------------------
// Readers

CorpusPaths CorpusPaths::in_directory(const std::filesystem::path& dir) {
    return {dir / "questions.jsonl", dir / "answers.jsonl", dir / "tags.csv"};
}

std::vector<Tag> read_tags_csv(const std::filesystem::path& path) {
    static constexpr std::string_view header[] = {"tag", "count", "is_language", "canonical_language"};
    std::vector<Tag> tags;
    for_each_csv_row(path, header, [&](const std::vector<std::string>& f, std::size_t) {
        Tag t;
        t.tag_id = static_cast<TagId>(tags.size());
        t.name = trim(f[0]);
        if (t.name.empty()) throw Error("empty tag name");
        t.usage_count = std::stoll(f[1]);
        t.is_language = parse_bool(f[2]);
        if (auto c = trim(f[3]); !c.empty()) t.canonical_language = c;
        tags.push_back(std::move(t));
    });
    return tags;
}

Corpus load_corpus(const CorpusPaths& paths) {
    std::vector<Tag> tags = read_tags_csv(paths.tags);
    std::unordered_map<std::string, TagId> by_name;
    for (const Tag& t : tags) by_name.emplace(t.name, t.tag_id);

    std::vector<Question> questions;
    for_each_line(paths.questions, [&](std::string_view line, std::size_t line_no) {
        const json j = parse_json_line(paths.questions, line, line_no);
        try {
            Question q;
            q.question_id = j.at("id").get<PostId>();
            q.created_at = parse_rfc3339(j.at("created_at").get<std::string>());
            for (const auto& name : j.at("tags")) {
                auto it = by_name.find(name.get<std::string>());
                if (it == by_name.end())
                    throw IntegrityError("unknown tag '" + name.get<std::string>() + "'");
                q.tag_ids.push_back(it->second);
            }
            if (q.tag_ids.empty()) throw Error("question without tags");
            questions.push_back(std::move(q));
        } catch (const std::exception& e) {
            throw ParseError(paths.questions.string(), line_no, e.what());
        }
    });

    std::vector<Answer> answers;
    for_each_line(paths.answers, [&](std::string_view line, std::size_t line_no) {
        const json j = parse_json_line(paths.answers, line, line_no);
        try {
            Answer a;
            a.answer_id = j.at("id").get<PostId>();
            a.question_id = j.at("question_id").get<PostId>();
            a.user_id = j.at("user_id").get<UserId>();
            a.created_at = parse_rfc3339(j.at("created_at").get<std::string>());
            a.votes = j.at("votes").get<std::int64_t>();
            if (a.votes < 0) throw Error("negative votes");
            answers.push_back(a);
        } catch (const std::exception& e) {
            throw ParseError(paths.answers.string(), line_no, e.what());
        }
    });

    return Corpus(std::move(tags), std::move(questions), std::move(answers));
}

std::vector<SurveyRecord> read_survey_csv(const std::filesystem::path& path) {
    static constexpr std::string_view header[] = {"respondent_id", "salary", "tags"};
    std::vector<SurveyRecord> out;
    for_each_csv_row(path, header, [&](const std::vector<std::string>& f, std::size_t) {
        SurveyRecord r;
        r.respondent_id = std::stoull(f[0]);
        r.salary = std::stod(f[1]);
        if (!(r.salary > 0)) throw Error("salary must be positive");
        for (auto& t : split(f[2], ';'))
            if (auto s = trim(t); !s.empty()) r.tags.push_back(s);
        if (r.tags.empty()) throw Error("respondent without tags");
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<JobAdRecord> read_job_ads(const std::filesystem::path& path) {
    std::vector<JobAdRecord> out;
    Eigen::Index dim = -1;
    for_each_line(path, [&](std::string_view line, std::size_t line_no) {
        const json j = parse_json_line(path, line, line_no);
        try {
            JobAdRecord r;
            r.job_id = j.at("job_id").get<std::uint64_t>();
            r.year = j.at("year").get<int>();
            if (!j.at("salary").is_null()) {
                r.salary = j.at("salary").get<double>();
                if (!(*r.salary > 0)) throw Error("salary must be positive");
            }
            for (const auto& req : j.at("requirements")) {
                Requirement q{req.at("text").get<std::string>(), to_vector(req.at("embedding"))};
                if (dim < 0) dim = q.embedding.size();
                if (q.embedding.size() != dim) throw Error("embedding dimension mismatch");
                r.requirements.push_back(std::move(q));
            }
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    });
    return out;
}

std::vector<TaskLabelRecord> read_task_labels(const std::filesystem::path& path) {
    std::vector<TaskLabelRecord> out;
    for_each_line(path, [&](std::string_view line, std::size_t line_no) {
        const json j = parse_json_line(path, line, line_no);
        try {
            TaskLabelRecord r;
            r.task_id = j.at("task_id").get<std::uint32_t>();
            r.short_label = j.at("short_label").get<std::string>();
            r.long_label = j.at("long_label").get<std::string>();
            r.embedding = to_vector(j.at("embedding"));
            if (!out.empty() && out.front().embedding.size() != r.embedding.size())
                throw Error("embedding dimension mismatch");
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    });
    return out;
}

std::vector<LanguageShareRecord> read_language_shares(const std::filesystem::path& path) {
    static constexpr std::string_view header[] = {"language", "year", "external_share"};
    std::vector<LanguageShareRecord> out;
    for_each_csv_row(path, header, [&](const std::vector<std::string>& f, std::size_t) {
        LanguageShareRecord r{trim(f[0]), std::stoi(f[1]), std::stod(f[2])};
        if (r.external_share < 0) throw Error("negative share");
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<LanguageRule> read_language_rules(const std::filesystem::path& path) {
    static constexpr std::string_view header[] = {"tag", "canonical_language"};
    std::vector<LanguageRule> out;
    for_each_csv_row(path, header, [&](const std::vector<std::string>& f, std::size_t) {
        out.push_back({trim(f[0]), trim(f[1])});
    });
    return out;
}

// ---------------------------------------------------------------------------
// Writers

std::string questions_jsonl(const Corpus& corpus) {
    std::string out;
    for (const Question& q : corpus.questions()) {
        json j;
        j["id"] = q.question_id;
        j["created_at"] = format_rfc3339(q.created_at);
        json tags = json::array();
        for (TagId t : q.tag_ids) tags.push_back(corpus.tag(t).name);
        j["tags"] = std::move(tags);
        out += j.dump() + "\n";
    }
    return out;
}

std::string answers_jsonl(const Corpus& corpus) {
    std::string out;
    for (const Answer& a : corpus.answers()) {
        json j;
        j["id"] = a.answer_id;
        j["question_id"] = a.question_id;
        j["user_id"] = a.user_id;
        j["created_at"] = format_rfc3339(a.created_at);
        j["votes"] = a.votes;
        out += j.dump() + "\n";
    }
    return out;
}

std::string tags_csv(std::span<const Tag> tags) {
    std::string out = "tag,count,is_language,canonical_language\n";
    for (const Tag& t : tags)
        out += csv_escape(t.name) + "," + std::to_string(t.usage_count) + "," +
               (t.is_language ? "true" : "false") + "," + csv_escape(t.canonical_language.value_or("")) +
               "\n";
    return out;
}

std::string survey_csv(std::span<const SurveyRecord> survey) {
    std::string out = "respondent_id,salary,tags\n";
    for (const SurveyRecord& r : survey) {
        std::string tags;
        for (const auto& t : r.tags) tags += (tags.empty() ? "" : ";") + t;
        out += std::to_string(r.respondent_id) + "," + format_double(r.salary) + "," + csv_escape(tags) + "\n";
    }
    return out;
}

std::string job_ads_jsonl(std::span<const JobAdRecord> jobs) {
    std::string out;
    for (const JobAdRecord& r : jobs) {
        json j;
        j["job_id"] = r.job_id;
        j["year"] = r.year;
        j["salary"] = r.salary ? json(*r.salary) : json(nullptr);
        json reqs = json::array();
        for (const auto& q : r.requirements) reqs.push_back({{"text", q.text}, {"embedding", from_vector(q.embedding)}});
        j["requirements"] = std::move(reqs);
        out += j.dump() + "\n";
    }
    return out;
}

std::string task_labels_jsonl(std::span<const TaskLabelRecord> labels) {
    std::string out;
    for (const TaskLabelRecord& r : labels) {
        json j;
        j["task_id"] = r.task_id;
        j["short_label"] = r.short_label;
        j["long_label"] = r.long_label;
        j["embedding"] = from_vector(r.embedding);
        out += j.dump() + "\n";
    }
    return out;
}

std::string language_shares_csv(std::span<const LanguageShareRecord> shares) {
    std::string out = "language,year,external_share\n";
    for (const auto& s : shares)
        out += csv_escape(s.language) + "," + std::to_string(s.year) + "," + format_double(s.external_share) + "\n";
    return out;
}

std::string language_rules_csv(std::span<const LanguageRule> rules) {
    std::string out = "tag,canonical_language\n";
    for (const auto& r : rules) out += csv_escape(r.tag) + "," + csv_escape(r.canonical_language) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Snapshot

void save_snapshot(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string q = questions_jsonl(corpus);
    const std::string a = answers_jsonl(corpus);
    const std::string t = tags_csv(corpus.tags());
    write_file(dir / "questions.jsonl", q);
    write_file(dir / "answers.jsonl", a);
    write_file(dir / "tags.csv", t);

    json index;
    index["format"] = 1;
    index["counts"] = {{"questions", corpus.questions().size()},
                       {"answers", corpus.answers().size()},
                       {"tags", corpus.tags().size()},
                       {"users", corpus.users().size()}};
    index["files"] = {{"questions.jsonl", hex64(fnv1a64(q))},
                      {"answers.jsonl", hex64(fnv1a64(a))},
                      {"tags.csv", hex64(fnv1a64(t))}};
    // user_index[i] is the user id with dense index i
    index["user_index"] = std::vector<UserId>(corpus.users().begin(), corpus.users().end());
    write_file(dir / "index.json", index.dump(1) + "\n");
}

Corpus load_snapshot(const std::filesystem::path& dir) {
    const auto index_path = dir / "index.json";
    if (!std::filesystem::exists(index_path)) throw Error("snapshot index missing in " + dir.string());
    const json index = json::parse(read_file(index_path));
    for (const auto& [name, hash] : index.at("files").items()) {
        if (file_hash_hex(dir / name) != hash.get<std::string>())
            throw IntegrityError("snapshot file " + name + " does not match its recorded hash");
    }
    Corpus c = load_corpus(CorpusPaths::in_directory(dir));
    const auto& counts = index.at("counts");
    if (counts.at("questions").get<std::size_t>() != c.questions().size() ||
        counts.at("answers").get<std::size_t>() != c.answers().size() ||
        counts.at("tags").get<std::size_t>() != c.tags().size() ||
        index.at("user_index").get<std::vector<UserId>>() != std::vector<UserId>(c.users().begin(), c.users().end()))
        throw IntegrityError("snapshot index inconsistent with tables");
    return c;
}

// ---------------------------------------------------------------------------

std::vector<TagId> TagSelection::all() const {
    std::vector<TagId> out = general;
    out.insert(out.end(), languages.begin(), languages.end());
    std::sort(out.begin(), out.end());
    return out;
}

TagSelection filter_tags(const Corpus& corpus, std::int64_t min_uses) {
    if (min_uses < 1) throw Error("filter_tags: min_uses must be >= 1");
    TagSelection sel;
    for (const Tag& t : corpus.tags()) {
        if (t.usage_count < min_uses) continue;
        (t.is_language ? sel.languages : sel.general).push_back(t.tag_id);
    }
    return sel;
}

std::vector<UserId> select_active_users(const Corpus& corpus, std::int64_t min_answers) {
    if (min_answers < 1) throw Error("select_active_users: min_answers must be >= 1");
    std::vector<UserId> out;
    for (UserId u : corpus.users())
        if (static_cast<std::int64_t>(corpus.answers_of_user(u).size()) >= min_answers) out.push_back(u);
    return out;
}

UserSplit split_users(std::span<const UserId> users, std::uint64_t seed) {
    if (users.size() < 2) throw Error("split_users: need at least two users");
    std::vector<UserId> pool(users.begin(), users.end());
    std::sort(pool.begin(), pool.end());
    if (std::adjacent_find(pool.begin(), pool.end()) != pool.end())
        throw Error("split_users: duplicate user ids");
    Rng rng(seed);
    shuffle(pool, rng);
    const std::size_t half = (pool.size() + 1) / 2;
    UserSplit s{{pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(half)},
                {pool.begin() + static_cast<std::ptrdiff_t>(half), pool.end()}};
    std::sort(s.s1.begin(), s.s1.end());
    std::sort(s.s2.begin(), s.s2.end());
    return s;
}

}  // namespace taskspace
