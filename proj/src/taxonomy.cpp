#include "taskspace/taxonomy.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>

namespace taskspace {

using json = nlohmann::ordered_json;

BipartiteGraph tag_question_graph(const Corpus& corpus, std::span<const TagId> tags) {
    std::vector<std::int64_t> local(corpus.tags().size(), -1);
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (tags[i] >= local.size()) throw Error("tag_question_graph: unknown tag id");
        if (local[tags[i]] >= 0) throw Error("tag_question_graph: duplicate tag id");
        local[tags[i]] = static_cast<std::int64_t>(i);
    }
    std::vector<std::pair<NodeIndex, NodeIndex>> edges;
    std::vector<std::uint64_t> question_ids;
    for (const Question& q : corpus.questions()) {
        bool any = false;
        for (TagId t : q.tag_ids) {
            if (local[t] < 0) continue;
            edges.emplace_back(static_cast<NodeIndex>(local[t]), static_cast<NodeIndex>(question_ids.size()));
            any = true;
        }
        if (any) question_ids.push_back(q.question_id);
    }
    BipartiteGraph g(tags.size(), question_ids.size(), edges);
    g.tag_ids.assign(tags.begin(), tags.end());
    g.question_ids = std::move(question_ids);
    return g;
}

TagProjection TagProjection::from_graph(const BipartiteGraph& g) {
    using Sp = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.num_edges());
    for (auto [t, q] : g.edges()) trip.emplace_back(static_cast<int>(t), static_cast<int>(q), 1.0);
    Sp b(static_cast<Eigen::Index>(g.num_tags()), static_cast<Eigen::Index>(g.num_questions()));
    b.setFromTriplets(trip.begin(), trip.end());

    TagProjection p;
    p.tags.reserve(g.num_tags());
    for (std::size_t i = 0; i < g.num_tags(); ++i)
        p.tags.push_back(i < g.tag_ids.size() ? static_cast<TagId>(g.tag_ids[i]) : static_cast<TagId>(i));
    p.weight = (b * Sp(b.transpose())).pruned();
    p.weight.prune([](Eigen::Index r, Eigen::Index c, double) { return r != c; });
    p.weight.makeCompressed();
    return p;
}

Overrepresentation tag_overrepresentation(const TagProjection& projection, std::span<const BlockId> community) {
    const auto n = static_cast<Eigen::Index>(projection.tags.size());
    if (static_cast<Eigen::Index>(community.size()) != n || projection.weight.rows() != n)
        throw Error("tag_overrepresentation: partition does not cover the projection");
    const Eigen::Index nc = n == 0 ? 0 : static_cast<Eigen::Index>(*std::max_element(community.begin(), community.end())) + 1;

    // w_tc: weight from tag t into community c
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, nc);
    for (Eigen::Index k = 0; k < projection.weight.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(projection.weight, k); it; ++it)
            w(it.row(), community[static_cast<std::size_t>(it.col())]) += it.value();

    const double total = w.sum();
    if (!(total > 0)) throw Error("tag_overrepresentation: projection has zero total weight");
    const Eigen::VectorXd row = w.rowwise().sum();
    const Eigen::RowVectorXd col_share = w.colwise().sum() / total;

    Overrepresentation out;
    out.O = Eigen::MatrixXd::Zero(n, nc);
    out.zero_weight.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index t = 0; t < n; ++t) {
        if (row(t) == 0) {
            out.zero_weight[static_cast<std::size_t>(t)] = true;
            continue;
        }
        for (Eigen::Index c = 0; c < nc; ++c)
            if (col_share(c) > 0) out.O(t, c) = (w(t, c) / row(t)) / col_share(c);
    }
    return out;
}

// ---------------------------------------------------------------------------

TaskTaxonomy::TaskTaxonomy(std::vector<Task> tasks) : tasks_(std::move(tasks)) {
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        Task& t = tasks_[i];
        t.task_id = static_cast<TaskId>(i);
        std::sort(t.tags.begin(), t.tags.end());
        if (t.tags.empty()) throw Error("task " + std::to_string(i) + " has no tags");
        for (TagId tag : t.tags)
            if (!tag_task_.emplace(tag, t.task_id).second)
                throw Error("tag " + std::to_string(tag) + " belongs to more than one task");
    }
}

std::optional<TaskId> TaskTaxonomy::task_of(TagId tag) const {
    auto it = tag_task_.find(tag);
    if (it == tag_task_.end()) return std::nullopt;
    return it->second;
}

std::vector<TaskId> TaskTaxonomy::tasks_of(std::span<const TagId> tags) const {
    std::vector<TaskId> out;
    for (TagId t : tags)
        if (auto id = task_of(t)) out.push_back(*id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void TaskTaxonomy::attach_labels(std::span<const TaskLabelRecord> labels) {
    std::vector<const TaskLabelRecord*> by_id(tasks_.size(), nullptr);
    for (const auto& l : labels) {
        if (l.task_id >= tasks_.size()) throw Error("label for unknown task " + std::to_string(l.task_id));
        if (by_id[l.task_id]) throw Error("duplicate label for task " + std::to_string(l.task_id));
        if (l.short_label.empty()) throw Error("empty label for task " + std::to_string(l.task_id));
        by_id[l.task_id] = &l;
    }
    Eigen::Index dim = -1;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        if (!by_id[i]) throw Error("no label for task " + std::to_string(i));
        if (dim < 0) dim = by_id[i]->embedding.size();
        if (by_id[i]->embedding.size() != dim) throw Error("label embedding dimension mismatch");
    }
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        tasks_[i].short_label = by_id[i]->short_label;
        tasks_[i].long_label = by_id[i]->long_label;
        tasks_[i].embedding = by_id[i]->embedding;
    }
}

bool TaskTaxonomy::has_labels() const {
    return !tasks_.empty() && std::all_of(tasks_.begin(), tasks_.end(), [](const Task& t) { return !t.short_label.empty(); });
}

TaskTaxonomy prune_taxonomy(const TagProjection& projection, std::span<const BlockId> community,
                            const Eigen::MatrixXd& O, std::span<const Tag> tag_table, double drop_frac,
                            std::size_t min_size) {
    if (!(drop_frac >= 0 && drop_frac < 1)) throw Error("prune_taxonomy: drop_frac must lie in [0, 1)");
    if (min_size < 1) throw Error("prune_taxonomy: min_size must be >= 1");
    const std::size_t n = projection.tags.size();
    if (community.size() != n || static_cast<std::size_t>(O.rows()) != n)
        throw Error("prune_taxonomy: inputs disagree on the number of tags");

    std::map<BlockId, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) members[community[i]].push_back(i);

    std::vector<Task> tasks;
    for (auto& [c, rows] : members) {
        auto own = [&](std::size_t r) { return c < O.cols() ? O(static_cast<Eigen::Index>(r), c) : 0.0; };
        auto usage = [&](std::size_t r) { return tag_table[projection.tags[r]].usage_count; };
        // weakest first
        std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
            if (own(a) != own(b)) return own(a) < own(b);
            if (usage(a) != usage(b)) return usage(a) < usage(b);
            return projection.tags[a] > projection.tags[b];
        });
        const auto drop = static_cast<std::size_t>(std::floor(drop_frac * static_cast<double>(rows.size())));
        if (rows.size() - drop < min_size) continue;
        Task t;
        t.community = c;
        for (std::size_t k = drop; k < rows.size(); ++k) t.tags.push_back(projection.tags[rows[k]]);
        std::sort(t.tags.begin(), t.tags.end());
        tasks.push_back(std::move(t));
    }
    std::sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) { return a.tags.front() < b.tags.front(); });
    return TaskTaxonomy(std::move(tasks));
}

std::map<TagId, std::string> canonicalize_languages(std::span<const Tag> tags, std::span<const LanguageRule> rules,
                                                    Warnings* warnings) {
    std::map<std::string, TagId> by_name;
    std::set<std::string> known_languages;
    for (const Tag& t : tags) {
        by_name.emplace(t.name, t.tag_id);
        if (t.is_language) {
            known_languages.insert(t.name);
            if (t.canonical_language) known_languages.insert(*t.canonical_language);
        }
    }
    std::map<TagId, std::string> out;
    for (const Tag& t : tags)
        if (t.is_language) out[t.tag_id] = t.canonical_language.value_or(t.name);
    for (const LanguageRule& r : rules) {
        if (!known_languages.count(r.canonical_language))
            throw Error("language rule target '" + r.canonical_language + "' is not a known language");
        auto it = by_name.find(r.tag);
        if (it == by_name.end()) {
            if (warnings) warnings->push_back("language rule for unknown tag '" + r.tag + "' skipped");
            continue;
        }
        if (!tags[it->second].is_language) {
            if (warnings) warnings->push_back("language rule for non-language tag '" + r.tag + "' skipped");
            continue;
        }
        out[it->second] = r.canonical_language;
    }
    return out;
}

std::string taxonomy_json(const TaskTaxonomy& taxonomy, std::span<const Tag> tag_table) {
    json tasks = json::array();
    for (const Task& t : taxonomy.tasks()) {
        json names = json::array();
        for (TagId tag : t.tags) names.push_back(tag_table[tag].name);
        tasks.push_back({{"task_id", t.task_id},
                         {"tags", names},
                         {"short_label", t.short_label},
                         {"long_label", t.long_label}});
    }
    return json{{"tasks", tasks}}.dump(1) + "\n";
}

TaskTaxonomy parse_taxonomy_json(const std::string& text, const Corpus& corpus) {
    const json doc = json::parse(text);
    std::vector<Task> tasks;
    for (const auto& jt : doc.at("tasks")) {
        Task t;
        t.task_id = jt.at("task_id").get<TaskId>();
        if (t.task_id != tasks.size()) throw Error("taxonomy.json: task ids must be dense and ordered");
        t.community = t.task_id;
        for (const auto& name : jt.at("tags")) {
            auto id = corpus.find_tag(name.get<std::string>());
            if (!id) throw Error("taxonomy.json: unknown tag '" + name.get<std::string>() + "'");
            t.tags.push_back(*id);
        }
        t.short_label = jt.value("short_label", "");
        t.long_label = jt.value("long_label", "");
        tasks.push_back(std::move(t));
    }
    return TaskTaxonomy(std::move(tasks));
}

}  // namespace taskspace
