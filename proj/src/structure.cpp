#include "taskspace/structure.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include <json.hpp>

namespace taskspace {

Eigen::Index TaskLanguageMatrix::language_index(const std::string& language) const {
    auto it = std::lower_bound(languages.begin(), languages.end(), language);
    if (it == languages.end() || *it != language) throw Error("unknown language '" + language + "'");
    return it - languages.begin();
}

TaskLanguageMatrix task_language_matrix(const Corpus& corpus, const TaskTaxonomy& taxonomy,
                                        const std::map<TagId, std::string>& languages, const Window& window,
                                        std::int64_t user_threshold, const std::set<std::string>& excluded) {
    if (user_threshold < 1) throw Error("task_language_matrix: user threshold must be at least 1");
    TaskLanguageMatrix m;
    m.window = window.label;
    std::set<std::string> names;
    for (const auto& [tag, name] : languages)
        if (!excluded.count(name)) names.insert(name);
    m.languages.assign(names.begin(), names.end());

    std::vector<std::tuple<TaskId, std::uint32_t, UserId>> cells;
    std::vector<std::uint32_t> langs;
    for (const Answer& a : corpus.answers()) {
        if (!window.contains(a.created_at)) continue;
        const Question& q = corpus.questions()[*corpus.question_index(a.question_id)];
        langs.clear();
        for (TagId tag : q.tag_ids) {
            auto it = languages.find(tag);
            if (it == languages.end() || excluded.count(it->second)) continue;
            langs.push_back(static_cast<std::uint32_t>(m.language_index(it->second)));
        }
        if (langs.empty()) continue;
        for (TaskId t : taxonomy.tasks_of(q.tag_ids))
            for (auto l : langs) cells.emplace_back(t, l, a.user_id);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

    m.U = CountMatrix::Zero(static_cast<Eigen::Index>(taxonomy.size()), static_cast<Eigen::Index>(m.languages.size()));
    for (const auto& [t, l, u] : cells) ++m.U(t, l);
    m.A = (m.U.array() >= user_threshold).cast<int>();
    return m;
}

std::set<std::string> read_exclusion_list(const std::filesystem::path& path) {
    std::set<std::string> out;
    for (const auto& raw : split(read_file(path), '\n')) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        out.insert(line);
    }
    return out;
}

namespace {

// Sum of pair scores along one dimension: rows of M.
double nested_pairs(const Eigen::MatrixXi& M) {
    const Eigen::VectorXi deg = M.rowwise().sum();
    double sum = 0;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = i + 1; j < M.rows(); ++j) {
            if (deg(i) == deg(j)) continue;
            const Eigen::Index big = deg(i) > deg(j) ? i : j;
            const Eigen::Index small = big == i ? j : i;
            if (deg(small) == 0) continue;
            const int overlap = (M.row(big).array() * M.row(small).array()).sum();
            sum += 100.0 * overlap / deg(small);
        }
    return sum;
}

}  // namespace

NodfScore nodf(const Eigen::MatrixXi& A) {
    if (A.size() == 0) throw Error("nodf: empty matrix");
    if ((A.array() != 0 && A.array() != 1).any()) throw Error("nodf: matrix must be binary");
    const double n = static_cast<double>(A.rows()), m = static_cast<double>(A.cols());
    const double row_pairs = n * (n - 1) / 2, col_pairs = m * (m - 1) / 2;
    const double rs = nested_pairs(A), cs = nested_pairs(A.transpose());
    NodfScore s;
    s.rows = row_pairs > 0 ? rs / row_pairs : 0;
    s.columns = col_pairs > 0 ? cs / col_pairs : 0;
    s.total = row_pairs + col_pairs > 0 ? (rs + cs) / (row_pairs + col_pairs) : 0;
    return s;
}

std::vector<std::size_t> language_order(const TaskLanguageMatrix& m, Eigen::Index task) {
    std::vector<std::size_t> order(m.languages.size());
    std::iota(order.begin(), order.end(), 0);
    // languages are sorted by name, so a stable sort by users keeps name order on ties
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return m.U(task, static_cast<Eigen::Index>(a)) > m.U(task, static_cast<Eigen::Index>(b));
    });
    return order;
}

std::vector<TopLanguageRow> top_language_series(const std::map<int, TaskLanguageMatrix>& years) {
    std::vector<TopLanguageRow> out;
    for (const auto& [year, m] : years) {
        std::vector<std::size_t> counts(m.languages.size(), 0);
        for (Eigen::Index t = 0; t < m.U.rows(); ++t) {
            if (m.U.row(t).sum() == 0) continue;
            ++counts[language_order(m, t).front()];
        }
        for (std::size_t l = 0; l < m.languages.size(); ++l) out.push_back({year, m.languages[l], counts[l]});
    }
    return out;
}

std::vector<FootprintRow> language_footprint(const TaskLanguageMatrix& m, const std::string& language, std::size_t k) {
    const auto l = static_cast<std::size_t>(m.language_index(language));
    std::vector<FootprintRow> out;
    for (Eigen::Index t = 0; t < m.U.rows(); ++t) {
        if (m.U(t, static_cast<Eigen::Index>(l)) == 0) continue;
        const auto order = language_order(m, t);
        const auto rank = static_cast<std::size_t>(std::find(order.begin(), order.end(), l) - order.begin()) + 1;
        if (rank <= k) out.push_back({static_cast<TaskId>(t), rank});
    }
    return out;
}

Eigen::MatrixXd reweight_languages(const TaskLanguageMatrix& m, std::span<const LanguageShareRecord> shares, int year,
                                   Warnings* warnings) {
    std::map<std::string, double> external;
    double total_share = 0;
    for (const auto& s : shares) {
        if (s.year != year) continue;
        if (s.external_share < 0) throw Error("reweight_languages: negative share for " + s.language);
        external[s.language] = s.external_share;
        total_share += s.external_share;
    }
    if (total_share > 1 + 1e-9) throw Error("reweight_languages: shares for " + std::to_string(year) + " sum above 1");

    Eigen::MatrixXd out = m.U.cast<double>();
    const double total = out.sum();
    for (std::size_t l = 0; l < m.languages.size(); ++l) {
        const auto col = static_cast<Eigen::Index>(l);
        auto it = external.find(m.languages[l]);
        if (it == external.end()) {
            if (warnings) warnings->push_back("no external share for " + m.languages[l] + " in " + std::to_string(year));
            continue;
        }
        const double platform = total > 0 ? out.col(col).sum() / total : 0;
        if (platform == 0) {
            if (it->second > 0)
                throw Error("reweight_languages: " + m.languages[l] + " has an external share but no platform users");
            continue;
        }
        out.col(col) *= it->second / platform;
    }
    return out;
}

std::vector<DominanceRow> pairwise_dominance(const std::map<int, TaskLanguageMatrix>& years, const std::string& a,
                                             const std::string& b) {
    std::vector<DominanceRow> out;
    for (const auto& [year, m] : years) {
        const Eigen::Index ia = m.language_index(a), ib = m.language_index(b);
        DominanceRow row{year, 0, 0};
        for (Eigen::Index t = 0; t < m.U.rows(); ++t) {
            row.a_over_b += m.U(t, ia) > m.U(t, ib);
            row.b_over_a += m.U(t, ib) > m.U(t, ia);
        }
        out.push_back(row);
    }
    return out;
}

std::string task_language_csv(const TaskLanguageMatrix& m) {
    std::string out = "task_id,language,users,present\n";
    for (Eigen::Index t = 0; t < m.U.rows(); ++t)
        for (Eigen::Index l = 0; l < m.U.cols(); ++l) {
            if (m.U(t, l) == 0) continue;
            out += std::to_string(t) + "," + csv_escape(m.languages[static_cast<std::size_t>(l)]) + "," +
                   std::to_string(m.U(t, l)) + "," + std::to_string(m.A(t, l)) + "\n";
        }
    return out;
}

std::string nodf_json(const NodfScore& s, const TaskLanguageMatrix& m) {
    nlohmann::ordered_json j;
    j["nodf"] = s.total;
    j["nodf_rows"] = s.rows;
    j["nodf_columns"] = s.columns;
    j["tasks"] = m.A.rows();
    j["languages"] = m.A.cols();
    j["fill"] = m.A.size() ? static_cast<double>(m.A.sum()) / static_cast<double>(m.A.size()) : 0.0;
    j["window"] = m.window;
    return j.dump(2) + "\n";
}

std::string top_language_series_csv(std::span<const TopLanguageRow> rows) {
    std::string out = "year,language,top_task_count\n";
    for (const auto& r : rows)
        out += std::to_string(r.year) + "," + csv_escape(r.language) + "," + std::to_string(r.top_task_count) + "\n";
    return out;
}

std::string footprint_csv(const std::string& language, std::span<const FootprintRow> rows) {
    std::string out = "language,task_id,rank\n";
    for (const auto& r : rows)
        out += csv_escape(language) + "," + std::to_string(r.task) + "," + std::to_string(r.rank) + "\n";
    return out;
}

std::string dominance_csv(const std::string& a, const std::string& b, std::span<const DominanceRow> rows) {
    std::string out = "year,language_a,language_b,a_over_b,b_over_a\n";
    for (const auto& r : rows)
        out += std::to_string(r.year) + "," + csv_escape(a) + "," + csv_escape(b) + "," + std::to_string(r.a_over_b) +
               "," + std::to_string(r.b_over_a) + "\n";
    return out;
}

}  // namespace taskspace
