#pragma once

// Small random inputs shared by the test suites.

#include <algorithm>

#include "taskspace/corpus.hpp"
#include "taskspace/taxonomy.hpp"

namespace taskspace::testing {

inline Corpus random_corpus(std::uint64_t seed, std::size_t num_tags, std::size_t num_questions, std::size_t num_answers,
                     std::size_t num_users) {
    Rng rng(seed);
    std::vector<Tag> tags;
    for (std::size_t i = 0; i < num_tags; ++i)
        tags.push_back({static_cast<TagId>(i), "t" + std::to_string(i),
                        static_cast<std::int64_t>(uniform_index(rng, 3000)), i % 5 == 0, std::nullopt});
    std::vector<Question> qs;
    for (std::size_t i = 0; i < num_questions; ++i) {
        Question q{i + 100, utc_timestamp(2015, 1, 1) + static_cast<Timestamp>(uniform_index(rng, 200'000'000)), {}};
        const auto k = 1 + uniform_index(rng, 3);
        for (std::size_t j = 0; j < k; ++j) q.tag_ids.push_back(static_cast<TagId>(uniform_index(rng, num_tags)));
        std::sort(q.tag_ids.begin(), q.tag_ids.end());
        q.tag_ids.erase(std::unique(q.tag_ids.begin(), q.tag_ids.end()), q.tag_ids.end());
        qs.push_back(q);
    }
    std::vector<Answer> as;
    for (std::size_t i = 0; i < num_answers; ++i) {
        const auto& q = qs[uniform_index(rng, num_questions)];
        as.push_back({i + 1, q.question_id, 1 + uniform_index(rng, num_users), q.created_at + 60,
                      static_cast<std::int64_t>(uniform_index(rng, 10))});
    }
    return Corpus(tags, qs, as);
}

/// Tasks of three consecutive tags each over the first `num_tasks * 3` tags,
/// skipping every fourth group so some tags stay unmapped.
inline TaskTaxonomy grouped_taxonomy(std::size_t num_tasks) {
    std::vector<Task> tasks;
    for (std::size_t g = 0; tasks.size() < num_tasks; ++g) {
        if (g % 4 == 3) continue;
        Task t;
        for (TagId k = 0; k < 3; ++k) t.tags.push_back(static_cast<TagId>(3 * g + k));
        tasks.push_back(t);
    }
    return TaskTaxonomy(tasks);
}

}  // namespace taskspace::testing
