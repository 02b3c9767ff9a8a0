#include "taskspace/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "taskspace/activity.hpp"
#include "taskspace/blockmodel.hpp"
#include "taskspace/corpus.hpp"
#include "taskspace/econometrics.hpp"
#include "taskspace/jobmatch.hpp"
#include "taskspace/relatedness.hpp"
#include "taskspace/structure.hpp"
#include "taskspace/synth.hpp"
#include "taskspace/taxonomy.hpp"
#include "taskspace/valuation.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace taskspace {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
    return out;
}

}  // namespace

MissingStageError::MissingStageError(std::vector<std::string> stages)
    : Error("missing upstream artifacts from stage(s): " + join(stages, ", ")), stages_(std::move(stages)) {}

// ---------------------------------------------------------------------------
// Configuration

namespace {

struct KeySpec {
    const char* key;
    const char* default_value;  // nullptr: no default
    enum Kind { integer, real, text, date, list, flag } kind;
    double lo, hi;
};

const std::vector<KeySpec>& key_specs() {
    static const std::vector<KeySpec> specs{
        {"seed", nullptr, KeySpec::integer, 0, 9.0e18},
        {"min_uses", "1000", KeySpec::integer, 1, 1e12},
        {"min_answers", "10", KeySpec::integer, 1, 1e9},
        {"drop_frac", "0.2", KeySpec::real, 0, 0.99},
        {"min_size", "3", KeySpec::integer, 1, 1e6},
        {"cosine", "0.3", KeySpec::real, -1, 1},
        {"robustness_thresholds", "0.2;0.3;0.4", KeySpec::list, -1, 1},
        {"mask_frac", "0.4", KeySpec::real, 1e-9, 1 - 1e-9},
        {"user_threshold", "10", KeySpec::integer, 1, 1e9},
        {"bins", "10", KeySpec::integer, 1, 1000},
        {"k_respondents", "300", KeySpec::integer, 1, 1e9},
        {"kernel_width", "720", KeySpec::real, 1, 720},
        {"ci_draws", "1000", KeySpec::integer, 100, 1e7},
        {"prior_alpha", "1", KeySpec::real, 1e-9, 1e9},
        {"sbm_sweeps", "10", KeySpec::integer, 0, 1e6},
        {"sbm_min_blocks", "1", KeySpec::integer, 1, 1e6},
        {"sbm_max_blocks", "0", KeySpec::integer, 0, 1e6},
        {"sbm_merge_candidates", "10", KeySpec::integer, 1, 1e6},
        {"degree_corrected", "false", KeySpec::flag, 0, 0},
        {"value_start", "2018-01-01", KeySpec::date, 0, 0},
        {"value_end", "2023-06-30", KeySpec::date, 0, 0},
        {"structure_year", "0", KeySpec::integer, 0, 3000},
        {"footprint_language", "python", KeySpec::text, 0, 0},
        {"footprint_k", "3", KeySpec::integer, 1, 1000},
        {"dominance_a", "objective-c", KeySpec::text, 0, 0},
        {"dominance_b", "swift", KeySpec::text, 0, 0},
    };
    return specs;
}

const KeySpec* find_spec(const std::string& key) {
    for (const auto& s : key_specs())
        if (key == s.key) return &s;
    return nullptr;
}

Timestamp parse_date(const std::string& text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3 || m < 1 || m > 12 || d < 1 || d > 31)
        throw ConfigError("invalid date '" + text + "' (expected YYYY-MM-DD)");
    return utc_timestamp(y, m, d);
}

double parse_number(const std::string& key, const std::string& text) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
    }
}

}  // namespace

PipelineConfig::PipelineConfig() {
    for (const auto& s : key_specs())
        if (s.default_value) values_[s.key] = s.default_value;
    input_ = "data/mini";
}

PipelineConfig PipelineConfig::parse(const std::string& text, const fs::path& base_dir) {
    PipelineConfig c;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string line = raw.substr(0, raw.find('#'));
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key == "input") {
            fs::path p = value;
            c.input_ = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
            continue;
        }
        c.set(key, value);
    }
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    return parse(read_file(path), path.parent_path());
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    const KeySpec* s = find_spec(key);
    if (!s) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

const std::string& PipelineConfig::str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config key '" + key + "' is not set");
    return it->second;
}

double PipelineConfig::number(const std::string& key) const { return parse_number(key, str(key)); }

std::int64_t PipelineConfig::integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v)) throw ConfigError("config key '" + key + "' must be an integer");
    return static_cast<std::int64_t>(v);
}

std::uint64_t PipelineConfig::seed() const {
    if (!has("seed")) throw ConfigError("config must set a seed (or pass --seed)");
    const std::string& s = str("seed");
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("seed must be a nonnegative integer");
    return std::stoull(s);
}

std::vector<double> PipelineConfig::numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split(str(key), ';')) {
        const std::string p = trim(part);
        if (!p.empty()) out.push_back(parse_number(key, p));
    }
    return out;
}

void PipelineConfig::validate() const {
    seed();
    for (const auto& s : key_specs()) {
        if (std::string(s.key) == "seed") continue;
        const std::string& v = str(s.key);
        switch (s.kind) {
            case KeySpec::integer:
            case KeySpec::real: {
                const double x = s.kind == KeySpec::integer ? static_cast<double>(integer(s.key)) : number(s.key);
                if (x < s.lo || x > s.hi)
                    throw ConfigError("config key '" + std::string(s.key) + "' = " + v + " is outside [" +
                                      format_double(s.lo) + ", " + format_double(s.hi) + "]");
                break;
            }
            case KeySpec::list:
                for (double x : numbers(s.key))
                    if (x < s.lo || x > s.hi) throw ConfigError("config key '" + std::string(s.key) + "' out of range");
                break;
            case KeySpec::date: parse_date(v); break;
            case KeySpec::flag:
                if (v != "true" && v != "false") throw ConfigError("config key '" + std::string(s.key) + "' must be true or false");
                break;
            case KeySpec::text:
                if (v.empty()) throw ConfigError("config key '" + std::string(s.key) + "' is empty");
                break;
        }
    }
    if (parse_date(str("value_start")) > parse_date(str("value_end"))) throw ConfigError("value_start is after value_end");
    if (integer("sbm_max_blocks") != 0 && integer("sbm_max_blocks") < integer("sbm_min_blocks"))
        throw ConfigError("sbm_max_blocks is below sbm_min_blocks");
}

std::string PipelineConfig::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

std::string PipelineConfig::hash() const { return hex64(fnv1a64(canonical())); }

// ---------------------------------------------------------------------------
// Stage bookkeeping

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names{"ingest", "sbm", "taxonomy", "vectors", "relatedness",
                                                "value",  "jobs", "econ",    "structure"};
    return names;
}

const std::vector<std::string>& stage_dependencies(const std::string& stage) {
    static const std::map<std::string, std::vector<std::string>> deps{
        {"ingest", {}},
        {"sbm", {"ingest"}},
        {"taxonomy", {"ingest", "sbm"}},
        {"vectors", {"ingest", "taxonomy"}},
        {"relatedness", {"ingest", "taxonomy", "vectors"}},
        {"value", {"ingest", "taxonomy", "vectors"}},
        {"jobs", {"ingest", "taxonomy", "relatedness", "value"}},
        {"econ", {"ingest", "taxonomy", "vectors", "relatedness", "value"}},
        {"structure", {"ingest", "taxonomy"}},
    };
    auto it = deps.find(stage);
    if (it == deps.end()) throw ConfigError("unknown stage '" + stage + "'");
    return it->second;
}

namespace {

// Everything a stage needs to read and record.
class StageContext {
  public:
    StageContext(std::string stage, const PipelineConfig& config, fs::path out, std::ostream& log)
        : stage_(std::move(stage)), config_(config), out_(std::move(out)), log_(log) {}

    const PipelineConfig& config() const { return config_; }
    fs::path dir() const { return out_ / stage_; }
    fs::path upstream(const std::string& stage) const { return out_ / stage; }

    fs::path input(const std::string& name, bool required = true) {
        const fs::path p = config_.input() / name;
        if (!fs::exists(p)) {
            if (required) throw ConfigError("input file not found: " + p.string());
            return {};
        }
        inputs_[name] = file_hash_hex(p);
        return p;
    }

    void write(const std::string& name, const std::string& content) {
        write_file(dir() / name, content);
        outputs_[name] = hex64(fnv1a64(content));
    }
    void warn(const std::string& w) {
        log_ << "[" << stage_ << "] warning: " << w << "\n";
        warnings_.push_back(w);
    }
    void warn_all(const Warnings& ws) {
        for (const auto& w : ws) warn(w);
    }
    void note(const std::string& msg) { log_ << "[" << stage_ << "] " << msg << "\n"; }

    void write_manifest() {
        ojson m;
        m["stage"] = stage_;
        m["version"] = kVersion;
        m["config_hash"] = config_.hash();
        m["config"] = config_.values();
        m["inputs"] = inputs_;
        ojson up = ojson::object();
        for (const auto& s : stage_dependencies(stage_)) up[s] = file_hash_hex(upstream(s) / "manifest.json");
        m["upstream"] = up;
        m["outputs"] = outputs_;
        m["warnings"] = warnings_;
        write_file(dir() / "manifest.json", m.dump(2) + "\n");
    }

  private:
    std::string stage_;
    const PipelineConfig& config_;
    fs::path out_;
    std::ostream& log_;
    std::map<std::string, std::string> inputs_, outputs_;
    Warnings warnings_;
};

// --- shared loaders --------------------------------------------------------

Corpus load_ingested(const StageContext& ctx) { return load_snapshot(ctx.upstream("ingest") / "corpus"); }

struct Samples {
    std::vector<UserId> active, s1, s2;
};

Samples load_samples(const StageContext& ctx) {
    Samples s;
    const auto lines = split(read_file(ctx.upstream("ingest") / "users.csv"), '\n');
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_csv_line(lines[i]);
        const UserId u = std::stoull(f.at(0));
        s.active.push_back(u);
        (f.at(2) == "S1" ? s.s1 : s.s2).push_back(u);
    }
    return s;
}

TaskTaxonomy load_taxonomy(const StageContext& ctx, const Corpus& corpus) {
    return parse_taxonomy_json(read_file(ctx.upstream("taxonomy") / "taxonomy.json"), corpus);
}

BipartiteGraph sbm_graph(const Corpus& corpus, const PipelineConfig& config) {
    const auto selection = filter_tags(corpus, config.integer("min_uses"));
    return tag_question_graph(corpus, selection.general);
}

struct YearRange {
    int first = 0, last = 0;
};

YearRange corpus_years(const Corpus& corpus) {
    const auto [lo, hi] = corpus.time_range();
    return {utc_year(lo), utc_year(hi)};
}

Window value_window(const PipelineConfig& config) {
    const Timestamp a = parse_date(config.str("value_start")), b = parse_date(config.str("value_end"));
    return Window::days(a, b, std::to_string(utc_year(a)) + "-" + std::to_string(utc_year(b)));
}

RelatednessMatrix load_relatedness(const StageContext& ctx, std::size_t num_tasks) {
    RelatednessMatrix r = parse_relatedness_csv(read_file(ctx.upstream("relatedness") / "relatedness.csv"), num_tasks);
    const auto meta = ojson::parse(read_file(ctx.upstream("relatedness") / "meta.json"));
    r.sample = meta.at("sample").get<std::string>();
    r.window = meta.at("window").get<std::string>();
    return r;
}

TaskValues load_values(const StageContext& ctx, std::size_t num_tasks) {
    return parse_task_values_csv(read_file(ctx.upstream("value") / "task_values.csv"), num_tasks);
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson result_json(const EstimationResult& r, const RegressionSpec& spec) {
    ojson j;
    j["outcome"] = spec.outcome;
    j["fixed_effects"] = spec.fixed_effects;
    j["cluster"] = spec.cluster ? ojson(*spec.cluster) : ojson(nullptr);
    j["estimator"] = spec.endogenous.empty() ? "ols" : "2sls";
    if (!spec.instruments.empty()) j["instruments"] = spec.instruments;
    ojson coefs = ojson::array();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        coefs.push_back({{"term", r.names[i]},
                         {"coef", number_or_null(r.coef(k))},
                         {"se", number_or_null(r.se(k))},
                         {"stars", stars(r.coef(k), r.se(k))}});
    }
    j["coefficients"] = coefs;
    j["n"] = r.n_obs;
    j["r2"] = number_or_null(r.r2);
    j["within_r2"] = number_or_null(r.within_r2);
    if (r.clusters) j["clusters"] = r.clusters;
    if (r.first_stage_f) j["first_stage_f"] = number_or_null(*r.first_stage_f);
    j["warnings"] = r.warnings;
    return j;
}

// Fits a model and records it; estimation failures (e.g. too few rows in a
// small corpus) are recorded instead of aborting the stage.
void fit_model(StageContext& ctx, ojson& models, std::string& coef_csv, const std::string& name, const Table& rows,
               const RegressionSpec& spec) {
    try {
        const EstimationResult r = spec.endogenous.empty() ? fit_ols_fe(rows, spec) : fit_2sls(rows, spec);
        models[name] = result_json(r, spec);
        for (std::size_t i = 0; i < r.names.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double se = r.se(k);
            coef_csv += name + "," + r.names[i] + "," + format_double(r.coef(k)) + "," + format_double(se) + "," +
                        format_double(r.coef(k) - 1.96 * se) + "," + format_double(r.coef(k) + 1.96 * se) + "," +
                        stars(r.coef(k), se) + "\n";
        }
        for (const auto& w : r.warnings) ctx.warn(name + ": " + w);
    } catch (const Error& e) {
        models[name] = {{"outcome", spec.outcome}, {"error", e.what()}};
        ctx.warn(name + ": " + e.what());
    }
}

const char* kCoefHeader = "model,term,coef,se,ci_lo,ci_hi,stars\n";

// --- stages ----------------------------------------------------------------

void stage_ingest(StageContext& ctx) {
    const Corpus corpus = load_corpus({ctx.input("questions.jsonl"), ctx.input("answers.jsonl"), ctx.input("tags.csv")});
    save_snapshot(corpus, ctx.dir() / "corpus");
    const auto& c = ctx.config();
    const auto selection = filter_tags(corpus, c.integer("min_uses"));
    std::string tags = "tag_id,tag,is_language\n";
    for (TagId t : selection.all())
        tags += std::to_string(t) + "," + csv_escape(corpus.tag(t).name) + "," + (corpus.tag(t).is_language ? "1" : "0") + "\n";
    ctx.write("selected_tags.csv", tags);

    const auto active = select_active_users(corpus, c.integer("min_answers"));
    if (active.size() < 2) throw Error("fewer than two active users; lower min_answers");
    const auto split = split_users(active, substream_seed(c.seed(), "split"));
    const std::set<UserId> s1(split.s1.begin(), split.s1.end());
    std::string users = "user_id,answers,sample\n";
    for (UserId u : active)
        users += std::to_string(u) + "," + std::to_string(corpus.answers_of_user(u).size()) + "," +
                 (s1.count(u) ? "S1" : "S2") + "\n";
    ctx.write("users.csv", users);
    ctx.note(std::to_string(corpus.questions().size()) + " questions, " + std::to_string(corpus.answers().size()) +
             " answers, " + std::to_string(selection.general.size()) + " general tags, " +
             std::to_string(active.size()) + " active users");
}

void stage_sbm(StageContext& ctx) {
    const Corpus corpus = load_ingested(ctx);
    const auto& c = ctx.config();
    const BipartiteGraph g = sbm_graph(corpus, c);
    if (g.num_edges() == 0) throw Error("no edges between selected tags and questions");
    InferenceConfig ic;
    ic.seed = substream_seed(c.seed(), "sbm");
    ic.max_sweeps = static_cast<int>(c.integer("sbm_sweeps"));
    ic.min_tag_blocks = static_cast<std::size_t>(c.integer("sbm_min_blocks"));
    ic.max_tag_blocks = static_cast<std::size_t>(c.integer("sbm_max_blocks"));
    ic.merge_candidates = static_cast<std::size_t>(c.integer("sbm_merge_candidates"));
    ic.degree_corrected = c.str("degree_corrected") == "true";
    const InferenceResult r = infer_partition(g, ic);
    ctx.write("partition.json", partition_json(g, r.partition, r.dl.total));
    ojson dl;
    dl["total"] = r.dl.total;
    dl["likelihood"] = r.dl.likelihood_term;
    dl["edge_matrix_prior"] = r.dl.edge_matrix_prior;
    dl["partition_prior"] = r.dl.partition_prior;
    dl["degree_prior"] = r.dl.degree_prior;
    dl["initial_total"] = r.initial_dl.total;
    dl["tag_blocks"] = block_structure(g, r.partition).num_tag_blocks;
    dl["question_blocks"] = block_structure(g, r.partition).num_question_blocks;
    dl["config_hash"] = c.hash();
    ctx.write("description_length.json", dl.dump(2) + "\n");
    ctx.note(std::to_string(dl["tag_blocks"].get<std::size_t>()) + " tag blocks, DL " + format_double(r.dl.total));
}

TaskTaxonomy build_taxonomy(const Corpus& corpus, const PipelineConfig& c, const std::string& partition_text) {
    const BipartiteGraph g = sbm_graph(corpus, c);
    const Partition p = parse_partition_json(g, partition_text);
    const auto community = block_structure(g, p).tag_block;
    const TagProjection proj = TagProjection::from_graph(g);
    const Overrepresentation O = tag_overrepresentation(proj, community);
    return prune_taxonomy(proj, community, O.O, corpus.tags(), c.number("drop_frac"),
                          static_cast<std::size_t>(c.integer("min_size")));
}

void stage_taxonomy(StageContext& ctx) {
    const Corpus corpus = load_ingested(ctx);
    TaskTaxonomy tax = build_taxonomy(corpus, ctx.config(), read_file(ctx.upstream("sbm") / "partition.json"));
    if (tax.size() == 0) throw Error("pruning left no tasks");
    if (const fs::path p = ctx.input("task_labels.jsonl", false); !p.empty()) {
        try {
            tax.attach_labels(read_task_labels(p));
        } catch (const Error& e) {
            ctx.warn(std::string("task labels not attached: ") + e.what());
        }
    } else {
        ctx.warn("no task_labels.jsonl; job matching will be unavailable");
    }
    ctx.write("taxonomy.json", taxonomy_json(tax, corpus.tags()));
    std::string tasks = "task_id,tag\n";
    for (const Task& t : tax.tasks())
        for (TagId tag : t.tags) tasks += std::to_string(t.task_id) + "," + csv_escape(corpus.tag(tag).name) + "\n";
    ctx.write("tasks.csv", tasks);
    ctx.note(std::to_string(tax.size()) + " tasks");
}

void stage_vectors(StageContext& ctx) {
    const Corpus corpus = load_ingested(ctx);
    const TaskTaxonomy tax = load_taxonomy(ctx, corpus);
    const Samples samples = load_samples(ctx);
    const QuestionTasks qtasks(corpus, tax);
    const auto years = corpus_years(corpus);
    std::string csv = "user_id,year,task_id,count\n";
    for (int t = years.first + 2; t <= years.last; ++t) {
        const auto X = experience_matrix(corpus, qtasks, tax.size(), samples.active, Window::preceding(t));
        const std::string part = experience_csv(X);
        csv += part.substr(part.find('\n') + 1);
    }
    ctx.write("experience.csv", csv);
    if (years.last > years.first) {
        try {
            ctx.write("shares.csv", shares_csv(task_share_change(corpus, tax, years.first, years.last)));
        } catch (const Error& e) {
            ctx.warn(std::string("share change skipped: ") + e.what());
        }
    }
}

void stage_relatedness(StageContext& ctx) {
    const Corpus corpus = load_ingested(ctx);
    const TaskTaxonomy tax = load_taxonomy(ctx, corpus);
    const Samples samples = load_samples(ctx);
    const auto& c = ctx.config();
    const auto [lo, hi] = corpus.time_range();
    const Window all = Window::days(lo, hi, "all");
    const auto T = experience_matrix(corpus, tax, samples.s1, all, "S1");
    const CountMatrix C = cooccurrence_counts(T);
    if (C.sum() == 0) throw Error("no task activity among S1 users");
    RelatednessMatrix R = pmi_matrix(C);
    R.sample = "S1";
    R.window = all.label;
    const auto ci = pmi_credible_intervals(C, static_cast<int>(c.integer("ci_draws")), c.number("prior_alpha"),
                                           substream_seed(c.seed(), "relatedness"));
    R.ci_lo = ci.lo;
    R.ci_hi = ci.hi;
    ctx.write("relatedness.csv", relatedness_csv(R));
    ctx.write("relatedness_edges.csv", relatedness_edges_csv(R));
    ojson meta;
    meta["sample"] = R.sample;
    meta["window"] = R.window;
    meta["users"] = samples.s1.size();
    meta["tasks"] = R.size();
    meta["ci_draws"] = c.integer("ci_draws");
    meta["prior_alpha"] = c.number("prior_alpha");
    meta["config_hash"] = c.hash();
    ctx.write("meta.json", meta.dump(2) + "\n");
}

void stage_value(StageContext& ctx) {
    const Corpus corpus = load_ingested(ctx);
    const TaskTaxonomy tax = load_taxonomy(ctx, corpus);
    const Samples samples = load_samples(ctx);
    const auto& c = ctx.config();
    Warnings w;
    const Survey survey = survey_from_records(read_survey_csv(ctx.input("survey.csv")), corpus, {}, &w);
    ctx.warn_all(w);
    const Window window = value_window(c);
    const auto users = impute_user_values(corpus, samples.active, survey, window,
                                          static_cast<std::size_t>(c.integer("k_respondents")));
    if (users.users.size() < samples.active.size())
        ctx.note(std::to_string(samples.active.size() - users.users.size()) + " active users had no survey match");
    const auto X = experience_matrix(corpus, tax, samples.active, window);
    const TaskValues values = task_values(users, X);
    ctx.write("task_values.csv", task_values_csv(values));
    ctx.write("user_values.csv", user_values_csv(users));
}

std::vector<JobTaskVector> job_vectors(const std::vector<JobAdRecord>& ads, const TaskCandidates& cands, double threshold) {
    std::vector<JobTaskVector> out;
    for (const auto& ad : ads) out.push_back(job_task_vector(ad, cands, threshold));
    return out;
}

void stage_jobs(StageContext& ctx) {
    const Corpus corpus = load_ingested(ctx);
    TaskTaxonomy tax = load_taxonomy(ctx, corpus);
    const auto& c = ctx.config();
    tax.attach_labels(read_task_labels(ctx.input("task_labels.jsonl")));
    const TaskCandidates cands = label_candidates(tax);
    const auto ads = read_job_ads(ctx.input("job_ads.jsonl"));
    const RelatednessMatrix R = load_relatedness(ctx, tax.size());
    const TaskValues values = load_values(ctx, tax.size());

    const auto jobs = job_vectors(ads, cands, c.number("cosine"));
    ctx.write("job_vectors.csv", job_vectors_csv(jobs));

    std::vector<JobTaskVector> multi;
    for (const auto& j : jobs)
        if (j.num_tasks() >= 3) multi.push_back(j);
    const auto mask = masked_prediction_table(multi, R.R, c.number("mask_frac"), static_cast<std::size_t>(c.integer("bins")),
                                              substream_seed(c.seed(), "jobs.mask"));
    ctx.write("mask_table.csv", bin_table_csv(mask.bins));

    const auto salary = build_salary_rows(jobs, R.R, values);
    if (salary.dropped_unvalued) ctx.note(std::to_string(salary.dropped_unvalued) + " jobs with unvalued tasks only");
    ctx.write("salary_rows.csv", salary.rows.csv());
    const RegressionSpec spec{"log_salary", {"vbar", "rbar", "log_n_tasks"}, {"year"}, std::nullopt, {}, {}};
    ojson models = ojson::object();
    std::string coefs = kCoefHeader;
    fit_model(ctx, models, coefs, "salary", salary.rows, spec);

    std::string robust = "threshold,jobs,vbar,vbar_se,rbar,rbar_se\n";
    for (double th : c.numbers("robustness_thresholds")) {
        const auto rows = build_salary_rows(job_vectors(ads, cands, th), R.R, values).rows;
        try {
            const auto r = fit_ols_fe(rows, spec);
            const auto v = r.index("vbar"), b = r.index("rbar");
            robust += format_double(th) + "," + std::to_string(r.n_obs) + "," + format_double(r.coef(v)) + "," +
                      format_double(r.se(v)) + "," + format_double(r.coef(b)) + "," + format_double(r.se(b)) + "\n";
        } catch (const Error& e) {
            robust += format_double(th) + "," + std::to_string(rows.rows()) + ",NA,NA,NA,NA\n";
            ctx.warn("robustness threshold " + format_double(th) + ": " + e.what());
        }
    }
    ctx.write("salary_robustness.csv", robust);
    ojson out;
    out["config_hash"] = c.hash();
    out["jobs"] = jobs.size();
    out["jobs_with_3_tasks"] = multi.size();
    out["masked_cells"] = mask.masked;
    out["masked_required"] = mask.masked_ones;
    out["models"] = models;
    ctx.write("results.json", out.dump(2) + "\n");
    ctx.write("coefficients.csv", coefs);
}

void stage_econ(StageContext& ctx) {
    const Corpus corpus = load_ingested(ctx);
    const TaskTaxonomy tax = load_taxonomy(ctx, corpus);
    const Samples samples = load_samples(ctx);
    const auto& c = ctx.config();
    const QuestionTasks qtasks(corpus, tax);
    const RelatednessMatrix R = load_relatedness(ctx, tax.size());
    const TaskValues values = load_values(ctx, tax.size());
    const auto years = corpus_years(corpus);
    const int first = years.first + 2;
    if (first > years.last) throw Error("corpus spans fewer than three calendar years");

    // voting: every answer year needs a window; years before `first` have
    // truncated windows and are kept for completeness of the map only
    std::map<int, UserTaskMatrix> experience;
    std::map<int, Eigen::MatrixXd> minutes;
    for (int t = years.first; t <= years.last; ++t) {
        auto X = experience_matrix(corpus, qtasks, tax.size(), samples.active, Window::preceding(t), "active");
        minutes.emplace(t, minute_task_counts(corpus, X, c.number("kernel_width")));
        experience.emplace(t, std::move(X));
    }
    Table voting = build_voting_rows(corpus, qtasks, experience, minutes);
    {
        std::vector<std::size_t> keep;
        const Eigen::VectorXd& y = voting.col("year");
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y(i) >= first) keep.push_back(static_cast<std::size_t>(i));
        voting = voting.select(keep);
    }
    ctx.write("voting_rows.csv", voting.csv());

    ojson models = ojson::object();
    std::string coefs = kCoefHeader;
    const std::vector<std::string> controls{"log_experience", "log_answers", "log_total_votes"};
    const std::optional<std::string> qcl = std::string("task_qminute");
    fit_model(ctx, models, coefs, "top_answer_year_fe", voting, {"top_answer", controls, {"year"}, qcl, {}, {}});
    fit_model(ctx, models, coefs, "top_answer_task_year_fe", voting, {"top_answer", controls, {"task_year"}, qcl, {}, {}});
    fit_model(ctx, models, coefs, "log_votes_task_year_fe", voting, {"log_votes", controls, {"task_year"}, qcl, {}, {}});
    const RegressionSpec iv{"top_answer", {"log_answers", "log_total_votes"}, {"task_year"}, qcl,
                            {"log_experience"},   {"instrument"}};
    fit_model(ctx, models, coefs, "top_answer_iv", voting, iv);
    const auto placebo = placebo_split(voting);
    fit_model(ctx, models, coefs, "top_answer_iv_within_24h", placebo.within_24h, iv);
    fit_model(ctx, models, coefs, "top_answer_iv_after_24h", placebo.after_24h, iv);

    // entry on S2 with R from S1
    std::map<int, UserTaskMatrix> windows, activity;
    for (int t = first; t <= years.last; ++t) {
        windows.emplace(t, experience_matrix(corpus, qtasks, tax.size(), samples.s2, Window::preceding(t), "S2"));
        activity.emplace(t, experience_matrix(corpus, qtasks, tax.size(), samples.s2, Window::calendar(t), "S2"));
    }
    const EntryRows entry = build_entry_rows(windows, activity, R, values);
    if (entry.dropped_unvalued) ctx.note(std::to_string(entry.dropped_unvalued) + " at-risk cells without a task value");
    ctx.write("entry_rows.csv", entry.rows.csv());
    try {
        ctx.write("entry_bins.csv", bin_table_csv(binned_probability(entry.rows, "density", "entered",
                                                                     static_cast<std::size_t>(c.integer("bins")))));
    } catch (const Error& e) {
        ctx.warn(std::string("entry bins: ") + e.what());
        ctx.write("entry_bins.csv", bin_table_csv({}));
    }
    if (entry.rows.has("density_std"))
        fit_model(ctx, models, coefs, "entry", entry.rows,
                  {"entered", {"density_std", "log_value_std"}, {"year"}, std::string("user_id"), {}, {}});
    else
        ctx.warn("entry: too few at-risk rows to standardize");

    ojson out;
    out["config_hash"] = c.hash();
    out["voting_rows"] = voting.rows();
    out["placebo_rows"] = {{"within_24h", placebo.within_24h.rows()}, {"after_24h", placebo.after_24h.rows()}};
    out["entry_rows"] = entry.rows.rows();
    out["entry_dropped_unvalued"] = entry.dropped_unvalued;
    out["models"] = models;
    ctx.write("results.json", out.dump(2) + "\n");
    ctx.write("coefficients.csv", coefs);
}

void stage_structure(StageContext& ctx) {
    const Corpus corpus = load_ingested(ctx);
    const TaskTaxonomy tax = load_taxonomy(ctx, corpus);
    const auto& c = ctx.config();
    std::vector<LanguageRule> rules;
    if (const fs::path p = ctx.input("language_rules.csv", false); !p.empty()) rules = read_language_rules(p);
    std::set<std::string> excluded;
    if (const fs::path p = ctx.input("exclude_languages.txt", false); !p.empty()) excluded = read_exclusion_list(p);
    Warnings w;
    const auto languages = canonicalize_languages(corpus.tags(), rules, &w);
    ctx.warn_all(w);
    const auto threshold = c.integer("user_threshold");

    const auto years = corpus_years(corpus);
    std::map<int, TaskLanguageMatrix> yearly;
    for (int y = years.first; y <= years.last; ++y)
        yearly.emplace(y, task_language_matrix(corpus, tax, languages, Window::calendar(y), threshold, excluded));
    const int focus = c.integer("structure_year") ? static_cast<int>(c.integer("structure_year")) : years.last;
    auto it = yearly.find(focus);
    if (it == yearly.end()) throw ConfigError("structure_year " + std::to_string(focus) + " is outside the corpus");
    const TaskLanguageMatrix& m = it->second;
    if (m.languages.empty()) throw Error("no language tags after canonicalization and exclusion");

    ctx.write("task_language.csv", task_language_csv(m));
    ojson nj = ojson::parse(nodf_json(nodf(m.A), m));
    nj["config_hash"] = c.hash();
    ctx.write("nodf.json", nj.dump(2) + "\n");
    ctx.write("top_language_series.csv", top_language_series_csv(top_language_series(yearly)));
    const std::string& lang = c.str("footprint_language");
    ctx.write("footprint.csv", footprint_csv(lang, language_footprint(m, lang, static_cast<std::size_t>(c.integer("footprint_k")))));
    const std::string &a = c.str("dominance_a"), &b = c.str("dominance_b");
    ctx.write("dominance.csv", dominance_csv(a, b, pairwise_dominance(yearly, a, b)));

    if (const fs::path p = ctx.input("language_shares.csv", false); !p.empty()) {
        Warnings rw;
        const Eigen::MatrixXd U = reweight_languages(m, read_language_shares(p), focus, &rw);
        ctx.warn_all(rw);
        std::string csv = "task_id,language,users,reweighted_users\n";
        for (Eigen::Index t = 0; t < U.rows(); ++t)
            for (Eigen::Index l = 0; l < U.cols(); ++l)
                if (m.U(t, l) > 0)
                    csv += std::to_string(t) + "," + csv_escape(m.languages[static_cast<std::size_t>(l)]) + "," +
                           std::to_string(m.U(t, l)) + "," + format_double(U(t, l)) + "\n";
        ctx.write("task_language_reweighted.csv", csv);
    }
}

}  // namespace

void run_stage(const std::string& stage, const PipelineConfig& config, const fs::path& out, std::ostream& log) {
    config.validate();
    std::vector<std::string> missing;
    for (const auto& dep : stage_dependencies(stage))
        if (!fs::exists(out / dep / "manifest.json")) missing.push_back(dep);
    if (!missing.empty()) throw MissingStageError(missing);

    StageContext ctx(stage, config, out, log);
    fs::remove_all(ctx.dir());
    fs::create_directories(ctx.dir());
    if (stage == "ingest") stage_ingest(ctx);
    else if (stage == "sbm") stage_sbm(ctx);
    else if (stage == "taxonomy") stage_taxonomy(ctx);
    else if (stage == "vectors") stage_vectors(ctx);
    else if (stage == "relatedness") stage_relatedness(ctx);
    else if (stage == "value") stage_value(ctx);
    else if (stage == "jobs") stage_jobs(ctx);
    else if (stage == "econ") stage_econ(ctx);
    else if (stage == "structure") stage_structure(ctx);
    ctx.write_manifest();
}

void run_all(const PipelineConfig& config, const fs::path& out, std::ostream& log) {
    config.validate();
    ojson m;
    m["version"] = kVersion;
    m["config_hash"] = config.hash();
    ojson stages = ojson::object();
    for (const auto& s : stage_names()) {
        run_stage(s, config, out, log);
        stages[s] = file_hash_hex(out / s / "manifest.json");
    }
    m["stages"] = stages;
    write_file(out / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Figures

namespace {

struct FigureSource {
    const char* id;
    const char* stage;
    const char* file;
    const char* model_prefix;  // coefficient filter, or nullptr to copy
};

const std::vector<FigureSource>& figure_sources() {
    static const std::vector<FigureSource> f{
        {"fig2b", "jobs", "mask_table.csv", nullptr},
        {"fig3a", "vectors", "shares.csv", nullptr},
        {"fig3b", "econ", "entry_bins.csv", nullptr},
        {"fig3c", "econ", "coefficients.csv", "top_answer"},
        {"fig3d", "econ", "coefficients.csv", "entry"},
        {"fig4a", "structure", "task_language.csv", nullptr},
        {"fig4b", "structure", "top_language_series.csv", nullptr},
        {"fig4c", "structure", "footprint.csv", nullptr},
        {"appF", "structure", "dominance.csv", nullptr},
    };
    return f;
}

}  // namespace

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        for (const auto& f : figure_sources()) v.push_back(f.id);
        return v;
    }();
    return ids;
}

fs::path emit_figure(const std::string& id, const fs::path& out) {
    auto it = std::find_if(figure_sources().begin(), figure_sources().end(),
                           [&](const FigureSource& f) { return id == f.id; });
    if (it == figure_sources().end()) throw ConfigError("unknown figure id '" + id + "'");
    const fs::path src = out / it->stage / it->file;
    if (!fs::exists(out / it->stage / "manifest.json") || !fs::exists(src)) throw MissingStageError({it->stage});
    std::string text = read_file(src);
    if (it->model_prefix) {
        const auto lines = split(text, '\n');
        text = lines.at(0) + "\n";
        for (std::size_t i = 1; i < lines.size(); ++i)
            if (lines[i].rfind(it->model_prefix, 0) == 0) text += lines[i] + "\n";
    }
    const fs::path dst = out / "figures" / (id + ".csv");
    fs::create_directories(dst.parent_path());
    write_file(dst, text);
    return dst;
}

// ---------------------------------------------------------------------------

void write_synthetic_inputs(const fs::path& dir, std::size_t num_questions, std::uint64_t seed, std::ostream& log) {
    const synth::MiniCorpus mini = synth::mini_corpus(num_questions, seed);
    synth::write_mini_corpus(mini, dir);

    // labels must match the taxonomy the default configuration infers
    PipelineConfig config;
    config.set("seed", std::to_string(seed));
    config.set_input(dir);
    const fs::path scratch = dir / ".labels_tmp";
    fs::remove_all(scratch);
    for (const char* s : {"ingest", "sbm", "taxonomy"}) run_stage(s, config, scratch, log);
    const Corpus corpus = load_snapshot(scratch / "ingest" / "corpus");
    const TaskTaxonomy tax = parse_taxonomy_json(read_file(scratch / "taxonomy" / "taxonomy.json"), corpus);
    write_file(dir / "task_labels.jsonl", task_labels_jsonl(synth::mini_task_labels(mini, tax, corpus.tags(), seed)));
    fs::remove_all(scratch);
    log << "wrote synthetic inputs with " << tax.size() << " tasks to " << dir.string() << "\n";
}

}  // namespace taskspace
