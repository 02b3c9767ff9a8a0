#include "taskspace/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace taskspace {

void Table::add(const std::string& name, Eigen::VectorXd values) {
    if (index_.count(name)) throw Error("table: duplicate column '" + name + "'");
    if (!names_.empty() && static_cast<std::size_t>(values.size()) != rows_)
        throw Error("table: column '" + name + "' has the wrong length");
    rows_ = static_cast<std::size_t>(values.size());
    index_[name] = names_.size();
    names_.push_back(name);
    columns_.push_back(std::move(values));
}

const Eigen::VectorXd& Table::col(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("table: no column '" + name + "'");
    return columns_[it->second];
}

Eigen::MatrixXd Table::cols(std::span<const std::string> names) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = col(names[j]);
    return m;
}

Table Table::select(std::span<const std::size_t> rows) const {
    Table t;
    for (std::size_t j = 0; j < names_.size(); ++j) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = columns_[j](static_cast<Eigen::Index>(rows[i]));
        t.add(names_[j], std::move(v));
    }
    return t;
}

std::string Table::csv() const {
    std::string out;
    for (std::size_t j = 0; j < names_.size(); ++j) out += (j ? "," : "") + names_[j];
    out += "\n";
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < names_.size(); ++j)
            out += (j ? "," : "") + format_double(columns_[j](static_cast<Eigen::Index>(i)));
        out += "\n";
    }
    return out;
}

Eigen::Index EstimationResult::index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error("no coefficient '" + name + "'");
    return it - names.begin();
}

// ---------------------------------------------------------------------------

namespace {

struct Factor {
    std::vector<std::size_t> code;
    std::size_t levels = 0;
};

Factor encode(const Eigen::VectorXd& v) {
    std::map<double, std::size_t> ids;
    for (Eigen::Index i = 0; i < v.size(); ++i) ids.emplace(v(i), 0);
    std::size_t next = 0;
    for (auto& [value, id] : ids) id = next++;
    Factor f;
    f.levels = ids.size();
    f.code.resize(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f.code[static_cast<std::size_t>(i)] = ids.at(v(i));
    return f;
}

void demean(Eigen::MatrixXd& m, const Factor& f) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f.levels), m.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.levels));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto g = static_cast<Eigen::Index>(f.code[static_cast<std::size_t>(i)]);
        sums.row(g) += m.row(i);
        counts(g) += 1;
    }
    for (Eigen::Index g = 0; g < sums.rows(); ++g) sums.row(g) /= counts(g);
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) -= sums.row(static_cast<Eigen::Index>(f.code[static_cast<std::size_t>(i)]));
}

void absorb(Eigen::MatrixXd& m, const std::vector<Factor>& factors) {
    if (factors.empty()) return;
    if (factors.size() == 1) {
        demean(m, factors[0]);
        return;
    }
    for (int iter = 0; iter < 10000; ++iter) {
        const Eigen::MatrixXd before = m;
        demean(m, factors[0]);
        demean(m, factors[1]);
        if (m.size() == 0 || (m - before).cwiseAbs().maxCoeff() < 1e-10) return;
    }
    throw Error("fixed-effect absorption did not converge in 10000 iterations");
}

// Levels absorbed by the factors: G for one factor, G1 + G2 - components for two.
std::size_t absorbed_dof(const std::vector<Factor>& factors) {
    if (factors.empty()) return 0;
    if (factors.size() == 1) return factors[0].levels;
    const std::size_t a = factors[0].levels, b = factors[1].levels;
    std::vector<std::size_t> parent(a + b);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < factors[0].code.size(); ++i)
        parent[find(factors[0].code[i])] = find(a + factors[1].code[i]);
    std::size_t components = 0;
    for (std::size_t i = 0; i < a + b; ++i) components += find(i) == i;
    return a + b - components;
}

struct Prepared {
    std::vector<Factor> factors;
    std::optional<Factor> cluster;
    std::size_t dof = 0;
    Eigen::VectorXd y_raw;
};

Prepared prepare(const Table& data, const RegressionSpec& spec) {
    if (spec.fixed_effects.size() > 2) throw Error("at most two fixed-effect factors are supported");
    if (data.rows() == 0) throw Error("regression on an empty table");
    Prepared p;
    for (const auto& fe : spec.fixed_effects) p.factors.push_back(encode(data.col(fe)));
    if (spec.cluster) p.cluster = encode(data.col(*spec.cluster));
    p.dof = absorbed_dof(p.factors);
    p.y_raw = data.col(spec.outcome);
    return p;
}

// Regressor columns (after the outcome in column 0) that the fixed effects
// wiped out entirely, or an outcome with nothing to explain.
void check_absorbed(const Eigen::MatrixXd& before, const Eigen::MatrixXd& after, const std::vector<std::string>& names) {
    std::string bad;
    for (Eigen::Index k = 1; k < after.cols(); ++k)
        if (after.col(k).norm() <= 1e-9 * before.col(k).norm()) bad += " " + names[static_cast<std::size_t>(k - 1)];
    if (!bad.empty()) throw Error("regressors absorbed by the fixed effects:" + bad);
    const Eigen::VectorXd y = after.col(0).array() - after.col(0).mean();
    if (y.norm() <= 1e-9 * before.col(0).norm()) throw Error("outcome has no variation left to explain");
}

void check_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names, const std::string& what) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() == X.cols()) return;
    std::string msg = what + " is rank deficient; collinear columns:";
    for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) msg += " " + names[static_cast<std::size_t>(qr.colsPermutation().indices()(k))];
    throw Error(msg);
}

// Sandwich covariance with HC1 or CR1 scaling; `Xb` are the bread regressors.
Eigen::MatrixXd sandwich(const Eigen::MatrixXd& Xb, const Eigen::VectorXd& e, const Prepared& p, std::size_t K,
                         std::size_t* clusters) {
    const auto N = static_cast<double>(Xb.rows());
    const Eigen::Index k = Xb.cols();
    const Eigen::MatrixXd bread = (Xb.transpose() * Xb).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    double scale;
    if (p.cluster) {
        Eigen::MatrixXd score = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.cluster->levels), k);
        for (Eigen::Index i = 0; i < Xb.rows(); ++i)
            score.row(static_cast<Eigen::Index>(p.cluster->code[static_cast<std::size_t>(i)])) += e(i) * Xb.row(i);
        meat = score.transpose() * score;
        const auto G = static_cast<double>(p.cluster->levels);
        if (G < 2) throw Error("clustered covariance needs at least two clusters");
        scale = G / (G - 1) * (N - 1) / (N - static_cast<double>(K));
        *clusters = p.cluster->levels;
    } else {
        meat = Xb.transpose() * e.array().square().matrix().asDiagonal() * Xb;
        scale = N / (N - static_cast<double>(K));
        *clusters = 0;
    }
    Eigen::MatrixXd v = scale * bread * meat * bread;
    return 0.5 * (v + v.transpose());
}

void fit_statistics(EstimationResult& r, const Prepared& p, const Eigen::VectorXd& y_within, const Eigen::VectorXd& e) {
    const double ssr = e.squaredNorm();
    const double tss = (p.y_raw.array() - p.y_raw.mean()).square().sum();
    r.r2 = tss > 0 ? 1 - ssr / tss : std::nan("");
    if (p.factors.empty()) {
        r.within_r2 = std::nan("");
    } else {
        const double wss = y_within.squaredNorm();
        r.within_r2 = wss > 0 ? 1 - ssr / wss : std::nan("");
    }
}

}  // namespace

void absorb_fixed_effects(Eigen::MatrixXd& m, const std::vector<std::vector<std::size_t>>& factors,
                          std::size_t) {
    std::vector<Factor> fs;
    for (const auto& codes : factors) {
        Factor f;
        f.code = codes;
        f.levels = codes.empty() ? 0 : *std::max_element(codes.begin(), codes.end()) + 1;
        fs.push_back(std::move(f));
    }
    absorb(m, fs);
}

EstimationResult fit_ols_fe(const Table& data, const RegressionSpec& spec) {
    const Prepared p = prepare(data, spec);
    const auto n = static_cast<Eigen::Index>(data.rows());
    std::vector<std::string> names;
    if (p.factors.empty()) names.push_back("(intercept)");
    names.insert(names.end(), spec.regressors.begin(), spec.regressors.end());

    // y in column 0, regressors after it, absorbed together
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(names.size()) + 1);
    m.col(0) = p.y_raw;
    Eigen::Index c = 1;
    if (p.factors.empty()) m.col(c++).setOnes();
    for (const auto& r : spec.regressors) m.col(c++) = data.col(r);
    const Eigen::MatrixXd raw = m;
    absorb(m, p.factors);
    check_absorbed(raw, m, names);

    const Eigen::VectorXd y = m.col(0);
    const Eigen::MatrixXd X = m.rightCols(m.cols() - 1);
    const std::size_t K = names.size() + p.dof;
    if (data.rows() <= K) throw Error("regression needs more observations than parameters");
    check_rank(X, names, "design matrix");

    EstimationResult r;
    r.names = names;
    r.coef = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd e = y - X * r.coef;
    r.n_obs = data.rows();
    r.dof_absorbed = p.dof;
    r.vcov = sandwich(X, e, p, K, &r.clusters);
    fit_statistics(r, p, y, e);
    return r;
}

EstimationResult fit_2sls(const Table& data, const RegressionSpec& spec) {
    if (spec.endogenous.empty()) throw Error("2SLS needs at least one endogenous regressor");
    if (spec.instruments.size() < spec.endogenous.size())
        throw Error("2SLS needs at least as many instruments as endogenous regressors");
    for (const auto& z : spec.instruments)
        if (std::find(spec.regressors.begin(), spec.regressors.end(), z) != spec.regressors.end())
            throw Error("instrument '" + z + "' is also an exogenous control");

    const Prepared p = prepare(data, spec);
    const auto n = static_cast<Eigen::Index>(data.rows());
    std::vector<std::string> exog;
    if (p.factors.empty()) exog.push_back("(intercept)");
    exog.insert(exog.end(), spec.regressors.begin(), spec.regressors.end());
    const auto ne = static_cast<Eigen::Index>(spec.endogenous.size());
    const auto nx = static_cast<Eigen::Index>(exog.size());
    const auto nz = static_cast<Eigen::Index>(spec.instruments.size());

    // [y | endogenous | exogenous | instruments]
    Eigen::MatrixXd m(n, 1 + ne + nx + nz);
    m.col(0) = p.y_raw;
    Eigen::Index c = 1;
    for (const auto& x : spec.endogenous) m.col(c++) = data.col(x);
    for (const auto& x : exog) m.col(c++) = x == "(intercept)" ? Eigen::VectorXd::Ones(n) : data.col(x);
    for (const auto& z : spec.instruments) m.col(c++) = data.col(z);
    std::vector<std::string> all(spec.endogenous.begin(), spec.endogenous.end());
    all.insert(all.end(), exog.begin(), exog.end());
    all.insert(all.end(), spec.instruments.begin(), spec.instruments.end());
    const Eigen::MatrixXd raw = m;
    absorb(m, p.factors);
    check_absorbed(raw, m, all);

    const Eigen::VectorXd y = m.col(0);
    const Eigen::MatrixXd X = m.middleCols(1, ne + nx);
    const Eigen::MatrixXd Xexog = m.middleCols(1 + ne, nx);
    Eigen::MatrixXd W(n, nz + nx);
    W << m.rightCols(nz), Xexog;

    std::vector<std::string> names(spec.endogenous.begin(), spec.endogenous.end());
    names.insert(names.end(), exog.begin(), exog.end());
    std::vector<std::string> wnames(spec.instruments.begin(), spec.instruments.end());
    wnames.insert(wnames.end(), exog.begin(), exog.end());
    const std::size_t K = names.size() + p.dof;
    if (data.rows() <= static_cast<std::size_t>(W.cols()) + p.dof) throw Error("2SLS needs more observations than instruments");
    check_rank(W, wnames, "first stage");

    const auto wqr = W.colPivHouseholderQr();
    const Eigen::MatrixXd Xhat = W * wqr.solve(X);
    check_rank(Xhat, names, "second stage");

    EstimationResult r;
    r.names = names;
    r.coef = Xhat.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd e = y - X * r.coef;
    r.n_obs = data.rows();
    r.dof_absorbed = p.dof;
    r.vcov = sandwich(Xhat, e, p, K, &r.clusters);
    fit_statistics(r, p, y, e);

    // Classical first-stage F of the excluded instruments, weakest endogenous.
    const auto N = static_cast<double>(n);
    double fmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < ne; ++j) {
        const Eigen::VectorXd xj = X.col(j);
        const double ssr_u = (xj - Xhat.col(j)).squaredNorm();
        double ssr_r = xj.squaredNorm();
        if (nx > 0) ssr_r = (xj - Xexog * Xexog.colPivHouseholderQr().solve(xj)).squaredNorm();
        const double df = N - static_cast<double>(W.cols()) - static_cast<double>(p.dof);
        const double f = ssr_u > 0 ? ((ssr_r - ssr_u) / static_cast<double>(nz)) / (ssr_u / df)
                                   : std::numeric_limits<double>::infinity();
        fmin = std::min(fmin, f);
    }
    r.first_stage_f = fmin;
    if (fmin < 1) r.warnings.push_back("weak identification: first-stage F = " + format_double(fmin));
    return r;
}

// ---------------------------------------------------------------------------

double circular_mean_minute(std::span<const int> minutes) {
    if (minutes.empty()) throw Error("circular mean of no minutes");
    double s = 0, c = 0, sum = 0;
    for (int m : minutes) {
        const double a = 2 * M_PI * m / kMinutesPerDay;
        s += std::sin(a);
        c += std::cos(a);
        sum += m;
    }
    if (std::hypot(s, c) < 1e-9 * static_cast<double>(minutes.size())) return sum / static_cast<double>(minutes.size());
    double a = std::atan2(s, c);
    if (a < 0) a += 2 * M_PI;
    const double m = a * kMinutesPerDay / (2 * M_PI);
    return m >= kMinutesPerDay ? m - kMinutesPerDay : m;
}

double circular_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), static_cast<double>(kMinutesPerDay));
    return std::min(d, kMinutesPerDay - d);
}

Eigen::MatrixXd minute_task_counts(const Corpus& corpus, const UserTaskMatrix& X, double width) {
    if (!(width > 0)) throw Error("minute_task_counts: kernel width must be positive");
    const auto nu = static_cast<Eigen::Index>(X.users.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nu, kMinutesPerDay);
    std::vector<int> minutes;
    for (Eigen::Index u = 0; u < nu; ++u) {
        minutes.clear();
        for (std::size_t ai : corpus.answers_of_user(X.users[static_cast<std::size_t>(u)]))
            if (X.window.contains(corpus.answers()[ai].created_at))
                minutes.push_back(day_minute(corpus.answers()[ai].created_at));
        if (minutes.empty()) continue;
        const double mbar = circular_mean_minute(minutes);
        for (int m = 0; m < kMinutesPerDay; ++m) K(u, m) = std::max(0.0, 1 - circular_distance(m, mbar) / width);
    }
    return X.T * K;
}

std::size_t first_answer(const Corpus& corpus, std::size_t qi) {
    const auto ans = corpus.answers_of_question(qi);
    if (ans.empty()) throw Error("question without answers");
    return *std::min_element(ans.begin(), ans.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = corpus.answers()[a];
        const auto& y = corpus.answers()[b];
        return std::tie(x.created_at, x.answer_id) < std::tie(y.created_at, y.answer_id);
    });
}

std::size_t top_answer(const Corpus& corpus, std::size_t qi) {
    const auto ans = corpus.answers_of_question(qi);
    if (ans.empty()) throw Error("question without answers");
    return *std::min_element(ans.begin(), ans.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = corpus.answers()[a];
        const auto& y = corpus.answers()[b];
        return std::make_tuple(-x.votes, x.created_at, x.answer_id) < std::make_tuple(-y.votes, y.created_at, y.answer_id);
    });
}

Table build_voting_rows(const Corpus& corpus, const QuestionTasks& qtasks,
                        const std::map<int, UserTaskMatrix>& experience,
                        const std::map<int, Eigen::MatrixXd>& minute_counts) {
    std::vector<std::array<double, 15>> rows;
    for (std::size_t qi = 0; qi < corpus.questions().size(); ++qi) {
        const auto ans = corpus.answers_of_question(qi);
        if (ans.empty() || qtasks[qi].empty()) continue;
        const std::size_t fa = first_answer(corpus, qi);
        const Answer& a = corpus.answers()[fa];
        const Question& q = corpus.questions()[qi];
        const int year = utc_year(a.created_at);
        auto xe = experience.find(year);
        auto me = minute_counts.find(year);
        if (xe == experience.end() || me == minute_counts.end())
            throw Error("no experience window for answer year " + std::to_string(year));
        const Eigen::Index col = xe->second.column(a.user_id);
        if (col < 0) continue;

        double total_votes = 0;
        for (std::size_t i : ans) total_votes += static_cast<double>(corpus.answers()[i].votes);
        const bool top = top_answer(corpus, qi) == fa;
        const int qminute = day_minute(q.created_at);
        for (TaskId t : qtasks[qi]) {
            const double x = xe->second.T.coeff(t, col);
            rows.push_back({static_cast<double>(q.question_id), static_cast<double>(a.answer_id),
                            static_cast<double>(a.user_id), static_cast<double>(t), static_cast<double>(year),
                            top ? 1.0 : 0.0, std::log(static_cast<double>(a.votes) + 1), std::log(x + 1),
                            std::log(static_cast<double>(ans.size())), std::log(1 + total_votes),
                            static_cast<double>(qminute), me->second(t, qminute),
                            static_cast<double>(a.created_at - q.created_at),
                            static_cast<double>(t) * 10000 + year,
                            static_cast<double>(t) * kMinutesPerDay + qminute});
        }
    }
    static const char* names[] = {"question_id", "answer_id",      "user_id",     "task",       "year",
                                  "top_answer",  "log_votes",      "log_experience", "log_answers", "log_total_votes",
                                  "qminute",     "instrument",     "gap_seconds", "task_year",  "task_qminute"};
    Table t;
    for (std::size_t j = 0; j < 15; ++j) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = rows[i][j];
        t.add(names[j], std::move(v));
    }
    return t;
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x) {
    if (x.size() < 2) throw Error("standardize: need at least two values");
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
    if (!(sd > 0)) throw Error("standardize: constant column");
    return (x.array() - mean) / sd;
}

EntryRows build_entry_rows(const std::map<int, UserTaskMatrix>& windows, const std::map<int, UserTaskMatrix>& years,
                           const RelatednessMatrix& R, const TaskValues& values) {
    R.require_sample("S1");
    const Eigen::MatrixXd W = row_normalized(R.R);
    if (values.value.size() != W.rows()) throw Error("build_entry_rows: task values do not match R");
    std::vector<std::array<double, 6>> rows;
    EntryRows out;
    for (const auto& [year, X] : windows) {
        if (X.sample != "S2") throw Error("build_entry_rows: experience for " + std::to_string(year) + " is not from S2");
        auto ye = years.find(year);
        if (ye == years.end()) throw Error("build_entry_rows: no activity matrix for " + std::to_string(year));
        if (ye->second.sample != "S2") throw Error("build_entry_rows: activity for " + std::to_string(year) + " is not from S2");
        if (X.T.rows() != W.rows()) throw Error("build_entry_rows: experience does not match R");
        for (std::size_t c = 0; c < X.users.size(); ++c) {
            const Eigen::VectorXd x = X.column_counts(static_cast<Eigen::Index>(c)).cast<double>();
            if (x.sum() == 0) continue;
            const Eigen::Index yc = ye->second.column(X.users[c]);
            const Eigen::VectorXd y = yc < 0 ? Eigen::VectorXd::Zero(x.size()) : Eigen::VectorXd(ye->second.column_counts(yc).cast<double>());
            const Eigen::VectorXd d = W * x;
            for (Eigen::Index t = 0; t < x.size(); ++t) {
                if (x(t) != 0) continue;
                if (!values.valued(t) || !(values.value(t) > 0)) {
                    ++out.dropped_unvalued;
                    continue;
                }
                rows.push_back({static_cast<double>(X.users[c]), static_cast<double>(year), static_cast<double>(t),
                                y(t) > 0 ? 1.0 : 0.0, std::log(values.value(t)), d(t)});
            }
        }
    }
    static const char* names[] = {"user_id", "year", "task", "entered", "log_value", "density"};
    for (std::size_t j = 0; j < 6; ++j) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = rows[i][j];
        out.rows.add(names[j], std::move(v));
    }
    if (rows.size() >= 2) {
        out.rows.add("log_value_std", standardize(out.rows.col("log_value")));
        out.rows.add("density_std", standardize(out.rows.col("density")));
    }
    return out;
}

std::vector<BinRow> binned_probability(const Table& rows, const std::string& score, const std::string& outcome,
                                       std::size_t bins) {
    const Eigen::VectorXd& s = rows.col(score);
    const Eigen::VectorXd& o = rows.col(outcome);
    std::vector<double> sv(s.data(), s.data() + s.size());
    std::vector<std::uint8_t> ov(static_cast<std::size_t>(o.size()));
    for (Eigen::Index i = 0; i < o.size(); ++i) {
        if (o(i) != 0 && o(i) != 1) throw Error("binned_probability: outcome must be 0/1");
        ov[static_cast<std::size_t>(i)] = o(i) == 1;
    }
    return equal_size_bins(sv, ov, bins);
}

SalaryRows build_salary_rows(std::span<const JobTaskVector> jobs, const Eigen::MatrixXd& R, const TaskValues& values) {
    const Eigen::MatrixXd W = row_normalized(R);
    std::vector<std::array<double, 6>> rows;
    SalaryRows out;
    for (const auto& job : jobs) {
        if (!job.salary || job.num_tasks() == 0) continue;
        if (job.required.size() != W.rows()) throw Error("build_salary_rows: job vector does not match R");
        double vsum = 0, rsum = 0;
        std::size_t valued = 0;
        for (const auto& [t, cos] : job.cosine) {
            if (values.valued(t) && values.value(t) > 0) {
                vsum += std::log(values.value(t));
                ++valued;
            }
            Eigen::VectorXd others = job.required;
            others(t) = 0;
            rsum += W.row(t).dot(others);
        }
        if (valued == 0) {
            ++out.dropped_unvalued;
            continue;
        }
        const auto n = static_cast<double>(job.num_tasks());
        rows.push_back({static_cast<double>(job.job_id), static_cast<double>(job.year), std::log(*job.salary),
                        vsum / static_cast<double>(valued), rsum / n, std::log(n)});
    }
    static const char* names[] = {"job_id", "year", "log_salary", "vbar", "rbar", "log_n_tasks"};
    for (std::size_t j = 0; j < 6; ++j) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = rows[i][j];
        out.rows.add(names[j], std::move(v));
    }
    return out;
}

PlaceboSplit placebo_split(const Table& voting_rows) {
    const Eigen::VectorXd& gap = voting_rows.col("gap_seconds");
    std::vector<std::size_t> within, after;
    for (Eigen::Index i = 0; i < gap.size(); ++i) {
        if (gap(i) < 0) throw Error("placebo_split: answer precedes its question (row " + std::to_string(i) + ")");
        (gap(i) <= 86400 ? within : after).push_back(static_cast<std::size_t>(i));
    }
    return {voting_rows.select(within), voting_rows.select(after)};
}

std::string stars(double coef, double se) {
    if (!(se > 0)) return "";
    const double p = std::erfc(std::abs(coef / se) / std::sqrt(2.0));
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.1) return "*";
    return "";
}

}  // namespace taskspace
