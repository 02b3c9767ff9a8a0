#include "taskspace/relatedness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace taskspace {

CountMatrix cooccurrence_counts(const Eigen::SparseMatrix<double>& T) {
    if (T.rows() == 0 || T.cols() == 0) throw Error("cooccurrence_counts: empty matrix");
    CountMatrix C = CountMatrix::Zero(T.rows(), T.rows());
    std::vector<Eigen::Index> active;
    for (Eigen::Index u = 0; u < T.outerSize(); ++u) {
        active.clear();
        for (Eigen::SparseMatrix<double>::InnerIterator it(T, u); it; ++it)
            if (it.value() > 0) active.push_back(it.row());
        for (Eigen::Index a : active)
            for (Eigen::Index b : active) ++C(a, b);
    }
    return C;
}

CountMatrix cooccurrence_counts(const UserTaskMatrix& m) { return cooccurrence_counts(m.T); }

void RelatednessMatrix::require_sample(const std::string& expected) const {
    if (sample != expected)
        throw Error("relatedness built from sample '" + sample + "' but '" + expected + "' is required");
}

namespace {

// Unclipped PMI from a normalized symmetric probability matrix.
double raw_pmi(double p_tk, double p_t, double p_k) {
    if (p_tk <= 0) return -std::numeric_limits<double>::infinity();
    return std::log(p_tk / (p_t * p_k));
}

}  // namespace

RelatednessMatrix pmi_matrix(const CountMatrix& C) {
    if (C.rows() != C.cols()) throw Error("pmi_matrix: count matrix must be square");
    if ((C.array() < 0).any()) throw Error("pmi_matrix: negative counts");
    const double total = static_cast<double>(C.sum());
    if (!(total > 0)) throw Error("pmi_matrix: total count must be positive");
    const Eigen::MatrixXd p = C.cast<double>() / total;
    const Eigen::VectorXd marg = p.rowwise().sum();
    const Eigen::Index n = C.rows();
    RelatednessMatrix r;
    r.R = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a; b < n; ++b) {
            if (p(a, b) <= 0) continue;
            const double v = std::max(0.0, raw_pmi(p(a, b), marg(a), marg(b)));
            r.R(a, b) = v;
            r.R(b, a) = v;
        }
    return r;
}

CredibleIntervals pmi_credible_intervals(const CountMatrix& C, int draws, double prior_alpha, std::uint64_t seed) {
    if (draws < 100) throw Error("pmi_credible_intervals: need at least 100 draws");
    if (!(prior_alpha > 0)) throw Error("pmi_credible_intervals: prior_alpha must be positive");
    if (C.rows() != C.cols()) throw Error("pmi_credible_intervals: count matrix must be square");
    const Eigen::Index n = C.rows();
    const std::size_t cells = static_cast<std::size_t>(n * (n + 1) / 2);

    // Unordered cells in row-major upper-triangular order.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> index;
    std::vector<double> shape;
    index.reserve(cells);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a; b < n; ++b) {
            index.emplace_back(a, b);
            const double count = a == b ? static_cast<double>(C(a, a)) : static_cast<double>(C(a, b) + C(b, a));
            shape.push_back(prior_alpha + count);
        }

    // Draws are regenerated per chunk of cells to bound memory.
    const std::size_t chunk = std::max<std::size_t>(1, (std::size_t{1} << 22) / static_cast<std::size_t>(draws));
    CredibleIntervals out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    std::vector<double> g(cells);
    Eigen::VectorXd marg(n);
    for (std::size_t first = 0; first < cells; first += chunk) {
        const std::size_t last = std::min(cells, first + chunk);
        std::vector<std::vector<double>> values(last - first, std::vector<double>(static_cast<std::size_t>(draws)));
        for (int d = 0; d < draws; ++d) {
            Rng rng(counter_seed(seed, static_cast<std::uint64_t>(d)));
            double sum = 0;
            for (std::size_t c = 0; c < cells; ++c) {
                g[c] = gamma_draw(rng, shape[c]);
                sum += g[c];
            }
            marg.setZero();
            for (std::size_t c = 0; c < cells; ++c) {
                const auto [a, b] = index[c];
                if (a == b) {
                    marg(a) += g[c] / sum;
                } else {
                    marg(a) += 0.5 * g[c] / sum;
                    marg(b) += 0.5 * g[c] / sum;
                }
            }
            for (std::size_t c = first; c < last; ++c) {
                const auto [a, b] = index[c];
                const double p = (a == b ? g[c] : 0.5 * g[c]) / sum;
                values[c - first][static_cast<std::size_t>(d)] = raw_pmi(p, marg(a), marg(b));
            }
        }
        for (std::size_t c = first; c < last; ++c) {
            const auto [a, b] = index[c];
            out.lo(a, b) = out.lo(b, a) = percentile(values[c - first], 0.025);
            out.hi(a, b) = out.hi(b, a) = percentile(values[c - first], 0.975);
        }
    }
    return out;
}

Eigen::MatrixXd row_normalized(const Eigen::MatrixXd& R) {
    Eigen::MatrixXd W = R;
    for (Eigen::Index t = 0; t < W.rows(); ++t) {
        const double s = W.row(t).sum();
        if (s > 0) W.row(t) /= s;
    }
    return W;
}

double density(const Eigen::MatrixXd& R, const Eigen::VectorXd& x, Eigen::Index task) {
    if (task < 0 || task >= R.rows()) throw Error("density: task out of range");
    if (x.size() != R.cols()) throw Error("density: vector length does not match the relatedness matrix");
    const double s = R.row(task).sum();
    if (!(s > 0)) throw Error("density: isolated task " + std::to_string(task));
    return R.row(task).dot(x) / s;
}

std::string relatedness_csv(const RelatednessMatrix& r) {
    std::string out = "task_a,task_b,pmi,ci_lo,ci_hi\n";
    for (Eigen::Index a = 0; a < r.size(); ++a)
        for (Eigen::Index b = a; b < r.size(); ++b) {
            out += std::to_string(a) + "," + std::to_string(b) + "," + format_double(r.R(a, b)) + ",";
            if (r.has_intervals())
                out += format_double(r.ci_lo(a, b)) + "," + format_double(r.ci_hi(a, b));
            else
                out += "NA,NA";
            out += "\n";
        }
    return out;
}

std::string relatedness_edges_csv(const RelatednessMatrix& r) {
    std::string out = "source,target,weight\n";
    for (Eigen::Index a = 0; a < r.size(); ++a)
        for (Eigen::Index b = a + 1; b < r.size(); ++b)
            if (r.R(a, b) > 0)
                out += std::to_string(a) + "," + std::to_string(b) + "," + format_double(r.R(a, b)) + "\n";
    return out;
}

RelatednessMatrix parse_relatedness_csv(const std::string& text, std::size_t num_tasks) {
    const auto n = static_cast<Eigen::Index>(num_tasks);
    RelatednessMatrix r;
    r.R = Eigen::MatrixXd::Zero(n, n);
    r.ci_lo = Eigen::MatrixXd::Zero(n, n);
    r.ci_hi = Eigen::MatrixXd::Zero(n, n);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool intervals = true;
    auto num = [](const std::string& s) { return s == "NA" ? std::nan("") : std::stod(s); };
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "task_a,task_b,pmi,ci_lo,ci_hi") throw ParseError("relatedness.csv", 1, "unexpected header");
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw ParseError("relatedness.csv", line_no, "expected 5 fields");
        const auto a = static_cast<Eigen::Index>(std::stoul(f[0]));
        const auto b = static_cast<Eigen::Index>(std::stoul(f[1]));
        if (a >= n || b >= n) throw ParseError("relatedness.csv", line_no, "task id out of range");
        r.R(a, b) = r.R(b, a) = num(f[2]);
        r.ci_lo(a, b) = r.ci_lo(b, a) = num(f[3]);
        r.ci_hi(a, b) = r.ci_hi(b, a) = num(f[4]);
        intervals = intervals && f[3] != "NA";
    }
    if (!intervals) {
        r.ci_lo.resize(0, 0);
        r.ci_hi.resize(0, 0);
    }
    return r;
}

}  // namespace taskspace
