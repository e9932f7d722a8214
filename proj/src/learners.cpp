#include "proact/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "proact/rng.hpp"

namespace proact {

const char *to_string(ModelFamily f) {
    switch (f) {
    case ModelFamily::tree_ensemble: return "tree_ensemble";
    case ModelFamily::scaled_logistic: return "scaled_logistic";
    case ModelFamily::percentile_rank_one_feature: return "percentile_rank_one_feature";
    case ModelFamily::simple_thresholder: return "simple_thresholder";
    }
    return "?";
}

std::optional<ModelFamily> model_family_from(std::string_view s) {
    if (s == "tree_ensemble") return ModelFamily::tree_ensemble;
    if (s == "scaled_logistic") return ModelFamily::scaled_logistic;
    if (s == "percentile_rank_one_feature") return ModelFamily::percentile_rank_one_feature;
    if (s == "simple_thresholder") return ModelFamily::simple_thresholder;
    return std::nullopt;
}

std::string ModelSpec::id() const {
    std::string out = to_string(family);
    out += '(';
    bool first = true;
    for (const auto &[k, v] : hyperparams) {
        if (!first)
            out += ',';
        out += k + "=" + v;
        first = false;
    }
    out += ')';
    return out;
}

std::uint64_t ModelSpec::hash() const { return fnv1a64(id()); }

const std::string &ModelSpec::hp(const std::string &name) const {
    auto it = hyperparams.find(name);
    if (it == hyperparams.end())
        throw std::invalid_argument("missing hyperparameter: " + name);
    return it->second;
}

int ModelSpec::hp_int(const std::string &name) const { return std::stoi(hp(name)); }
double ModelSpec::hp_double(const std::string &name) const { return std::stod(hp(name)); }

GridConfig GridConfig::paper_grid() {
    GridConfig g;
    g.tree_params = {
        {"criterion", {"gini", "entropy"}},
        {"max_depth", {"5", "10", "50"}},
        {"max_features", {"sqrt"}},
        {"min_samples_split", {"10", "25", "100"}},
        {"n_estimators", {"100", "1000", "5000"}},
    };
    g.logistic_params = {
        {"C", {"0.001", "0.1", "1", "10"}},
        {"penalty", {"l1", "l2"}},
    };
    g.rank_one_features = {"booking_count_1y", "booking_count_5y"};
    g.thresholder_rules = {"any_mh_history", "release_within_1m", "release_within_3m",
                           "release_within_6m", "release_within_1y"};
    return g;
}

bool GridConfig::empty() const {
    return tree_params.empty() && logistic_params.empty() && rank_one_features.empty() &&
           thresholder_rules.empty();
}

GridConfig GridConfig::with_tree_cap(int cap) const {
    GridConfig g = *this;
    auto it = g.tree_params.find("n_estimators");
    if (it != g.tree_params.end()) {
        std::vector<std::string> kept;
        for (const std::string &v : it->second)
            if (std::stoi(v) <= cap)
                kept.push_back(v);
        if (kept.empty())
            kept.push_back(std::to_string(cap));
        it->second = kept;
    }
    return g;
}

namespace {

void check_param_names(const std::map<std::string, std::vector<std::string>> &params,
                       std::initializer_list<const char *> allowed, const char *family) {
    for (const auto &[name, values] : params) {
        bool ok = false;
        for (const char *a : allowed)
            if (name == a)
                ok = true;
        if (!ok)
            throw std::invalid_argument(std::string("unknown hyperparameter for ") + family +
                                        ": " + name);
        if (values.empty())
            throw std::invalid_argument(std::string("empty value list for ") + family +
                                        " hyperparameter: " + name);
    }
}

void cross_product(const std::map<std::string, std::vector<std::string>> &params,
                   ModelFamily family, std::vector<ModelSpec> &out) {
    if (params.empty())
        return;
    std::vector<ModelSpec> acc{ModelSpec{family, {}, 0}};
    for (const auto &[name, values] : params) {
        std::vector<ModelSpec> next;
        next.reserve(acc.size() * values.size());
        for (const ModelSpec &base : acc)
            for (const std::string &v : values) {
                ModelSpec s = base;
                s.hyperparams[name] = v;
                next.push_back(std::move(s));
            }
        acc = std::move(next);
    }
    for (ModelSpec &s : acc)
        out.push_back(std::move(s));
}

} // namespace

std::vector<ModelSpec> expand_grid(const GridConfig &grid, std::uint64_t base_seed) {
    check_param_names(grid.tree_params,
                      {"criterion", "max_depth", "max_features", "min_samples_split",
                       "n_estimators"},
                      "tree_ensemble");
    check_param_names(grid.logistic_params, {"penalty", "C"}, "scaled_logistic");

    std::vector<ModelSpec> specs;
    cross_product(grid.tree_params, ModelFamily::tree_ensemble, specs);
    cross_product(grid.logistic_params, ModelFamily::scaled_logistic, specs);
    for (const std::string &f : grid.rank_one_features) {
        ModelSpec s{ModelFamily::percentile_rank_one_feature, {{"feature", f}}, 0};
        specs.push_back(std::move(s));
    }
    for (const std::string &r : grid.thresholder_rules) {
        ModelSpec s{ModelFamily::simple_thresholder,
                    {{"rules", r}, {"logical_operator", "and"}},
                    0};
        specs.push_back(std::move(s));
    }
    for (ModelSpec &s : specs)
        s.seed = derive_seed(base_seed, s.id());
    return specs;
}

// ---------------------------------------------------------------------------
// tree ensemble

namespace {

double impurity(int n, int pos, bool entropy) {
    if (n == 0)
        return 0.0;
    double p = static_cast<double>(pos) / n;
    double q = 1.0 - p;
    if (!entropy)
        return 1.0 - p * p - q * q;
    double e = 0.0;
    if (p > 0)
        e -= p * std::log2(p);
    if (q > 0)
        e -= q * std::log2(q);
    return e;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

std::vector<TreeNode> build_tree(const FeatureMatrix &X, const std::vector<int> &y,
                                 std::vector<int> sample, bool entropy, int max_depth,
                                 int min_samples_split, Rng &rng) {
    const int p = static_cast<int>(X.cols());
    const int n_candidates = std::max(1, static_cast<int>(std::floor(std::sqrt(p))));
    std::vector<TreeNode> nodes;
    std::vector<int> feat_pool(p);

    struct Frame {
        int node;
        std::size_t begin, end;
        int depth;
    };
    nodes.push_back(TreeNode{});
    std::vector<Frame> stack{{0, 0, sample.size(), 0}};
    std::vector<std::pair<double, int>> scratch;

    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        const int m = static_cast<int>(f.end - f.begin);
        int pos = 0;
        for (std::size_t i = f.begin; i < f.end; ++i)
            pos += y[sample[i]];

        auto make_leaf = [&]() { nodes[f.node].vote = 2 * pos > m ? 1 : 0; };

        if (f.depth >= max_depth || m < min_samples_split || pos == 0 || pos == m) {
            make_leaf();
            continue;
        }

        // sample candidate features without replacement, then visit them in
        // ascending index order so split ties break toward the lowest index
        for (int i = 0; i < p; ++i)
            feat_pool[i] = i;
        for (int i = 0; i < n_candidates; ++i) {
            int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - i)));
            std::swap(feat_pool[i], feat_pool[j]);
        }
        std::sort(feat_pool.begin(), feat_pool.begin() + n_candidates);

        const double parent = impurity(m, pos, entropy);
        SplitChoice best;
        for (int ci = 0; ci < n_candidates; ++ci) {
            int feat = feat_pool[ci];
            scratch.clear();
            for (std::size_t i = f.begin; i < f.end; ++i)
                scratch.emplace_back(X.at(sample[i], feat), y[sample[i]]);
            std::sort(scratch.begin(), scratch.end());
            int left_n = 0, left_pos = 0;
            for (int i = 0; i + 1 < m; ++i) {
                ++left_n;
                left_pos += scratch[i].second;
                if (scratch[i].first == scratch[i + 1].first)
                    continue;
                double gain = parent - (left_n * impurity(left_n, left_pos, entropy) +
                                        (m - left_n) * impurity(m - left_n, pos - left_pos, entropy)) /
                                           m;
                double threshold = 0.5 * (scratch[i].first + scratch[i + 1].first);
                if (gain > best.gain + 1e-12 ||
                    (best.found && std::abs(gain - best.gain) <= 1e-12 &&
                     (feat < best.feature ||
                      (feat == best.feature && threshold < best.threshold)))) {
                    best = SplitChoice{true, feat, threshold, gain};
                }
            }
        }

        if (!best.found || best.gain <= 1e-12) {
            make_leaf();
            continue;
        }

        auto mid_it = std::partition(sample.begin() + f.begin, sample.begin() + f.end,
                                     [&](int idx) { return X.at(idx, best.feature) <= best.threshold; });
        std::size_t mid = static_cast<std::size_t>(mid_it - sample.begin());
        if (mid == f.begin || mid == f.end) { // numeric edge: nothing moved
            make_leaf();
            continue;
        }

        int left_id = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{});
        int right_id = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{});
        nodes[f.node].feature = best.feature;
        nodes[f.node].threshold = best.threshold;
        nodes[f.node].left = left_id;
        nodes[f.node].right = right_id;
        stack.push_back(Frame{right_id, mid, f.end, f.depth + 1});
        stack.push_back(Frame{left_id, f.begin, mid, f.depth + 1});
    }
    return nodes;
}

int tree_vote(const std::vector<TreeNode> &tree, const FeatureMatrix &X, std::size_t row) {
    int node = 0;
    while (tree[node].feature >= 0)
        node = X.at(row, tree[node].feature) <= tree[node].threshold ? tree[node].left
                                                                     : tree[node].right;
    return tree[node].vote;
}

TreeEnsembleState train_tree_ensemble(const ModelSpec &spec, const FeatureMatrix &X,
                                      const std::vector<int> &y) {
    const bool entropy = spec.hp("criterion") == "entropy";
    const int n_estimators = spec.hp_int("n_estimators");
    const int max_depth = spec.hp_int("max_depth");
    const int min_samples_split = spec.hp_int("min_samples_split");
    if (spec.hp("max_features") != "sqrt")
        throw std::invalid_argument("unsupported max_features: " + spec.hp("max_features"));

    const std::size_t n = X.rows();
    TreeEnsembleState state;
    state.trees.reserve(n_estimators);
    for (int t = 0; t < n_estimators; ++t) {
        Rng rng(derive_seed(spec.seed, "tree", static_cast<std::uint64_t>(t)));
        std::vector<int> sample(n);
        for (std::size_t i = 0; i < n; ++i)
            sample[i] = static_cast<int>(rng.below(n));
        state.trees.push_back(build_tree(X, y, std::move(sample), entropy, max_depth,
                                         min_samples_split, rng));
    }
    return state;
}

// ---------------------------------------------------------------------------
// scaled logistic regression

struct ScaledDesign {
    std::vector<double> data; // row-major, scaled to [0,1] by training extremes
    std::size_t rows = 0, cols = 0;
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

ScaledDesign scale_matrix(const FeatureMatrix &X, const std::vector<double> &col_min,
                          const std::vector<double> &col_max, bool clip) {
    ScaledDesign d;
    d.rows = X.rows();
    d.cols = X.cols();
    d.data.resize(d.rows * d.cols);
    for (std::size_t c = 0; c < d.cols; ++c) {
        double range = col_max[c] - col_min[c];
        for (std::size_t r = 0; r < d.rows; ++r) {
            double v = range > 0 ? (X.at(r, c) - col_min[c]) / range : 0.0;
            if (clip)
                v = std::clamp(v, 0.0, 1.0);
            d.data[r * d.cols + c] = v;
        }
    }
    return d;
}

double spectral_norm_sq(const ScaledDesign &d) {
    // power iteration on [X 1]'[X 1]; deterministic start vector
    const std::size_t p = d.cols + 1;
    std::vector<double> v(p, 1.0 / std::sqrt(static_cast<double>(p)));
    std::vector<double> xv(d.rows, 0.0), next(p, 0.0);
    double lambda = 0.0;
    for (int iter = 0; iter < 60; ++iter) {
        for (std::size_t r = 0; r < d.rows; ++r) {
            double s = v[d.cols]; // intercept column
            for (std::size_t c = 0; c < d.cols; ++c)
                s += d.at(r, c) * v[c];
            xv[r] = s;
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t r = 0; r < d.rows; ++r) {
            next[d.cols] += xv[r];
            for (std::size_t c = 0; c < d.cols; ++c)
                next[c] += d.at(r, c) * xv[r];
        }
        double norm = 0.0;
        for (double x : next)
            norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0)
            return 0.0;
        lambda = norm;
        for (std::size_t i = 0; i < p; ++i)
            v[i] = next[i] / norm;
    }
    return lambda;
}

// Accelerated proximal gradient (FISTA with function-value restart) on
//   l1:  |w|_1 + C * sum log(1 + exp(-s(xw+b)))
//   l2:  0.5 w'w + C * sum log(1 + exp(-s(xw+b)))
// matching the usual inverse-regularization meaning of C. The intercept is
// never penalized.
LogisticState train_scaled_logistic(const ModelSpec &spec, const FeatureMatrix &X,
                                    const std::vector<int> &y) {
    const std::string penalty = spec.hp("penalty");
    if (penalty != "l1" && penalty != "l2")
        throw std::invalid_argument("unknown penalty: " + penalty);
    const double C = spec.hp_double("C");
    const bool l2 = penalty == "l2";

    const std::size_t n = X.rows();
    const std::size_t p = X.cols();
    LogisticState state;
    state.col_min.resize(p);
    state.col_max.resize(p);
    for (std::size_t c = 0; c < p; ++c) {
        double lo = X.at(0, c), hi = X.at(0, c);
        for (std::size_t r = 1; r < n; ++r) {
            lo = std::min(lo, X.at(r, c));
            hi = std::max(hi, X.at(r, c));
        }
        state.col_min[c] = lo;
        state.col_max[c] = hi;
    }
    ScaledDesign d = scale_matrix(X, state.col_min, state.col_max, false);

    std::vector<double> sign(n);
    for (std::size_t i = 0; i < n; ++i)
        sign[i] = y[i] ? 1.0 : -1.0;

    // 1.02 headroom: power iteration approaches the spectral norm from below
    const double lipschitz = 0.25 * C * 1.02 * spectral_norm_sq(d) + (l2 ? 1.0 : 0.0);
    const double step = lipschitz > 0 ? 1.0 / lipschitz : 1.0;

    std::vector<double> w(p, 0.0), z(p, 0.0), grad(p, 0.0);
    double b = 0.0, zb = 0.0;
    std::vector<double> margin(n, 0.0);

    auto objective = [&](const std::vector<double> &wv, double bv) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double m = bv;
            for (std::size_t c = 0; c < p; ++c)
                m += d.at(i, c) * wv[c];
            // log(1 + exp(-s*m)) computed stably
            double t = -sign[i] * m;
            f += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        }
        f *= C;
        if (l2) {
            double ww = 0.0;
            for (double x : wv)
                ww += x * x;
            f += 0.5 * ww;
        } else {
            for (double x : wv)
                f += std::abs(x);
        }
        return f;
    };

    double theta = 1.0;
    double f_prev = objective(w, b);
    const int max_iter = 10000;
    const double tol = 1e-12;
    for (int iter = 0; iter < max_iter; ++iter) {
        // gradient of the smooth part at (z, zb)
        for (std::size_t i = 0; i < n; ++i) {
            double m = zb;
            for (std::size_t c = 0; c < p; ++c)
                m += d.at(i, c) * z[c];
            margin[i] = -sign[i] / (1.0 + std::exp(sign[i] * m)); // d loss / d m
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            grad_b += margin[i];
            for (std::size_t c = 0; c < p; ++c)
                grad[c] += d.at(i, c) * margin[i];
        }
        for (std::size_t c = 0; c < p; ++c) {
            grad[c] *= C;
            if (l2)
                grad[c] += z[c];
        }
        grad_b *= C;

        std::vector<double> w_next(p);
        for (std::size_t c = 0; c < p; ++c) {
            double v = z[c] - step * grad[c];
            if (!l2) { // soft threshold
                double lambda = step;
                v = v > lambda ? v - lambda : (v < -lambda ? v + lambda : 0.0);
            }
            w_next[c] = v;
        }
        double b_next = zb - step * grad_b;

        double f_next = objective(w_next, b_next);
        if (f_next > f_prev) { // restart momentum
            theta = 1.0;
            z = w;
            zb = b;
            f_prev = objective(w, b);
            continue;
        }

        double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        double mom = (theta - 1.0) / theta_next;
        for (std::size_t c = 0; c < p; ++c)
            z[c] = w_next[c] + mom * (w_next[c] - w[c]);
        zb = b_next + mom * (b_next - b);
        theta = theta_next;

        w = std::move(w_next);
        b = b_next;

        if (std::abs(f_prev - f_next) <= tol * std::max(1.0, std::abs(f_next))) {
            f_prev = f_next;
            break;
        }
        f_prev = f_next;
    }

    state.weights = std::move(w);
    state.intercept = b;
    return state;
}

} // namespace

// ---------------------------------------------------------------------------

TrainedScorer train(const ModelSpec &spec, const FeatureMatrix &X,
                    const std::vector<int> &labels, const Imputer &imputer) {
    if (X.rows() < 2 || labels.size() != X.rows())
        throw std::invalid_argument("training requires >= 2 labeled rows");

    TrainedScorer scorer;
    scorer.spec = spec;
    scorer.schema_hash = X.schema_hash;
    scorer.columns = X.columns;
    scorer.imputer = imputer;

    int positives = 0;
    for (int v : labels)
        positives += v;

    switch (spec.family) {
    case ModelFamily::tree_ensemble:
    case ModelFamily::scaled_logistic:
        if (positives == 0 || positives == static_cast<int>(labels.size()))
            throw std::invalid_argument("single-class labels: cannot fit " +
                                        std::string(to_string(spec.family)));
        break;
    default:
        break;
    }

    switch (spec.family) {
    case ModelFamily::tree_ensemble:
        scorer.tree_state = train_tree_ensemble(spec, X, labels);
        break;
    case ModelFamily::scaled_logistic:
        scorer.logistic_state = train_scaled_logistic(spec, X, labels);
        break;
    case ModelFamily::percentile_rank_one_feature: {
        const std::string &name = spec.hp("feature");
        int idx = -1;
        for (std::size_t c = 0; c < X.columns.size(); ++c)
            if (X.columns[c] == name)
                idx = static_cast<int>(c);
        if (idx < 0)
            throw std::invalid_argument("rank-one feature not in schema: " + name);
        double lo = X.at(0, idx), hi = X.at(0, idx);
        for (std::size_t r = 1; r < X.rows(); ++r) {
            lo = std::min(lo, X.at(r, idx));
            hi = std::max(hi, X.at(r, idx));
        }
        if (lo == hi)
            throw std::invalid_argument("rank-one feature has zero variance: " + name);
        scorer.rank_state = RankOneState{idx, name};
        break;
    }
    case ModelFamily::simple_thresholder: {
        ThresholderState st;
        const std::string &rules = spec.hp("rules");
        std::size_t start = 0;
        while (start <= rules.size()) {
            std::size_t pos = rules.find('&', start);
            std::string rule = rules.substr(start, pos == std::string::npos ? pos : pos - start);
            if (!rule.empty()) {
                ThresholderRule r;
                r.name = rule;
                auto col = [&](const char *n) {
                    for (std::size_t c = 0; c < X.columns.size(); ++c)
                        if (X.columns[c] == n)
                            return static_cast<int>(c);
                    throw std::invalid_argument(std::string("thresholder needs column: ") + n);
                };
                if (rule == "any_mh_history") {
                    r.indicator = true;
                    r.indicator_columns = {col("mh_hist_jcmhc"), col("mh_hist_screen"),
                                           col("mh_hist_ems")};
                } else if (rule.rfind("release_within_", 0) == 0) {
                    std::string w = rule.substr(15);
                    int days = w == "1m" ? 30 : w == "3m" ? 90 : w == "6m" ? 180
                               : w == "1y" ? 365 : -1;
                    if (days < 0)
                        throw std::invalid_argument("unknown thresholder rule: " + rule);
                    r.value_column = col("days_since_last_release");
                    r.missing_column = col("days_since_last_release_missing");
                    r.max_value = days;
                } else {
                    throw std::invalid_argument("unknown thresholder rule: " + rule);
                }
                st.rules.push_back(std::move(r));
            }
            if (pos == std::string::npos)
                break;
            start = pos + 1;
        }
        if (st.rules.empty())
            throw std::invalid_argument("thresholder spec has no rules");
        scorer.threshold_state = std::move(st);
        break;
    }
    }
    return scorer;
}

std::vector<double> TrainedScorer::score(const FeatureMatrix &raw) const {
    if (raw.schema_hash != schema_hash)
        throw std::invalid_argument("scoring matrix schema hash does not match scorer");
    FeatureMatrix X = raw;
    imputer.apply(X);

    const std::size_t n = X.rows();
    std::vector<double> out(n, 0.0);
    switch (spec.family) {
    case ModelFamily::tree_ensemble: {
        const auto &trees = tree_state.trees;
        for (std::size_t r = 0; r < n; ++r) {
            int votes = 0;
            for (const auto &t : trees)
                votes += tree_vote(t, X, r);
            out[r] = trees.empty() ? 0.0 : static_cast<double>(votes) / trees.size();
        }
        break;
    }
    case ModelFamily::scaled_logistic: {
        ScaledDesign d = scale_matrix(X, logistic_state.col_min, logistic_state.col_max, true);
        for (std::size_t r = 0; r < n; ++r) {
            double m = logistic_state.intercept;
            for (std::size_t c = 0; c < d.cols; ++c)
                m += d.at(r, c) * logistic_state.weights[c];
            out[r] = 1.0 / (1.0 + std::exp(-m));
        }
        break;
    }
    case ModelFamily::percentile_rank_one_feature: {
        std::vector<double> values(n);
        for (std::size_t r = 0; r < n; ++r)
            values[r] = X.at(r, rank_state.feature);
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t r = 0; r < n; ++r) {
            auto it = std::upper_bound(sorted.begin(), sorted.end(), values[r]);
            out[r] = static_cast<double>(it - sorted.begin()) / static_cast<double>(n);
        }
        break;
    }
    case ModelFamily::simple_thresholder: {
        for (std::size_t r = 0; r < n; ++r) {
            bool hold = true;
            for (const ThresholderRule &rule : threshold_state.rules) {
                bool ok;
                if (rule.indicator) {
                    ok = false;
                    for (int c : rule.indicator_columns)
                        if (X.at(r, c) > 0)
                            ok = true;
                } else {
                    ok = X.at(r, rule.value_column) <= rule.max_value;
                    if (rule.missing_column >= 0 && X.at(r, rule.missing_column) > 0)
                        ok = false;
                }
                if (!ok) {
                    hold = false;
                    break;
                }
            }
            out[r] = hold ? 1.0 : 0.0;
        }
        break;
    }
    }
    return out;
}

// ---------------------------------------------------------------------------
// single-file serialization

namespace {
constexpr int kScorerFormatVersion = 1;
}

void TrainedScorer::save(const std::filesystem::path &path) const {
    nlohmann::json j;
    j["format_version"] = kScorerFormatVersion;
    j["spec"] = {{"family", to_string(spec.family)},
                 {"hyperparams", spec.hyperparams},
                 {"seed", spec.seed}};
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(schema_hash));
    j["schema_hash"] = hash_hex;
    j["columns"] = columns;
    j["imputer_medians"] = imputer.medians;
    switch (spec.family) {
    case ModelFamily::tree_ensemble: {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto &tree : tree_state.trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const TreeNode &n : tree)
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.vote});
            trees.push_back(std::move(nodes));
        }
        j["trees"] = std::move(trees);
        break;
    }
    case ModelFamily::scaled_logistic:
        j["weights"] = logistic_state.weights;
        j["intercept"] = logistic_state.intercept;
        j["col_min"] = logistic_state.col_min;
        j["col_max"] = logistic_state.col_max;
        break;
    case ModelFamily::percentile_rank_one_feature:
        j["feature"] = rank_state.feature_name;
        break;
    case ModelFamily::simple_thresholder:
        break; // rules live in the spec; rebuilt on load
    }
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write scorer file: " + path.string());
    out << j.dump(1) << '\n';
}

TrainedScorer TrainedScorer::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read scorer file: " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.at("format_version").get<int>() != kScorerFormatVersion)
        throw std::runtime_error("unsupported scorer format version");

    TrainedScorer s;
    auto fam = model_family_from(j.at("spec").at("family").get<std::string>());
    if (!fam)
        throw std::runtime_error("unknown model family in scorer file");
    s.spec.family = *fam;
    s.spec.hyperparams = j.at("spec").at("hyperparams").get<std::map<std::string, std::string>>();
    s.spec.seed = j.at("spec").at("seed").get<std::uint64_t>();
    s.schema_hash = std::stoull(j.at("schema_hash").get<std::string>(), nullptr, 16);
    s.columns = j.at("columns").get<std::vector<std::string>>();
    s.imputer.schema_hash = s.schema_hash;
    s.imputer.medians = j.at("imputer_medians").get<std::vector<double>>();

    switch (s.spec.family) {
    case ModelFamily::tree_ensemble:
        for (const auto &tree_json : j.at("trees")) {
            std::vector<TreeNode> tree;
            for (const auto &n : tree_json)
                tree.push_back(TreeNode{n[0].get<int>(), n[1].get<double>(), n[2].get<int>(),
                                        n[3].get<int>(), n[4].get<int>()});
            s.tree_state.trees.push_back(std::move(tree));
        }
        break;
    case ModelFamily::scaled_logistic:
        s.logistic_state.weights = j.at("weights").get<std::vector<double>>();
        s.logistic_state.intercept = j.at("intercept").get<double>();
        s.logistic_state.col_min = j.at("col_min").get<std::vector<double>>();
        s.logistic_state.col_max = j.at("col_max").get<std::vector<double>>();
        break;
    case ModelFamily::percentile_rank_one_feature: {
        s.rank_state.feature_name = j.at("feature").get<std::string>();
        int idx = -1;
        for (std::size_t c = 0; c < s.columns.size(); ++c)
            if (s.columns[c] == s.rank_state.feature_name)
                idx = static_cast<int>(c);
        if (idx < 0)
            throw std::runtime_error("rank-one feature missing from stored columns");
        s.rank_state.feature = idx;
        break;
    }
    case ModelFamily::simple_thresholder: {
        // re-resolve rule columns against the stored schema
        FeatureMatrix dummy;
        dummy.columns = s.columns;
        dummy.schema_hash = s.schema_hash;
        dummy.persons = {"a", "b"};
        dummy.data.assign(2 * s.columns.size(), 0.0);
        Imputer imp;
        imp.schema_hash = s.schema_hash;
        imp.medians.assign(s.columns.size(), 0.0);
        TrainedScorer tmp = train(s.spec, dummy, {0, 1}, imp);
        s.threshold_state = std::move(tmp.threshold_state);
        break;
    }
    }
    return s;
}

} // namespace proact
