#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proact/features.hpp"

namespace proact {

enum class ModelFamily {
    tree_ensemble,
    scaled_logistic,
    percentile_rank_one_feature,
    simple_thresholder,
};

const char *to_string(ModelFamily f);
std::optional<ModelFamily> model_family_from(std::string_view s);

struct ModelSpec {
    ModelFamily family{};
    std::map<std::string, std::string> hyperparams; // ordered -> canonical id
    std::uint64_t seed = 0;

    std::string id() const; // canonical "family(k=v,...)", excludes seed
    std::uint64_t hash() const;
    const std::string &hp(const std::string &name) const;
    int hp_int(const std::string &name) const;
    double hp_double(const std::string &name) const;
};

struct GridConfig {
    std::map<std::string, std::vector<std::string>> tree_params;
    std::map<std::string, std::vector<std::string>> logistic_params;
    std::vector<std::string> rank_one_features;
    std::vector<std::string> thresholder_rules; // single rule or "a&b" conjunction

    // The published hyperparameter grid: 54 tree + 8 logistic + 2 rank-one
    // + 5 thresholder specs.
    static GridConfig paper_grid();
    bool empty() const;

    // Desk-scale variant: tree ensembles capped at `cap` trees so the full
    // grid stays runnable on a workstation.
    GridConfig with_tree_cap(int cap) const;
};

// Cross-product expansion within each family. Throws on hyperparameter names
// outside the family's schema. Spec seeds derive from base_seed and the
// canonical spec id.
std::vector<ModelSpec> expand_grid(const GridConfig &grid, std::uint64_t base_seed);

struct TreeNode {
    int feature = -1; // -1 = leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int vote = 0; // leaf majority vote
};

struct TreeEnsembleState {
    std::vector<std::vector<TreeNode>> trees;
};

struct LogisticState {
    std::vector<double> weights;
    double intercept = 0.0;
    std::vector<double> col_min, col_max; // training extremes for min-max scaling
};

struct RankOneState {
    int feature = -1;
    std::string feature_name;
};

struct ThresholderRule {
    std::string name;
    int value_column = -1;
    int missing_column = -1; // -1 when the rule has no companion flag
    double max_value = 0.0;  // rule holds when value <= max_value (or > 0 for indicators)
    bool indicator = false;  // true: any of the listed indicator columns set
    std::vector<int> indicator_columns;
};

struct ThresholderState {
    std::vector<ThresholderRule> rules; // conjunction
};

// A fitted model. Immutable; carries everything needed to score a raw
// (un-imputed) matrix built from the same schema.
class TrainedScorer {
  public:
    ModelSpec spec;
    std::uint64_t schema_hash = 0;
    std::vector<std::string> columns;
    Imputer imputer;

    TreeEnsembleState tree_state;
    LogisticState logistic_state;
    RankOneState rank_state;
    ThresholderState threshold_state;

    // Scores in [0,1], one per row. Throws on schema hash mismatch.
    std::vector<double> score(const FeatureMatrix &raw) const;

    void save(const std::filesystem::path &path) const;
    static TrainedScorer load(const std::filesystem::path &path);
};

// Fits `spec` on an imputed training matrix. Discriminative families require
// both classes present; rank-one requires a non-constant feature.
TrainedScorer train(const ModelSpec &spec, const FeatureMatrix &X_imputed,
                    const std::vector<int> &labels, const Imputer &imputer);

} // namespace proact
