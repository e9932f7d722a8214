#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "proact/cohort.hpp"
#include "proact/events.hpp"

namespace proact {

// Explicit, ordered feature schema. Train- and score-time matrices must be
// built from the same schema; scorers refuse mismatched hashes.
struct FeatureSchema {
    std::vector<int> count_windows = {30, 90, 180, 365, 1825, 0}; // 0 = all-time
    std::vector<int> jail_day_windows = {365, 1825, 0};
    std::vector<std::string> columns; // filled by finalize()

    static FeatureSchema standard();
    void finalize(); // derives the ordered column list from the window config
    std::uint64_t hash() const;
    int index_of(std::string_view name) const; // -1 when absent
    std::size_t size() const { return columns.size(); }
};

struct FeatureVector {
    std::vector<double> values;     // NaN where missing, pre-imputation
    std::vector<bool> missing;
};

struct FeatureMatrix {
    Date as_of;
    std::uint64_t schema_hash = 0;
    std::vector<std::string> columns;
    std::vector<PersonId> persons;
    std::vector<double> data; // row-major, persons.size() x columns.size()

    double &at(std::size_t r, std::size_t c) { return data[r * columns.size() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * columns.size() + c]; }
    std::size_t rows() const { return persons.size(); }
    std::size_t cols() const { return columns.size(); }
};

// Median imputation fitted on the training matrix only; scoring matrices are
// filled with the training medians. Missing-indicator columns are part of the
// schema itself, so imputation never destroys missingness information.
struct Imputer {
    std::uint64_t schema_hash = 0;
    std::vector<double> medians;

    static Imputer fit(const FeatureMatrix &m);
    void apply(FeatureMatrix &m) const;
};

// Point-in-time features from events dated <= as_of only.
FeatureVector build_feature_vector(const EventLog &log, const PersonId &person, Date as_of,
                                   const FeatureSchema &schema);

struct AssembledMatrix {
    FeatureMatrix X;             // raw (NaN where missing) until imputed
    std::vector<int> labels;     // aligned with X.persons; training mode only
};

// Training mode keeps members with an observable label; scoring mode keeps
// every member. Rows are ordered by person id regardless of input order.
AssembledMatrix assemble_matrix(const EventLog &log, const LabeledCohort &cohort,
                                const FeatureSchema &schema, bool training_mode);

// Optional on-disk matrix cache, keyed by (as_of, schema hash). Loading with
// a different schema is an error rather than a silent column mismatch.
void write_matrix_cache(const std::filesystem::path &path, const FeatureMatrix &m);
FeatureMatrix read_matrix_cache(const std::filesystem::path &path, const FeatureSchema &schema);

} // namespace proact
