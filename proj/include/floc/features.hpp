#pragma once

#include "floc/coverage.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace floc {

enum class MetricFamily { Flakiness, Change, Size };

MetricFamily parse_family(const std::string& name);
std::string family_name(MetricFamily family);

/// Canonical column order per family:
///   flakiness: TOPS,ROPS,IOPS,UOPS,AOPS,COPS,NOPS
///   change:    changes,age,developers
///   size:      loc,cc,doi
const std::vector<std::string>& family_columns(MetricFamily family);

/// Per-class numeric features of one family. All values finite and >= 0.
struct MetricTable {
    MetricFamily family = MetricFamily::Change;
    std::vector<std::string> columns;
    std::map<std::string, std::vector<double>> values;  // class_id -> row

    void validate() const;
};

struct FileChange {
    std::string path;
    std::string status;    // added | modified | deleted | renamed
    std::string old_path;  // set when status == renamed
};

struct CommitRecord {
    std::string hash;
    std::int64_t timestamp = 0;  // unix seconds
    std::string author;
    std::vector<FileChange> files;
};

/// Commit histories may be non-linear; record order carries no meaning.
using CommitLog = std::vector<CommitRecord>;

/// JSON-lines, one object per commit:
/// {"hash":..,"timestamp":..,"author":..,"files":[{"path":..,"status":..,"old_path":..}]}
CommitLog read_commit_log(const std::filesystem::path& file);
void write_commit_log(const CommitLog& log, std::ostream& out);

/// Textual code patterns counted per flakiness metric.
struct PatternCatalog {
    std::map<std::string, std::vector<std::string>> patterns;  // metric -> patterns

    void validate() const;  // every flakiness metric needs >= 1 pattern
};

PatternCatalog default_pattern_catalog();

/// Sectioned plain text, one `metric: pattern` pair per line. Lines starting
/// with '#' and blank lines are ignored.
PatternCatalog read_pattern_catalog(const std::filesystem::path& file);

using ClassPaths = std::map<std::string, std::string>;  // class_id -> file path

/// `class,path` CSV.
ClassPaths read_class_paths(const std::filesystem::path& file);

/// Change metrics from a commit log. Rename chains are followed backward;
/// the result does not depend on record order. A class whose path never
/// appears in the log gets all-zero metrics plus a recorded warning.
MetricTable extract_change_metrics(const CommitLog& log, const ClassPaths& class_paths,
                                   std::int64_t analysis_time,
                                   std::vector<std::string>* warnings = nullptr);

/// loc = non-blank non-comment lines; cc = 1 + branching tokens
/// (if/for/while/case/catch/&&/||/?); doi = resolvable `extends` chain
/// length inside source_root, 1 when nothing resolves.
MetricTable scan_size_metrics(const std::filesystem::path& source_root,
                              const ClassPaths& class_paths);

/// Counts catalog pattern occurrences per file, skipping comments and
/// string literals.
MetricTable scan_flakiness_metrics(const std::filesystem::path& source_root,
                                   const ClassPaths& class_paths,
                                   const PatternCatalog& catalog);

/// Metrics CSV: `class,<family columns>`. Columns may appear in any order
/// but the set must match the family exactly.
MetricTable ingest_metric_table(const std::filesystem::path& file, MetricFamily family);
void write_metric_table(const MetricTable& table, std::ostream& out);

/// Candidate-class feature matrix for one localisation problem (one commit).
struct FeatureMatrix {
    std::vector<std::string> class_ids;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // [class][column]

    int column_index(const std::string& name) const;  // -1 when absent
    void validate() const;
};

/// SBFL score columns (ochiai,barinel,tarantula,dstar) joined with the given
/// metric tables. Classes missing from a table get zero-filled rows plus a
/// warning.
FeatureMatrix build_features(const CoverageMatrix& matrix,
                             const std::vector<const MetricTable*>& tables,
                             double dstar_exponent = 2.0,
                             std::vector<std::string>* warnings = nullptr);

/// Min-max normalisation per column over the candidate classes of one
/// commit. Constant columns map to 0. Infinite sentinels are first replaced
/// by the column's finite max (1.0 when the whole column is infinite),
/// which preserves the argmax.
FeatureMatrix normalize(const FeatureMatrix& features);

}  // namespace floc
