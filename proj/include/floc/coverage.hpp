#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace floc {

enum class Outcome : std::uint8_t { Flaky, Stable };

/// Boolean tests-by-classes activity matrix with a flaky/stable label per
/// test. Immutable after construction; safe to share across workers.
struct CoverageMatrix {
    std::vector<std::string> test_ids;
    std::vector<std::string> class_ids;
    std::vector<Outcome> outcome;                       // one per test
    std::vector<std::vector<std::uint8_t>> activity;    // [test][class], 0/1

    std::size_t test_count() const { return test_ids.size(); }
    std::size_t class_count() const { return class_ids.size(); }

    int flaky_total() const;
    int stable_total() const;

    /// Checks id uniqueness and matrix dimensions. Throws ValidationError.
    void validate() const;
};

/// Per-class spectrum: flaky/stable tests covering and not covering it.
struct SpectrumCounts {
    int e_f = 0;
    int e_s = 0;
    int n_f = 0;
    int n_s = 0;

    bool operator==(const SpectrumCounts&) const = default;
};

/// Coverage CSV format: header `test,outcome,<class...>`, one row per test
/// with cells 0/1 and outcome flaky|stable. Row/column order is preserved.
CoverageMatrix parse_coverage(const std::filesystem::path& file);
CoverageMatrix parse_coverage_text(const std::string& text, const std::string& source_name);

void write_coverage(const CoverageMatrix& matrix, std::ostream& out);
std::string coverage_to_csv(const CoverageMatrix& matrix);

std::map<std::string, SpectrumCounts> spectrum_counts(const CoverageMatrix& matrix);

/// Classes executed by at least one flaky test (the R_wef denominator set).
std::set<std::string> covered_by_flaky(const CoverageMatrix& matrix);

}  // namespace floc
