#include "floc/features.hpp"

#include "floc/csv.hpp"
#include "floc/errors.hpp"
#include "floc/sbfl.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace floc {

namespace {

using nlohmann::json;

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

/// Replaces // and /* */ comments and the contents of string/char literals
/// with spaces, preserving line structure.
std::string strip_comments_and_strings(const std::string& text) {
    std::string out(text.size(), ' ');
    enum class State { Code, LineComment, BlockComment, String, Char };
    State state = State::Code;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const char next = i + 1 < text.size() ? text[i + 1] : '\0';
        if (c == '\n') {
            out[i] = '\n';
            if (state == State::LineComment) state = State::Code;
            continue;
        }
        switch (state) {
            case State::Code:
                if (c == '/' && next == '/') {
                    state = State::LineComment;
                } else if (c == '/' && next == '*') {
                    state = State::BlockComment;
                    ++i;
                } else if (c == '"') {
                    state = State::String;
                } else if (c == '\'') {
                    state = State::Char;
                } else {
                    out[i] = c;
                }
                break;
            case State::LineComment:
                break;
            case State::BlockComment:
                if (c == '*' && next == '/') {
                    state = State::Code;
                    ++i;
                }
                break;
            case State::String:
                if (c == '\\') {
                    ++i;
                    if (i < text.size() && text[i] == '\n') out[i] = '\n';
                } else if (c == '"') {
                    state = State::Code;
                }
                break;
            case State::Char:
                if (c == '\\') {
                    ++i;
                    if (i < text.size() && text[i] == '\n') out[i] = '\n';
                } else if (c == '\'') {
                    state = State::Code;
                }
                break;
        }
    }
    return out;
}

std::string read_file_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("unreadable file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Occurrences of `pattern` in `text`, requiring identifier boundaries at
/// pattern edges that are themselves identifier characters (so `wait(` does
/// not also fire inside `await(`).
int count_pattern(const std::string& text, const std::string& pattern) {
    if (pattern.empty()) return 0;
    int count = 0;
    std::size_t pos = 0;
    const bool guard_front = is_ident_char(pattern.front());
    const bool guard_back = is_ident_char(pattern.back());
    while ((pos = text.find(pattern, pos)) != std::string::npos) {
        const bool front_ok = !guard_front || pos == 0 || !is_ident_char(text[pos - 1]);
        const std::size_t end = pos + pattern.size();
        const bool back_ok = !guard_back || end >= text.size() || !is_ident_char(text[end]);
        if (front_ok && back_ok) ++count;
        pos += pattern.size();
    }
    return count;
}

/// Word-boundary token count (for cc keywords).
int count_word(const std::string& text, const std::string& word) {
    return count_pattern(text, word);
}

int count_plain(const std::string& text, const std::string& token) {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        ++count;
        pos += token.size();
    }
    return count;
}

std::string simple_name(const std::string& qualified) {
    auto pos = qualified.find_last_of('.');
    return pos == std::string::npos ? qualified : qualified.substr(pos + 1);
}

/// First identifier after `from` in stripped text, or empty.
std::string next_identifier(const std::string& text, std::size_t from) {
    std::size_t i = from;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && is_ident_char(text[i])) ++i;
    return text.substr(start, i - start);
}

/// class name -> direct `extends` parent (simple names), scanned from every
/// .java file under root plus the mapped class files.
std::map<std::string, std::string> scan_extends_map(const std::filesystem::path& root,
                                                    const ClassPaths& class_paths) {
    std::set<std::filesystem::path> files;
    if (std::filesystem::exists(root)) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
            if (entry.is_regular_file() && entry.path().extension() == ".java") {
                files.insert(entry.path());
            }
        }
    }
    for (const auto& [class_id, rel] : class_paths) {
        auto p = root / rel;
        if (std::filesystem::exists(p)) files.insert(p);
    }

    std::map<std::string, std::string> parents;
    for (const auto& file : files) {
        const std::string stripped = strip_comments_and_strings(read_file_or_throw(file));
        std::size_t pos = 0;
        while ((pos = stripped.find("class", pos)) != std::string::npos) {
            const bool front_ok = pos == 0 || !is_ident_char(stripped[pos - 1]);
            const std::size_t end = pos + 5;
            const bool back_ok = end < stripped.size() &&
                                 std::isspace(static_cast<unsigned char>(stripped[end]));
            pos = end;
            if (!front_ok || !back_ok) continue;
            const std::string name = next_identifier(stripped, end);
            if (name.empty()) continue;
            // Look for `extends <Parent>` before the class body opens.
            std::size_t brace = stripped.find('{', end);
            std::size_t ext = stripped.find("extends", end);
            std::string parent;
            if (ext != std::string::npos && (brace == std::string::npos || ext < brace)) {
                parent = next_identifier(stripped, ext + 7);
            }
            if (!parents.count(name)) parents[name] = parent;
        }
    }
    return parents;
}

}  // namespace

MetricFamily parse_family(const std::string& name) {
    if (name == "flakiness") return MetricFamily::Flakiness;
    if (name == "change") return MetricFamily::Change;
    if (name == "size") return MetricFamily::Size;
    throw ValidationError("unknown metric family: " + name);
}

std::string family_name(MetricFamily family) {
    switch (family) {
        case MetricFamily::Flakiness: return "flakiness";
        case MetricFamily::Change: return "change";
        case MetricFamily::Size: return "size";
    }
    return "?";
}

const std::vector<std::string>& family_columns(MetricFamily family) {
    static const std::vector<std::string> flakiness = {"TOPS", "ROPS", "IOPS", "UOPS",
                                                       "AOPS", "COPS", "NOPS"};
    static const std::vector<std::string> change = {"changes", "age", "developers"};
    static const std::vector<std::string> size = {"loc", "cc", "doi"};
    switch (family) {
        case MetricFamily::Flakiness: return flakiness;
        case MetricFamily::Change: return change;
        case MetricFamily::Size: return size;
    }
    return change;
}

void MetricTable::validate() const {
    if (columns != family_columns(family)) {
        throw ValidationError("metric table columns do not match family " + family_name(family));
    }
    for (const auto& [class_id, row] : values) {
        if (row.size() != columns.size()) {
            throw ValidationError("metric row width mismatch for class " + class_id);
        }
        for (double v : row) {
            if (!std::isfinite(v) || v < 0) {
                throw ValidationError("metric value must be finite and >= 0 for class " +
                                      class_id);
            }
        }
    }
}

CommitLog read_commit_log(const std::filesystem::path& file) {
    CommitLog log;
    std::unordered_set<std::string> hashes;
    std::size_t line_no = 0;
    for (const auto& line : csv::read_lines(file)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const std::string where = file.string() + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": bad commit json: " + e.what());
        }
        CommitRecord record;
        try {
            record.hash = obj.at("hash").get<std::string>();
            record.timestamp = obj.at("timestamp").get<std::int64_t>();
            record.author = obj.at("author").get<std::string>();
            for (const auto& f : obj.value("files", json::array())) {
                FileChange change;
                change.path = f.at("path").get<std::string>();
                change.status = f.at("status").get<std::string>();
                change.old_path = f.value("old_path", "");
                if (change.status != "added" && change.status != "modified" &&
                    change.status != "deleted" && change.status != "renamed") {
                    throw ParseError(where + ": unknown file status '" + change.status + "'");
                }
                if (change.status == "renamed" && change.old_path.empty()) {
                    throw ParseError(where + ": renamed file without old_path");
                }
                record.files.push_back(std::move(change));
            }
        } catch (const json::exception& e) {
            throw ParseError(where + ": bad commit record: " + e.what());
        }
        if (!hashes.insert(record.hash).second) {
            throw ValidationError(where + ": duplicate commit hash " + record.hash);
        }
        log.push_back(std::move(record));
    }
    return log;
}

void write_commit_log(const CommitLog& log, std::ostream& out) {
    for (const auto& record : log) {
        json files = json::array();
        for (const auto& f : record.files) {
            json file{{"path", f.path}, {"status", f.status}};
            if (!f.old_path.empty()) file["old_path"] = f.old_path;
            files.push_back(std::move(file));
        }
        json obj{{"hash", record.hash},
                 {"timestamp", record.timestamp},
                 {"author", record.author},
                 {"files", std::move(files)}};
        out << obj.dump() << '\n';
    }
}

void PatternCatalog::validate() const {
    for (const auto& metric : family_columns(MetricFamily::Flakiness)) {
        auto it = patterns.find(metric);
        if (it == patterns.end() || it->second.empty()) {
            throw ValidationError("pattern catalog missing patterns for " + metric);
        }
        for (const auto& p : it->second) {
            if (p.empty()) throw ValidationError("empty pattern for metric " + metric);
        }
    }
}

PatternCatalog default_pattern_catalog() {
    PatternCatalog catalog;
    catalog.patterns = {
        {"TOPS", {"System.currentTimeMillis", "System.nanoTime", "new Date"}},
        {"ROPS", {"random(", "Random("}},
        {"IOPS", {"File(", "FileInputStream", "FileOutputStream", "Files."}},
        {"UOPS", {"HashMap", "HashSet"}},
        {"AOPS", {"Thread.sleep", "wait(", "await(", "Future"}},
        {"COPS", {"Thread(", "synchronized", "ConcurrentHashMap", "ExecutorService"}},
        {"NOPS", {"Socket", "HttpURLConnection", "URL("}},
    };
    return catalog;
}

PatternCatalog read_pattern_catalog(const std::filesystem::path& file) {
    PatternCatalog catalog;
    std::size_t line_no = 0;
    for (const auto& raw : csv::read_lines(file)) {
        ++line_no;
        auto line = csv::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw ParseError(file.string() + ":" + std::to_string(line_no) +
                             ": expected 'metric: pattern'");
        }
        std::string metric{csv::trim(line.substr(0, colon))};
        std::string pattern{csv::trim(line.substr(colon + 1))};
        if (pattern.empty()) {
            throw ParseError(file.string() + ":" + std::to_string(line_no) + ": empty pattern");
        }
        catalog.patterns[metric].push_back(pattern);
    }
    catalog.validate();
    return catalog;
}

ClassPaths read_class_paths(const std::filesystem::path& file) {
    auto lines = csv::read_lines(file);
    while (!lines.empty() && csv::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(file.string() + ": empty class paths file");
    auto header = csv::split_line(lines.front());
    if (header.size() != 2 || csv::trim(header[0]) != "class" || csv::trim(header[1]) != "path") {
        throw ParseError(file.string() + ": class paths header must be 'class,path'");
    }
    ClassPaths paths;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        auto cells = csv::split_line(lines[row]);
        if (cells.size() != 2) {
            throw ParseError(file.string() + ":" + std::to_string(row + 1) + ": ragged row");
        }
        std::string class_id{csv::trim(cells[0])};
        if (!paths.emplace(class_id, std::string(csv::trim(cells[1]))).second) {
            throw ValidationError(file.string() + ": duplicate class id " + class_id);
        }
    }
    return paths;
}

MetricTable extract_change_metrics(const CommitLog& log, const ClassPaths& class_paths,
                                   std::int64_t analysis_time,
                                   std::vector<std::string>* warnings) {
    MetricTable table;
    table.family = MetricFamily::Change;
    table.columns = family_columns(MetricFamily::Change);

    for (const auto& [class_id, path] : class_paths) {
        // Alias set of historical names, grown to a fixpoint so the result
        // is independent of commit record order.
        std::set<std::string> aliases{path};
        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& record : log) {
                for (const auto& f : record.files) {
                    if (f.status == "renamed" && aliases.count(f.path) &&
                        !aliases.count(f.old_path)) {
                        aliases.insert(f.old_path);
                        grew = true;
                    }
                }
            }
        }

        std::set<std::string> authors;
        int changes = 0;
        std::int64_t last_touch = 0;
        bool touched = false;
        for (const auto& record : log) {
            bool touches = std::any_of(record.files.begin(), record.files.end(),
                                       [&](const FileChange& f) { return aliases.count(f.path); });
            if (!touches) continue;
            ++changes;
            authors.insert(record.author);
            if (!touched || record.timestamp > last_touch) last_touch = record.timestamp;
            touched = true;
        }

        double age_days = 0.0;
        if (touched) {
            age_days = static_cast<double>(analysis_time - last_touch) / 86400.0;
        } else if (warnings) {
            warnings->push_back("class " + class_id + " (path " + path +
                                ") never appears in the commit log; change metrics set to 0");
        }
        table.values[class_id] = {static_cast<double>(changes), age_days,
                                  static_cast<double>(authors.size())};
    }
    table.validate();
    return table;
}

MetricTable scan_size_metrics(const std::filesystem::path& source_root,
                              const ClassPaths& class_paths) {
    MetricTable table;
    table.family = MetricFamily::Size;
    table.columns = family_columns(MetricFamily::Size);

    const auto extends_map = scan_extends_map(source_root, class_paths);

    for (const auto& [class_id, rel] : class_paths) {
        const auto path = source_root / rel;
        const std::string stripped = strip_comments_and_strings(read_file_or_throw(path));

        int loc = 0;
        std::istringstream lines(stripped);
        std::string line;
        while (std::getline(lines, line)) {
            if (!csv::trim(line).empty()) ++loc;
        }

        int branch_tokens = 0;
        for (const char* kw : {"if", "for", "while", "case", "catch"}) {
            branch_tokens += count_word(stripped, kw);
        }
        branch_tokens += count_plain(stripped, "&&");
        branch_tokens += count_plain(stripped, "||");
        branch_tokens += count_plain(stripped, "?");
        const int cc = 1 + branch_tokens;

        int doi = 1;
        std::string current = simple_name(class_id);
        std::set<std::string> visited{current};
        while (true) {
            auto it = extends_map.find(current);
            if (it == extends_map.end() || it->second.empty()) break;
            if (!extends_map.count(it->second) || visited.count(it->second)) break;
            current = it->second;
            visited.insert(current);
            ++doi;
        }

        table.values[class_id] = {static_cast<double>(loc), static_cast<double>(cc),
                                  static_cast<double>(doi)};
    }
    table.validate();
    return table;
}

MetricTable scan_flakiness_metrics(const std::filesystem::path& source_root,
                                   const ClassPaths& class_paths,
                                   const PatternCatalog& catalog) {
    catalog.validate();
    MetricTable table;
    table.family = MetricFamily::Flakiness;
    table.columns = family_columns(MetricFamily::Flakiness);

    for (const auto& [class_id, rel] : class_paths) {
        const auto path = source_root / rel;
        const std::string stripped = strip_comments_and_strings(read_file_or_throw(path));
        std::vector<double> row;
        row.reserve(table.columns.size());
        for (const auto& metric : table.columns) {
            int total = 0;
            for (const auto& pattern : catalog.patterns.at(metric)) {
                total += count_pattern(stripped, pattern);
            }
            row.push_back(static_cast<double>(total));
        }
        table.values[class_id] = std::move(row);
    }
    table.validate();
    return table;
}

MetricTable ingest_metric_table(const std::filesystem::path& file, MetricFamily family) {
    auto lines = csv::read_lines(file);
    while (!lines.empty() && csv::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(file.string() + ": empty metrics file");

    auto header = csv::split_line(lines.front());
    if (header.empty() || csv::trim(header[0]) != "class") {
        throw ParseError(file.string() + ": metrics header must start with 'class'");
    }
    const auto& expected = family_columns(family);
    std::vector<std::string> present;
    for (std::size_t i = 1; i < header.size(); ++i) present.emplace_back(csv::trim(header[i]));

    for (const auto& col : expected) {
        if (std::find(present.begin(), present.end(), col) == present.end()) {
            throw ValidationError(file.string() + ": missing column '" + col + "' for family " +
                                  family_name(family));
        }
    }
    for (const auto& col : present) {
        if (std::find(expected.begin(), expected.end(), col) == expected.end()) {
            throw ValidationError(file.string() + ": unexpected column '" + col +
                                  "' for family " + family_name(family));
        }
    }
    if (present.size() != expected.size()) {
        throw ValidationError(file.string() + ": duplicate metric column");
    }

    // Map file column order onto the canonical order.
    std::vector<std::size_t> source_index(expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        source_index[i] = static_cast<std::size_t>(
            std::find(present.begin(), present.end(), expected[i]) - present.begin());
    }

    MetricTable table;
    table.family = family;
    table.columns = expected;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        const std::string where = file.string() + ":" + std::to_string(row + 1);
        auto cells = csv::split_line(lines[row]);
        if (cells.size() != header.size()) throw ParseError(where + ": ragged row");
        std::string class_id{csv::trim(cells[0])};
        std::vector<double> values(expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            double v = csv::parse_double(cells[1 + source_index[i]], where);
            if (!std::isfinite(v) || v < 0) {
                throw ValidationError(where + ": metric '" + expected[i] +
                                      "' must be finite and >= 0");
            }
            values[i] = v;
        }
        if (!table.values.emplace(std::move(class_id), std::move(values)).second) {
            throw ValidationError(where + ": duplicate class row");
        }
    }
    table.validate();
    return table;
}

void write_metric_table(const MetricTable& table, std::ostream& out) {
    out << "class";
    for (const auto& col : table.columns) out << ',' << col;
    out << '\n';
    for (const auto& [class_id, row] : table.values) {
        out << class_id;
        for (double v : row) out << ',' << csv::format_double(v);
        out << '\n';
    }
}

int FeatureMatrix::column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

void FeatureMatrix::validate() const {
    if (values.size() != class_ids.size()) {
        throw ValidationError("feature matrix row count mismatch");
    }
    for (const auto& row : values) {
        if (row.size() != columns.size()) {
            throw ValidationError("feature matrix row width mismatch");
        }
    }
}

FeatureMatrix build_features(const CoverageMatrix& matrix,
                             const std::vector<const MetricTable*>& tables,
                             double dstar_exponent,
                             std::vector<std::string>* warnings) {
    FeatureMatrix features;
    features.class_ids = matrix.class_ids;
    for (Formula f : all_formulas()) features.columns.push_back(formula_name(f));
    for (const MetricTable* table : tables) {
        for (const auto& col : table->columns) features.columns.push_back(col);
    }

    const auto counts = spectrum_counts(matrix);
    for (const auto& class_id : features.class_ids) {
        std::vector<double> row;
        row.reserve(features.columns.size());
        const auto& sc = counts.at(class_id);
        for (Formula f : all_formulas()) {
            row.push_back(score(sc, FormulaId{f, dstar_exponent}));
        }
        for (const MetricTable* table : tables) {
            auto it = table->values.find(class_id);
            if (it == table->values.end()) {
                if (warnings) {
                    warnings->push_back("class " + class_id + " missing from " +
                                        family_name(table->family) + " table; zero-filled");
                }
                row.insert(row.end(), table->columns.size(), 0.0);
            } else {
                row.insert(row.end(), it->second.begin(), it->second.end());
            }
        }
        features.values.push_back(std::move(row));
    }
    features.validate();
    return features;
}

FeatureMatrix normalize(const FeatureMatrix& input) {
    input.validate();
    FeatureMatrix out = input;
    const std::size_t rows = out.values.size();
    for (std::size_t col = 0; col < out.columns.size(); ++col) {
        double finite_max = -std::numeric_limits<double>::infinity();
        bool any_finite = false;
        for (std::size_t r = 0; r < rows; ++r) {
            const double v = out.values[r][col];
            if (std::isnan(v)) {
                throw ValidationError("NaN feature value in column " + out.columns[col]);
            }
            if (std::isfinite(v)) {
                any_finite = true;
                finite_max = std::max(finite_max, v);
            }
        }
        for (std::size_t r = 0; r < rows; ++r) {
            double& v = out.values[r][col];
            if (std::isinf(v)) v = any_finite ? finite_max : 1.0;
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows; ++r) {
            lo = std::min(lo, out.values[r][col]);
            hi = std::max(hi, out.values[r][col]);
        }
        for (std::size_t r = 0; r < rows; ++r) {
            double& v = out.values[r][col];
            v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        }
    }
    return out;
}

}  // namespace floc
