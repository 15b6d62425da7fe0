#include "survgam/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "survgam/error.hpp"

namespace survgam {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, delim)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double parse_double(const std::string& cell, std::size_t row, const std::string& column) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(row) + ": cannot parse '" + cell +
                             "' in column '" + column + "' as a number",
                         row);
    }
    return v;
}

void check_record(const SurvivalRecord& rec, std::size_t row) {
    if (rec.entry < 0.0) {
        throw ValidationError("row " + std::to_string(row) + ": entry time is negative");
    }
    if (!(rec.time > rec.entry)) {
        throw ValidationError("row " + std::to_string(row) + ": time (" + std::to_string(rec.time) +
                              ") must exceed entry (" + std::to_string(rec.entry) + ")");
    }
    if (rec.event != 0 && rec.event != 1) {
        throw ValidationError("row " + std::to_string(row) + ": event must be 0 or 1, got " +
                              std::to_string(rec.event));
    }
}

}  // namespace

Dataset::Dataset(std::vector<SurvivalRecord> records, std::vector<std::string> covariate_names)
    : records_(std::move(records)), covariate_names_(std::move(covariate_names)) {
    std::unordered_map<std::string, Index> index_of;
    record_subject_.reserve(records_.size());
    for (std::size_t r = 0; r < records_.size(); ++r) {
        const auto& rec = records_[r];
        check_record(rec, r + 1);
        if (rec.covariates.size() != covariate_names_.size()) {
            throw ValidationError("row " + std::to_string(r + 1) + ": expected " +
                                  std::to_string(covariate_names_.size()) + " covariates, got " +
                                  std::to_string(rec.covariates.size()));
        }
        auto [it, inserted] = index_of.try_emplace(rec.subject_id, static_cast<Index>(subject_ids_.size()));
        if (inserted) subject_ids_.push_back(rec.subject_id);
        record_subject_.push_back(it->second);
    }
}

Eigen::MatrixXd Dataset::covariate_matrix() const {
    Eigen::MatrixXd x(size(), n_covariates());
    for (Index r = 0; r < size(); ++r) {
        const auto& c = records_[static_cast<std::size_t>(r)].covariates;
        for (Index j = 0; j < n_covariates(); ++j) x(r, j) = c[static_cast<std::size_t>(j)];
    }
    return x;
}

Index Dataset::n_events() const noexcept {
    Index n = 0;
    for (const auto& r : records_) n += r.event;
    return n;
}

double Dataset::max_time() const noexcept {
    double m = 0.0;
    for (const auto& r : records_) m = std::max(m, r.time);
    return m;
}

Dataset parse_dataset(std::istream& in, const Schema& schema) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw ValidationError("empty input: no header row");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split(line, schema.delimiter);
    for (auto& h : header) h = trim(h);

    auto find_col = [&](const std::string& name) -> long {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<long>(it - header.begin());
    };
    const long id_col = find_col(schema.id);
    const long entry_col = find_col(schema.entry);
    const long time_col = find_col(schema.time);
    const long event_col = find_col(schema.event);
    if (id_col < 0) throw ValidationError("missing id column '" + schema.id + "'");
    if (time_col < 0) throw ValidationError("missing time column '" + schema.time + "'");
    if (event_col < 0) throw ValidationError("missing event column '" + schema.event + "'");

    std::vector<std::string> cov_names;
    std::vector<long> cov_cols;
    if (schema.covariates.empty()) {
        for (long c = 0; c < static_cast<long>(header.size()); ++c) {
            if (c == id_col || c == entry_col || c == time_col || c == event_col) continue;
            cov_names.push_back(header[static_cast<std::size_t>(c)]);
            cov_cols.push_back(c);
        }
    } else {
        for (const auto& name : schema.covariates) {
            long c = find_col(name);
            if (c < 0) throw ValidationError("missing covariate column '" + name + "'");
            cov_names.push_back(name);
            cov_cols.push_back(c);
        }
    }

    std::vector<SurvivalRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++row;
        auto cells = split(line, schema.delimiter);
        if (cells.size() != header.size()) {
            throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                 " fields, got " + std::to_string(cells.size()),
                             row);
        }
        for (auto& c : cells) c = trim(c);
        SurvivalRecord rec;
        rec.subject_id = cells[static_cast<std::size_t>(id_col)];
        rec.entry = entry_col >= 0 ? parse_double(cells[static_cast<std::size_t>(entry_col)], row, schema.entry) : 0.0;
        rec.time = parse_double(cells[static_cast<std::size_t>(time_col)], row, schema.time);
        const double ev = parse_double(cells[static_cast<std::size_t>(event_col)], row, schema.event);
        if (ev != 0.0 && ev != 1.0) {
            throw ValidationError("row " + std::to_string(row) + ": event must be 0 or 1, got " +
                                  cells[static_cast<std::size_t>(event_col)]);
        }
        rec.event = static_cast<int>(ev);
        rec.covariates.reserve(cov_cols.size());
        for (std::size_t j = 0; j < cov_cols.size(); ++j) {
            rec.covariates.push_back(parse_double(cells[static_cast<std::size_t>(cov_cols[j])], row, cov_names[j]));
        }
        check_record(rec, row);
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw ValidationError("empty input: no data rows");
    return Dataset(std::move(records), std::move(cov_names));
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return parse_dataset(in, schema);
}

void write_dataset(std::ostream& out, const Dataset& d) {
    out << "id,entry,time,event";
    for (const auto& n : d.covariate_names()) out << ',' << n;
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : d.records()) {
        out << r.subject_id << ',' << r.entry << ',' << r.time << ',' << r.event;
        for (double x : r.covariates) out << ',' << x;
        out << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    write_dataset(out, d);
}

FitSummary validate_for_fit(const Dataset& d) {
    FitSummary s;
    s.n_records = d.size();
    s.n_subjects = d.n_subjects();
    s.n_covariates = d.n_covariates();
    s.n_events = d.n_events();
    s.max_time = d.max_time();
    if (s.n_events == 0) throw ValidationError("no events");
    for (Index j = 0; j < d.n_covariates(); ++j) {
        const auto& recs = d.records();
        const double first = recs.front().covariates[static_cast<std::size_t>(j)];
        bool constant = true;
        for (const auto& r : recs) {
            if (r.covariates[static_cast<std::size_t>(j)] != first) {
                constant = false;
                break;
            }
        }
        if (constant) s.constant_covariates.push_back(d.covariate_names()[static_cast<std::size_t>(j)]);
    }
    return s;
}

}  // namespace survgam
