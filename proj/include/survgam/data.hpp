#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace survgam {

using Index = Eigen::Index;

/// One observation window: the subject enters at `entry`, leaves at `time`,
/// and `event` says whether the exit was a failure (1) or a censoring (0).
struct SurvivalRecord {
    std::string subject_id;
    double entry = 0.0;
    double time = 0.0;
    int event = 0;
    std::vector<double> covariates;
};

/**
 * Immutable collection of survival records.
 *
 * Subject ids are opaque; each distinct id is mapped to a dense index in
 * order of first appearance. Several records may share an id, in which case
 * they share one frailty term.
 */
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<SurvivalRecord> records, std::vector<std::string> covariate_names);

    const std::vector<SurvivalRecord>& records() const noexcept { return records_; }
    const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }

    Index size() const noexcept { return static_cast<Index>(records_.size()); }
    Index n_covariates() const noexcept { return static_cast<Index>(covariate_names_.size()); }
    Index n_subjects() const noexcept { return static_cast<Index>(subject_ids_.size()); }

    // Dense subject index of record r.
    Index subject_of(Index r) const { return record_subject_[static_cast<std::size_t>(r)]; }
    const std::vector<Index>& record_subjects() const noexcept { return record_subject_; }
    const std::string& subject_id(Index s) const { return subject_ids_[static_cast<std::size_t>(s)]; }

    // Covariates as a records x p matrix (copied).
    Eigen::MatrixXd covariate_matrix() const;

    Index n_events() const noexcept;
    double max_time() const noexcept;

private:
    std::vector<SurvivalRecord> records_;
    std::vector<std::string> covariate_names_;
    std::vector<std::string> subject_ids_;
    std::vector<Index> record_subject_;
};

/// Column mapping for delimited input. Empty `covariates` means "every
/// column not claimed by the other fields".
struct Schema {
    std::string id = "id";
    std::string entry = "entry";
    std::string time = "time";
    std::string event = "event";
    std::vector<std::string> covariates;
    char delimiter = ',';
};

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema = {});
Dataset parse_dataset(std::istream& in, const Schema& schema = {});

// Writes `id,entry,time,event,<covariates...>` with round-trip precision.
void write_dataset(const std::filesystem::path& path, const Dataset& d);
void write_dataset(std::ostream& out, const Dataset& d);

struct FitSummary {
    Index n_records = 0;
    Index n_subjects = 0;
    Index n_covariates = 0;
    Index n_events = 0;
    double max_time = 0.0;
    // Names of covariate columns with zero sample variance.
    std::vector<std::string> constant_covariates;
};

// Throws ValidationError("no events") when nothing failed.
FitSummary validate_for_fit(const Dataset& d);

}  // namespace survgam
