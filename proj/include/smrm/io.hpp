#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "smrm/core_types.hpp"

namespace smrm {

struct IngestConfig {
    std::string missing_token = "NA";
    /// When one list is empty it becomes every remaining column.
    std::vector<std::string> response_columns;
    std::vector<std::string> predictor_columns;
};

/// Reads a header-first CSV. Lines starting with '#' are comments. Missing
/// tokens in response columns set the mask; in predictor columns they are an
/// error, as is a response column with no observed value.
Dataset ingest_csv(const std::filesystem::path& path, const IngestConfig& config);
Dataset parse_csv(std::istream& in, const IngestConfig& config, const std::string& source = "<stream>");

/// Writes predictors then responses, missing entries as `missing_token`,
/// numbers in shortest round-trip form.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, const std::string& missing_token = "NA",
                       const std::string& comment = "");

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::vector<std::string> split_list(std::string_view text, char sep = ',');

/// Whole-file write via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv_table(const std::filesystem::path& path, const CsvTable& table, const std::string& comment = "");

/// Matrix with a leading label column.
CsvTable matrix_table(const Matrix& M, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& corner = "");

/// Diverging blue-white-red heatmap over [-1, 1].
std::string heatmap_svg(const Matrix& R, const std::vector<std::string>& labels, const std::string& title);

}  // namespace smrm
