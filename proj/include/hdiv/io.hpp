#pragma once

#include <string>
#include <vector>

#include "hdiv/model.hpp"

namespace hdiv::io {

/// Shortest-free round-trip formatting: 17 significant digits, "C" locale.
std::string format_double(double v);

/// Locale-independent parse of a full cell. Returns false on any trailing text.
bool parse_double(const std::string& cell, double& out);

/// Reads a numeric comma-separated file. Blank trailing lines are ignored.
/// Errors name the file and the 1-based "row R, column C" of the bad cell,
/// where rows count from the first line of the file.
Matrix read_csv_matrix(const std::string& path, bool header);

/// Y must be a single column.
IVDataset load_dataset_csv(const std::string& y_path, const std::string& x_path,
                           const std::string& z_path, bool header);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// LF line endings; cells containing ',', '"' or a newline are quoted.
std::string render_csv(const CsvTable& table);

void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& columns = {});

/// Writes the whole file or throws Error.
void write_text_file(const std::string& path, const std::string& content);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace hdiv::io
