#include "hdiv/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hdiv/error.hpp"

namespace hdiv::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    out.push_back(cell);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (const char ch : cell) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

Matrix read_csv_matrix(const std::string& path, bool header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    std::size_t pending_blank = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (header && line_no == 1) continue;
        if (trim(line).empty()) {
            ++pending_blank;
            continue;
        }
        if (pending_blank > 0) {
            throw DataError(path + ": blank line before row " + std::to_string(line_no));
        }
        const auto cells = split_line(line);
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_double(cells[c], values[c])) {
                throw DataError(path + ": non-numeric value '" + trim(cells[c]) + "' at row " +
                                std::to_string(line_no) + ", column " + std::to_string(c + 1));
            }
        }
        if (rows.empty()) {
            width = values.size();
        } else if (values.size() != width) {
            throw DataError(path + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(values.size()) + " columns, expected " +
                            std::to_string(width));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError(path + ": no data rows");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

IVDataset load_dataset_csv(const std::string& y_path, const std::string& x_path,
                           const std::string& z_path, bool header) {
    const Matrix y = read_csv_matrix(y_path, header);
    if (y.cols() != 1) {
        throw DataError(y_path + ": response must have exactly one column, found " +
                        std::to_string(y.cols()));
    }
    IVDataset data;
    data.y = y.col(0);
    data.x = read_csv_matrix(x_path, header);
    data.z = read_csv_matrix(z_path, header);
    return validate_dataset(std::move(data));
}

std::string render_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (j > 0) out.push_back(',');
        out += quote(table.columns[j]);
    }
    out.push_back('\n');
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) out.push_back(',');
            out += quote(row[j]);
        }
        out.push_back('\n');
    }
    return out;
}

void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& columns) {
    std::string out;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (j > 0) out.push_back(',');
        out += quote(columns[j]);
    }
    if (!columns.empty()) out.push_back('\n');
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out.push_back(',');
            out += format_double(m(i, j));
        }
        out.push_back('\n');
    }
    write_text_file(path, out);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write to '" + path + "' failed");
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hdiv::io
