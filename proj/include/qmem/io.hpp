#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qmem::io {

/// Shortest-safe text for a double: 17 significant digits, "inf"/"-inf"/"nan"
/// for non-finite values. Independent of the process locale.
std::string format_double(double x);

/// Parses a full string as a double (accepts "inf"); throws DomainError.
double parse_double(std::string_view text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column; throws DomainError if absent.
    std::size_t column_index(std::string_view name) const;
    std::vector<double> column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(const std::vector<double>& values);
    const std::string& str() const { return text_; }

private:
    std::size_t width_;
    std::string text_;
};

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace qmem::io
