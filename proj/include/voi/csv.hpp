#ifndef VOI_CSV_HPP
#define VOI_CSV_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace voi {

// Minimal strict CSV: comma-separated, one header row, no quoting. Schema
// violations throw ConfigError with file and line number.
struct CsvTable {
    std::filesystem::path path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line per row

    std::size_t column(const std::string& name) const;
    const std::string& cell(std::size_t row, std::size_t col) const;
    double number(std::size_t row, std::size_t col) const;
    [[noreturn]] void fail(std::size_t row, const std::string& msg) const;
};

// expected_header, when non-empty, is enforced exactly (names and order).
CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expected_header = {});

// Buffered writer with fixed full-precision number formatting, so identical
// data always produces identical bytes.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& cells);
    void close();
    static std::string format_number(double v);

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t width_;
};

} // namespace voi

#endif // VOI_CSV_HPP
