#include "voi/csv.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "voi/errors.hpp"

namespace voi {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

} // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ConfigError(path.string() + ": missing column '" + name + "'");
}

const std::string& CsvTable::cell(std::size_t row, std::size_t col) const {
    return rows[row][col];
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& s = rows[row][col];
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(row, "column '" + header[col] + "': expected a number, got '" + s + "'");
    }
}

void CsvTable::fail(std::size_t row, const std::string& msg) const {
    std::ostringstream os;
    os << path.string() << ":" << line_numbers[row] << ": " << msg;
    throw ConfigError(os.str());
}

CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expected_header) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open file");
    CsvTable t;
    t.path = path;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = cells;
            if (!expected_header.empty() && t.header != expected_header) {
                std::ostringstream os;
                os << path.string() << ":" << line_no << ": bad header, expected '";
                for (std::size_t i = 0; i < expected_header.size(); ++i)
                    os << (i ? "," : "") << expected_header[i];
                os << "' got '" << line << "'";
                throw ConfigError(os.str());
            }
            continue;
        }
        if (cells.size() != t.header.size()) {
            std::ostringstream os;
            os << path.string() << ":" << line_no << ": expected " << t.header.size()
               << " columns, got " << cells.size();
            throw ConfigError(os.str());
        }
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(line_no);
    }
    if (t.header.empty()) throw ConfigError(path.string() + ": empty file");
    return t;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), path_(path), width_(header.size()) {
    if (!out_) throw ConfigError(path.string() + ": cannot open for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

std::string CsvWriter::format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != width_)
        throw ConfigError(path_.string() + ": row width mismatch while writing");
    for (std::size_t i = 0; i < values.size(); ++i)
        out_ << (i ? "," : "") << format_number(values[i]);
    out_ << "\n";
}

void CsvWriter::row_mixed(const std::vector<std::string>& cells) {
    if (cells.size() != width_)
        throw ConfigError(path_.string() + ": row width mismatch while writing");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
}

void CsvWriter::close() {
    out_.flush();
    out_.close();
}

} // namespace voi
