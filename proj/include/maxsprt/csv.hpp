#pragma once

// Minimal CSV reading/writing. Fields containing commas, quotes or
// newlines are quoted; the parser accepts the same dialect plus CRLF.

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxsprt {

struct CsvError : std::runtime_error {
    int line;
    CsvError(int line_, const std::string& what)
        : std::runtime_error(what), line(line_) {}
};

inline std::string csv_escape(const std::string& f) {
    if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void csv_write_row(std::ostream& os, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(row[i]);
    }
    os << '\n';
}

struct CsvDoc {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> row_lines; // source line of each row, 1-based
};

inline CsvDoc csv_parse(std::istream& is) {
    CsvDoc doc;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (quoted) {
                if (c == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        cur += '"';
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    cur += c;
                }
            } else if (c == '"') {
                if (!cur.empty()) throw CsvError(lineno, "stray quote inside field");
                quoted = true;
            } else if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (quoted) throw CsvError(lineno, "unterminated quoted field");
        fields.push_back(cur);
        if (!have_header) {
            doc.header = fields;
            have_header = true;
        } else {
            doc.rows.push_back(fields);
            doc.row_lines.push_back(lineno);
        }
    }
    return doc;
}

} // namespace maxsprt
