#include "proact/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace proact {

std::vector<std::string> split_fields(const std::string &line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

CsvTable read_csv(const std::filesystem::path &path, char delim) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open file: " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (first) {
            table.header = split_fields(line, delim);
            first = false;
            continue;
        }
        if (line.empty())
            continue;
        table.rows.push_back(split_fields(line, delim));
    }
    return table;
}

CsvWriter::CsvWriter(const std::filesystem::path &path, char delim)
    : out_(path), delim_(delim) {
    if (!out_)
        throw std::runtime_error("cannot open file for writing: " + path.string());
}

void CsvWriter::row(const std::vector<std::string> &fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out_ << delim_;
        out_ << fields[i];
    }
    out_ << '\n';
}

void CsvWriter::close() { out_.close(); }

std::string format_double(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

} // namespace proact
