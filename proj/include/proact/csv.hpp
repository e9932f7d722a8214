#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace proact {

// Minimal delimited-text support. Fields must not contain the delimiter or
// newlines; every file this toolkit reads or writes keeps to that rule
// (opaque tokens, dates, enum names, numbers).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return static_cast<int>(i);
        return -1;
    }
};

CsvTable read_csv(const std::filesystem::path &path, char delim = ',');

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path &path, char delim = ',');
    void row(const std::vector<std::string> &fields);
    void close();

  private:
    std::ofstream out_;
    char delim_;
};

std::vector<std::string> split_fields(const std::string &line, char delim);

// Shortest round-trip style formatting for doubles written into artifacts.
std::string format_double(double v, int precision = 17);

} // namespace proact
