#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace driftlab {

/// Shortest exact decimal form of a double (17 significant digits), so that
/// written values reload bit-identically.
std::string fmt17(double x);

/// Minimal CSV writer: comma separator, '.' decimal point, LF line endings,
/// one header row, numeric cells rendered with fmt17.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path, const std::vector<std::string>& header,
                       bool append = false);

    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
};

/// Parse a CSV file written by CsvWriter. Returns header + rows of cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

}  // namespace driftlab
