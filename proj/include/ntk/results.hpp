#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace ntk {

using Cell = std::variant<double, std::int64_t, std::string>;

enum class ColumnType { real, integer, tag };

struct Column {
    std::string name;
    ColumnType type = ColumnType::real;
};

// A named table with a fixed column schema. Doubles are written with 17
// significant digits so a CSV round trip is exact.
class ResultTable {
public:
    ResultTable() = default;
    ResultTable(std::string name, std::vector<Column> columns);

    const std::string& name() const { return name_; }
    const std::vector<Column>& columns() const { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

    void add_row(std::vector<Cell> row);  // throws InvalidArgument on schema mismatch
    int column_index(const std::string& name) const;
    double real(std::size_t row, const std::string& col) const;
    const std::string& tag(std::size_t row, const std::string& col) const;

    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;

private:
    std::string name_;
    std::vector<Column> columns_;
    std::vector<std::vector<Cell>> rows_;
};

std::string format_real(double v);

}  // namespace ntk
