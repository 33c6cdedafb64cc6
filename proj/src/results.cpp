#include "ntk/results.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ntk/errors.hpp"

namespace ntk {

ResultTable::ResultTable(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void ResultTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size())
        throw InvalidArgument("ResultTable " + name_ + ": row has " + std::to_string(row.size()) + " cells, expected " +
                              std::to_string(columns_.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
        const auto t = columns_[i].type;
        const bool ok = (t == ColumnType::real && std::holds_alternative<double>(row[i])) ||
                        (t == ColumnType::integer && std::holds_alternative<std::int64_t>(row[i])) ||
                        (t == ColumnType::tag && std::holds_alternative<std::string>(row[i]));
        if (!ok) throw InvalidArgument("ResultTable " + name_ + ": cell type mismatch in column " + columns_[i].name);
    }
    rows_.push_back(std::move(row));
}

int ResultTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return static_cast<int>(i);
    throw InvalidArgument("ResultTable " + name_ + ": no column " + name);
}

double ResultTable::real(std::size_t row, const std::string& col) const {
    const Cell& c = rows_.at(row).at(column_index(col));
    if (auto p = std::get_if<double>(&c)) return *p;
    if (auto p = std::get_if<std::int64_t>(&c)) return static_cast<double>(*p);
    throw InvalidArgument("ResultTable " + name_ + ": column " + col + " is not numeric");
}

const std::string& ResultTable::tag(std::size_t row, const std::string& col) const {
    return std::get<std::string>(rows_.at(row).at(column_index(col)));
}

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string ResultTable::to_csv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i].name;
    os << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) os << format_real(v);
                    else if constexpr (std::is_same_v<T, std::int64_t>) os << v;
                    else os << v;
                },
                row[i]);
        }
        os << '\n';
    }
    return os.str();
}

void ResultTable::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + path.string() + " for writing");
    f << to_csv();
    if (!f) throw ConfigError("failed writing " + path.string());
}

}  // namespace ntk
