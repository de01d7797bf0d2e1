#pragma once

#include <compare>
#include <set>
#include <string>

namespace mci {

// A schema column, spelled as in the database catalog.
struct ColumnId {
    std::string table;
    std::string column;

    auto operator<=>(const ColumnId&) const = default;
    bool operator==(const ColumnId&) const = default;

    std::string str() const { return table + "." + column; }
};

using ColumnSet = std::set<ColumnId>;

}  // namespace mci
