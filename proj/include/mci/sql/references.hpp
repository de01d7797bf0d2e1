#pragma once

#include <string_view>

#include "mci/column_id.hpp"
#include "mci/dbcore.hpp"
#include "mci/sql/ast.hpp"

namespace mci::sql {

// Resolves every column reference in the statement to schema columns.
// Unqualified names that match several visible tables resolve to all of them;
// names that match nothing (output aliases, string literals in double quotes)
// are dropped.
ColumnSet extract_references(const Select& select, const db::RawSchema& schema);
ColumnSet extract_references(std::string_view sql, const db::RawSchema& schema);

struct LinkingScore {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
};

// Column-level precision/recall/F1 of a predicted set against gold references.
// An empty denominator scores 1.0.
LinkingScore linking_score(const ColumnSet& gold, const ColumnSet& predicted);

}  // namespace mci::sql
