#pragma once

#include <string>
#include <vector>

#include "mci/column_id.hpp"
#include "mci/dbcore.hpp"
#include "mci/llm.hpp"
#include "mci/profiler.hpp"

namespace mci::linking {

inline constexpr int kDraftAttempts = 3;

struct DraftResult {
    std::string sql;
    bool parsed = false;
    int attempts = 0;
    long long output_tokens = 0;
};

struct FilteredSchema {
    ColumnSet columns;
    std::string rendered_text;
    profile::ContextMode source_mode = profile::ContextMode::Complete;
    bool full_schema = false;  // fallback when the draft yields no usable columns
};

std::string draft_prompt(const std::string& question, const std::string& evidence, const std::string& schema_text);

DraftResult generate_draft_sql(llm::Gateway& gateway, const std::string& question, const std::string& evidence,
                               const profile::MetadataContext& context, const db::RawSchema& schema,
                               double temperature, int max_attempts = kDraftAttempts);

// C plus the Similar/Duplicate partners of its members; one pass, no closure.
ColumnSet augment_columns(const ColumnSet& c, const std::vector<profile::InterColumnRelation>& relations);

FilteredSchema build_filtered_schema(const ColumnSet& c, const profile::MetadataContext& context,
                                     const db::RawSchema& schema);

FilteredSchema full_schema(const profile::MetadataContext& context, const db::RawSchema& schema);

struct LinkResult {
    DraftResult draft;
    ColumnSet referenced;
    FilteredSchema schema;
};

LinkResult link_schema(llm::Gateway& gateway, const std::string& question, const std::string& evidence,
                       const profile::MetadataContext& context, const db::RawSchema& schema, double temperature);

}  // namespace mci::linking
