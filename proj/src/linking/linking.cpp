#include "mci/linking.hpp"

#include "mci/sql/parser.hpp"
#include "mci/sql/references.hpp"
#include "mci/util.hpp"

namespace mci::linking {

std::string draft_prompt(const std::string& question, const std::string& evidence, const std::string& schema_text) {
    std::string p =
        "You are a SQLite expert. Using the database schema below, write one SQLite query that answers the "
        "question.\n"
        "Do not use explicit aliases for tables or columns: always write table_name.column_name.\n"
        "Return the query in a single ```sql code block.\n\n"
        "【Database schema】\n" +
        schema_text + "\n\n【Question】\n" + question + "\n";
    if (!util::trim(evidence).empty()) p += "\n【Evidence】\n" + evidence + "\n";
    return p;
}

DraftResult generate_draft_sql(llm::Gateway& gateway, const std::string& question, const std::string& evidence,
                               const profile::MetadataContext& context, const db::RawSchema& schema,
                               double temperature, int max_attempts) {
    std::vector<llm::ChatMessage> chat{
        {llm::Role::User, draft_prompt(question, evidence, profile::render_schema(schema, context))}};
    DraftResult out;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto reply = gateway.complete(chat, temperature);
        out.attempts = attempt;
        out.output_tokens += reply.output_tokens;
        out.sql = util::extract_sql(reply.text);
        try {
            sql::parse_select(out.sql);
            out.parsed = true;
            return out;
        } catch (const sql::ParseError& e) {
            chat.push_back({llm::Role::Assistant, reply.text});
            chat.push_back({llm::Role::User, std::string("The query could not be parsed (") + e.what() +
                                                 "). Write a corrected SQLite query in a single ```sql code "
                                                 "block."});
        }
    }
    return out;
}

ColumnSet augment_columns(const ColumnSet& c, const std::vector<profile::InterColumnRelation>& relations) {
    ColumnSet out = c;
    for (const auto& r : relations) {
        if (c.count(r.a)) out.insert(r.b);
        if (c.count(r.b)) out.insert(r.a);
    }
    return out;
}

FilteredSchema build_filtered_schema(const ColumnSet& c, const profile::MetadataContext& context,
                                     const db::RawSchema& schema) {
    if (c.empty()) throw EmptyColumnSet("filtered schema needs at least one column");
    ColumnSet canonical;
    for (const auto& id : c) {
        const auto* t = schema.find_table(id.table);
        const auto* col = t ? t->find_column(id.column) : nullptr;
        if (!col) throw UnknownColumn("column " + id.str() + " is not in the schema");
        canonical.insert({t->name, col->name});
    }
    FilteredSchema fs;
    fs.columns = std::move(canonical);
    fs.rendered_text = profile::render_schema(schema, context, &fs.columns);
    fs.source_mode = context.mode;
    return fs;
}

FilteredSchema full_schema(const profile::MetadataContext& context, const db::RawSchema& schema) {
    FilteredSchema fs;
    for (const auto& t : schema.tables)
        for (const auto& col : t.columns) fs.columns.insert({t.name, col.name});
    fs.rendered_text = profile::render_schema(schema, context);
    fs.source_mode = context.mode;
    fs.full_schema = true;
    return fs;
}

LinkResult link_schema(llm::Gateway& gateway, const std::string& question, const std::string& evidence,
                       const profile::MetadataContext& context, const db::RawSchema& schema, double temperature) {
    LinkResult out;
    out.draft = generate_draft_sql(gateway, question, evidence, context, schema, temperature);
    if (out.draft.parsed) {
        try {
            out.referenced = sql::extract_references(out.draft.sql, schema);
        } catch (const Error&) {
            out.referenced.clear();
        }
    }
    auto augmented = augment_columns(out.referenced, context.relations);
    if (augmented.empty()) out.schema = full_schema(context, schema);
    else out.schema = build_filtered_schema(augmented, context, schema);
    return out;
}

}  // namespace mci::linking
