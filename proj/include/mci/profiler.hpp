#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mci/column_id.hpp"
#include "mci/dbcore.hpp"
#include "mci/error.hpp"

namespace mci::llm {
class Gateway;
}

namespace mci::profile {

inline constexpr std::uint64_t kSamplingSeed = 42;
inline constexpr std::size_t kPatternSampleCap = 200;
inline constexpr int kArtifactVersion = 1;

enum class RelationKind { Duplicate, Similar };
enum class Cardinality { OneToOne, NToOne, OneToN, NToM, Unknown };
enum class ContextMode { Complete, Partial };

std::string to_string(RelationKind k);
std::string to_string(Cardinality c);
std::string to_string(ContextMode m);
RelationKind relation_kind_from_string(std::string_view s);
Cardinality cardinality_from_string(std::string_view s);
ContextMode context_mode_from_string(std::string_view s);

struct ColumnProfile {
    std::string table;
    std::string column;
    std::string declared_type;
    std::optional<std::string> description;
    bool numeric = false;
    bool primary_key = false;
    std::optional<std::pair<db::Cell, db::Cell>> range;
    std::vector<std::pair<std::string, long long>> patterns;
    long long row_count = 0;
    long long null_count = 0;
    long long distinct_count = 0;
    std::optional<std::pair<long long, long long>> size_bounds;
    std::vector<db::Cell> sampled_examples;

    ColumnId id() const { return {table, column}; }
};

struct InterColumnRelation {
    ColumnId a;
    ColumnId b;
    RelationKind kind = RelationKind::Similar;
    std::optional<std::string> join_path;
    bool fd_ab = false;
    bool fd_ba = false;
    Cardinality cardinality = Cardinality::Unknown;
    std::optional<std::string> note;
};

// Functional-dependency facts between two columns of one table.
struct Dependency {
    ColumnId a;
    ColumnId b;
    bool fd_ab = false;
    bool fd_ba = false;
    Cardinality cardinality = Cardinality::NToM;
};

struct TableProfile {
    std::string table;
    long long row_count = 0;
    long long column_count = 0;
    std::optional<std::string> description;
};

// Everything persisted for one database.
struct Profile {
    int version = kArtifactVersion;
    std::string schema_checksum;
    std::vector<ColumnProfile> columns;
    std::vector<InterColumnRelation> relations;
    std::vector<TableProfile> tables;
    std::vector<Dependency> dependencies;

    const ColumnProfile* find(const ColumnId& id) const;
    const TableProfile* find_table(std::string_view table) const;
};

struct MetadataContext {
    ContextMode mode = ContextMode::Complete;
    std::map<ColumnId, std::string> per_column_text;
    std::map<std::string, std::string> per_table_text;
    std::vector<InterColumnRelation> relations;
};

// Uniform reservoir sample (Algorithm R) driven by a seeded generator.
template <typename T>
class Reservoir {
public:
    Reservoir(std::size_t cap, std::uint64_t seed) : cap_(cap), rng_(seed) {}

    void offer(T value) {
        if (items_.size() < cap_) {
            items_.push_back(std::move(value));
        } else if (cap_ > 0) {
            std::uint64_t j = rng_() % (seen_ + 1);
            if (j < cap_) items_[j] = std::move(value);
        }
        ++seen_;
    }

    const std::vector<T>& items() const { return items_; }
    std::vector<T> take() { return std::move(items_); }
    std::uint64_t seen() const { return seen_; }

private:
    std::size_t cap_;
    std::mt19937_64 rng_;
    std::vector<T> items_;
    std::uint64_t seen_ = 0;
};

std::string abstract_pattern(std::string_view value);

std::vector<std::pair<std::string, long long>> mine_patterns(const std::vector<std::string>& values,
                                                             std::size_t cap = kPatternSampleCap,
                                                             std::uint64_t seed = kSamplingSeed);

enum class Affinity { Integer, Text, Blob, Real, Numeric };
Affinity type_affinity(std::string_view declared_type);

struct ProfileOptions {
    std::size_t sample_cap = kPatternSampleCap;
    std::uint64_t seed = kSamplingSeed;
    std::size_t example_count = 3;
    double numeric_share = 0.95;
    double similarity_threshold = 0.65;
    std::size_t fd_row_limit = 200'000;
    std::size_t index_cap = 50'000;
    std::size_t index_max_value_length = 256;
    std::chrono::milliseconds timeout{60'000};
};

ColumnProfile profile_column(db::Database& db, const db::TableDef& table, const db::ColumnDef& column,
                             const ProfileOptions& opts = {});
ColumnProfile profile_column(db::Database& db, const db::RawSchema& schema, std::string_view table,
                             std::string_view column, const ProfileOptions& opts = {});

// TANE stripped partition: equivalence classes of row ids with singletons removed.
class StrippedPartition {
public:
    // codes[i] < 0 marks a row that takes no part in the partition.
    static StrippedPartition from_codes(const std::vector<std::int64_t>& codes);

    StrippedPartition product(const StrippedPartition& other, std::size_t row_count) const;

    // ||pi|| - |pi|: rows that would have to be removed to make every class a singleton.
    std::size_t error() const;
    const std::vector<std::vector<std::uint32_t>>& classes() const { return classes_; }

private:
    std::vector<std::vector<std::uint32_t>> classes_;
};

// True iff a -> b holds over the rows where both cells are non-null.
bool pairwise_fd(const std::vector<std::pair<db::Cell, db::Cell>>& values);

// Same test over pre-encoded columns (negative code = null).
bool pairwise_fd_codes(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);

Cardinality classify_cardinality(bool fd_ab, bool fd_ba);

std::vector<Dependency> mine_dependencies(db::Database& db, const db::TableDef& table,
                                          const std::vector<ColumnProfile>& profiles,
                                          const ProfileOptions& opts = {});

class ValueIndex {
public:
    struct Hit {
        std::string value;
        double score = 0.0;
    };

    static constexpr double kK1 = 1.2;
    static constexpr double kB = 0.75;

    // values must be distinct; they become one document each.
    void add_column(const ColumnId& column, std::vector<std::string> values);

    std::vector<Hit> search(const ColumnId& column, const std::vector<std::string>& query_terms,
                            std::size_t k) const;

    const std::vector<ColumnId>& columns() const { return order_; }
    std::size_t document_count(const ColumnId& column) const;

private:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };
    struct Corpus {
        std::vector<std::string> docs;  // ascending text
        std::vector<std::uint32_t> lengths;
        double avgdl = 0.0;
        std::map<std::string, std::vector<Posting>> postings;
    };
    std::vector<ColumnId> order_;
    std::map<ColumnId, Corpus> corpora_;
};

ValueIndex build_value_index(db::Database& db, const db::RawSchema& schema,
                             const std::vector<ColumnProfile>& profiles, const ProfileOptions& opts = {});

std::map<ColumnId, std::vector<std::string>> retrieve_examples(const ValueIndex& index,
                                                               std::string_view question, std::size_t k);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<float> embed(std::string_view text) const = 0;
};

// Character-trigram counts hashed into a fixed-width vector.
class TrigramEmbedder : public Embedder {
public:
    explicit TrigramEmbedder(std::size_t dims = 4096) : dims_(dims) {}
    std::vector<float> embed(std::string_view text) const override;

private:
    std::size_t dims_;
};

double cosine(const std::vector<float>& a, const std::vector<float>& b);

// "table column description" with camel case and underscores split into words.
std::string similarity_text(const ColumnProfile& profile);

std::vector<std::pair<ColumnId, ColumnId>> similarity_candidates(const db::RawSchema& schema,
                                                                 const std::vector<ColumnProfile>& profiles,
                                                                 const Embedder& embedder,
                                                                 double threshold);

// Shortest foreign-key join path between two tables, rendered as ON conditions.
std::optional<std::string> fk_join_path(const db::RawSchema& schema, std::string_view from_table,
                                        std::string_view to_table);

InterColumnRelation verify_column_relation(db::Database& db, const ColumnId& a, const ColumnId& b,
                                           std::optional<std::string> join_path,
                                           std::chrono::milliseconds timeout = db::kDefaultTimeout);

// Asks the model for a one-paragraph table summary; GatewayError propagates.
std::string describe_table(llm::Gateway& gateway, const db::TableDef& table,
                           const std::vector<ColumnProfile>& profiles);

struct Descriptions {
    std::map<ColumnId, std::string> columns;
    std::map<std::string, std::string> tables;
};

// Reads BIRD-style database_description/<table>.csv files when present.
Descriptions load_bird_descriptions(const std::filesystem::path& dir, const db::RawSchema& schema);

struct BuildOptions {
    ProfileOptions profile;
    llm::Gateway* gateway = nullptr;  // table descriptions when set
    std::optional<std::filesystem::path> descriptions_dir;
};

Profile build_profile(const std::filesystem::path& db_path, const BuildOptions& opts = {});

// Loads the artifact if its checksum matches the database, else rebuilds and saves it.
Profile ensure_profile(const std::filesystem::path& db_path, const std::filesystem::path& artifact_path,
                       const BuildOptions& opts = {});

nlohmann::json to_json(const Profile& profile);
Profile profile_from_json(const nlohmann::json& doc);
void save_profile(const Profile& profile, const std::filesystem::path& path);
Profile load_profile(const std::filesystem::path& path);

MetadataContext render_context(const db::RawSchema& schema, const Profile& profile, ContextMode mode,
                               const std::map<ColumnId, std::vector<std::string>>* examples = nullptr);

// Schema block for prompts: tables with their text, columns, keys. When
// `subset` is given only those columns plus join keys are listed.
std::string render_schema(const db::RawSchema& schema, const MetadataContext& context,
                          const ColumnSet* subset = nullptr);

}  // namespace mci::profile
