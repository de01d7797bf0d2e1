#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mci/dbcore.hpp"
#include "mci/llm.hpp"
#include "mci/profiler.hpp"

namespace mci::testing {

// Three tables (users, posts, comments) in the style of a Q&A forum, plus
// BIRD-style database_description CSVs next to the file.
std::filesystem::path make_fixture_db(const std::filesystem::path& dir, const std::string& db_id = "codebase");

// Creates a SQLite file from a list of statements.
void write_db(const std::filesystem::path& path, const std::vector<std::string>& statements);

struct FlowSample {
    long long question_id;
    std::string question;
    std::string evidence;
    std::string difficulty;
    std::string gold_sql;
    std::string draft;
    std::vector<std::string> generation;  // assistant replies, one per round
    std::string expected_final;
    std::vector<std::string> expected_injections;
    int expected_interactions;
};

// (a) polish with one execution, (b) rewrite with an Empty subquery, (c) Failure then fix.
const std::vector<FlowSample>& flow_samples();

// Answers draft, generation and alignment prompts for the flow samples.
std::string fixture_reply(const llm::Request& request);
std::shared_ptr<llm::Provider> fixture_provider();

// dev.json + dev_databases/codebase/ under dir.
std::filesystem::path make_fixture_dataset(const std::filesystem::path& dir);

std::filesystem::path temp_dir(const std::string& name);

struct FixtureDb {
    std::filesystem::path db_path;
    db::RawSchema schema;
    profile::Profile profile;
};

// The fixture database with its profile, built once per process.
const FixtureDb& shared_fixture_db();

// Records the fixture model's answers for the dataset under dir/cache, builds
// profiles under dir/profiles and writes dir/replay.json. Returns the config path.
std::filesystem::path build_replay_fixture(const std::filesystem::path& dir);

}  // namespace mci::testing
