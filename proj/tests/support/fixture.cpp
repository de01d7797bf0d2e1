#include "fixture.hpp"

#include <sqlite3.h>

#include <unistd.h>

#include <atomic>
#include <stdexcept>

#include <json.hpp>

#include "mci/harness.hpp"
#include "mci/util.hpp"

namespace mci::testing {

void write_db(const std::filesystem::path& path, const std::vector<std::string>& statements) {
    std::filesystem::create_directories(path.parent_path());
    std::filesystem::remove(path);
    sqlite3* db = nullptr;
    if (sqlite3_open(path.string().c_str(), &db) != SQLITE_OK) throw std::runtime_error("cannot create " + path.string());
    std::string script = "BEGIN;";
    for (const auto& s : statements) script += s + ";";
    script += "COMMIT;";
    char* err = nullptr;
    int rc = sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err);
    std::string message = err ? err : "";
    sqlite3_free(err);
    sqlite3_close(db);
    if (rc != SQLITE_OK) throw std::runtime_error("fixture script failed: " + message);
}

std::filesystem::path make_fixture_db(const std::filesystem::path& dir, const std::string& db_id) {
    const auto path = dir / (db_id + ".sqlite");
    write_db(path, {
        "CREATE TABLE users (Id INTEGER PRIMARY KEY, DisplayName TEXT, Reputation INTEGER, Location TEXT, "
        "Age INTEGER, CreationDate TEXT)",
        "CREATE TABLE posts (Id INTEGER PRIMARY KEY, OwnerUserId INTEGER REFERENCES users(Id), "
        "OwnerDisplayName TEXT, Title TEXT, ViewCount INTEGER, Score INTEGER, CreationDate TEXT)",
        "CREATE TABLE comments (Id INTEGER PRIMARY KEY, PostId INTEGER REFERENCES posts(Id), "
        "UserId INTEGER REFERENCES users(Id), Text TEXT, Score INTEGER)",
        "INSERT INTO users VALUES (1, 'Alice', 1500, 'New York, NY', 34, '2010-07-19'),"
        " (2, 'Bob', 230, 'London', NULL, '2011-01-02'), (3, 'Carol', 8700, 'New York, NY', 29, '2010-08-01'),"
        " (4, 'Dave', 45, NULL, 41, '2012-03-15'), (5, 'Eve', 990, 'Berlin', 23, '2013-11-30'),"
        " (6, 'Frank', 12, 'Paris', NULL, '2014-05-05')",
        "INSERT INTO posts VALUES (1, 1, 'Alice', 'How to parse SQL', 1200, 10, '2010-08-01'),"
        " (2, 3, 'Carol', 'Window functions explained', 5400, 25, '2010-09-10'),"
        " (3, 3, NULL, 'Indexing strategies', 175495, 88, '2011-02-11'),"
        " (4, 2, 'Bob', 'Joins in SQLite', 800, 3, '2011-06-20'),"
        " (5, 5, NULL, 'NULL handling', 60, 1, '2012-01-09'),"
        " (6, 1, 'Alice', 'Query planning', 3100, 14, '2012-04-04'),"
        " (7, 4, 'Dave', 'Foreign keys', 450, 5, '2013-02-02'),"
        " (8, 3, 'Carol', 'CTE tricks', 2900, 12, '2013-07-07')",
        "INSERT INTO comments VALUES (1, 1, 2, 'Great answer', 3), (2, 1, 3, 'Thanks', 1),"
        " (3, 1, 5, 'Very helpful', 4), (4, 2, 1, 'Nice', 2), (5, 3, 4, 'Useful', 6), (6, 4, 1, 'Outdated', 0),"
        " (7, 6, 6, 'Clear explanation', 5), (8, 8, 2, 'Neat', 2), (9, 3, 5, 'Bookmarked', 3),"
        " (10, 7, 3, 'Good point', 1)",
    });

    const auto desc = dir / "database_description";
    std::filesystem::create_directories(desc);
    const std::string header = "original_column_name,column_name,column_description,data_format,value_description\n";
    util::write_file_atomic(desc / "users.csv",
                            header +
                                "Id,user id,the unique id of the user,integer,\n"
                                "DisplayName,display name,the user's display name,text,\n"
                                "Reputation,reputation,the reputation score of the user,integer,\n"
                                "Location,location,the location of the user,text,\n"
                                "Age,age,the age of the user,integer,\n"
                                "CreationDate,creation date,the date the account was created,date,\n");
    util::write_file_atomic(desc / "posts.csv",
                            header +
                                "Id,post id,the unique id of the post,integer,\n"
                                "OwnerUserId,owner user id,the id of the user who owns the post,integer,\n"
                                "OwnerDisplayName,owner display name,the display name of the post owner,text,\n"
                                "Title,title,the title of the post,text,\n"
                                "ViewCount,view count,the number of times the post was viewed,integer,\n"
                                "Score,score,the score of the post,integer,\n"
                                "CreationDate,creation date,the date the post was created,date,\n");
    util::write_file_atomic(desc / "comments.csv",
                            header +
                                "Id,comment id,the unique id of the comment,integer,\n"
                                "PostId,post id,the id of the commented post,integer,\n"
                                "UserId,user id,the id of the commenting user,integer,\n"
                                "Text,text,the text of the comment,text,\n"
                                "Score,score,the score of the comment,integer,\n");
    return path;
}

namespace {

std::string sql_block(const std::string& tag, const std::string& sql) { return "```" + tag + "\n" + sql + "\n```"; }

std::vector<FlowSample> build_samples() {
    const std::string a_sql =
        "SELECT users.DisplayName FROM posts INNER JOIN users ON posts.OwnerUserId = users.Id ORDER BY "
        "posts.ViewCount DESC LIMIT 1";
    const std::string b_empty = "SELECT users.Id FROM users WHERE users.Location = 'New York'";
    const std::string b_fixed = "SELECT users.Id FROM users WHERE users.Location LIKE '%New York%'";
    const std::string b_final =
        "SELECT COUNT(posts.Id) FROM posts WHERE posts.OwnerUserId IN (SELECT users.Id FROM users WHERE "
        "users.Location LIKE '%New York%')";
    const std::string c_broken =
        "SELECT ROUND(AVG(comments.Scor), 2) FROM comments INNER JOIN posts ON comments.PostId = posts.Id WHERE "
        "posts.Title = 'How to parse SQL'";
    const std::string c_fixed =
        "SELECT ROUND(AVG(comments.Score), 2) FROM comments INNER JOIN posts ON comments.PostId = posts.Id WHERE "
        "posts.Title = 'How to parse SQL'";

    return {
        {1,
         "What is the display name of the user who owns the most viewed post?",
         "most viewed refers to MAX(ViewCount)",
         "simple",
         "SELECT T2.DisplayName FROM posts AS T1 JOIN users AS T2 ON T1.OwnerUserId = T2.Id ORDER BY T1.ViewCount "
         "DESC LIMIT 1",
         sql_block("sql", a_sql),
         {"The draft joins posts to their owners and keeps the owner of the post with the largest view count. "
          "It answers the question.\nYES",
          "A single row is returned, so DISTINCT is not needed.\n" + sql_block("sql", a_sql),
          "The result holds one display name as expected.\n" + sql_block("final-sql", a_sql)},
         a_sql,
         {"polish", "success"},
         1},
        {2,
         "How many posts were written by users located in New York?",
         "",
         "moderate",
         "SELECT COUNT(T1.Id) FROM posts AS T1 JOIN users AS T2 ON T1.OwnerUserId = T2.Id WHERE T2.Location LIKE "
         "'%New York%'",
         sql_block("sql",
                   "SELECT COUNT(posts.Id) FROM posts INNER JOIN users ON posts.OwnerUserId = users.Id WHERE "
                   "users.Location = 'New York'"),
         {"The draft counts posts whose owner location equals 'New York' exactly. Stored locations may carry a "
          "suffix, so the filter is doubtful.\nNO",
          "Sub-questions:\n1. Which users are located in New York?\n2. How many posts did those users write?\n" +
              sql_block("sql", b_empty),
          "The stored locations look like 'New York, NY', so match them fuzzily.\n" + sql_block("sql", b_fixed),
          "Both sub-questions are solved.\n" + sql_block("final-sql", b_final)},
         b_final,
         {"rewrite", "empty", "success"},
         3},
        {3,
         "What is the average score of the comments on the post titled 'How to parse SQL'?",
         "average score refers to AVG(Score)",
         "challenging",
         "SELECT AVG(T1.Score) FROM comments AS T1 JOIN posts AS T2 ON T1.PostId = T2.Id WHERE T2.Title = 'How to "
         "parse SQL'",
         sql_block("sql",
                   "SELECT AVG(comments.Score) FROM comments INNER JOIN posts ON comments.PostId = posts.Id WHERE "
                   "posts.Title = 'How to parse SQL'"),
         {"The draft averages the comment scores of the post with that title.\nYES",
          "Rounding makes the answer easier to read.\n" + sql_block("sql", c_broken),
          "The column is called Score.\n" + sql_block("sql", c_fixed),
          sql_block("final-sql", c_fixed)},
         c_fixed,
         {"polish", "failure", "success"},
         2},
    };
}

const FlowSample* sample_for(const std::string& prompt) {
    for (const auto& s : flow_samples())
        if (prompt.find(s.question) != std::string::npos) return &s;
    return nullptr;
}

std::string between(const std::string& text, const std::string& open, const std::string& close) {
    auto start = text.find(open);
    if (start == std::string::npos) return {};
    start += open.size();
    auto end = text.find(close, start);
    return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

const std::vector<FlowSample>& flow_samples() {
    static const std::vector<FlowSample> samples = build_samples();
    return samples;
}

std::string fixture_reply(const llm::Request& request) {
    if (request.messages.empty()) throw std::runtime_error("fixture model got no messages");
    const std::string& first = request.messages.front().content;
    const auto* sample = sample_for(first);

    if (util::starts_with_icase(first, "You are a SQLite expert")) {
        if (!sample) throw std::runtime_error("fixture model: unknown draft question");
        return sample->draft;
    }
    if (util::starts_with_icase(first, "# Goal: Follow the STEP")) {
        if (!sample) throw std::runtime_error("fixture model: unknown generation question");
        std::size_t round = 0;
        for (const auto& m : request.messages) round += m.role == llm::Role::Assistant;
        if (round >= sample->generation.size()) throw std::runtime_error("fixture model: script exhausted");
        return sample->generation[round];
    }
    if (util::starts_with_icase(first, "# Goal: Your task is to perform a")) {
        return "The query already complies.\n```sql\n" + util::trim(between(first, "# Given SQL: ", "\n# Question:")) +
               "\n```";
    }
    throw std::runtime_error("fixture model: unrecognised prompt");
}

std::shared_ptr<llm::Provider> fixture_provider() {
    return std::make_shared<llm::FunctionProvider>("fixture", fixture_reply);
}

std::filesystem::path make_fixture_dataset(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    make_fixture_db(dir / "dev_databases" / "codebase");
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& s : flow_samples())
        doc.push_back({{"question_id", s.question_id},
                       {"db_id", "codebase"},
                       {"question", s.question},
                       {"evidence", s.evidence},
                       {"SQL", s.gold_sql},
                       {"difficulty", s.difficulty}});
    util::write_file_atomic(dir / "dev.json", doc.dump(2) + "\n");
    return dir;
}

std::filesystem::path temp_dir(const std::string& name) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("mci_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

const FixtureDb& shared_fixture_db() {
    static const FixtureDb fixture = [] {
        FixtureDb f;
        f.db_path = make_fixture_db(temp_dir("shared_db"));
        db::Database db(f.db_path);
        f.schema = db.introspect_schema();
        f.profile = profile::build_profile(f.db_path);
        return f;
    }();
    return fixture;
}

std::filesystem::path build_replay_fixture(const std::filesystem::path& dir) {
    std::filesystem::remove_all(dir);
    make_fixture_dataset(dir / "dataset");

    harness::Config config;
    config.profile_dir = dir / "profiles";
    config.profile_on_demand = true;
    auto recorder = std::make_shared<llm::ReplayCache>(dir / "cache", llm::CacheMode::Record, config.provider_id,
                                                       fixture_provider());
    auto samples = harness::load_dataset(dir / "dataset");
    harness::run_benchmark(config, samples, dir / "record-run", recorder);

    nlohmann::json replay = {{"provider", "replay"},
                             {"cache_dir", (dir / "cache").string()},
                             {"profile_dir", (dir / "profiles").string()}};
    const auto path = dir / "replay.json";
    util::write_file_atomic(path, replay.dump(2) + "\n");
    return path;
}

}  // namespace mci::testing
