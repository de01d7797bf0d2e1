#include <gtest/gtest.h>

#include "fixture.hpp"
#include "mci/util.hpp"

using namespace mci;

TEST(Util, FencedBlocksInOrder) {
    auto blocks = util::fenced_blocks("intro\n```sql\nSELECT 1\n```\ntext\n```Final-SQL\nSELECT 2\n```\n");
    ASSERT_EQ(blocks.size(), 2u);
    EXPECT_EQ(blocks[0].tag, "sql");
    EXPECT_EQ(blocks[0].body, "SELECT 1");
    EXPECT_EQ(blocks[1].tag, "final-sql");
    EXPECT_EQ(blocks[1].body, "SELECT 2");
}

TEST(Util, UnclosedBlockRunsToEnd) {
    auto blocks = util::fenced_blocks("```sql\nSELECT a\nFROM t");
    ASSERT_EQ(blocks.size(), 1u);
    EXPECT_EQ(blocks[0].body, "SELECT a\nFROM t");
}

TEST(Util, ExtractSqlPrefersLastSqlBlock) {
    EXPECT_EQ(util::extract_sql("```sql\nSELECT 1\n```\n```python\nx\n```\n```sql\nSELECT 2\n```"), "SELECT 2");
    EXPECT_EQ(util::extract_sql("```\nSELECT 3\n```"), "SELECT 3");
    EXPECT_EQ(util::extract_sql("  SELECT 4  \n"), "SELECT 4");
    EXPECT_EQ(util::extract_sql("```python\nprint(1)\n```"), "```python\nprint(1)\n```");
}

TEST(Util, GroupThousands) {
    EXPECT_EQ(util::group_thousands("175495"), "175,495");
    EXPECT_EQ(util::group_thousands("-1234567.25"), "-1,234,567.25");
    EXPECT_EQ(util::group_thousands("999"), "999");
    EXPECT_EQ(util::group_thousands("1000"), "1,000");
}

TEST(Util, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 2.5, 1e-7, 123456789.125, -0.0625}) {
        auto text = util::format_double(v);
        EXPECT_EQ(std::stod(text), v) << text;
    }
    EXPECT_EQ(util::format_double(2.5), "2.5");
}

TEST(Util, ParseNumber) {
    EXPECT_EQ(util::parse_number("42"), 42.0);
    EXPECT_EQ(util::parse_number(" -3.5 "), -3.5);
    EXPECT_FALSE(util::parse_number("12abc"));
    EXPECT_FALSE(util::parse_number(""));
}

TEST(Util, AlnumTokens) {
    EXPECT_EQ(util::alnum_tokens("New-York, NY 10001"), (std::vector<std::string>{"new", "york", "ny", "10001"}));
    EXPECT_TRUE(util::alnum_tokens("--").empty());
}

TEST(Util, Sha256KnownVector) {
    EXPECT_EQ(util::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Util, AtomicWriteAndRead) {
    auto dir = mci::testing::temp_dir("util_io");
    util::write_file_atomic(dir / "nested" / "a.txt", "hello\n");
    EXPECT_EQ(util::read_file(dir / "nested" / "a.txt"), "hello\n");
    util::write_file_atomic(dir / "nested" / "a.txt", "again");
    EXPECT_EQ(util::read_file(dir / "nested" / "a.txt"), "again");
    std::filesystem::remove_all(dir);
}

TEST(Util, StringHelpers) {
    EXPECT_EQ(util::trim("  a b \n"), "a b");
    EXPECT_TRUE(util::iequals("SeLeCt", "select"));
    EXPECT_TRUE(util::starts_with_icase("# goal: x", "# Goal:"));
    std::string s = "a.b.c";
    util::replace_all(s, ".", "::");
    EXPECT_EQ(s, "a::b::c");
    EXPECT_EQ(util::split_lines("a\r\nb\nc"), (std::vector<std::string>{"a", "b", "c"}));
}
