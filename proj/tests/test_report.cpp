#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "blowlab/report.hpp"
#include "blowlab/version.hpp"

using namespace blowlab;

namespace {

std::string fresh_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "blowlab_test_report";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(bool(in));
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void expect_read_error(const std::string& path, const std::string& content,
                       const std::string& needle) {
    std::ofstream(path) << content;
    try {
        (void)read_csv(path);
        FAIL_CHECK("no error for content: " << content);
    } catch (const std::exception& e) {
        CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                      "missing '" << needle << "' in: " << e.what());
    }
}

} // namespace

TEST_CASE("format_double is shortest round-trip") {
    for (double v : {0.0, 1.0, -1.5, 0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-308, 3.14159,
                     0.021337545131790526}) {
        const auto text = format_double(v);
        CHECK(std::strtod(text.c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-4.0) == "-4");
}

TEST_CASE("fnv1a and hex stamps are stable") {
    CHECK(fnv1a("") == 14695981039346656037ull); // offset basis, by definition
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);  // published FNV-1a test vector
    CHECK(hex_stamp(0) == "0000000000000000");
    CHECK(hex_stamp(fnv1a("")) == "cbf29ce484222325");
    CHECK(artifact_header("deadbeef") ==
          std::string("# ") + kToolName + " " + kVersion + " config=deadbeef");
}

TEST_CASE("csv artifacts round-trip bytes, values, and stamp") {
    const auto dir = fresh_dir();
    const auto path = dir + "/table.csv";
    Table tab{{"x", "value"},
              {{0.0, 1.0 / 3.0}, {0.01, -2.5e-17}, {1e6, 0.021337545131790526}}};
    write_csv(path, "00c0ffee00c0ffee", tab);

    const auto first_bytes = slurp(path);
    CHECK(first_bytes.substr(0, 1) == "#");
    CHECK(first_bytes.find("config=00c0ffee00c0ffee") != std::string::npos);

    std::string stamp;
    const auto back = read_csv(path, &stamp);
    CHECK(stamp == "00c0ffee00c0ffee");
    REQUIRE(back.columns == tab.columns);
    REQUIRE(back.rows.size() == tab.rows.size());
    for (std::size_t i = 0; i < tab.rows.size(); ++i)
        for (std::size_t j = 0; j < tab.columns.size(); ++j)
            CHECK(back.rows[i][j] == tab.rows[i][j]); // exact, not approximate

    write_csv(path, "00c0ffee00c0ffee", back);
    CHECK(slurp(path) == first_bytes); // rewriting what was read changes nothing
}

TEST_CASE("text tables validate row widths") {
    const auto dir = fresh_dir();
    TextTable tab{{"a", "classification"}, {{"0.5", "member_of_S"}}};
    CHECK_NOTHROW(write_csv(dir + "/ok.csv", "0", tab));
    tab.rows.push_back({"only-one-cell"});
    CHECK_THROWS_AS(write_csv(dir + "/bad.csv", "0", tab), std::exception);
}

TEST_CASE("malformed csv inputs name the file and line") {
    const auto dir = fresh_dir();
    expect_read_error(dir + "/bad1.csv", "# h\nx,y\n1,2\n3\n", "line 4");
    expect_read_error(dir + "/bad2.csv", "# h\nx,y\n1,two\n", "two");
    expect_read_error(dir + "/empty.csv", "", "no column header");
    CHECK_THROWS_AS((void)read_csv(dir + "/missing.csv"), std::exception);
}

TEST_CASE("stamped json puts the header first and round-trips") {
    const auto dir = fresh_dir();
    auto doc = stamped_json("feedface00000000");
    doc["T_est"] = 0.021337545131790526;
    doc["checks"] = {{{"name", "energy"}, {"pass", true}}};
    const auto path = dir + "/summary.json";
    write_json(path, doc);

    const auto text = slurp(path);
    CHECK(text.find("\"header\"") < text.find("\"T_est\""));
    CHECK(text.back() == '\n');

    const auto back = read_json(path);
    CHECK(back["header"]["tool"] == kToolName);
    CHECK(back["header"]["version"] == kVersion);
    CHECK(back["header"]["config"] == "feedface00000000");
    CHECK(back["T_est"].get<double>() == 0.021337545131790526);

    CHECK_THROWS_AS((void)read_json(dir + "/missing.json"), std::exception);
    std::ofstream(dir + "/broken.json") << "{ not json";
    CHECK_THROWS_AS((void)read_json(dir + "/broken.json"), std::exception);
}
