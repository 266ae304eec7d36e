#include "ridgeline/dataset_io.hpp"
#include "ridgeline/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <limits>

using namespace ridgeline;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("ridgeline_test_" + name);
}

std::size_t parse_error_line(const std::string& text) {
    try {
        dataset_from_csv(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    FAIL("expected a parse error");
    return 0;
}

}  // namespace

TEST_CASE("header layout") {
    CHECK(dataset_header(2) == "t,q1,q2,dq1,dq2,ddq1,ddq2,y1,y2");
    CHECK(dataset_header(1) == "t,q1,dq1,ddq1,y1");
}

TEST_CASE("empty dataset writes only the header") {
    const std::string text = dataset_to_csv(Dataset{});
    CHECK(text == dataset_header(2) + "\n");
    CHECK(dataset_from_csv(text).empty());
}

TEST_CASE("one sample gives one row of 1 + 6 + 2 cells") {
    Dataset d;
    Sample s;
    s.t = 0.0;
    s.x = JointState(Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(0.3, 0.4), Eigen::Vector2d(0.5, 0.6));
    s.y = Eigen::Vector2d(1.5, -2.5);
    d.samples.push_back(s);
    const std::string text = dataset_to_csv(d);
    const std::string row = text.substr(text.find('\n') + 1);
    CHECK(std::count(row.begin(), row.end(), ',') == 8);
    CHECK(dataset_from_csv(text) == d);
}

TEST_CASE("generated dataset survives a file round trip bit-exactly") {
    const Dataset d = generate_dataset(TrajectoryRegime::regime_a(), ArmParameters{}, 500.0, 20.0, 42);
    const auto path = temp_path("roundtrip.csv");
    save_dataset(d, path);
    const Dataset back = load_dataset(path);
    CHECK(back.size() == 10000);
    CHECK(back == d);
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    std::filesystem::remove(path);
}

TEST_CASE("format_double is the shortest round-trip text") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(20.0) == "20");
    const double awkward = 0.1 + 0.2;
    CHECK(std::stod(format_double(awkward)) == awkward);
}

TEST_CASE("malformed input names the line") {
    const std::string header = dataset_header(2) + "\n";
    CHECK(parse_error_line("t,q1,dq1\n") == 1);
    CHECK(parse_error_line("t,a,b,c,d,e,f,g,h\n") == 1);
    CHECK(parse_error_line(header + "0,0,0,0,0,0,0,0,0\n0.05,0,0,0,0,0,0,0\n") == 3);
    CHECK(parse_error_line(header + "0,0,0,0,0,0,0,0,abc\n") == 2);
    CHECK(parse_error_line(header + "0,0,0,0,0,0,0,0,1.5x\n") == 2);
    CHECK(parse_error_line(header + "\n0,0,0,0,0,0,0,0,0\n") == 2);
}

TEST_CASE("load errors carry the path") {
    const auto path = temp_path("bad.csv");
    write_file_atomic(path, "nonsense\n");
    try {
        load_dataset(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(path.string()) != std::string::npos);
        CHECK(e.line() == 1);
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_dataset(temp_path("missing.csv")), Error);
}

TEST_CASE("rate is recovered from the time step") {
    const Dataset d = generate_dataset(TrajectoryRegime::regime_a(), ArmParameters{}, 1.0, 50.0, 1);
    CHECK(dataset_from_csv(dataset_to_csv(d)).rate == 50.0);
}
