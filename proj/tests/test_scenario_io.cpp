#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mobility/scenario.hpp"

using namespace mobility;
namespace fs = std::filesystem;

namespace {

const std::string kToy = std::string(MOBILITY_TEST_DATA) + "/toy";

/// Copy of the toy scenario in a scratch directory, with one file replaced.
class ScratchScenario {
public:
    explicit ScratchScenario(const std::string& tag) {
        dir_ = fs::temp_directory_path() / ("mobility_io_" + tag);
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        for (const auto& e : fs::directory_iterator(kToy)) fs::copy_file(e.path(), dir_ / e.path().filename());
    }
    ~ScratchScenario() { fs::remove_all(dir_); }
    void write(const std::string& name, const std::string& content) const {
        std::ofstream(dir_ / name, std::ios::binary) << content;
    }
    std::string dir() const { return dir_.string(); }

private:
    fs::path dir_;
};

std::string error_of(const std::string& dir) {
    try {
        load_scenario(dir);
    } catch (const InputError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(ScenarioIo, LoadsToyScenario) {
    const auto sc = load_scenario(kToy);
    EXPECT_EQ(sc.road_network.node_count(), 5);
    EXPECT_EQ(sc.road_network.link_count(), 12);
    EXPECT_EQ(sc.rail_network.link_count(), 4);
    ASSERT_EQ(sc.rail_network.lines.size(), 1u);
    EXPECT_DOUBLE_EQ(sc.rail_network.mean_line_length(), 6.0);
    EXPECT_EQ(sc.od_count(), 6u);
    EXPECT_EQ(sc.horizon_years, 5);
    EXPECT_EQ(sc.rail_network.station_count(), 3);
}

TEST(ScenarioIo, LoadsSiouxFalls) {
    const auto sc = load_scenario(MOBILITY_DEFAULT_SCENARIO);
    EXPECT_EQ(sc.road_network.node_count(), 24);
    EXPECT_EQ(sc.road_network.link_count(), 76);
    EXPECT_GT(sc.od_count(), 0u);
    EXPECT_EQ(sc.horizon_years, 15);
}

TEST(ScenarioIo, MalformedRowNamesFileAndLine) {
    ScratchScenario s("malformed");
    s.write("road_links.csv", "init_node,term_node,capacity,length,free_flow_time\n1,2,1500,3,4\n2,1,abc,3,4\n");
    const auto msg = error_of(s.dir());
    EXPECT_NE(msg.find("road_links.csv:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("malformed"), std::string::npos) << msg;
}

TEST(ScenarioIo, DanglingRailNode) {
    ScratchScenario s("dangling");
    s.write("rail_links.csv", "init_node,term_node,line,length\n1,2,1,3\n2,9,1,3\n");
    const auto msg = error_of(s.dir());
    EXPECT_NE(msg.find("rail_links.csv:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("dangling node reference 9"), std::string::npos) << msg;
}

TEST(ScenarioIo, DuplicateLinkAndNegativeDemand) {
    {
        ScratchScenario s("dup");
        s.write("road_links.csv", "init_node,term_node,capacity,length,free_flow_time\n1,2,1500,3,4\n1,2,1500,3,4\n");
        EXPECT_NE(error_of(s.dir()).find("duplicate link"), std::string::npos);
    }
    {
        ScratchScenario s("neg");
        s.write("od.csv", "origin,destination,flow\n1,3,-5\n");
        const auto msg = error_of(s.dir());
        EXPECT_NE(msg.find("od.csv:2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("negative demand"), std::string::npos) << msg;
    }
}

TEST(ScenarioIo, MissingColumn) {
    ScratchScenario s("column");
    s.write("od.csv", "origin,destination\n1,3\n");
    EXPECT_NE(error_of(s.dir()).find("missing column 'flow'"), std::string::npos);
}

TEST(Params, SharesMustSumToOne) {
    ScratchScenario s("xi");
    s.write("default_params.txt", "x_i = 0.5, 0.1, 0.3, 0\n");
    const auto msg = error_of(s.dir());
    EXPECT_NE(msg.find("x_i"), std::string::npos) << msg;
}

TEST(Params, UnknownKeyNamesLine) {
    try {
        parse_params("time_weight = 0.1\n\nnot_a_key = 3\n", "p.txt");
        FAIL() << "no error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("p.txt:3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("not_a_key"), std::string::npos);
    }
}

TEST(Params, ArityIsChecked) {
    EXPECT_THROW(parse_params("x_i = 1, 0\n", "p"), InputError);
    EXPECT_THROW(parse_params("M = 1, 2\n", "p"), InputError);
    EXPECT_THROW(parse_params("M = twelve\n", "p"), InputError);
}

TEST(Params, EchoRoundTrips) {
    ParamSet p;
    p.time_weight = 0.123456789;
    p.hv_survival[7] = 0.5;
    p.rail_line_count = 3.0;
    const auto text = echo_params(p);
    std::string kept;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (line.find("derived") == std::string::npos) kept += line + "\n";
    const auto q = parse_params(kept, "echo");
    EXPECT_EQ(echo_params(q), text);
}

TEST(Params, ShippedDefaultsMatchBuiltIn) {
    const auto p = load_params(std::string(MOBILITY_DEFAULT_SCENARIO) + "/default_params.txt");
    EXPECT_EQ(echo_params(p), echo_params(ParamSet{}));
}

TEST(Text, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 2.5e-300, 123456789.123, -7.25}) {
        double back = 0.0;
        ASSERT_TRUE(text::parse_double(text::format_double(v), back));
        EXPECT_EQ(back, v);
    }
    double x = 0.0;
    EXPECT_FALSE(text::parse_double("1.5abc", x));
    EXPECT_FALSE(text::parse_double("", x));
}
