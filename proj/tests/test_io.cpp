#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "spinecho/io.hpp"

using namespace spinecho;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("spinecho_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                  ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

std::vector<std::string> problems_of(const fs::path& p) {
    try {
        load_config(p);
    } catch (const ConfigError& e) {
        return e.problems();
    }
    return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
    for (const auto& p : problems)
        if (p.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
    TempDir d;
    const auto loaded = load_config(d.write("empty.json", ""));
    const auto& c = loaded.config;
    EXPECT_EQ(c.ladder.m, 5);
    EXPECT_EQ(c.ladder.boundary, Boundary::Ring);
    EXPECT_EQ(c.couplings.alpha, 0.0);
    EXPECT_EQ(c.couplings.j_s, 1.0);
    EXPECT_EQ(c.couplings.j_e, 1.0);
    EXPECT_EQ(c.evolution.method, Method::ExactSpectral);
    EXPECT_TRUE(loaded.provided.empty());
}

TEST(Config, ReadsSectionsAndRecordsProvidedFields) {
    TempDir d;
    const auto loaded = load_config(d.write(
        "c.json", R"({"config": {"model": {"m": 3, "boundary": "open", "j_se": 0.2},
                                 "evolution": {"method": "trotter4", "dt": 0.05},
                                 "sweep": {"alphas": [0, 1, 2]}}})"));
    EXPECT_EQ(loaded.config.ladder.m, 3);
    EXPECT_EQ(loaded.config.ladder.boundary, Boundary::Open);
    EXPECT_EQ(loaded.config.couplings.j_se, 0.2);
    EXPECT_EQ(loaded.config.evolution.method, Method::Trotter4);
    EXPECT_EQ(loaded.config.alphas, (std::vector<double>{0, 1, 2}));
    EXPECT_TRUE(loaded.provided.contains("model.m"));
    EXPECT_FALSE(loaded.provided.contains("model.alpha"));
}

TEST(Config, NegativeSizeNamesTheField) {
    TempDir d;
    const auto p = problems_of(d.write("neg.json", R"({"model": {"m": -3}})"));
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NE(p[0].find("model.m"), std::string::npos);
}

TEST(Config, AllProblemsReportedTogether) {
    TempDir d;
    const auto p = problems_of(d.write(
        "bad.json",
        R"({"model": {"m": 1, "boundary": "mobius", "colour": 3}, "evolution": {"dt": -1}, "extra": {}})"));
    EXPECT_TRUE(mentions(p, "model.m"));
    EXPECT_TRUE(mentions(p, "model.boundary"));
    EXPECT_TRUE(mentions(p, "model.colour: unknown field"));
    EXPECT_TRUE(mentions(p, "evolution.dt"));
    EXPECT_TRUE(mentions(p, "extra: unknown section"));
}

TEST(Config, TypeErrorsAndBadJson) {
    TempDir d;
    EXPECT_TRUE(mentions(problems_of(d.write("t.json", R"({"model": {"j_se": "strong"}})")), "model.j_se"));
    EXPECT_THROW(load_config(d.write("broken.json", "{")), ConfigError);
    EXPECT_THROW(load_config(d.path / "missing.json"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
    TempDir d;
    RunConfig c;
    c.ladder = {4, Boundary::Open};
    c.couplings.alpha = -0.5;
    c.ensemble.mode = EnsembleMode::RandomPhase;
    write_json(d.path / "cfg.json", json{{"config", to_json(c)}});
    const auto back = load_config(d.path / "cfg.json").config;
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(RunId, StableAndSensitive) {
    RunConfig a;
    RunConfig b = a;
    EXPECT_EQ(make_run_id("le", a), make_run_id("le", b));
    b.couplings.j_se = 0.11;
    EXPECT_NE(make_run_id("le", a), make_run_id("le", b));
    EXPECT_NE(make_run_id("le", a), make_run_id("forward", a));
    EXPECT_EQ(fnv1a_hex("").size(), 16u);
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}

TEST(Csv, RoundTripIsBitExact) {
    TempDir d;
    TimeSeries s;
    s.observable = Observable::MLE;
    s.times = {0.0, 0.1, 1.0 / 3.0, 500.0};
    s.values = {1.0, std::numbers::pi / 4.0, 1e-300, 0.1 + 0.2};
    s.std_errors = {0.0, 1e-17, 0.5, 2.0 / 7.0};
    const auto path = d.path / "le.csv";
    write_series_csv(path, s, "abc123");
    const auto back = read_series_csv(path);
    EXPECT_EQ(back.run_id, "abc123");
    EXPECT_EQ(back.series.observable, Observable::MLE);
    EXPECT_EQ(back.series.times, s.times);
    EXPECT_EQ(back.series.values, s.values);
    EXPECT_EQ(back.series.std_errors, s.std_errors);
}

TEST(Csv, MalformedRowsAreRejected) {
    TempDir d;
    EXPECT_THROW(read_series_csv(d.write("x.csv", "# manifest=a observable=MLE\nt,value\n1.0,abc\n")), std::exception);
}

TEST(Numbers, ShortestRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-300}) EXPECT_EQ(parse_double(format_double(x)), x);
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
}

TEST(Workers, EnvironmentOverride) {
    ::setenv("SPINECHO_WORKERS", "3", 1);
    EXPECT_EQ(default_workers(), 3);
    ::setenv("SPINECHO_WORKERS", "zero", 1);
    EXPECT_EQ(default_workers(), 1);
    ::unsetenv("SPINECHO_WORKERS");
    EXPECT_EQ(default_workers(), 1);
}

TEST(Manifest, ListsSeriesAndConfig) {
    RunManifest m;
    m.run_id = "id";
    m.command = "le";
    m.series.push_back({"le.csv", "le", json{{"j_se", 0.1}}});
    const auto j = m.to_json();
    EXPECT_EQ(j.at("run_id"), "id");
    EXPECT_EQ(j.at("series").size(), 1u);
    EXPECT_EQ(j.at("config").at("model").at("m"), 5);
}
