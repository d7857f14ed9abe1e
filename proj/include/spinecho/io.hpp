// Run configuration, manifests and the CSV interchange format
//
// A run lives in runs/<run_id>/ with manifest.json, one series_<name>.csv per
// curve and an optional report.json. run_id is a hash of the canonical config
// JSON and the tool version, so equal configs map to the same directory.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinecho/ensemble.hpp"
#include "spinecho/model.hpp"
#include "spinecho/propagate.hpp"
#include "spinecho/protocols.hpp"

namespace spinecho {

inline constexpr std::string_view tool_version = "0.3.0";

using json = nlohmann::json;

// Readout grid for echo runs; forward runs use dt * sample_stride.
struct ScheduleConfig {
    std::string kind{"log"};  // "log" or "linear"
    double t_min{0.05};
    int points{200};
};

struct RunConfig {
    LadderSpec ladder;
    Couplings couplings;
    EnsembleSpec ensemble;
    EvolutionConfig evolution;
    ScheduleConfig schedule;
    std::vector<double> alphas{0.0, -0.5, 1.0};
    std::vector<double> j_ses{0.05, 0.075, 0.1, 0.125, 0.15};
    int chain_length{2000};
    double disorder{0.0};

    double sample_step() const { return evolution.dt * evolution.sample_stride; }

    std::vector<double> forward_times() const { return linear_grid(sample_step(), evolution.t_max); }

    LeSchedule echo_schedule() const {
        if (schedule.kind == "linear") return LeSchedule::linear(sample_step(), evolution.t_max);
        return LeSchedule::log_spaced(schedule.t_min, evolution.t_max, schedule.points);
    }
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s = "invalid configuration:";
        for (const auto& e : p) s += "\n  " + e;
        return s;
    }
    std::vector<std::string> problems_;
};

// Every violated constraint, named by its dotted field path.
inline std::vector<std::string> config_problems(const RunConfig& c) {
    std::vector<std::string> p;
    auto finite = [&](const char* name, double v) {
        if (!std::isfinite(v)) p.push_back(std::string(name) + ": must be finite");
    };
    if (c.ladder.m < 2 || c.ladder.m > 15) p.push_back("model.m: must be in [2, 15], got " + std::to_string(c.ladder.m));
    finite("model.j_s", c.couplings.j_s);
    finite("model.j_e", c.couplings.j_e);
    finite("model.j_se", c.couplings.j_se);
    finite("model.alpha", c.couplings.alpha);
    if (c.ensemble.n_realizations < 1) p.push_back("ensemble.realizations: must be >= 1");
    if (!(c.evolution.dt > 0.0)) p.push_back("evolution.dt: must be positive");
    if (!(c.evolution.t_max > 0.0)) p.push_back("evolution.t_max: must be positive");
    if (c.evolution.sample_stride < 1) p.push_back("evolution.stride: must be >= 1");
    if (c.schedule.kind != "log" && c.schedule.kind != "linear")
        p.push_back("schedule.kind: must be \"log\" or \"linear\", got \"" + c.schedule.kind + "\"");
    if (!(c.schedule.t_min > 0.0)) p.push_back("schedule.t_min: must be positive");
    if (c.schedule.kind == "log" && !(c.schedule.t_min < c.evolution.t_max))
        p.push_back("schedule.t_min: must be below evolution.t_max");
    if (c.schedule.points < 2) p.push_back("schedule.points: must be >= 2");
    if (c.alphas.empty()) p.push_back("sweep.alphas: must not be empty");
    if (c.j_ses.empty()) p.push_back("sweep.j_ses: must not be empty");
    if (c.chain_length < 2) p.push_back("sp.length: must be >= 2");
    finite("onebody.disorder", c.disorder);
    return p;
}

inline json to_json(const RunConfig& c) {
    return json{
        {"model",
         {{"m", c.ladder.m},
          {"boundary", std::string(to_string(c.ladder.boundary))},
          {"j_s", c.couplings.j_s},
          {"j_e", c.couplings.j_e},
          {"j_se", c.couplings.j_se},
          {"alpha", c.couplings.alpha}}},
        {"ensemble",
         {{"mode", std::string(to_string(c.ensemble.mode))},
          {"realizations", c.ensemble.n_realizations},
          {"seed", c.ensemble.seed}}},
        {"evolution",
         {{"method", std::string(to_string(c.evolution.method))},
          {"dt", c.evolution.dt},
          {"t_max", c.evolution.t_max},
          {"stride", c.evolution.sample_stride}}},
        {"schedule", {{"kind", c.schedule.kind}, {"t_min", c.schedule.t_min}, {"points", c.schedule.points}}},
        {"sweep", {{"alphas", c.alphas}, {"j_ses", c.j_ses}}},
        {"sp", {{"length", c.chain_length}}},
        {"onebody", {{"disorder", c.disorder}}},
    };
}

struct LoadedConfig {
    RunConfig config;
    std::set<std::string> provided;  // dotted paths present in the file
};

namespace detail {

template <class T>
void read_field(const json& section, const std::string& sec, const char* key, T& target,
                std::vector<std::string>& problems, std::set<std::string>& provided) {
    if (!section.contains(key)) return;
    const std::string path = sec + "." + key;
    provided.insert(path);
    try {
        const auto& v = section.at(key);
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw std::invalid_argument("expected a number");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw std::invalid_argument("expected a string");
        } else {
            if (!v.is_array()) throw std::invalid_argument("expected an array of numbers");
            for (const auto& x : v)
                if (!x.is_number()) throw std::invalid_argument("expected an array of numbers");
        }
        target = v.get<T>();
    } catch (const std::exception& e) {
        problems.push_back(path + ": " + e.what());
    }
}

}  // namespace detail

// Reads the config section of a manifest-schema JSON file. An empty file
// yields the defaults. All schema violations are collected before throwing.
inline LoadedConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path.string() + ": cannot open"});
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    LoadedConfig out;
    std::vector<std::string> problems;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return out;

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({path.string() + ": " + e.what()});
    }
    if (root.contains("config")) root = root["config"];
    if (!root.is_object()) throw ConfigError({"<root>: expected an object"});

    static const std::map<std::string, std::set<std::string>> schema{
        {"model", {"m", "boundary", "j_s", "j_e", "j_se", "alpha"}},
        {"ensemble", {"mode", "realizations", "seed"}},
        {"evolution", {"method", "dt", "t_max", "stride"}},
        {"schedule", {"kind", "t_min", "points"}},
        {"sweep", {"alphas", "j_ses"}},
        {"sp", {"length"}},
        {"onebody", {"disorder"}},
    };
    for (const auto& [name, section] : root.items()) {
        auto it = schema.find(name);
        if (it == schema.end()) {
            problems.push_back(name + ": unknown section");
            continue;
        }
        if (!section.is_object()) {
            problems.push_back(name + ": expected an object");
            continue;
        }
        for (const auto& [key, _] : section.items())
            if (!it->second.contains(key)) problems.push_back(name + "." + key + ": unknown field");
    }

    auto& c = out.config;
    auto& pv = out.provided;
    auto section = [&](const char* name) { return root.contains(name) && root[name].is_object() ? root[name] : json::object(); };

    const json model = section("model");
    detail::read_field(model, "model", "m", c.ladder.m, problems, pv);
    std::string boundary = std::string(to_string(c.ladder.boundary));
    detail::read_field(model, "model", "boundary", boundary, problems, pv);
    if (boundary == "ring") c.ladder.boundary = Boundary::Ring;
    else if (boundary == "open") c.ladder.boundary = Boundary::Open;
    else problems.push_back("model.boundary: must be \"ring\" or \"open\", got \"" + boundary + "\"");
    detail::read_field(model, "model", "j_s", c.couplings.j_s, problems, pv);
    detail::read_field(model, "model", "j_e", c.couplings.j_e, problems, pv);
    detail::read_field(model, "model", "j_se", c.couplings.j_se, problems, pv);
    detail::read_field(model, "model", "alpha", c.couplings.alpha, problems, pv);

    const json ens = section("ensemble");
    std::string mode = std::string(to_string(c.ensemble.mode));
    detail::read_field(ens, "ensemble", "mode", mode, problems, pv);
    try {
        c.ensemble.mode = parse_ensemble_mode(mode);
    } catch (const std::exception& e) {
        problems.push_back(std::string("ensemble.mode: ") + e.what());
    }
    detail::read_field(ens, "ensemble", "realizations", c.ensemble.n_realizations, problems, pv);
    detail::read_field(ens, "ensemble", "seed", c.ensemble.seed, problems, pv);

    const json evo = section("evolution");
    std::string method = std::string(to_string(c.evolution.method));
    detail::read_field(evo, "evolution", "method", method, problems, pv);
    try {
        c.evolution.method = parse_method(method);
    } catch (const std::exception& e) {
        problems.push_back(std::string("evolution.method: ") + e.what());
    }
    detail::read_field(evo, "evolution", "dt", c.evolution.dt, problems, pv);
    detail::read_field(evo, "evolution", "t_max", c.evolution.t_max, problems, pv);
    detail::read_field(evo, "evolution", "stride", c.evolution.sample_stride, problems, pv);

    const json sch = section("schedule");
    detail::read_field(sch, "schedule", "kind", c.schedule.kind, problems, pv);
    detail::read_field(sch, "schedule", "t_min", c.schedule.t_min, problems, pv);
    detail::read_field(sch, "schedule", "points", c.schedule.points, problems, pv);

    const json sw = section("sweep");
    detail::read_field(sw, "sweep", "alphas", c.alphas, problems, pv);
    detail::read_field(sw, "sweep", "j_ses", c.j_ses, problems, pv);
    detail::read_field(section("sp"), "sp", "length", c.chain_length, problems, pv);
    detail::read_field(section("onebody"), "onebody", "disorder", c.disorder, problems, pv);

    for (auto& p : config_problems(c)) problems.push_back(std::move(p));
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return out;
}

inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string make_run_id(const std::string& command, const RunConfig& c) {
    return fnv1a_hex(command + "\n" + to_json(c).dump() + "\n" + std::string(tool_version));
}

inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return x;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct SeriesEntry {
    std::string file;
    std::string observable;
    json labels = json::object();  // e.g. alpha, j_se
};

struct RunManifest {
    std::string run_id;
    std::string command;
    RunConfig config;
    std::vector<std::string> conflicts;
    std::vector<SeriesEntry> series;
    std::string started;
    std::string finished;

    json to_json() const {
        json s = json::array();
        for (const auto& e : series) s.push_back({{"file", e.file}, {"observable", e.observable}, {"labels", e.labels}});
        return json{{"run_id", run_id},
                    {"command", command},
                    {"tool_version", std::string(tool_version)},
                    {"config", spinecho::to_json(config)},
                    {"seed", config.ensemble.seed},
                    {"conflicts", conflicts},
                    {"series", s},
                    {"timestamps", {{"started", started}, {"finished", finished}}}};
    }
};

// Writes `# manifest=<id> observable=<name>`, a header row and one row per sample.
inline void write_series_csv(const std::filesystem::path& path, const TimeSeries& s, const std::string& run_id) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# manifest=" << run_id << " observable=" << to_string(s.observable) << '\n';
    const bool err = !s.std_errors.empty();
    out << (err ? "t,value,std_error\n" : "t,value\n");
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << format_double(s.times[i]) << ',' << format_double(s.values[i]);
        if (err) out << ',' << format_double(s.std_errors[i]);
        out << '\n';
    }
}

struct CsvSeries {
    std::string run_id;
    TimeSeries series;
};

inline CsvSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    CsvSeries out;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream fields(line.substr(1));
            std::string f;
            while (fields >> f) {
                if (f.rfind("manifest=", 0) == 0) out.run_id = f.substr(9);
                if (f.rfind("observable=", 0) == 0) out.series.observable = parse_observable(f.substr(11));
            }
            continue;
        }
        if (!header) {
            header = true;
            if (line.rfind("t,", 0) == 0) continue;
        }
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            cols.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cols.size() < 2)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected t,value");
        out.series.times.push_back(parse_double(cols[0]));
        out.series.values.push_back(parse_double(cols[1]));
        if (cols.size() > 2) out.series.std_errors.push_back(parse_double(cols[2]));
    }
    return out;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return json::parse(in);
}

inline std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& run_id) {
    auto dir = root / "runs" / run_id;
    std::filesystem::create_directories(dir);
    return dir;
}

// SPINECHO_WORKERS, or 1.
inline int default_workers() {
    if (const char* env = std::getenv("SPINECHO_WORKERS")) {
        int w = 0;
        const std::string_view s(env);
        const auto r = std::from_chars(s.data(), s.data() + s.size(), w);
        if (r.ec == std::errc{} && w >= 1) return w;
    }
    return 1;
}

}  // namespace spinecho
