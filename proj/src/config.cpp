#include "handtrack/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "handtrack/errors.hpp"

namespace handtrack {
namespace {

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') throw InvalidInput("config key '" + key + "' expects a number, got '" + v + "'");
    return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw InvalidInput("config key '" + key + "' expects a nonnegative integer, got '" + v + "'");
    return x;
}

std::uint32_t to_u32(const std::string& key, const std::string& v) {
    const auto x = to_uint(key, v);
    if (x > UINT32_MAX) throw InvalidInput("config key '" + key + "' is out of range");
    return static_cast<std::uint32_t>(x);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Accessor {
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define HT_REAL(name, field)                                                                   \
    {name,                                                                                     \
     {[](PipelineConfig& c, const std::string& v) { c.field = to_double(name, v); },           \
      [](const PipelineConfig& c) { return num(c.field); }}}
#define HT_COUNT(name, field)                                                                  \
    {name,                                                                                     \
     {[](PipelineConfig& c, const std::string& v) { c.field = to_u32(name, v); },              \
      [](const PipelineConfig& c) { return std::to_string(c.field); }}}

const std::vector<std::pair<std::string, Accessor>>& accessors() {
    static const std::vector<std::pair<std::string, Accessor>> table = {
        HT_REAL("t_z", merge.t_z),
        HT_REAL("t_phi", merge.t_phi),
        HT_REAL("alpha_z", merge.alpha_z),
        HT_REAL("alpha_phi", merge.alpha_phi),
        {"measure",
         {[](PipelineConfig& c, const std::string& v) { c.measure = parse_measure(v); },
          [](const PipelineConfig& c) { return to_string(c.measure); }}},
        {"weighting",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "area") c.weighting = MeanWeighting::area;
              else if (v == "unweighted") c.weighting = MeanWeighting::unweighted;
              else throw InvalidInput("weighting must be area or unweighted, got '" + v + "'");
          },
          [](const PipelineConfig& c) { return to_string(c.weighting); }}},
        HT_COUNT("size_min", tracker.size_min),
        HT_REAL("t_d", tracker.t_d),
        HT_REAL("t_phi_track", tracker.t_phi_track),
        HT_REAL("r_th", tracker.r_th),
        HT_REAL("d_min", tracker.d_min),
        HT_COUNT("init_frames", tracker.init_frames),
        HT_COUNT("occlusion_window", tracker.occlusion_window),
        HT_COUNT("lost_limit", tracker.lost_limit),
        HT_REAL("clip_epsilon", tracker.clip_epsilon),
        {"behind",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "farther") c.tracker.behind = BehindRule::farther;
              else if (v == "nearer") c.tracker.behind = BehindRule::nearer;
              else throw InvalidInput("behind must be farther or nearer, got '" + v + "'");
          },
          [](const PipelineConfig& c) { return std::string(c.tracker.behind == BehindRule::farther ? "farther" : "nearer"); }}},
        {"reacquire_metric",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "xy") c.tracker.reacquire_metric = ProximityMetric::xy;
              else if (v == "xyz") c.tracker.reacquire_metric = ProximityMetric::xyz;
              else throw InvalidInput("reacquire_metric must be xy or xyz, got '" + v + "'");
          },
          [](const PipelineConfig& c) {
              return std::string(c.tracker.reacquire_metric == ProximityMetric::xy ? "xy" : "xyz");
          }}},
        HT_REAL("depth_sigma", noise.depth_sigma),
        HT_REAL("intensity_sigma", noise.intensity_sigma),
        {"workers",
         {[](PipelineConfig& c, const std::string& v) {
              const auto w = to_u32("workers", v);
              if (w == 0) throw InvalidInput("workers must be at least 1");
              c.workers = w;
          },
          [](const PipelineConfig& c) { return std::to_string(c.workers); }}},
        {"seed",
         {[](PipelineConfig& c, const std::string& v) { c.seed = to_uint("seed", v); },
          [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
    };
    return table;
}

#undef HT_REAL
#undef HT_COUNT

const Accessor& accessor(const std::string& key) {
    for (const auto& [name, a] : accessors())
        if (name == key) return a;
    std::string known;
    for (const auto& k : config_keys()) known += (known.empty() ? "" : ", ") + k;
    throw InvalidInput("unknown config key '" + key + "' (known: " + known + ")");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string to_string(Measure m) { return m == Measure::fused ? "fused" : "baseline"; }
std::string to_string(MeanWeighting w) { return w == MeanWeighting::area ? "area" : "unweighted"; }

Measure parse_measure(const std::string& text) {
    if (text == "fused") return Measure::fused;
    if (text == "baseline") return Measure::baseline;
    throw InvalidInput("measure must be fused or baseline, got '" + text + "'");
}

ClusterOptions PipelineConfig::cluster_options() const { return {merge, measure, weighting, workers}; }

void PipelineConfig::validate() const {
    merge.validate();
    tracker.validate();
    if (workers == 0) throw InvalidInput("workers must be at least 1");
    if (!(noise.depth_sigma >= 0) || !(noise.intensity_sigma >= 0))
        throw InvalidInput("noise sigmas must be nonnegative");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, a] : accessors()) k.push_back(name);
        return k;
    }();
    return keys;
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
    accessor(key).set(config, value);
}

std::string get_config_value(const PipelineConfig& config, const std::string& key) {
    return accessor(key).get(config);
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
    std::string line;
    std::uint64_t line_no = 0;
    std::map<std::string, std::uint64_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        try {
            if (eq == std::string::npos) throw InvalidInput("expected key = value");
            const std::string key = trim(line.substr(0, eq));
            if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
                throw InvalidInput("key '" + key + "' repeats line " + std::to_string(it->second));
            set_config_value(base, key, trim(line.substr(eq + 1)));
        } catch (const InvalidInput& e) {
            throw FormatError("config line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    base.validate();
    return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config " + path.string());
    return parse_config(in, base);
}

std::string format_config(const PipelineConfig& config) {
    std::string out;
    for (const auto& key : config_keys()) out += key + " = " + get_config_value(config, key) + "\n";
    return out;
}

} // namespace handtrack
