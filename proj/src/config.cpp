// Experiment configuration: YAML parsing with strict keys, JSON round-trip.

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "mbrf/csv.hpp"
#include "mbrf/experiment.hpp"

namespace mbrf {

namespace {

using Json = nlohmann::ordered_json;

std::string where(const std::string& source, const YAML::Node& node) {
    const auto m = node.Mark();
    if (m.is_null()) return source;
    return source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    void require_map(const YAML::Node& node, const std::string& path) const {
        if (!node.IsMap()) throw ConfigError(where(source_, node) + ": '" + path + "' must be a mapping");
    }

    void reject_unknown(const YAML::Node& node, const std::string& path, const std::set<std::string>& known) const {
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (!known.count(key)) {
                std::string valid;
                for (const auto& k : known) valid += (valid.empty() ? "" : ", ") + k;
                throw ConfigError(where(source_, kv.first) + ": unknown key '" + join(path, key) +
                                  "' (valid: " + valid + ")");
            }
        }
    }

    template <typename T>
    void get(const YAML::Node& parent, const std::string& path, const char* key, T& out) const {
        const auto node = parent[key];
        if (!node) return;
        try {
            out = node.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(where(source_, node) + ": '" + join(path, key) + "' has the wrong type");
        }
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

const std::set<std::string> kTopKeys = {"scenario", "methods", "seeds", "eval_episodes", "workers",
                                        "trace", "output_dir", "sim", "dqn"};
const std::set<std::string> kSimKeys = {"g_min", "g_max", "yellow", "control_interval", "sim_step",
                                        "lane_length", "detection_zone", "halt_speed_threshold",
                                        "episode_duration", "arrival_rate_low", "arrival_rate_high",
                                        "min_gap", "junction_traversal", "class_mixture", "vehicle_classes"};
const std::set<std::string> kClassKeys = {"mass", "length", "max_speed", "max_accel", "max_decel",
                                          "emission_scale"};
const std::set<std::string> kDqnKeys = {"learning_rate", "gamma", "target_sync_interval", "epsilon_start",
                                        "epsilon_end", "epsilon_decay_horizon", "replay_capacity",
                                        "batch_size", "learn_start", "total_train_steps", "eval_frequency",
                                        "training_eval_episodes", "hidden_layers"};

std::size_t class_index_by_name(const SimConfig& sim, const std::string& name) {
    for (std::size_t i = 0; i < sim.classes.size(); ++i)
        if (sim.classes[i].name == name) return i;
    return sim.classes.size();
}

} // namespace

std::string scenario_name(Scenario s) { return s == Scenario::Homogeneous ? "homogeneous" : "heterogeneous"; }

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("'seeds' must not be empty");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw ConfigError("'seeds' contains a duplicate seed");
    std::set<std::string> names;
    for (const auto& m : methods) {
        parse_method(m, scenario, sim.g_min);
        if (!names.insert(m).second) throw ConfigError("'methods' lists '" + m + "' twice");
    }
    if (eval_episodes == 0) throw ConfigError("'eval_episodes' must be > 0");
    if (workers == 0) throw ConfigError("'workers' must be > 0");
    try {
        scenario_sim().validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("in section 'sim': ") + e.what());
    }
    try {
        dqn.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("in section 'dqn': ") + e.what());
    }
}

SimConfig ExperimentConfig::scenario_sim() const {
    SimConfig s = sim;
    if (scenario == Scenario::Heterogeneous) s.class_mixture = heterogeneous_config().class_mixture;
    return s;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": parse error: " + e.msg);
    }
    ExperimentConfig cfg;
    if (!root || root.IsNull()) {
        cfg.validate();
        return cfg;
    }
    Reader rd(source);
    rd.require_map(root, "<root>");
    rd.reject_unknown(root, "", kTopKeys);

    if (root["scenario"]) {
        std::string s;
        rd.get(root, "", "scenario", s);
        if (s == "homogeneous") cfg.scenario = Scenario::Homogeneous;
        else if (s == "heterogeneous") cfg.scenario = Scenario::Heterogeneous;
        else throw ConfigError(where(source, root["scenario"]) + ": 'scenario' must be homogeneous or heterogeneous");
    }
    rd.get(root, "", "methods", cfg.methods);
    rd.get(root, "", "seeds", cfg.seeds);
    rd.get(root, "", "eval_episodes", cfg.eval_episodes);
    rd.get(root, "", "workers", cfg.workers);
    rd.get(root, "", "trace", cfg.trace);
    rd.get(root, "", "output_dir", cfg.output_dir);

    if (const auto sim = root["sim"]) {
        rd.require_map(sim, "sim");
        rd.reject_unknown(sim, "sim", kSimKeys);
        auto& s = cfg.sim;
        rd.get(sim, "sim", "g_min", s.g_min);
        rd.get(sim, "sim", "g_max", s.g_max);
        if (s.g_min >= s.g_max)
            throw ConfigError(where(source, sim) + ": 'sim.g_min' (" + format_double(s.g_min) +
                              ") must be < 'sim.g_max' (" + format_double(s.g_max) + ")");
        rd.get(sim, "sim", "yellow", s.yellow);
        rd.get(sim, "sim", "control_interval", s.control_interval);
        rd.get(sim, "sim", "sim_step", s.sim_step);
        rd.get(sim, "sim", "lane_length", s.lane_length);
        rd.get(sim, "sim", "detection_zone", s.detection_zone);
        rd.get(sim, "sim", "halt_speed_threshold", s.halt_speed_threshold);
        rd.get(sim, "sim", "episode_duration", s.episode_duration);
        rd.get(sim, "sim", "arrival_rate_low", s.arrival_rate_low);
        rd.get(sim, "sim", "arrival_rate_high", s.arrival_rate_high);
        rd.get(sim, "sim", "min_gap", s.min_gap);
        rd.get(sim, "sim", "junction_traversal", s.junction_traversal);
        if (const auto classes = sim["vehicle_classes"]) {
            rd.require_map(classes, "sim.vehicle_classes");
            for (const auto& kv : classes) {
                const auto name = kv.first.as<std::string>();
                const auto idx = class_index_by_name(s, name);
                const std::string path = "sim.vehicle_classes." + name;
                if (idx == s.classes.size())
                    throw ConfigError(where(source, kv.first) + ": unknown vehicle class '" + path + "'");
                rd.require_map(kv.second, path);
                rd.reject_unknown(kv.second, path, kClassKeys);
                auto& c = s.classes[idx];
                rd.get(kv.second, path, "mass", c.mass);
                rd.get(kv.second, path, "length", c.length);
                rd.get(kv.second, path, "max_speed", c.max_speed);
                rd.get(kv.second, path, "max_accel", c.max_accel);
                rd.get(kv.second, path, "max_decel", c.max_decel);
                rd.get(kv.second, path, "emission_scale", c.emission_scale);
            }
        }
        if (const auto mix = sim["class_mixture"]) {
            if (cfg.scenario == Scenario::Heterogeneous)
                throw ConfigError(where(source, mix) +
                                  ": 'sim.class_mixture' is fixed by the heterogeneous scenario");
            rd.require_map(mix, "sim.class_mixture");
            std::vector<double> probs(s.classes.size(), 0.0);
            for (const auto& kv : mix) {
                const auto name = kv.first.as<std::string>();
                const auto idx = class_index_by_name(s, name);
                if (idx == s.classes.size())
                    throw ConfigError(where(source, kv.first) + ": unknown vehicle class 'sim.class_mixture." + name + "'");
                rd.get(mix, "sim.class_mixture", name.c_str(), probs[idx]);
            }
            s.class_mixture = probs;
        }
    }

    if (const auto dqn = root["dqn"]) {
        rd.require_map(dqn, "dqn");
        rd.reject_unknown(dqn, "dqn", kDqnKeys);
        auto& h = cfg.dqn;
        rd.get(dqn, "dqn", "learning_rate", h.learning_rate);
        rd.get(dqn, "dqn", "gamma", h.gamma);
        rd.get(dqn, "dqn", "target_sync_interval", h.target_sync_interval);
        rd.get(dqn, "dqn", "epsilon_start", h.epsilon_start);
        rd.get(dqn, "dqn", "epsilon_end", h.epsilon_end);
        rd.get(dqn, "dqn", "epsilon_decay_horizon", h.epsilon_decay_horizon);
        rd.get(dqn, "dqn", "replay_capacity", h.replay_capacity);
        rd.get(dqn, "dqn", "batch_size", h.batch_size);
        rd.get(dqn, "dqn", "learn_start", h.learn_start);
        rd.get(dqn, "dqn", "total_train_steps", h.total_train_steps);
        rd.get(dqn, "dqn", "eval_frequency", h.eval_frequency);
        rd.get(dqn, "dqn", "training_eval_episodes", h.training_eval_episodes);
        if (dqn["hidden_layers"]) {
            std::vector<std::size_t> hidden;
            rd.get(dqn, "dqn", "hidden_layers", hidden);
            h.architecture = {h.architecture.front()};
            h.architecture.insert(h.architecture.end(), hidden.begin(), hidden.end());
            h.architecture.push_back(2);
        }
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string config_to_json(const ExperimentConfig& c) {
    Json j;
    j["scenario"] = scenario_name(c.scenario);
    j["methods"] = c.methods;
    j["seeds"] = c.seeds;
    j["eval_episodes"] = c.eval_episodes;
    j["workers"] = c.workers;
    j["trace"] = c.trace;
    j["output_dir"] = c.output_dir;
    const auto& s = c.sim;
    Json sim;
    sim["g_min"] = s.g_min;
    sim["g_max"] = s.g_max;
    sim["yellow"] = s.yellow;
    sim["control_interval"] = s.control_interval;
    sim["sim_step"] = s.sim_step;
    sim["lane_length"] = s.lane_length;
    sim["detection_zone"] = s.detection_zone;
    sim["halt_speed_threshold"] = s.halt_speed_threshold;
    sim["episode_duration"] = s.episode_duration;
    sim["arrival_rate_low"] = s.arrival_rate_low;
    sim["arrival_rate_high"] = s.arrival_rate_high;
    sim["min_gap"] = s.min_gap;
    sim["junction_traversal"] = s.junction_traversal;
    Json classes = Json::object();
    Json mixture = Json::object();
    for (std::size_t i = 0; i < s.classes.size(); ++i) {
        const auto& v = s.classes[i];
        classes[v.name] = {{"mass", v.mass},           {"length", v.length},       {"max_speed", v.max_speed},
                           {"max_accel", v.max_accel}, {"max_decel", v.max_decel}, {"emission_scale", v.emission_scale}};
        mixture[v.name] = s.class_mixture[i];
    }
    sim["vehicle_classes"] = classes;
    if (c.scenario == Scenario::Homogeneous) sim["class_mixture"] = mixture;
    j["sim"] = sim;
    const auto& h = c.dqn;
    Json dqn;
    dqn["learning_rate"] = h.learning_rate;
    dqn["gamma"] = h.gamma;
    dqn["target_sync_interval"] = h.target_sync_interval;
    dqn["epsilon_start"] = h.epsilon_start;
    dqn["epsilon_end"] = h.epsilon_end;
    dqn["epsilon_decay_horizon"] = h.epsilon_decay_horizon;
    dqn["replay_capacity"] = h.replay_capacity;
    dqn["batch_size"] = h.batch_size;
    dqn["learn_start"] = h.learn_start;
    dqn["total_train_steps"] = h.total_train_steps;
    dqn["eval_frequency"] = h.eval_frequency;
    dqn["training_eval_episodes"] = h.training_eval_episodes;
    dqn["hidden_layers"] = std::vector<std::size_t>(h.architecture.begin() + 1, h.architecture.end() - 1);
    j["dqn"] = dqn;
    return j.dump(2);
}

ExperimentConfig config_from_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot read manifest " + manifest.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(manifest.string() + ": " + e.what());
    }
    if (!j.contains("config")) throw ConfigError(manifest.string() + ": no 'config' object");
    return parse_config(j["config"].dump(), manifest.string() + "#config");
}

} // namespace mbrf
