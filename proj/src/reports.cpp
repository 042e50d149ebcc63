#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "mbrf/csv.hpp"
#include "mbrf/experiment.hpp"

namespace mbrf {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

void check(std::ofstream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw IoError("write failed for " + path.string());
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

} // namespace

void ensure_writable_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
    const auto probe = dir / ".write_probe";
    {
        std::ofstream os(probe);
        if (!os) throw IoError("output directory is not writable: " + dir.string());
    }
    std::filesystem::remove(probe, ec);
}

void write_training_log(const std::vector<TrainingLogRow>& log, const std::filesystem::path& path) {
    auto os = open_out(path);
    os << "step,gradient_steps,epsilon,mean_td_loss,eval_return,eval_waiting,eval_queue,eval_throughput,"
          "eval_travel,eval_co2\n";
    for (const auto& r : log) {
        os << r.step << ',' << r.gradient_steps << ',' << format_double(r.epsilon) << ','
           << format_double(r.mean_td_loss) << ',' << format_double(r.eval.episode_return) << ','
           << format_double(r.eval.mean_waiting) << ',' << format_double(r.eval.mean_queue) << ','
           << format_double(r.eval.throughput) << ',' << format_double(r.eval.mean_travel_time) << ','
           << format_double(r.eval.co2_total) << '\n';
    }
    check(os, path);
}

void write_network(const QNetwork& net, const std::filesystem::path& path) {
    auto os = open_out(path);
    save_network(net, os);
    check(os, path);
}

QNetwork read_network(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read network file " + path.string());
    return load_network(is);
}

void emit_reports(const ExperimentResults& results, const std::filesystem::path& dir) {
    ensure_writable_dir(dir);
    const auto& cfg = results.config;

    {
        const auto path = dir / "summary.csv";
        auto os = open_out(path);
        os << "method";
        for (auto* m : kMetricNames) os << ',' << m << "_mean," << m << "_std";
        os << ",return_mean,return_std,best\n";
        for (const auto& row : results.table.rows) {
            os << row.method;
            for (std::size_t k = 0; k < 5; ++k)
                os << ',' << format_double(row.mean[k]) << ',' << format_double(row.stddev[k]);
            os << ',' << format_double(row.return_mean) << ',' << format_double(row.return_std) << ',';
            bool first = true;
            for (std::size_t k = 0; k < 5; ++k) {
                if (!row.best[k]) continue;
                os << (first ? "" : ";") << kMetricNames[k];
                first = false;
            }
            os << '\n';
        }
        check(os, path);
    }
    {
        const auto path = dir / "summary.md";
        auto os = open_out(path);
        os << "| Method | Waiting (s) | Queue | Throughput | Travel (s) | CO2 (g) |\n";
        os << "|---|---|---|---|---|---|\n";
        const int digits[5] = {1, 1, 0, 1, 1};
        for (const auto& row : results.table.rows) {
            os << "| " << row.method;
            for (std::size_t k = 0; k < 5; ++k) {
                const auto cell = fixed(row.mean[k], digits[k]) + " ± " + fixed(row.stddev[k], digits[k]);
                os << " | " << (row.best[k] ? "**" + cell + "**" : cell);
            }
            os << " |\n";
        }
        check(os, path);
    }
    {
        const auto path = dir / "episodes.csv";
        auto os = open_out(path);
        os << "method,seed,episode,demand_seed,waiting,queue,throughput,travel,co2,return\n";
        for (const auto& job : results.jobs) {
            for (std::size_t e = 0; e < job.episodes.size(); ++e) {
                const auto& ep = job.episodes[e];
                os << job.method << ',' << job.seed << ',' << e << ',' << ep.seed;
                for (double v : metric_values(ep)) os << ',' << format_double(v);
                os << ',' << format_double(ep.episode_return) << '\n';
            }
        }
        check(os, path);
    }
    for (const auto& job : results.jobs) {
        if (!job.training) continue;
        const auto run = dir / "runs" / run_dir_name(job.method, job.seed);
        ensure_writable_dir(run);
        write_training_log(job.training->log, run / "training_log.csv");
        write_network(job.training->network, run / "model.qnet");
    }
    {
        nlohmann::ordered_json manifest;
        manifest["format"] = "mbrf-manifest";
        manifest["version"] = 1;
        manifest["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
        auto jobs = nlohmann::ordered_json::array();
        for (const auto& job : results.jobs) {
            nlohmann::ordered_json j;
            j["method"] = job.method;
            j["seed"] = job.seed;
            j["agent_seed"] = agent_seed(job.method, job.seed);
            std::vector<std::uint64_t> demand;
            for (const auto& ep : job.episodes) demand.push_back(ep.seed);
            j["eval_demand_seeds"] = demand;
            if (job.training) j["run_dir"] = "runs/" + run_dir_name(job.method, job.seed);
            jobs.push_back(j);
        }
        manifest["jobs"] = jobs;
        const auto path = dir / "manifest.json";
        auto os = open_out(path);
        os << manifest.dump(2) << '\n';
        check(os, path);
    }
}

} // namespace mbrf
