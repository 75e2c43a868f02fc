#pragma once

// Monte-Carlo identification sweeps: for each target area delta and trial,
// draw a random support and spreading function, simulate the measurement,
// run the selected recovery method(s) and emit one CSV row per run. All
// randomness derives from per-trial substreams of a single seed, so results
// do not depend on worker scheduling.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "zakident/errors.hpp"
#include "zakident/gabor.hpp"
#include "zakident/model.hpp"
#include "zakident/recover.hpp"
#include "zakident/serialize.hpp"
#include "zakident/simulate.hpp"
#include "zakident/toml_lite.hpp"

namespace zakident {

struct Rational {
    long long num = 1;
    long long den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
    int floor_times(int L) const {
        return static_cast<int>((num * static_cast<long long>(L)) / den);
    }

    static Rational parse(const std::string& s) {
        const auto slash = s.find('/');
        try {
            if (slash == std::string::npos) {
                std::size_t used = 0;
                const long long n = std::stoll(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return Rational{n, 1};
            }
            std::size_t used_n = 0, used_d = 0;
            const long long n = std::stoll(s.substr(0, slash), &used_n);
            const std::string den_str = s.substr(slash + 1);
            const long long d = std::stoll(den_str, &used_d);
            if (used_n != slash || used_d != den_str.size() || d <= 0)
                throw std::invalid_argument(s);
            return Rational{n, d};
        } catch (const std::exception&) {
            throw precondition_error("cannot parse rational '" + s + "' (expected k/L)");
        }
    }
};

enum class ExperimentMethod { MmvExhaustive, Somp, Music, All };

inline ExperimentMethod experiment_method_from(const std::string& name) {
    if (name == "MMV_EXHAUSTIVE") return ExperimentMethod::MmvExhaustive;
    if (name == "SOMP") return ExperimentMethod::Somp;
    if (name == "MUSIC") return ExperimentMethod::Music;
    if (name == "ALL") return ExperimentMethod::All;
    throw precondition_error("unknown method '" + name +
                             "' (expected MMV_EXHAUSTIVE, SOMP, MUSIC or ALL)");
}

struct ExperimentConfig {
    ModelParams params;
    std::uint64_t seed = 1;
    int trials = 200;
    std::vector<Rational> deltas;
    ExperimentMethod method = ExperimentMethod::MmvExhaustive;
    double snr_db = std::numeric_limits<double>::infinity();
    std::string coefficients = "draw"; // "draw" or a JSON file path
    std::string output_csv;            // empty: do not write a file
    std::string coefficients_out;      // optional dump of the coefficients used
    double eps_rank = kEpsRank;        // raise for noisy data
    double eps_fit = kEpsFit;
    int max_draw_attempts = 16;

    void validate() const {
        params.validate();
        if (trials < 1) throw precondition_error("experiment: trials must be >= 1");
        if (deltas.empty()) throw precondition_error("experiment: need at least one delta");
        for (const Rational& d : deltas) {
            if (!(d.value() > 0.0) || d.value() > 1.0)
                throw precondition_error("experiment: delta " + d.str() + " outside (0,1]");
            if (d.floor_times(params.L) < 1)
                throw precondition_error("experiment: floor(delta*L) must be >= 1 for delta " +
                                         d.str());
        }
    }
};

inline ExperimentConfig config_from_toml_table(const toml_lite::Table& t) {
    ExperimentConfig cfg;
    auto get = [&](const char* key) -> const toml_lite::Value* {
        auto it = t.find(key);
        return it == t.end() ? nullptr : &it->second;
    };
    if (auto* v = get("L")) cfg.params.L = static_cast<int>(v->as_int());
    if (auto* v = get("T")) cfg.params.T = v->as_double();
    if (auto* v = get("Nt")) cfg.params.Nt = static_cast<int>(v->as_int());
    if (auto* v = get("Nf")) cfg.params.Nf = static_cast<int>(v->as_int());
    if (auto* v = get("seed")) cfg.seed = static_cast<std::uint64_t>(v->as_int());
    if (auto* v = get("trials")) cfg.trials = static_cast<int>(v->as_int());
    if (auto* v = get("deltas")) {
        for (const auto& e : v->as_array()) cfg.deltas.push_back(Rational::parse(e.as_string()));
    }
    if (auto* v = get("method")) cfg.method = experiment_method_from(v->as_string());
    if (auto* v = get("snr_db")) cfg.snr_db = v->as_double();
    if (auto* v = get("coefficients")) cfg.coefficients = v->as_string();
    if (auto* v = get("output")) cfg.output_csv = v->as_string();
    if (auto* v = get("coefficients_out")) cfg.coefficients_out = v->as_string();
    if (auto* v = get("eps_rank")) cfg.eps_rank = v->as_double();
    if (auto* v = get("eps_fit")) cfg.eps_fit = v->as_double();
    return cfg;
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    if (j.contains("L")) cfg.params.L = j.at("L").get<int>();
    if (j.contains("T")) cfg.params.T = j.at("T").get<double>();
    if (j.contains("Nt")) cfg.params.Nt = j.at("Nt").get<int>();
    if (j.contains("Nf")) cfg.params.Nf = j.at("Nf").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (j.contains("deltas"))
        for (const auto& e : j.at("deltas")) cfg.deltas.push_back(Rational::parse(e.get<std::string>()));
    if (j.contains("method")) cfg.method = experiment_method_from(j.at("method").get<std::string>());
    if (j.contains("snr_db")) {
        const auto& v = j.at("snr_db");
        cfg.snr_db = v.is_string() ? std::numeric_limits<double>::infinity() : v.get<double>();
    }
    if (j.contains("coefficients")) cfg.coefficients = j.at("coefficients").get<std::string>();
    if (j.contains("output")) cfg.output_csv = j.at("output").get<std::string>();
    if (j.contains("coefficients_out"))
        cfg.coefficients_out = j.at("coefficients_out").get<std::string>();
    if (j.contains("eps_rank")) cfg.eps_rank = j.at("eps_rank").get<double>();
    if (j.contains("eps_fit")) cfg.eps_fit = j.at("eps_fit").get<double>();
    return cfg;
}

// TOML config with a JSON fallback: content starting with '{' is JSON.
inline ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open config: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{')
        return config_from_json(json::parse(text));
    return config_from_toml_table(toml_lite::parse(text));
}

struct TrialRow {
    int trial = 0;
    Rational delta;
    Method method = Method::MmvExhaustive;
    std::size_t support_size = 0;
    bool support_exact = false;
    double reconstruction_rel_err = 0.0;
    double residual = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double elapsed_ms = 0.0;
};

struct ExperimentResults {
    MeasurementMatrix matrix;
    std::vector<TrialRow> rows; // ordered by (delta, trial, method)

    double success_rate(const Rational& delta, Method method) const {
        std::size_t total = 0, good = 0;
        for (const TrialRow& r : rows) {
            if (r.method != method || r.delta.num != delta.num || r.delta.den != delta.den)
                continue;
            ++total;
            if (r.support_exact) ++good;
        }
        return total == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(total);
    }
};

inline std::string experiment_csv(const std::vector<TrialRow>& rows) {
    std::ostringstream os;
    os << "trial,delta,method,support_size,support_exact,reconstruction_rel_err,residual,alpha,"
          "beta,elapsed_ms\n";
    os << std::setprecision(17);
    for (const TrialRow& r : rows) {
        os << r.trial << ',' << r.delta.str() << ',' << method_name(r.method) << ','
           << r.support_size << ',' << (r.support_exact ? 1 : 0) << ','
           << r.reconstruction_rel_err << ',' << r.residual << ',' << r.alpha << ',' << r.beta
           << ',' << r.elapsed_ms << '\n';
    }
    return os.str();
}

namespace detail {

inline int worker_count(std::size_t tasks) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("IDENT_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

// substream tag for the coefficient draw, distinct from every trial stream
inline constexpr std::uint64_t kCoefficientStreamTag = 0xC0EFC0EFC0EFC0EFULL;

} // namespace detail

inline ExperimentResults run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    MeasurementMatrix M = [&] {
        if (cfg.coefficients == "draw") {
            Rng rng = substream(cfg.seed, detail::kCoefficientStreamTag);
            return draw_certified_matrix(cfg.params, rng, cfg.max_draw_attempts);
        }
        const CoefficientVector c = coefficients_from_json(load_json_file(cfg.coefficients));
        MeasurementMatrix m = build_matrix(c, cfg.params);
        SparkOptions opts;
        opts.seed = splitmix64(cfg.seed ^ detail::kCoefficientStreamTag);
        if (!spark_check(m, opts).ok)
            throw precondition_error("experiment: loaded coefficients fail the spark check");
        return m;
    }();
    if (!cfg.coefficients_out.empty())
        save_json_file(coefficients_to_json(M.c), cfg.coefficients_out);

    std::vector<Method> methods;
    switch (cfg.method) {
        case ExperimentMethod::MmvExhaustive: methods = {Method::MmvExhaustive}; break;
        case ExperimentMethod::Somp: methods = {Method::Somp}; break;
        case ExperimentMethod::Music: methods = {Method::Music}; break;
        case ExperimentMethod::All:
            methods = {Method::MmvExhaustive, Method::Somp, Method::Music};
            break;
    }

    const std::size_t tasks = cfg.deltas.size() * static_cast<std::size_t>(cfg.trials);
    std::vector<std::vector<TrialRow>> buckets(tasks);
    std::atomic<std::size_t> next{0};
    std::mutex warn_mutex;
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        while (true) {
            const std::size_t task = next.fetch_add(1);
            if (task >= tasks) return;
            const std::size_t d = task / static_cast<std::size_t>(cfg.trials);
            const int trial = static_cast<int>(task % static_cast<std::size_t>(cfg.trials));
            const Rational delta = cfg.deltas[d];
            const int kmax = delta.floor_times(cfg.params.L);
            try {
                Rng rng = substream(cfg.seed, d + 1, static_cast<std::uint64_t>(trial) + 1);
                const SupportSet support = random_support(cfg.params, kmax, rng);
                const SpreadingFunction sf = random_spreading(cfg.params, support, rng).sf;
                ZakField zf = simulate_response(sf, M);
                if (!std::isinf(cfg.snr_db)) zf = add_noise(zf, cfg.snr_db, rng);

                RecoveryOptions opts;
                opts.kmax = kmax;
                opts.eps_rank = cfg.eps_rank;
                opts.eps_fit = cfg.eps_fit;
                for (Method method : methods) {
                    TrialRow row;
                    row.trial = trial;
                    row.delta = delta;
                    try {
                        RecoveryReport rep = run_recovery(zf, M, method, opts, &sf);
                        row.method = rep.method;
                        row.support_size = rep.support_estimate.size();
                        row.support_exact = rep.support_exact.value_or(false);
                        row.reconstruction_rel_err = rep.reconstruction_rel_err.value_or(0.0);
                        row.residual = rep.residual;
                        row.alpha = rep.alpha;
                        row.beta = rep.beta;
                        row.elapsed_ms = rep.elapsed_ms;
                    } catch (const budget_error& e) {
                        // exhaustive search too large for this grid: greedy fallback
                        {
                            std::lock_guard<std::mutex> lock(warn_mutex);
                            std::cerr << "warning: " << e.what() << "; falling back to SOMP\n";
                        }
                        RecoveryReport rep = run_recovery(zf, M, Method::Somp, opts, &sf);
                        row.method = rep.method;
                        row.support_size = rep.support_estimate.size();
                        row.support_exact = rep.support_exact.value_or(false);
                        row.reconstruction_rel_err = rep.reconstruction_rel_err.value_or(0.0);
                        row.residual = rep.residual;
                        row.alpha = rep.alpha;
                        row.beta = rep.beta;
                        row.elapsed_ms = rep.elapsed_ms;
                    } catch (const precondition_error& e) {
                        // e.g. MUSIC with a full-rank correlation matrix
                        {
                            std::lock_guard<std::mutex> lock(warn_mutex);
                            std::cerr << "warning: trial " << trial << " delta " << delta.str()
                                      << ": " << e.what() << '\n';
                        }
                        row.method = method;
                        row.support_size = 0;
                        row.support_exact = false;
                        row.reconstruction_rel_err = 1.0;
                        row.residual = 1.0;
                    }
                    buckets[task].push_back(row);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int workers = detail::worker_count(tasks);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentResults results;
    results.matrix = std::move(M);
    results.rows.reserve(tasks * methods.size());
    for (const auto& bucket : buckets)
        results.rows.insert(results.rows.end(), bucket.begin(), bucket.end());

    if (!cfg.output_csv.empty()) save_text_file(experiment_csv(results.rows), cfg.output_csv);
    return results;
}

} // namespace zakident
