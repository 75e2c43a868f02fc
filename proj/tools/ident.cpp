// ident: identification of linear time-varying operators probed with a
// weighted periodic Dirac train. Subcommands cover the measurement matrix
// (gabor), identifiability certification (certify), forward simulation
// (simulate), support recovery and reconstruction (recover), Monte-Carlo
// sweeps (experiment) and explicit non-identifiability witnesses
// (counterexample).
//
// Exit codes: 0 success, 1 I/O or internal failure, 2 precondition violation,
// 3 enumeration budget exceeded.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "zakident/zakident.hpp"

namespace {

using namespace zakident;

struct MatrixSource {
    std::string coeffs_path; // JSON file; empty means draw from seed
    std::uint64_t seed = 1;

    MeasurementMatrix make(const ModelParams& params, bool require_spark) const {
        if (!coeffs_path.empty()) {
            MeasurementMatrix M =
                build_matrix(coefficients_from_json(load_json_file(coeffs_path)), params);
            if (require_spark) {
                SparkOptions opts;
                opts.seed = splitmix64(seed);
                if (!spark_check(M, opts).ok)
                    throw precondition_error("loaded coefficients fail the spark check");
            }
            return M;
        }
        Rng rng = substream(seed, 0xC0EFC0EFC0EFC0EFULL);
        return draw_certified_matrix(params, rng);
    }
};

void add_params_options(CLI::App* cmd, ModelParams& params) {
    cmd->add_option("--L", params.L, "grid side (cells per axis)")->required();
    cmd->add_option("--T", params.T, "delay cell width in seconds");
    cmd->add_option("--Nt", params.Nt, "samples per cell along t");
    cmd->add_option("--Nf", params.Nf, "samples per cell along f");
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty())
        std::cout << j.dump(2) << '\n';
    else
        save_json_file(j, out_path);
}

json spark_report_json(const SparkReport& r) {
    json j{{"ok", r.ok},
           {"exhaustive", r.exhaustive},
           {"checked", r.checked},
           {"min_sigma_ratio", r.min_sigma}};
    j["witness"] = r.witness ? support_to_json(*r.witness) : json(nullptr);
    return j;
}

int cmd_gabor(const ModelParams& params, const MatrixSource& src, const std::string& spark_mode,
              std::uint64_t trials, const std::string& dump_path,
              const std::string& supports_path, const std::string& save_coeffs,
              const std::string& out_path) {
    MeasurementMatrix M = src.make(params, false);

    SparkOptions opts;
    opts.seed = splitmix64(src.seed);
    opts.trials = trials;
    if (spark_mode == "exhaustive") opts.mode = SparkOptions::Mode::Exhaustive;
    if (spark_mode == "randomized") opts.mode = SparkOptions::Mode::Randomized;
    const SparkReport report = spark_check(M, opts);

    json out{{"L", params.L}, {"T", params.T}, {"spark", spark_report_json(report)}};

    if (!supports_path.empty()) {
        json bounds = json::array();
        const json list = load_json_file(supports_path);
        for (const auto& e : list) {
            const SupportSet support = support_from_json(e);
            const StabilityBounds b = stability_bounds(M, support);
            bounds.push_back({{"support", support_to_json(support)},
                              {"alpha", b.alpha},
                              {"beta", b.beta},
                              {"ratio", b.alpha > 0 ? b.beta / b.alpha
                                                    : std::numeric_limits<double>::infinity()}});
        }
        out["bounds"] = std::move(bounds);
    }
    if (!dump_path.empty()) {
        std::ostringstream os;
        matrix_to_csv(M.A, os);
        save_text_file(os.str(), dump_path);
        out["dump"] = dump_path;
    }
    if (!save_coeffs.empty()) save_json_file(coefficients_to_json(M.c), save_coeffs);
    emit(out, out_path);
    return report.ok ? 0 : 2;
}

int cmd_certify(const ModelParams& params, const MatrixSource& src, const std::string& delta_str,
                int kmax_opt, const std::string& out_path, const std::string& profile_path) {
    MeasurementMatrix M = src.make(params, false);
    int kmax = kmax_opt;
    if (!delta_str.empty()) kmax = Rational::parse(delta_str).floor_times(params.L);
    if (kmax < 1) throw precondition_error("certify: need --delta or --kmax with floor(delta*L) >= 1");
    const Certificate cert = certify(M, kmax);
    if (!profile_path.empty()) {
        std::ostringstream os;
        profile_to_csv(condition_profile(M, kmax), os);
        save_text_file(os.str(), profile_path);
    }
    emit(certificate_to_json(cert), out_path);
    std::cerr << verdict_name(cert.verdict) << '\n';
    return 0;
}

int cmd_simulate(const std::string& sf_path, const MatrixSource& src, double snr_db,
                 std::uint64_t noise_seed, const std::string& out_path,
                 const std::string& mirror_path) {
    const SpreadingFunction sf = spreading_from_json(load_json_file(sf_path));
    const MeasurementMatrix M = src.make(sf.params, false);
    ZakField zf = simulate_response(sf, M);
    if (!std::isinf(snr_db)) {
        Rng rng = substream(noise_seed, 0x4E01ULL);
        zf = add_noise(zf, snr_db, rng);
    }
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw io_error("cannot open for writing: " + out_path);
    zak_write_binary(zf, os);
    if (!mirror_path.empty()) save_json_file(zak_to_json(zf), mirror_path);
    return 0;
}

int cmd_recover(const std::string& field_path, const MatrixSource& src,
                const std::string& method_name_str, int kmax, const std::string& truth_path,
                const std::string& out_path, const std::string& recon_path, double eps_rank,
                double eps_fit, double eps_music) {
    std::ifstream is(field_path, std::ios::binary);
    if (!is) throw io_error("cannot open field: " + field_path);
    const ZakField zf = zak_read_binary(is);
    const MeasurementMatrix M = src.make(zf.params, true);

    Method method = Method::MmvExhaustive;
    if (method_name_str == "SOMP") method = Method::Somp;
    else if (method_name_str == "MUSIC") method = Method::Music;
    else if (method_name_str != "MMV_EXHAUSTIVE")
        throw precondition_error("unknown method '" + method_name_str + "'");

    RecoveryOptions opts;
    opts.kmax = kmax;
    opts.eps_rank = eps_rank;
    opts.eps_fit = eps_fit;
    opts.eps_music = eps_music;

    SpreadingFunction truth;
    const SpreadingFunction* truth_ptr = nullptr;
    if (!truth_path.empty()) {
        truth = spreading_from_json(load_json_file(truth_path));
        truth_ptr = &truth;
    }

    RecoveryReport report;
    try {
        report = run_recovery(zf, M, method, opts, truth_ptr);
    } catch (const budget_error& e) {
        std::cerr << "warning: " << e.what() << "; falling back to SOMP\n";
        report = run_recovery(zf, M, Method::Somp, opts, truth_ptr);
    }
    if (!recon_path.empty()) save_json_file(spreading_to_json(report.reconstruction), recon_path);
    emit(report_to_json(report), out_path);
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& output_override) {
    ExperimentConfig cfg = config_from_file(config_path);
    if (!output_override.empty()) cfg.output_csv = output_override;
    const ExperimentResults results = run_experiment(cfg);
    if (cfg.output_csv.empty()) std::cout << experiment_csv(results.rows);
    for (const Rational& d : cfg.deltas) {
        for (Method m : {Method::MmvExhaustive, Method::Somp, Method::Music}) {
            bool any = false;
            for (const TrialRow& r : results.rows)
                if (r.method == m && r.delta.num == d.num && r.delta.den == d.den) any = true;
            if (any)
                std::cerr << "delta " << d.str() << ' ' << method_name(m)
                          << " support_exact rate = " << results.success_rate(d, m) << '\n';
        }
    }
    return 0;
}

int cmd_counterexample(const ModelParams& params, const MatrixSource& src,
                       const std::string& gamma1_str, const std::string& gamma2_str,
                       const std::string& out1, const std::string& out2) {
    const MeasurementMatrix M = src.make(params, false);
    const SupportSet g1 = support_from_json(json::parse(gamma1_str));
    const SupportSet g2 = support_from_json(json::parse(gamma2_str));
    const auto [h1, h2] = counterexample(M, g1, g2);
    save_json_file(spreading_to_json(h1), out1);
    save_json_file(spreading_to_json(h2), out2);
    const ZakField z1 = simulate_response(h1, M);
    const ZakField z2 = simulate_response(h2, M);
    const double diff_norm = hs_norm(linear_combination(1.0, h1, -1.0, h2));
    ZakField dz = z1;
    dz.z -= z2.z;
    std::cerr << "operator difference norm = " << diff_norm
              << ", output difference norm = " << weighted_norm(dz) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"identification of linear time-varying operators from Dirac-train probing"};
    app.require_subcommand(1);

    // gabor
    auto* gabor = app.add_subcommand("gabor", "build the measurement matrix, check spark, dump");
    ModelParams gabor_params{6, 1.0, 1, 1};
    MatrixSource gabor_src;
    std::string gabor_spark = "auto", gabor_dump, gabor_supports, gabor_save_coeffs, gabor_out;
    std::uint64_t gabor_trials = kSparkRandomizedTrials;
    add_params_options(gabor, gabor_params);
    gabor->add_option("--seed", gabor_src.seed, "seed for drawing coefficients");
    gabor->add_option("--coeffs", gabor_src.coeffs_path, "coefficient JSON file");
    gabor->add_option("--spark", gabor_spark, "spark mode: auto|exhaustive|randomized")
        ->check(CLI::IsMember({"auto", "exhaustive", "randomized"}));
    gabor->add_option("--trials", gabor_trials, "randomized spark trials");
    gabor->add_option("--dump", gabor_dump, "write the matrix as CSV (re/im interleaved)");
    gabor->add_option("--supports", gabor_supports, "JSON list of supports for stability bounds");
    gabor->add_option("--save-coeffs", gabor_save_coeffs, "write the coefficients used");
    gabor->add_option("--out", gabor_out, "report JSON path (default stdout)");

    // certify
    auto* certify_cmd = app.add_subcommand("certify", "identifiability certificate for area delta");
    ModelParams cert_params{6, 1.0, 1, 1};
    MatrixSource cert_src;
    std::string cert_delta, cert_out, cert_profile;
    int cert_kmax = 0;
    add_params_options(certify_cmd, cert_params);
    certify_cmd->add_option("--seed", cert_src.seed, "seed for drawing coefficients");
    certify_cmd->add_option("--coeffs", cert_src.coeffs_path, "coefficient JSON file");
    certify_cmd->add_option("--delta", cert_delta, "target support area as a rational, e.g. 1/2");
    certify_cmd->add_option("--kmax", cert_kmax, "target support size (alternative to --delta)");
    certify_cmd->add_option("--out", cert_out, "certificate JSON path (default stdout)");
    certify_cmd->add_option("--profile", cert_profile,
                            "also write the worst condition number per support size (CSV)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "spreading function JSON -> Zak field file");
    MatrixSource sim_src;
    std::string sim_sf, sim_out, sim_mirror;
    double sim_snr = std::numeric_limits<double>::infinity();
    std::uint64_t sim_noise_seed = 1;
    sim->add_option("--sf", sim_sf, "spreading function JSON")->required();
    sim->add_option("--seed", sim_src.seed, "seed for drawing coefficients");
    sim->add_option("--coeffs", sim_src.coeffs_path, "coefficient JSON file");
    sim->add_option("--snr-db", sim_snr, "add noise at this SNR (default: none)");
    sim->add_option("--noise-seed", sim_noise_seed, "noise stream seed");
    sim->add_option("--out", sim_out, "output Zak field file")->required();
    sim->add_option("--json-mirror", sim_mirror, "also write a JSON mirror of the field");

    // recover
    auto* rec = app.add_subcommand("recover", "Zak field file -> recovery report");
    MatrixSource rec_src;
    std::string rec_field, rec_method = "MMV_EXHAUSTIVE", rec_truth, rec_out, rec_recon;
    int rec_kmax = -1;
    double rec_eps_rank = kEpsRank, rec_eps_fit = kEpsFit, rec_eps_music = kEpsMusic;
    rec->add_option("--field", rec_field, "Zak field file")->required();
    rec->add_option("--seed", rec_src.seed, "seed for drawing coefficients");
    rec->add_option("--coeffs", rec_src.coeffs_path, "coefficient JSON file");
    rec->add_option("--method", rec_method, "MMV_EXHAUSTIVE|SOMP|MUSIC");
    rec->add_option("--kmax", rec_kmax, "largest support size searched (default floor(L/2))");
    rec->add_option("--truth", rec_truth, "ground-truth spreading function JSON");
    rec->add_option("--out", rec_out, "report JSON path (default stdout)");
    rec->add_option("--reconstruction", rec_recon, "write the reconstructed spreading function");
    rec->add_option("--eps-rank", rec_eps_rank, "relative eigenvalue cut (raise for noisy data)");
    rec->add_option("--eps-fit", rec_eps_fit, "relative residual accepted as a fit");
    rec->add_option("--eps-music", rec_eps_music, "null-space score accepted as in-support");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Monte-Carlo sweep from a config file");
    std::string exp_config, exp_output;
    exp->add_option("--config", exp_config, "TOML (or JSON) configuration")->required();
    exp->add_option("--output", exp_output, "override the CSV output path");

    // counterexample
    auto* ce = app.add_subcommand("counterexample",
                                  "two operators the probe cannot distinguish");
    ModelParams ce_params{6, 1.0, 4, 4};
    MatrixSource ce_src;
    std::string ce_g1, ce_g2, ce_out1, ce_out2;
    add_params_options(ce, ce_params);
    ce->add_option("--seed", ce_src.seed, "seed for drawing coefficients");
    ce->add_option("--coeffs", ce_src.coeffs_path, "coefficient JSON file");
    ce->add_option("--gamma1", ce_g1, "first support as JSON, e.g. [[0,0],[1,2]]")->required();
    ce->add_option("--gamma2", ce_g2, "second support as JSON (disjoint)")->required();
    ce->add_option("--out1", ce_out1, "output JSON for the first operator")->required();
    ce->add_option("--out2", ce_out2, "output JSON for the second operator")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gabor->parsed())
            return cmd_gabor(gabor_params, gabor_src, gabor_spark, gabor_trials, gabor_dump,
                             gabor_supports, gabor_save_coeffs, gabor_out);
        if (certify_cmd->parsed())
            return cmd_certify(cert_params, cert_src, cert_delta, cert_kmax, cert_out,
                               cert_profile);
        if (sim->parsed())
            return cmd_simulate(sim_sf, sim_src, sim_snr, sim_noise_seed, sim_out, sim_mirror);
        if (rec->parsed())
            return cmd_recover(rec_field, rec_src, rec_method, rec_kmax, rec_truth, rec_out,
                               rec_recon, rec_eps_rank, rec_eps_fit, rec_eps_music);
        if (exp->parsed()) return cmd_experiment(exp_config, exp_output);
        if (ce->parsed())
            return cmd_counterexample(ce_params, ce_src, ce_g1, ce_g2, ce_out1, ce_out2);
    } catch (const zakident::precondition_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const zakident::budget_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
