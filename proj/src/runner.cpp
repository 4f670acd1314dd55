#include "entconc/runner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "entconc/optics.hpp"

namespace entconc {

std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

// Reference measured S values reproduced by the table1 command, one per
// window count {1, 2, 4}.
struct TableRow {
    int windows;
    double s_reference;
};
constexpr std::array<TableRow, 3> kTableRows{{{1, 2.58}, {2, 2.43}, {4, 2.42}}};

// Seed-stream tags, one per sampled block of a run.
enum : std::uint64_t {
    kStreamPre1 = 0x11,
    kStreamPre2 = 0x12,
    kStreamPost = 0x13,
    kStreamChsh = 0x14,
    kStreamScan = 0x15,
};

struct PreparedExperiment {
    PreparedPair p12;
    PreparedPair p34;
    PairSpec effective1;  // normalized coefficients after the pair's element
    PairSpec effective2;
    double trans1;  // element transmission probabilities
    double trans2;
};

cdouble phase_factor(double degrees) {
    return std::exp(cdouble(0.0, degrees * M_PI / 180.0));
}

// A pair starts as alpha0|HV> + beta0|VH> (defaults to the maximally
// entangled state), picks up the compensator phase on its V-first component,
// then runs through the window stack on its first photon.
PreparedPair make_pair(const PairConfig& pc, double t_h, double t_v,
                       const ModeId& first, const ModeId& second) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    cdouble alpha = pc.alpha.value_or(cdouble(inv_sqrt2, 0.0));
    cdouble beta = pc.beta.value_or(cdouble(inv_sqrt2, 0.0));
    beta *= phase_factor(pc.phase_deg);
    PreparedPair out{prepare_pair(PairSpec{alpha, beta, first, second}),
                     Eigen::Matrix2cd::Identity()};
    if (pc.windows > 0) {
        out.element = brewster_window(t_h, t_v, pc.windows).jones.m;
    }
    return out;
}

PairSpec effective_spec(const PreparedPair& p, double& transmission) {
    const cdouble a0 = p.pair.state.amplitudes()[1];  // |H first, V second> slot
    const cdouble b0 = p.pair.state.amplitudes()[2];
    const cdouble a = a0 * p.element(0, 0);
    const cdouble b = b0 * p.element(1, 1);
    transmission = std::norm(a) + std::norm(b);
    const double scale = std::sqrt(transmission);
    return PairSpec{a / scale, b / scale, p.pair.first, p.pair.second};
}

PreparedExperiment prepare(const ExperimentConfig& cfg) {
    PreparedExperiment e{
        make_pair(cfg.pair1, cfg.t_h, cfg.t_v, mode("1"), mode("2")),
        make_pair(cfg.pair2, cfg.t_h, cfg.t_v, mode("3"), mode("4")),
        {}, {}, 0.0, 0.0};
    if (cfg.protocol == Command::RepeaterFiltered) {
        // Equalize each pair with the local filter computed from its
        // post-window coefficients; the stacked elements stay diagonal.
        double t1 = 0.0, t2 = 0.0;
        const LocalFilter f1 = local_filter(effective_spec(e.p12, t1));
        const LocalFilter f2 = local_filter(effective_spec(e.p34, t2));
        e.p12.element = f1.filter.jones.m * e.p12.element;
        e.p34.element = f2.filter.jones.m * e.p34.element;
    }
    e.effective1 = effective_spec(e.p12, e.trans1);
    e.effective2 = effective_spec(e.p34, e.trans2);
    return e;
}

Scheme scheme_for(Command c) {
    switch (c) {
        case Command::Repeater:
        case Command::RepeaterFiltered:
            return Scheme::Repeater;
        default:
            // chsh, delay-scan and table1 analyze the concentration output
            return Scheme::Concentrate;
    }
}

// Normalized H/V populations of a two-mode density operator as a one-setting
// probability table (outcome order hh, hv, vh, vv).
ProbabilityTable hv_table(const DensityOperator& rho) {
    const HvFractions f = hv_fractions(rho);
    return {SettingProbs{0.0, 0.0, {f.p_hh, f.p_hv, f.p_vh, f.p_vv}}};
}

CountTable count_block(const ProbabilityTable& probs, const ExperimentConfig& cfg,
                       std::uint64_t stream) {
    SamplingConfig sc = cfg.sampling;
    sc.seed = derive_seed(cfg.sampling.seed, stream);
    return cfg.ideal ? expected_counts(probs, sc, cfg.noise.background_eps)
                     : sample_counts(probs, sc, cfg.noise.background_eps);
}

void emit_counts(std::ostringstream& csv, const std::string& setting_id,
                 const ProbabilityTable& probs, const CountTable& counts,
                 const std::array<const char*, 4>& outcome_names) {
    for (size_t i = 0; i < probs.size(); ++i) {
        for (int o = 0; o < 4; ++o) {
            csv << setting_id << (probs.size() > 1 ? std::to_string(i) : "") << ","
                << csv_num(probs[i].theta1 * kRadToDeg) << ","
                << csv_num(probs[i].theta2 * kRadToDeg) << "," << outcome_names[o]
                << "," << csv_num(probs[i].p[o]) << ","
                << csv_num(counts.settings[i].counts[o]) << "\n";
        }
    }
}

const std::array<const char*, 4> kHvNames{"hh", "hv", "vh", "vv"};
const std::array<const char*, 4> kPmNames{"pp", "pm", "mp", "mm"};
const std::array<const char*, 4> kChshIds{"ab", "abp", "apb", "apbp"};

std::string summary_csv(double S, double sigma, double visibility, double fidelity,
                        double success_prob) {
    std::ostringstream out;
    out << "S,sigma,visibility,fidelity,success_prob\n";
    out << csv_num(S) << "," << csv_num(sigma) << "," << csv_num(visibility) << ","
        << csv_num(fidelity) << "," << csv_num(success_prob) << "\n";
    return out.str();
}

struct ChainReport {
    NoisyChain chain;
    DensityOperator output;       // conditional on the selected branch
    double success_abs;           // conditioning probability, absolute
    double pbs_abs;
    std::array<double, 4> branch_abs;  // pp, pm, mp, mm
};

ChainReport analyze_chain(const PreparedExperiment& e, const ExperimentConfig& cfg) {
    NoisyChain chain = build_chain(scheme_for(cfg.protocol), e.p12, e.p34);
    const double gamma = cfg.noise.overlap_gamma;
    std::array<double, 4> branch_abs{};
    for (size_t i = 0; i < kAllBranches.size(); ++i) {
        branch_abs[i] = branch_probability(chain, kAllBranches[i], gamma);
    }
    DensityOperator out = conditional_output(chain, cfg.branch, gamma);
    const double success = branch_probability(chain, cfg.branch, gamma);
    const double pbs = chain.branches.prob;
    return ChainReport{std::move(chain), std::move(out), success, pbs, branch_abs};
}

void describe_pairs(std::ostringstream& rep, const PreparedExperiment& e) {
    const auto ratio = [](const PairSpec& s) {
        const double b2 = std::norm(s.beta);
        return b2 > 0 ? std::norm(s.alpha) / b2
                      : std::numeric_limits<double>::infinity();
    };
    rep << "# pair1_transmission = " << csv_num(e.trans1) << "\n";
    rep << "# pair2_transmission = " << csv_num(e.trans2) << "\n";
    rep << "# pre_ratio = " << csv_num(ratio(e.effective1)) << "\n";
    rep << "# pre_ratio2 = " << csv_num(ratio(e.effective2)) << "\n";
}

void describe_chain(std::ostringstream& rep, const ChainReport& cr,
                    const ExperimentConfig& cfg) {
    rep << "# pbs_prob_abs = " << csv_num(cr.pbs_abs) << "\n";
    rep << "# pbs_prob_conditional = "
        << csv_num(cr.pbs_abs / cr.chain.input_norm_sq) << "\n";
    for (size_t i = 0; i < kAllBranches.size(); ++i) {
        rep << "# branch_prob_abs_" << to_string(kAllBranches[i]) << " = "
            << csv_num(cr.branch_abs[i]) << "\n";
    }
    rep << "# selected_branch = " << to_string(cfg.branch) << "\n";
    rep << "# success_prob_abs = " << csv_num(cr.success_abs) << "\n";
}

RunArtifacts run_protocol_command(const ExperimentConfig& cfg) {
    const PreparedExperiment e = prepare(cfg);
    ChainReport cr = analyze_chain(e, cfg);

    const double vis = pm_visibility(cr.output);
    const PureState target = psi_plus(cr.chain.out_first, cr.chain.out_second);
    const double fid = fidelity_to_pure(cr.output, target);
    const double s_vis = s_from_visibility(vis);

    // Analyzer counts: the H/V populations before and after the protocol plus
    // the four CHSH settings of the surviving photons.
    std::ostringstream csv;
    csv << "setting_id,theta1_deg,theta2_deg,outcome,probability,counts\n";
    const ProbabilityTable pre1 = hv_table(to_density(normalize(apply_single_mode(
        e.p12.pair.state, e.p12.pair.first, e.p12.element)).state));
    const ProbabilityTable pre2 = hv_table(to_density(normalize(apply_single_mode(
        e.p34.pair.state, e.p34.pair.first, e.p34.element)).state));
    const ProbabilityTable post = hv_table(cr.output);
    emit_counts(csv, "pre1_hv", pre1, count_block(pre1, cfg, kStreamPre1), kHvNames);
    emit_counts(csv, "pre2_hv", pre2, count_block(pre2, cfg, kStreamPre2), kHvNames);
    emit_counts(csv, "post_hv", post, count_block(post, cfg, kStreamPost), kHvNames);

    const ProbabilityTable chsh = chsh_probability_table(
        cr.chain, cfg.branch, cfg.chsh_settings(), cfg.noise.overlap_gamma);
    const CountTable chsh_counts = count_block(chsh, cfg, kStreamChsh);
    for (size_t i = 0; i < chsh.size(); ++i) {
        ProbabilityTable one{chsh[i]};
        CountTable cone{{chsh_counts.settings[i]},
                        chsh_counts.rate_hz,
                        chsh_counts.time_s,
                        chsh_counts.accounting,
                        chsh_counts.seed,
                        chsh_counts.sampled};
        emit_counts(csv, kChshIds[i], one, cone, kPmNames);
    }
    const SEstimate est = estimate_S(chsh_counts);

    std::ostringstream rep;
    rep << write_config(cfg);
    rep << "# derived:\n";
    describe_pairs(rep, e);
    describe_chain(rep, cr, cfg);
    const HvFractions post_f = hv_fractions(cr.output);
    rep << "# post_ratio = " << csv_num(post_f.ratio_hv_to_vh) << "\n";
    rep << "# visibility = " << csv_num(vis) << "\n";
    rep << "# fidelity_psi_plus = " << csv_num(fid) << "\n";
    rep << "# s_from_visibility = " << csv_num(s_vis) << "\n";
    rep << "# fidelity_from_s = " << csv_num(fidelity_from_S(s_vis)) << "\n";
    rep << "# s_sampled = " << csv_num(est.S) << "\n";
    rep << "# sigma_s = " << csv_num(est.sigma) << "\n";
    rep << "# violation_sigma = "
        << csv_num(est.sigma > 0 ? violation_sigma(est.S, est.sigma) : 0.0) << "\n";

    RunArtifacts art;
    art.files["counts.csv"] = csv.str();
    art.files["summary.csv"] = summary_csv(est.S, est.sigma, vis, fid, cr.success_abs);
    art.files["report.txt"] = rep.str();
    return art;
}

RunArtifacts run_bell_swap(const ExperimentConfig& cfg) {
    const PreparedExperiment e = prepare(cfg);
    // Ideal-path comparison: swap output versus the (normalized) input pair.
    const Pair in12{prepare_pair(e.effective1).state, mode("1"), mode("2")};
    const Pair in34{prepare_pair(e.effective2).state, mode("3"), mode("4")};
    ProtocolResult swap = bell_swap(in12, in34);
    DensityOperator out_rho = to_density(swap.output);
    const PureState target14 = psi_plus(mode("1"), mode("4"));
    const double fid_out = fidelity_to_pure(out_rho, target14);
    const double fid_in =
        fidelity_to_pure(to_density(in12.state), psi_plus(mode("1"), mode("2")));
    const double vis = pm_visibility(out_rho);
    const double s_contraction = chsh_S(out_rho, cfg.chsh_settings());

    std::ostringstream csv;
    csv << "setting_id,theta1_deg,theta2_deg,outcome,probability,counts\n";
    const ProbabilityTable out_hv = hv_table(out_rho);
    emit_counts(csv, "post_hv", out_hv, count_block(out_hv, cfg, kStreamPost), kHvNames);

    std::ostringstream rep;
    rep << write_config(cfg);
    rep << "# derived:\n";
    describe_pairs(rep, e);
    rep << "# swap_success_prob = " << csv_num(swap.success_prob) << "\n";
    rep << "# fidelity_input_pair = " << csv_num(fid_in) << "\n";
    rep << "# fidelity_swapped = " << csv_num(fid_out) << "\n";
    rep << "# chsh_S_output = " << csv_num(s_contraction) << "\n";

    RunArtifacts art;
    art.files["counts.csv"] = csv.str();
    art.files["summary.csv"] = summary_csv(s_contraction, 0.0, vis, fid_out,
                                           swap.success_prob);
    art.files["report.txt"] = rep.str();
    return art;
}

RunArtifacts run_delay_scan(const ExperimentConfig& cfg) {
    const PreparedExperiment e = prepare(cfg);
    NoisyChain chain = build_chain(scheme_for(cfg.protocol), e.p12, e.p34);

    std::vector<double> delays(static_cast<size_t>(cfg.scan_points));
    const double step = (cfg.scan_max_um - cfg.scan_min_um) / (cfg.scan_points - 1);
    for (int i = 0; i < cfg.scan_points; ++i) {
        delays[static_cast<size_t>(i)] = cfg.scan_min_um + step * i;
    }
    SamplingConfig sc = cfg.sampling;
    sc.time_s = cfg.scan_time();
    sc.seed = derive_seed(cfg.sampling.seed, kStreamScan);
    const std::vector<ScanPoint> points =
        delay_scan(chain, cfg.branch, cfg.noise, delays, sc, cfg.ideal);
    const double accidental =
        sc.rate_hz * sc.time_s * cfg.noise.background_eps / 4.0;
    const ScanVisibility sv =
        scan_visibility(points, cfg.noise.coherence_length_um, accidental);

    std::ostringstream csv;
    csv << "delay_um,gamma,p_pp,p_mp,counts_pp,counts_mp\n";
    for (const auto& pt : points) {
        csv << csv_num(pt.delay_um) << "," << csv_num(pt.gamma) << ","
            << csv_num(pt.p_pp) << "," << csv_num(pt.p_mp) << ","
            << csv_num(pt.counts_pp) << "," << csv_num(pt.counts_mp) << "\n";
    }

    const double s_vis = s_from_visibility(std::clamp(sv.visibility, 0.0, 1.0));
    std::ostringstream rep;
    rep << write_config(cfg);
    rep << "# derived:\n";
    describe_pairs(rep, e);
    rep << "# scan_visibility = " << csv_num(sv.visibility) << "\n";
    rep << "# plateau_counts_pp = " << csv_num(sv.plateau_pp) << "\n";
    rep << "# plateau_counts_mp = " << csv_num(sv.plateau_mp) << "\n";

    RunArtifacts art;
    art.files["scan.csv"] = csv.str();
    art.files["summary.csv"] =
        summary_csv(s_vis, 0.0, sv.visibility, fidelity_from_S(s_vis),
                    branch_probability(chain, cfg.branch, cfg.noise.overlap_gamma));
    art.files["report.txt"] = rep.str();
    return art;
}

RunArtifacts run_table1(const ExperimentConfig& cfg) {
    std::ostringstream csv;
    csv << "windows,pre_ratio_ideal,pre_ratio_sampled,post_ratio_ideal,"
           "post_ratio_sampled,gamma_fit,s_value,fidelity,s_sampled,sigma_s,"
           "success_prob\n";

    std::ostringstream rep;
    rep << write_config(cfg);
    rep << "# derived:\n";

    for (size_t row = 0; row < kTableRows.size(); ++row) {
        ExperimentConfig row_cfg = cfg;
        row_cfg.protocol = Command::Concentrate;
        row_cfg.pair1.windows = kTableRows[row].windows;
        row_cfg.pair2.windows = kTableRows[row].windows;
        row_cfg.noise.overlap_gamma = kTableRows[row].s_reference / kTsirelson;
        row_cfg.sampling.seed = derive_seed(cfg.sampling.seed, 0x7ab1e, row);

        const PreparedExperiment e = prepare(row_cfg);
        ChainReport cr = analyze_chain(e, row_cfg);

        const double pre_ratio_ideal =
            std::norm(e.effective1.alpha) / std::norm(e.effective1.beta);
        const ProbabilityTable pre = hv_table(to_density(normalize(apply_single_mode(
            e.p12.pair.state, e.p12.pair.first, e.p12.element)).state));
        const CountTable pre_counts = count_block(pre, row_cfg, kStreamPre1);
        const double pre_ratio_sampled =
            pre_counts.settings[0].counts[1] / pre_counts.settings[0].counts[2];

        const HvFractions post_f = hv_fractions(cr.output);
        const ProbabilityTable post = hv_table(cr.output);
        const CountTable post_counts = count_block(post, row_cfg, kStreamPost);
        const double post_ratio_sampled =
            post_counts.settings[0].counts[1] / post_counts.settings[0].counts[2];

        const double vis = pm_visibility(cr.output);
        const double s_value = s_from_visibility(vis);
        const ProbabilityTable chsh = chsh_probability_table(
            cr.chain, row_cfg.branch, row_cfg.chsh_settings(),
            row_cfg.noise.overlap_gamma);
        const SEstimate est = estimate_S(count_block(chsh, row_cfg, kStreamChsh));

        csv << kTableRows[row].windows << "," << csv_num(pre_ratio_ideal) << ","
            << csv_num(pre_ratio_sampled) << "," << csv_num(post_f.ratio_hv_to_vh)
            << "," << csv_num(post_ratio_sampled) << ","
            << csv_num(row_cfg.noise.overlap_gamma) << "," << csv_num(s_value) << ","
            << csv_num(fidelity_from_S(s_value)) << "," << csv_num(est.S) << ","
            << csv_num(est.sigma) << "," << csv_num(cr.success_abs) << "\n";

        rep << "# row_windows_" << kTableRows[row].windows
            << ": pre_ratio = " << csv_num(pre_ratio_ideal)
            << ", gamma_fit = " << csv_num(row_cfg.noise.overlap_gamma)
            << ", s_value = " << csv_num(s_value)
            << ", fidelity = " << csv_num(fidelity_from_S(s_value)) << "\n";
    }

    RunArtifacts art;
    art.files["table1.csv"] = csv.str();
    art.files["report.txt"] = rep.str();
    return art;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.protocol) {
        case Command::BellSwap:
            return run_bell_swap(cfg);
        case Command::DelayScan:
            return run_delay_scan(cfg);
        case Command::Table1:
            return run_table1(cfg);
        default:
            return run_protocol_command(cfg);
    }
}

void write_artifacts(const RunArtifacts& artifacts, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, contents] : artifacts.files) {
        std::ofstream out(std::filesystem::path(out_dir) / name, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write output file '" + name + "'");
        }
        out << contents;
    }
}

}  // namespace entconc
