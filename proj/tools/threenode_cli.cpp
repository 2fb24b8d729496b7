// threenode: command-line front end.
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 solver, 4 too many failed phase
// cells, 5 starved vessel during simulation.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "threenode/threenode.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace threenode;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kSolver = 3, kPhaseFailures = 4, kStarved = 5 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<double> split_numbers(const std::string& text, std::size_t count, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
        }
    }
    if (out.size() != count) {
        throw UsageError(std::string(flag) + " expects " + std::to_string(count) + " colon-separated values");
    }
    return out;
}

int positive_count(double v, const char* flag) {
    if (!(v >= 2.0) || v != std::floor(v)) throw UsageError(std::string(flag) + ": point count must be an integer >= 2");
    return static_cast<int>(v);
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("SHA-256 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

/// Collects output files so the manifest can list and digest them.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content) {
        write_atomic(dir_ / name, content);
        files_.push_back({name, sha256_hex(content), content.size()});
    }

    void manifest(const std::string& command, const NetworkConfig& config, const json& args, double wall) {
        json files = json::array();
        for (const auto& f : files_) files.push_back({{"path", f.name}, {"sha256", f.digest}, {"bytes", f.bytes}});
        const json m = {{"command", command},
                        {"tool", "threenode"},
                        {"version", THREENODE_VERSION},
                        {"arguments", args},
                        {"config", config_to_json(config)},
                        {"wall_time_s", wall},
                        {"files", files}};
        write_atomic(dir_ / "manifest.json", dump_json(m));
    }

private:
    struct Entry {
        std::string name, digest;
        std::size_t bytes;
    };
    fs::path dir_;
    std::vector<Entry> files_;
};

unsigned env_threads() {
    const char* v = std::getenv("THREENODE_THREADS");
    if (!v || !*v) return 0;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw UsageError(std::string("THREENODE_THREADS must be a positive integer, got '") + v + "'");
    return static_cast<unsigned>(n);
}

struct Common {
    std::string config_path;
    std::string out = "out";
    std::optional<double> contrast;
};

NetworkConfig load(const Common& c, std::optional<double> q1 = std::nullopt) {
    NetworkConfig config = load_config(c.config_path);
    if (c.contrast) set_contrast(config.viscosity, *c.contrast);
    if (q1) config = with_q1(config, *q1);
    if (auto problems = validate(config); !problems.empty()) throw ConfigError(problems);
    return config;
}

// ---------------------------------------------------------------------------

struct EquilibriaArgs {
    std::optional<double> q1;
    std::string q1_range;
};

int cmd_equilibria(const Common& common, const EquilibriaArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    if (a.q1.has_value() == !a.q1_range.empty()) throw UsageError("equilibria: give exactly one of --q1 or --q1-range");
    NetworkConfig config = load(common, a.q1);
    OutputSet out(common.out);
    json args;

    if (a.q1) {
        const auto states = solve_equilibria(config);
        std::vector<Stability> labels;
        json list = json::array();
        for (const auto& s : states) {
            labels.push_back(classify_point(char_coefficients(config, s)));
            json j = to_json(s);
            j["stability"] = stability_name(labels.back());
            list.push_back(j);
        }
        out.write("equilibria.csv", states_csv(states, labels));
        out.write("equilibria.json", dump_json({{"q1", *a.q1},
                                                {"contrast", contrast(config.viscosity)},
                                                {"count", states.size()},
                                                {"equilibria", list}}));
        args = {{"q1", *a.q1}};
        std::cout << states.size() << " equilibria at q1 = " << *a.q1 << "\n";
    } else {
        const auto r = split_numbers(a.q1_range, 3, "--q1-range");
        const int n = positive_count(r[2], "--q1-range");
        if (!(r[0] >= 0.0 && r[1] <= 1.0 && r[0] < r[1])) throw UsageError("--q1-range: need 0 <= A < B <= 1");

        const auto curve = continue_curve(config, r[0], r[1]);
        const auto stability = classify_stability(config, curve);
        const auto folds = detect_folds(config, curve);
        out.write("curve.csv", curve_csv(curve, &stability));

        // Root table on the requested q1 samples, independent of the continuation.
        CsvBuilder samples({"q1", "q_c", "stability"});
        for (int i = 0; i < n; ++i) {
            const double q1 = r[0] + (r[1] - r[0]) * i / (n - 1);
            const NetworkConfig at = with_q1(config, q1);
            for (const auto& s : solve_equilibria(at)) {
                samples.row({q1, s.q_c}, {stability_name(classify_point(char_coefficients(at, s)))});
            }
        }
        out.write("samples.csv", samples.str());

        json fold_list = json::array();
        for (const auto& f : folds) fold_list.push_back(to_json(f));
        json segments = json::array();
        for (const auto& seg : stability.segments) {
            segments.push_back({{"q1_begin", curve.points[seg.begin].state.q1},
                                {"q1_end", curve.points[seg.end].state.q1},
                                {"q_c_begin", curve.points[seg.begin].state.q_c},
                                {"q_c_end", curve.points[seg.end].state.q_c},
                                {"stability", stability_name(seg.label)}});
        }
        out.write("curve.json", dump_json({{"q1_range", {r[0], r[1]}},
                                           {"samples", n},
                                           {"contrast", contrast(config.viscosity)},
                                           {"points", curve.points.size()},
                                           {"termination", termination_name(curve.termination)},
                                           {"fold_count", folds.size()},
                                           {"folds", fold_list},
                                           {"stability_segments", segments}}));
        args = {{"q1_range", a.q1_range}};
        std::cout << "curve: " << curve.points.size() << " points, " << folds.size() << " folds\n";
    }
    if (common.contrast) args["contrast"] = *common.contrast;
    out.manifest("equilibria", config, args,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return kOk;
}

// ---------------------------------------------------------------------------

struct EigsArgs {
    double q1 = 0.5;
    double qc = 0.0;
    double qc_tol = 1e-2;
    std::string window = "-2:1:0.05:40";
    int grid = 400;
};

int cmd_eigs(const Common& common, const EigsArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto wv = split_numbers(a.window, 4, "--window");
    const Window w{wv[0], wv[1], wv[2], wv[3]};
    if (!(w.sigma_min < w.sigma_max && w.omega_min < w.omega_max)) throw UsageError("--window: empty range");
    if (a.grid < 2) throw UsageError("--grid must be at least 2");
    const NetworkConfig config = load(common, a.q1);

    const auto state = polish_equilibrium(config, a.qc);
    if (!state || std::abs(state->q_c - a.qc) > a.qc_tol || std::abs(state->residual) > 1e-6) {
        std::cerr << "error: no equilibrium within " << a.qc_tol << " of q_c = " << a.qc << " at q1 = " << a.q1 << "\n";
        return kSolver;
    }
    const auto k = char_coefficients(config, *state);
    const auto field = eigen_contours(k, w, a.grid, a.grid);
    const auto found = find_eigenvalues(k, w, EigenSearchOptions{a.grid, a.grid});
    const auto count = count_unstable_roots(k);

    const double c = contrast(config.viscosity);
    json roots = json::array(), stalled = json::array();
    for (const auto& e : found.roots) roots.push_back(to_json(e, *state, c));
    for (const auto& e : found.unconverged) stalled.push_back(to_json(e, *state, c));

    OutputSet out(common.out);
    out.write("contour.csv", contour_csv(field, "sigma"));
    out.write("eigenvalues.json",
              dump_json({{"q1", a.q1},
                         {"q_c", state->q_c},
                         {"contrast", c},
                         {"window", {w.sigma_min, w.sigma_max, w.omega_min, w.omega_max}},
                         {"grid", a.grid},
                         {"roots", roots},
                         {"unconverged", stalled},
                         {"unstable_count", count.unstable},
                         {"real_unstable_count", count.real_unstable},
                         {"stability", stability_name(classify_point(k))}}));
    json args = {{"q1", a.q1}, {"qc", a.qc}, {"qc_tol", a.qc_tol}, {"window", a.window}, {"grid", a.grid}};
    if (common.contrast) args["contrast"] = *common.contrast;
    out.manifest("eigs", config, args, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::cout << found.roots.size() << " roots in window, q_c = " << state->q_c << "\n";
    for (const auto& e : found.roots) std::cout << "  " << e.sigma << (e.omega < 0 ? " - " : " + ") << std::abs(e.omega) << "i\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct PhaseArgs {
    int q1_grid = 201;
    std::string contrast_range = "2:500:120";
    bool no_curves = false;
    double hopf_slice = 50.0;
    double sn_slice = 10.0;
    int hopf_slices = 12;
    unsigned threads = 0;
};

std::string csv_safe(std::string s) {
    for (char& ch : s) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return s;
}

int cmd_phase_diagram(const Common& common, const PhaseArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    if (a.q1_grid < 2) throw UsageError("--q1-grid must be at least 2");
    if (a.hopf_slices < 0) throw UsageError("--hopf-slices must not be negative");
    const auto cr = split_numbers(a.contrast_range, 3, "--contrast-range");
    const int m = positive_count(cr[2], "--contrast-range");
    if (!(cr[0] > 1.0 && cr[1] > cr[0])) throw UsageError("--contrast-range: need 1 < A < B");
    const NetworkConfig config = load(common);

    PhaseDiagramOptions opt;
    opt.threads = a.threads ? a.threads : env_threads();
    opt.curves = !a.no_curves;
    opt.hopf_slice = a.hopf_slice;
    opt.sn_slice = a.sn_slice;
    opt.hopf_slices = a.hopf_slices;
    const auto pd = build_phase_diagram(config, linspace(0.0, 1.0, a.q1_grid), logspace(cr[0], cr[1], m), opt);

    CsvBuilder csv({"q1", "contrast", "region", "n_equilibria", "n_stable", "n_oscillatory", "error"});
    int counts[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t ic = 0; ic < pd.contrasts.size(); ++ic) {
        for (std::size_t iq = 0; iq < pd.q1s.size(); ++iq) {
            const auto& cell = pd.at(iq, ic);
            if (cell.info) {
                const auto& i = *cell.info;
                ++counts[static_cast<int>(i.region)];
                csv.row({cell.q1, cell.contrast}, {region_name(i.region), std::to_string(i.n_equilibria),
                                                   std::to_string(i.n_stable), std::to_string(i.n_oscillatory), ""});
            } else {
                csv.row({cell.q1, cell.contrast}, {"failed", "-1", "-1", "-1", csv_safe(cell.error)});
            }
        }
    }

    OutputSet out(common.out);
    out.write("diagram.csv", csv.str());
    json curve_files = json::array();
    int n_sn = 0, n_hopf = 0;
    for (const auto& c : pd.curves) {
        const std::string name = c.kind == CurveKind::SaddleNode ? "sn_" + std::to_string(n_sn++) + ".json"
                                                                 : "hopf_" + std::to_string(n_hopf++) + ".json";
        out.write(name, dump_json(to_json(c)));
        curve_files.push_back(name);
    }
    json region_counts;
    for (int r = 1; r <= 5; ++r) region_counts[region_name(static_cast<Region>(r))] = counts[r];
    const std::size_t failed = pd.failed();
    out.write("meta.json", dump_json({{"q1_grid", a.q1_grid},
                                      {"contrast_range", {cr[0], cr[1]}},
                                      {"contrast_points", m},
                                      {"cells", pd.cells.size()},
                                      {"failed_cells", failed},
                                      {"region_counts", region_counts},
                                      {"curves", curve_files},
                                      {"warnings", pd.warnings}}));
    json args = {{"q1_grid", a.q1_grid}, {"contrast_range", a.contrast_range}, {"curves", !a.no_curves},
                 {"hopf_slice", a.hopf_slice}, {"hopf_slices", a.hopf_slices}, {"sn_slice", a.sn_slice}};
    out.manifest("phase-diagram", config, args,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    const std::size_t warnings = failed + pd.warnings.size();
    std::cout << pd.cells.size() << " cells, " << pd.curves.size() << " curves\n";
    if (warnings > 0) std::cerr << "warning: " << warnings << " warnings (" << failed << " failed cells)\n";
    if (10 * failed > pd.cells.size()) {
        std::cerr << "error: more than 10% of cells failed\n";
        return kPhaseFailures;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    double q1 = 0.5;
    std::string seed_branch = "auto";
    int cells = 512;
    double t_end = 400.0;
    double perturb = 1e-4;
    double skip = -1.0;
    double cfl = 0.9;
    int record_every = 1;
    std::string scheme = "parcel";
    double fit_start = 0.0;
    int profile_points = 257;
};

int cmd_simulate(const Common& common, const SimulateArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const NetworkConfig config = load(common, a.q1);
    SimConfig sim;
    sim.cells_per_vessel = a.cells;
    sim.t_end = a.t_end;
    sim.perturbation = a.perturb;
    sim.transient_skip = a.skip;
    sim.cfl = a.cfl;
    sim.record_every = a.record_every;
    sim.record_phi = true;
    sim.scheme = a.scheme == "fixed-grid" ? AdvectionScheme::FixedGridLinear : AdvectionScheme::Parcel;
    if (auto problems = validate(sim); !problems.empty()) {
        std::string msg = "invalid simulation settings";
        for (const auto& p : problems) msg += "\n  " + p;
        throw UsageError(msg);
    }

    const auto states = solve_equilibria(config);
    Branch branch = Branch::Negative;
    if (a.seed_branch == "pos") {
        branch = Branch::Positive;
    } else if (a.seed_branch == "auto") {
        // The side a network started from rest drifts toward.
        branch = psi(config, 0.0) > 0.0 ? Branch::Positive : Branch::Negative;
    }
    const auto seed = select_branch(states, branch);
    if (!seed) {
        std::cerr << "error: no equilibrium on the " << (branch == Branch::Positive ? "positive" : "negative")
                  << " branch\n";
        return kSolver;
    }
    sim.seed_state = *seed;

    SimResult result;
    try {
        result = run(config, sim);
    } catch (const StarvedVesselError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStarved;
    }

    AnalysisOptions ao;
    ao.reference = seed->q_c;
    ao.fit_start = a.fit_start;
    const auto stats = analyze_cycle(result.series, sim.skip(), ao);
    const auto k = char_coefficients(config, *seed);
    const auto dominant = dominant_eigenvalue(k, Window{});

    OutputSet out(common.out);
    out.write("series.csv", series_csv(result.series));
    out.write("profile.csv", profile_csv(result.final_state, a.profile_points));
    json linear = nullptr;
    if (dominant) linear = {{"sigma", dominant->sigma}, {"omega", dominant->omega}};
    out.write("stats.json", dump_json({{"seed", to_json(*seed)},
                                       {"seed_branch", branch == Branch::Positive ? "pos" : "neg"},
                                       {"seed_stability", stability_name(classify_point(k))},
                                       {"linear_dominant", linear},
                                       {"cells", a.cells},
                                       {"t_end", a.t_end},
                                       {"transient_skip", sim.skip()},
                                       {"perturbation", a.perturb},
                                       {"final_q_c", result.final_state.q_c},
                                       {"stats", to_json(stats)}}));
    json args = {{"q1", a.q1},     {"seed_branch", a.seed_branch}, {"cells", a.cells},
                 {"t_end", a.t_end}, {"perturb", a.perturb},       {"skip", sim.skip()},
                 {"cfl", a.cfl},   {"record_every", a.record_every}, {"scheme", a.scheme},
                 {"fit_start", a.fit_start}};
    if (common.contrast) args["contrast"] = *common.contrast;
    out.manifest("simulate", config, args,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    if (stats.fixed_point) {
        std::cout << "fixed point, q_c = " << result.final_state.q_c << "\n";
    } else {
        std::cout << "period " << stats.period << ", q_c in [" << stats.amplitude_min << ", " << stats.amplitude_max
                  << "], converged " << (stats.converged ? "yes" : "no") << "\n";
    }
    return kOk;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "network config (JSON)")->required();
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--contrast", c.contrast, "override the viscosity contrast");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equilibria, stability, bifurcations and simulation of a three-node two-fluid network"};
    app.set_version_flag("--version", THREENODE_VERSION);
    app.require_subcommand(1);

    Common common;

    EquilibriaArgs eq;
    auto* c_eq = app.add_subcommand("equilibria", "equilibria at one q1, or the continuation curve over a q1 range");
    add_common(c_eq, common);
    auto* eq_q1 = c_eq->add_option("--q1", eq.q1, "inlet flow fraction");
    auto* eq_range = c_eq->add_option("--q1-range", eq.q1_range, "A:B:N continuation range and sample count");
    eq_q1->excludes(eq_range);

    EigsArgs ei;
    auto* c_ei = app.add_subcommand("eigs", "characteristic roots at one equilibrium");
    add_common(c_ei, common);
    c_ei->add_option("--q1", ei.q1, "inlet flow fraction")->required();
    c_ei->add_option("--qc", ei.qc, "approximate equilibrium q_c")->required();
    c_ei->add_option("--qc-tol", ei.qc_tol, "how far the polished equilibrium may sit from --qc")->capture_default_str();
    c_ei->add_option("--window", ei.window, "sigma0:sigma1:omega0:omega1")->capture_default_str();
    c_ei->add_option("--grid", ei.grid, "contour grid points per axis")->capture_default_str();

    PhaseArgs ph;
    auto* c_ph = app.add_subcommand("phase-diagram", "region map over (q1, contrast) with bifurcation curves");
    add_common(c_ph, common);
    c_ph->add_option("--q1-grid", ph.q1_grid, "q1 points on [0, 1]")->capture_default_str();
    c_ph->add_option("--contrast-range", ph.contrast_range, "A:B:M logarithmic contrast grid")->capture_default_str();
    c_ph->add_flag("--no-curves", ph.no_curves, "skip bifurcation-curve tracking");
    c_ph->add_option("--hopf-slice", ph.hopf_slice, "contrast at which Hopf branches are seeded")->capture_default_str();
    c_ph->add_option("--hopf-slices", ph.hopf_slices, "further log-spaced Hopf seeding slices")->capture_default_str();
    c_ph->add_option("--sn-slice", ph.sn_slice, "contrast at which fold branches are seeded")->capture_default_str();
    c_ph->add_option("--threads", ph.threads, "worker threads (default THREENODE_THREADS or all cores)");

    SimulateArgs si;
    auto* c_si = app.add_subcommand("simulate", "direct simulation from an equilibrium");
    add_common(c_si, common);
    c_si->add_option("--q1", si.q1, "inlet flow fraction")->required();
    c_si->add_option("--seed-branch", si.seed_branch, "pos, neg or auto")
        ->check(CLI::IsMember({"pos", "neg", "auto"}))
        ->capture_default_str();
    c_si->add_option("--cells", si.cells, "cells per vessel")->capture_default_str();
    c_si->add_option("--t-end", si.t_end, "end time")->capture_default_str();
    c_si->add_option("--perturb", si.perturb, "relative perturbation of vessel C")->capture_default_str();
    c_si->add_option("--skip", si.skip, "transient to discard (default t_end / 2)");
    c_si->add_option("--cfl", si.cfl, "CFL number")->capture_default_str();
    c_si->add_option("--record-every", si.record_every, "record every n-th step")->capture_default_str();
    c_si->add_option("--scheme", si.scheme, "parcel or fixed-grid")
        ->check(CLI::IsMember({"parcel", "fixed-grid"}))
        ->capture_default_str();
    c_si->add_option("--fit-start", si.fit_start, "ignore the growth envelope before this time")->capture_default_str();
    c_si->add_option("--profile-points", si.profile_points, "samples in profile.csv")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*c_eq) return cmd_equilibria(common, eq);
        if (*c_ei) return cmd_eigs(common, ei);
        if (*c_ph) return cmd_phase_diagram(common, ph);
        if (*c_si) return cmd_simulate(common, si);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const StarvedVesselError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStarved;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolver;
    }
    return kUsage;
}
