// hmtoc: simulate, analyze, and scan target-oriented control of k-th
// order difference equations.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hmtoc/control.hpp"
#include "hmtoc/dynamics.hpp"
#include "hmtoc/rng.hpp"
#include "hmtoc/scan.hpp"
#include "hmtoc/stability.hpp"

namespace {

using namespace hmtoc;

// "ricker:r=1.5,k=2" | "pielou:r=8,k=3" | "exp2" | "expr:<source>,k=<k>"
MapModel parse_map_spec(const std::string& spec) {
    if (spec == "exp2") return builtin_exp2();
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("bad map spec: " + spec);
    std::string name = spec.substr(0, colon);
    std::string rest = spec.substr(colon + 1);
    if (name == "ricker" || name == "pielou") {
        double r = 0.0;
        int k = 0;
        if (std::sscanf(rest.c_str(), "r=%lf,k=%d", &r, &k) != 2)
            throw std::invalid_argument("expected " + name + ":r=<real>,k=<int>");
        return name == "ricker" ? builtin_ricker(r, k) : builtin_pielou(r, k);
    }
    if (name == "expr") {
        auto kpos = rest.rfind(",k=");
        if (kpos == std::string::npos)
            throw std::invalid_argument("expr map spec needs a trailing ,k=<int>");
        int k = std::stoi(rest.substr(kpos + 3));
        std::string source = rest.substr(0, kpos);
        if (source.size() >= 2 && source.front() == '"' && source.back() == '"')
            source = source.substr(1, source.size() - 2);
        return from_expression(parse_expr(source, k));
    }
    throw std::invalid_argument("unknown map name: " + name);
}

std::vector<double> parse_vector(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

ControlledSystem build_system(const MapModel& map,
                              const std::vector<std::string>& control_specs) {
    ControlledSystem system{map, {}};
    for (const std::string& spec : control_specs)
        system.controls.push_back(parse_control_spec(spec));
    return system;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    return file;
}

struct CommonOpts {
    std::string map_spec;
    std::vector<std::string> controls;
};

void add_map_options(CLI::App* cmd, CommonOpts& opts, bool controls = true) {
    cmd->add_option("--map", opts.map_spec,
                    "Map spec: ricker:r=<r>,k=<k> | pielou:r=<r>,k=<k> | exp2 | "
                    "expr:<source>,k=<k>")
        ->required();
    if (controls)
        cmd->add_option("--control", opts.controls,
                        "Control c=<c>,T=<T>; repeatable, first listed is applied "
                        "first (innermost)");
}

int cmd_simulate(const CommonOpts& opts, const std::string& seed_text, long steps,
                 const std::string& out_path) {
    MapModel map = parse_map_spec(opts.map_spec);
    ControlledSystem system = build_system(map, opts.controls);
    std::vector<double> seed = parse_vector(seed_text);
    if (static_cast<int>(seed.size()) != system.order())
        throw std::invalid_argument("seed length must equal the map order");
    Orbit orbit = iterate(system.as_map(), seed, steps);
    std::ofstream file;
    write_orbit(orbit, open_output(out_path, file));
    if (orbit.diverged()) {
        std::cerr << "orbit aborted at step " << orbit.failure->step << ": "
                  << orbit.failure->reason << "\n";
        return 2;
    }
    return 0;
}

int cmd_fixed_points(const CommonOpts& opts, std::optional<double> bound,
                     const std::string& json_path) {
    MapModel map = parse_map_spec(opts.map_spec);
    ControlledSystem system = build_system(map, opts.controls);
    FixedPointReport report = find_fixed_points(system, bound);
    std::printf("search bound: %.17g\n", report.search_bound);
    if (report.points.empty()) std::printf("no fixed points found\n");
    for (const FixedPoint& fp : report.points)
        std::printf("fixed point: %.17g (residual %.3g, bracket [%.17g, %.17g])\n",
                    fp.value, fp.residual, fp.bracket_lo, fp.bracket_hi);
    if (!json_path.empty()) {
        StabilityReport sr;
        sr.system_label = system.as_map().label;
        sr.fixed_points = report;
        std::ofstream out(json_path, std::ios::binary);
        out << report_to_json(sr);
    }
    return 0;
}

int cmd_cstar(const CommonOpts& opts, std::optional<double> K_opt, bool find_K,
              std::optional<double> L_opt, std::optional<double> bound,
              bool fujiwara, int c_samples, const std::string& json_path) {
    MapModel map = parse_map_spec(opts.map_spec);
    ControlledSystem system = build_system(map, opts.controls);

    double K;
    FixedPointReport fps;
    if (find_K) {
        fps = find_fixed_points(system, bound);
        if (fps.points.empty())
            throw std::runtime_error("no fixed point found to analyze");
        K = fps.points.back().value;
    } else if (K_opt) {
        K = *K_opt;
        fps.points.push_back(
            FixedPoint{K, std::fabs(system.eval_diagonal(K) - K), K, K});
        fps.search_bound = std::max(K, 1.0);
    } else {
        throw std::invalid_argument("cstar needs --K or --find");
    }

    StabilityReport report;
    report.system_label = system.as_map().label;
    report.fixed_points = fps;
    report.analyzed_point = K;

    GradientSource src = GradientSource::Analytic;
    report.poly = char_poly(system, K, &src);
    report.gradient_source =
        src == GradientSource::Analytic ? "analytic" : "finite_difference";
    report.verdict = schur_verdict(report.poly);

    if (map.order == 2) report.estimates.push_back(cstar_k2_sharp(map, K));
    report.estimates.push_back(cstar_derivative_sum(map, K));
    if (L_opt || map.analytic_lipschitz) {
        try {
            report.estimates.push_back(cstar_global(map, K, L_opt));
        } catch (const std::invalid_argument&) {
            // metadata pair is for another fixed point; nothing to report
        }
    }
    if (fujiwara) {
        if (system.controls.empty())
            system.controls.push_back(TargetControl{0.5, K});
        double hi = bound ? *bound : report.fixed_points.search_bound;
        report.estimates.push_back(cstar_fujiwara(system, 0.0, hi, c_samples));
    }

    std::fputs(report_to_text(report).c_str(), stdout);
    if (!json_path.empty()) {
        std::ofstream out(json_path, std::ios::binary);
        out << report_to_json(report);
    }
    return 0;
}

int cmd_lipschitz(const CommonOpts& opts, double K, double domain_hi, long samples,
                  std::uint64_t rng_seed, std::optional<double> local_L) {
    MapModel map = parse_map_spec(opts.map_spec);
    double lower = lipschitz_grid_lower(map, K, domain_hi, samples, rng_seed);
    std::printf("sampled lower bound on L: %.17g\n", lower);
    if (map.analytic_lipschitz &&
        std::fabs(map.analytic_lipschitz->K - K) <= 1e-9 * (1.0 + std::fabs(K)))
        std::printf("analytic L: %.17g\n", map.analytic_lipschitz->L);
    if (map.global_bound && K > 0.0) {
        double ll = local_L ? *local_L
                            : 1.5 * lipschitz_grid_lower(map, K, 2.0 * K, samples,
                                                         rng_seed + 1);
        std::printf("bounded-map L (local_L=%.17g%s): %.17g\n", ll,
                    local_L ? "" : ", heuristic grid estimate x1.5",
                    lipschitz_from_bounded(map, K, ll));
    }
    return 0;
}

struct ScanOpts {
    CommonOpts common;
    int figure = 0;
    double T = 0.0;
    bool has_T = false;
    int c_count = 300;
    long transient = 3000;
    int samples = 50;
    std::uint64_t rng_seed = 0;
    std::string seed_box;
    std::string out_path;
    std::string svg_path;
    bool threshold = false;
    std::optional<double> threshold_point;
};

int cmd_scan(const ScanOpts& opts) {
    MapModel map;
    std::vector<TargetControl> inner;
    double T;
    switch (opts.figure) {
        case 1:
            map = builtin_exp2();
            T = 1.0;
            break;
        case 2:
            map = builtin_ricker(1.5, 2);
            T = 0.0;
            break;
        case 3:
            map = builtin_pielou(8.0, 3);
            inner.push_back(TargetControl{2.0 / 9.0, 3.0});
            T = 6.0;
            break;
        case 0: {
            if (opts.common.map_spec.empty())
                throw std::invalid_argument("scan needs --figure or --map");
            if (!opts.has_T)
                throw std::invalid_argument("scan needs --T for the swept control");
            map = parse_map_spec(opts.common.map_spec);
            for (const std::string& spec : opts.common.controls)
                inner.push_back(parse_control_spec(spec));
            T = opts.T;
            break;
        }
        default:
            throw std::invalid_argument("--figure must be 1, 2, or 3");
    }

    auto builder = [map, inner, T](double c) {
        ControlledSystem system{map, inner};
        system.controls.push_back(TargetControl{c, T});
        return system;
    };

    ScanConfig config;
    config.system_builder = builder;
    config.c_count = opts.c_count;
    config.transient = opts.transient;
    config.samples = opts.samples;
    config.seed_rng = opts.rng_seed;
    if (!opts.seed_box.empty()) {
        double lo = 0.0, hi = 0.0;
        if (std::sscanf(opts.seed_box.c_str(), "%lf:%lf", &lo, &hi) != 2)
            throw std::invalid_argument("--seed-box expects lo:hi");
        config.seed_lo = lo;
        config.seed_hi = hi;
    } else {
        double mbar = map.diagonal_bound.value_or(1.0);
        config.seed_lo = 0.0;
        config.seed_hi = 2.0 * std::max({T, mbar, 1.0});
    }

    ScanResult result = run_scan(config);
    std::string out_path = opts.out_path;
    if (out_path.empty())
        out_path = opts.figure > 0 ? "figure" + std::to_string(opts.figure) + ".csv"
                                   : "scan.csv";
    if (out_path == "-") {
        std::cout << scan_table_string(result);
    } else {
        export_scan(result, out_path, ScanFormat::Table);
        std::printf("wrote %s (%d grid points)\n", out_path.c_str(), opts.c_count);
    }
    if (!opts.svg_path.empty()) {
        export_scan(result, opts.svg_path, ScanFormat::ScatterSvg);
        std::printf("wrote %s\n", opts.svg_path.c_str());
    }

    if (opts.threshold) {
        std::optional<double> point = opts.threshold_point;
        if (!point) point = T;
        MinimalCResult mc = minimal_stabilizing_c(builder, opts.c_count, point);
        std::printf("detected stability threshold: c = %.6f\n", mc.c_star);
        for (const StabilityTransition& tr : mc.transitions)
            std::printf("  transition unstable->stable in (%.6f, %.6f)\n",
                        tr.c_before, tr.c_after);
    }
    return 0;
}

int cmd_target(const CommonOpts& opts, double K1, double c2,
               std::optional<double> fix_T, std::optional<double> fix_c,
               long steps, int n_seeds, std::uint64_t rng_seed) {
    MapModel map = parse_map_spec(opts.map_spec);
    TargetPreference pref;
    pref.fix_T = fix_T;
    pref.fix_c = fix_c;
    TargetingResult tr = targeting_pipeline(map, K1, c2, pref);

    std::printf("corrective control: %s\n",
                format_control_spec(tr.corrective).c_str());
    std::printf("stabilizing control: %s\n",
                format_control_spec(tr.stabilizer).c_str());
    std::printf("combined control: %s\n", format_control_spec(tr.combined).c_str());

    double residual = std::fabs(tr.system.eval_diagonal(K1) - K1);
    std::printf("fixed-point residual at K1: %.3g\n", residual);

    CounterRng rng(rng_seed, 7);
    double hi = 2.0 * std::max(map.diagonal_bound.value_or(K1), K1);
    double worst = 0.0;
    MapModel sys_map = tr.system.as_map();
    for (int s = 0; s < n_seeds; ++s) {
        std::vector<double> seed(static_cast<std::size_t>(map.order));
        for (int i = 0; i < map.order; ++i)
            seed[static_cast<std::size_t>(i)] = rng.open_closed(
                static_cast<std::uint64_t>(s) * map.order +
                    static_cast<std::uint64_t>(i),
                0.0, hi);
        Orbit orbit = iterate(sys_map, seed, steps);
        if (orbit.diverged()) {
            std::printf("verification: orbit %d diverged\n", s);
            return 2;
        }
        worst = std::max(worst, std::fabs(orbit.values.back() - K1));
    }
    std::printf("verification: %d orbits of %ld steps, max |u_N - K1| = %.3g\n",
                n_seeds, steps, worst);
    return 0;
}

int cmd_compose(const std::string& outer_spec, const std::string& inner_spec) {
    TargetControl outer = parse_control_spec(outer_spec);
    TargetControl inner = parse_control_spec(inner_spec);
    std::printf("composed control: %s\n",
                format_control_spec(compose_controls(outer, inner)).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Target oriented control toolkit for k-th order difference equations"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value config file");

    CommonOpts sim_opts;
    std::string sim_seed;
    long sim_steps = 100;
    std::string sim_out = "-";
    auto* simulate = app.add_subcommand("simulate", "Iterate a controlled orbit");
    add_map_options(simulate, sim_opts);
    simulate->add_option("--seed", sim_seed, "Initial state u_0,u_-1,...  (most recent first)")
        ->required();
    simulate->add_option("--steps", sim_steps, "Number of iterations");
    simulate->add_option("--out", sim_out, "Output path ('-' for stdout)");

    CommonOpts fp_opts;
    std::optional<double> fp_bound;
    std::string fp_json;
    auto* fixed_points =
        app.add_subcommand("fixed-points", "Locate fixed points of the diagonal");
    add_map_options(fixed_points, fp_opts);
    fixed_points->add_option("--bound", fp_bound, "Search bound (defaults to map metadata)");
    fixed_points->add_option("--json", fp_json, "Write a JSON report to this path");

    CommonOpts cs_opts;
    std::optional<double> cs_K, cs_L, cs_bound;
    bool cs_find = false, cs_fujiwara = false;
    int cs_csamples = 100;
    std::string cs_json;
    auto* cstar = app.add_subcommand("cstar", "Stabilizing control-intensity thresholds");
    add_map_options(cstar, cs_opts);
    cstar->add_option("--K", cs_K, "Fixed point to analyze");
    cstar->add_flag("--find", cs_find, "Locate the fixed point automatically");
    cstar->add_option("--L", cs_L, "Lipschitz constant for the global estimate");
    cstar->add_option("--bound", cs_bound, "Fixed-point search bound");
    cstar->add_flag("--fujiwara", cs_fujiwara, "Include the sampled Fujiwara estimate");
    cstar->add_option("--c-samples", cs_csamples, "Grid size for the Fujiwara estimate");
    cstar->add_option("--json", cs_json, "Write a JSON report to this path");

    CommonOpts lip_opts;
    double lip_K = 0.0, lip_hi = 100.0;
    long lip_samples = 100000;
    std::uint64_t lip_seed = 0;
    std::optional<double> lip_local;
    auto* lipschitz = app.add_subcommand("lipschitz", "Estimate Lipschitz constants");
    add_map_options(lipschitz, lip_opts, false);
    lipschitz->add_option("--K", lip_K, "Fixed point")->required();
    lipschitz->add_option("--domain-hi", lip_hi, "Sampling box upper edge");
    lipschitz->add_option("--samples", lip_samples, "Number of sample points");
    lipschitz->add_option("--rng-seed", lip_seed, "Sampling seed");
    lipschitz->add_option("--local-L", lip_local, "Local constant on [0,2K]^k");

    ScanOpts scan_opts;
    auto* scan = app.add_subcommand("scan", "Bifurcation sweep over the control intensity");
    scan->add_option("--figure", scan_opts.figure, "Preset sweep: 1, 2, or 3");
    scan->add_option("--map", scan_opts.common.map_spec, "Map spec (generic sweep)");
    scan->add_option("--control", scan_opts.common.controls,
                     "Inner controls applied before the swept one");
    scan->add_option("--T", scan_opts.T, "Target of the swept control")
        ->each([&](const std::string&) { scan_opts.has_T = true; });
    scan->add_option("--c-count", scan_opts.c_count, "Grid size (c = j/c_count)");
    scan->add_option("--transient", scan_opts.transient, "Discarded iterations");
    scan->add_option("--samples", scan_opts.samples, "Recorded values per grid point");
    scan->add_option("--rng-seed", scan_opts.rng_seed, "Seed for initial conditions");
    scan->add_option("--seed-box", scan_opts.seed_box, "Initial-condition box lo:hi");
    scan->add_option("--out", scan_opts.out_path, "Table output path");
    scan->add_option("--svg", scan_opts.svg_path, "Scatter plot output path");
    scan->add_flag("--threshold", scan_opts.threshold,
                   "Bisect and print the detected stability threshold");
    scan->add_option("--threshold-point", scan_opts.threshold_point,
                     "Fixed point used for the threshold (defaults to the target)");

    CommonOpts tgt_opts;
    double tgt_K1 = 0.0, tgt_c2 = 0.9;
    std::optional<double> tgt_fix_T, tgt_fix_c;
    long tgt_steps = 2000;
    int tgt_seeds = 5;
    std::uint64_t tgt_rng = 0;
    auto* target = app.add_subcommand("target", "Stabilize an arbitrary point");
    add_map_options(target, tgt_opts, false);
    target->add_option("--K1", tgt_K1, "Point to stabilize")->required();
    target->add_option("--c2", tgt_c2, "Outer stabilizing intensity");
    target->add_option("--fix-T", tgt_fix_T, "Solve the corrective control for this target");
    target->add_option("--fix-c", tgt_fix_c, "Solve the corrective control for this intensity");
    target->add_option("--steps", tgt_steps, "Verification orbit length");
    target->add_option("--seeds", tgt_seeds, "Number of verification orbits");
    target->add_option("--rng-seed", tgt_rng, "Verification seed");

    std::string comp_outer, comp_inner;
    auto* compose = app.add_subcommand("compose", "Compose two controls");
    compose->add_option("--outer", comp_outer, "Outer control c=<c>,T=<T>")->required();
    compose->add_option("--inner", comp_inner, "Inner control c=<c>,T=<T>")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(sim_opts, sim_seed, sim_steps, sim_out);
        if (fixed_points->parsed())
            return cmd_fixed_points(fp_opts, fp_bound, fp_json);
        if (cstar->parsed())
            return cmd_cstar(cs_opts, cs_K, cs_find, cs_L, cs_bound, cs_fujiwara,
                             cs_csamples, cs_json);
        if (lipschitz->parsed())
            return cmd_lipschitz(lip_opts, lip_K, lip_hi, lip_samples, lip_seed,
                                 lip_local);
        if (scan->parsed()) return cmd_scan(scan_opts);
        if (target->parsed())
            return cmd_target(tgt_opts, tgt_K1, tgt_c2, tgt_fix_T, tgt_fix_c,
                              tgt_steps, tgt_seeds, tgt_rng);
        if (compose->parsed()) return cmd_compose(comp_outer, comp_inner);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
