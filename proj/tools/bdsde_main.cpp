// Experiment runner: configuration, orchestration, persistence and
// reproducibility manifests around the solver library.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iostream>

#include "bdsde/acceptance.hpp"
#include "bdsde/config.hpp"
#include "bdsde/csv.hpp"
#include "bdsde/doss.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/stationarity.hpp"

using namespace bdsde;

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitTestFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericFailure = 3;

struct CliOptions {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
    bool override_assumptions = false;
};

ExperimentConfig load_config(const CliOptions& opt, const std::string& subcommand) {
    ExperimentConfig cfg = opt.config_path.empty()
                               ? ExperimentConfig{}
                               : ExperimentConfig::from_file(opt.config_path);
    if (opt.seed_set) cfg.seed = opt.seed;
    if (opt.workers >= 0) cfg.workers = opt.workers;
    if (opt.override_assumptions) cfg.solver.override_assumptions = true;
    if (!opt.out.empty()) cfg.out_dir = opt.out;
    if (cfg.out_dir.empty()) {
        const char* root = std::getenv("BDSDE_OUT_ROOT");
        cfg.out_dir = (root ? std::filesystem::path(root) : std::filesystem::path("out")) /
                      subcommand;
    }
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

double opt_num(const ExperimentConfig& cfg, const char* key, double fallback) {
    if (cfg.subcommand_options.contains(key)) return cfg.subcommand_options.at(key).get<double>();
    return fallback;
}

int run_check(const ExperimentConfig& cfg) {
    RunManifest manifest(cfg, "check");
    const auto t0 = Clock::now();
    const auto report = check_assumptions(cfg.constants);
    csv::Writer w(cfg.out_dir / "assumptions.csv",
                  {"condition", "expression", "lhs", "pass", "structural"});
    for (const auto& c : report.conditions)
        w.row({c.name, c.expression, csv::number(c.lhs), c.pass ? "1" : "0",
               c.structural ? "1" : "0"});
    manifest.add_output(cfg.out_dir / "assumptions.csv");

    // Falsification probes of the coefficient conditions; statistically
    // unfalsified at best, never proved.
    const auto model = cfg.build_model();
    DomainBox box;
    box.lo.assign(static_cast<std::size_t>(cfg.constants.d), -2.0);
    box.hi.assign(static_cast<std::size_t>(cfg.constants.d), 2.0);
    box.y_lo = -3;
    box.y_hi = 3;
    box.z_lo = -2;
    box.z_hi = 2;
    const auto n_samples =
        static_cast<std::size_t>(opt_num(cfg, "probe_samples", defaults::probe_samples));
    const auto violations = probe_monotonicity(model.coefficients, cfg.constants.mu, box,
                                               n_samples, cfg.seed,
                                               resolve_workers(cfg.workers));
    const auto lip = probe_lipschitz(model.coefficients.driver, cfg.constants.C0,
                                     cfg.constants.C1, cfg.constants.C, box, n_samples,
                                     cfg.seed, resolve_workers(cfg.workers));
    csv::Writer pw(cfg.out_dir / "probes.csv", {"probe", "result", "value"});
    pw.row({"monotonicity", violations.empty() ? "statistically unfalsified" : "violated",
            std::to_string(violations.size())});
    pw.row({"lipschitz_worst_ratio", lip.worst_ratio <= 1.0 ? "statistically unfalsified"
                                                            : "violated",
            csv::number(lip.worst_ratio)});
    manifest.add_output(cfg.out_dir / "probes.csv");
    manifest.stage_done("check", std::chrono::duration<double>(Clock::now() - t0).count());
    manifest.write(cfg.out_dir / "manifest.json");

    if (!report.structural_pass()) return kExitTestFailure;
    if (!report.gate_pass() && !cfg.solver.override_assumptions) return kExitTestFailure;
    if (!violations.empty()) return kExitTestFailure;
    return kExitOk;
}

int run_forward(const ExperimentConfig& cfg) {
    RunManifest manifest(cfg, "forward");
    const auto t0 = Clock::now();
    const auto model = cfg.build_model();
    const TimeGrid grid = TimeGrid::from_times(0.0, cfg.grid.T, cfg.grid.h);
    std::vector<double> x0(static_cast<std::size_t>(cfg.constants.d), 0.0);
    const int workers = resolve_workers(cfg.workers);
    const auto ens = simulate_forward(model, grid, 0.0, x0, lattice_noise(cfg.seed),
                                      cfg.solver.paths, workers);
    const auto stats = ens.node_stats();
    csv::Writer sw(cfg.out_dir / "forward_stats.csv", {"node", "time", "component", "mean",
                                                       "variance"});
    for (std::size_t node = 0; node <= grid.n_steps; ++node)
        for (int c = 0; c < ens.dim(); ++c)
            sw.row({std::to_string(node), csv::number(grid.node(node)), std::to_string(c),
                    csv::number(stats.mean[node * ens.dim() + c]),
                    csv::number(stats.variance[node * ens.dim() + c])});
    manifest.add_output(cfg.out_dir / "forward_stats.csv");

    const auto dump = static_cast<std::size_t>(opt_num(cfg, "dump_paths", 0));
    if (dump > 0) {
        csv::Writer pw(cfg.out_dir / "forward_paths.csv",
                       {"path", "step", "component", "value"});
        for (std::size_t m = 0; m < std::min(dump, ens.n_paths()); ++m)
            for (std::size_t node = 0; node <= grid.n_steps; ++node)
                for (int c = 0; c < ens.dim(); ++c)
                    pw.row({std::to_string(m), std::to_string(node), std::to_string(c),
                            csv::number(ens.state(m, node)[c])});
        manifest.add_output(cfg.out_dir / "forward_paths.csv");
    }

    const double mid = grid.node(grid.n_steps / 2);
    const double flow_dev = check_flow_property(model, grid, 0.0, x0, mid,
                                                lattice_noise(cfg.seed), 64, workers);
    const double shift_dev = check_shift_property(model, 0.0, cfg.grid.T, x0,
                                                  static_cast<long long>(grid.n_steps / 4),
                                                  cfg.grid.h, cfg.seed, 64, workers);
    csv::Writer cw(cfg.out_dir / "forward_checks.csv", {"check", "deviation"});
    cw.row({"flow_property", csv::number(flow_dev)});
    cw.row({"shift_property", csv::number(shift_dev)});
    manifest.add_output(cfg.out_dir / "forward_checks.csv");
    manifest.stage_done("forward", std::chrono::duration<double>(Clock::now() - t0).count());
    manifest.write(cfg.out_dir / "manifest.json");
    return (flow_dev == 0.0 && shift_dev == 0.0) ? kExitOk : kExitTestFailure;
}

int run_solve(const ExperimentConfig& cfg) {
    RunManifest manifest(cfg, "solve");
    const auto t0 = Clock::now();
    const auto model = cfg.build_model();
    const TimeGrid grid = TimeGrid::from_times(0.0, cfg.grid.T, cfg.grid.h);
    std::vector<double> x0(static_cast<std::size_t>(cfg.constants.d), 0.0);
    SolverConfig solver = cfg.solver;
    solver.workers = resolve_workers(cfg.workers);
    const auto forward = simulate_forward(model, grid, 0.0, x0, lattice_noise(cfg.seed),
                                          solver.paths, solver.workers);
    const auto bhat = IncrementArray::generate(
        grid, model.coefficients.env_dim,
        StreamKey{cfg.seed, stream_id(StreamKind::env_noise, 0)});
    const double terminal_c = opt_num(cfg, "terminal_constant", 0.0);
    const auto sol = solve_finite_horizon(
        model, grid, [terminal_c](std::span<const double>) { return terminal_c; }, forward,
        bhat, solver);
    sol.write_csv(cfg.out_dir / "solution_coefficients.csv");
    manifest.add_output(cfg.out_dir / "solution_coefficients.csv");

    csv::Writer w(cfg.out_dir / "solution_values.csv", {"node", "time", "y_at_origin",
                                                        "z_at_origin"});
    for (std::size_t node = sol.first_node(); node <= sol.last_node(); ++node) {
        const auto v = sol.evaluate(node, x0);
        w.row({std::to_string(node), csv::number(grid.node(node)), csv::number(v.y),
               csv::number(v.z[0])});
    }
    manifest.add_output(cfg.out_dir / "solution_values.csv");
    manifest.stage_done("solve", std::chrono::duration<double>(Clock::now() - t0).count());
    manifest.write(cfg.out_dir / "manifest.json");
    return kExitOk;
}

int run_stationary(const ExperimentConfig& cfg) {
    RunManifest manifest(cfg, "stationary");
    const auto t0 = Clock::now();
    const auto model = cfg.build_model();
    SolverConfig solver = cfg.solver;
    solver.workers = 1;
    std::vector<double> t_grid = {0.25 * cfg.grid.T, 0.75 * cfg.grid.T};
    std::vector<double> x_grid = {0.0};
    if (cfg.subcommand_options.contains("t_grid"))
        t_grid = cfg.subcommand_options.at("t_grid").get<std::vector<double>>();
    if (cfg.subcommand_options.contains("x_grid"))
        x_grid = cfg.subcommand_options.at("x_grid").get<std::vector<double>>();
    const auto field = build_stationary_field_ensemble(
        model, cfg.grid.T, t_grid, x_grid, cfg.environments, cfg.seed, cfg.epsilon, cfg.grid.h,
        solver, resolve_workers(cfg.workers));
    field.write_csv(cfg.out_dir / "stationary_field.csv",
                    cfg.out_dir / "stationary_convergence.csv");
    manifest.add_output(cfg.out_dir / "stationary_field.csv");
    manifest.add_output(cfg.out_dir / "stationary_convergence.csv");
    manifest.stage_done("stationary", std::chrono::duration<double>(Clock::now() - t0).count());
    manifest.write(cfg.out_dir / "manifest.json");
    return kExitOk;
}

int run_doss(const ExperimentConfig& cfg) {
    RunManifest manifest(cfg, "doss");
    const auto t0 = Clock::now();
    const auto model = cfg.build_model();
    if (model.coefficients.state_dim != 1)
        throw std::invalid_argument("doss: flow grids are built for 1-d states");
    const TimeGrid grid = TimeGrid::from_times(0.0, cfg.grid.T, cfg.grid.h);
    std::vector<double> x_axis, y_axis;
    for (double v = -1; v <= 1 + 1e-12; v += 0.25) x_axis.push_back(v);
    for (double v = -4; v <= 4 + 1e-12; v += 0.125) y_axis.push_back(v);
    const auto b = IncrementArray::generate(
        grid, model.coefficients.env_dim,
        StreamKey{cfg.seed, stream_id(StreamKind::env_noise, 0)});
    const auto flow =
        solve_flow(model.coefficients, b, x_axis, y_axis, resolve_workers(cfg.workers));
    csv::Writer fw(cfg.out_dir / "flow.csv", {"time", "x", "y", "lambda"});
    const std::size_t t_stride = std::max<std::size_t>(1, grid.n_steps / 16);
    for (std::size_t it = 0; it <= grid.n_steps; it += t_stride)
        for (std::size_t ix = 0; ix < x_axis.size(); ++ix)
            for (std::size_t iy = 0; iy < y_axis.size(); iy += 4)
                fw.row({csv::number(grid.node(it)), csv::number(x_axis[ix]),
                        csv::number(y_axis[iy]), csv::number(flow.value(it, ix, iy))});
    manifest.add_output(cfg.out_dir / "flow.csv");

    // Transformed stationary field on a small environment set.
    SolverConfig solver = cfg.solver;
    solver.workers = 1;
    const std::vector<double> t_grid = {0.25 * cfg.grid.T, 0.75 * cfg.grid.T};
    const std::vector<double> x_grid = {0.0};
    const auto envs = std::min<std::size_t>(cfg.environments, 16);
    const auto field =
        build_stationary_field_ensemble(model, cfg.grid.T, t_grid, x_grid, envs, cfg.seed,
                                        cfg.epsilon, cfg.grid.h, solver,
                                        resolve_workers(cfg.workers));
    const auto transformed = transform_field(field, model.coefficients, cfg.seed, cfg.grid.h,
                                             y_axis, resolve_workers(cfg.workers));
    csv::Writer tw(cfg.out_dir / "transformed_field.csv", {"environment", "t", "x", "vtilde"});
    for (std::size_t e = 0; e < envs; ++e)
        for (std::size_t it = 0; it < t_grid.size(); ++it)
            tw.row({std::to_string(transformed.env_index[e]), csv::number(t_grid[it]),
                    csv::number(x_grid[0]), csv::number(transformed.at(e, it, 0))});
    manifest.add_output(cfg.out_dir / "transformed_field.csv");

    // Residual diagnostic on the flat-in-x field; time-rough environments are
    // handled with a mollified path, recorded in the table.
    std::vector<double> g_probe(static_cast<std::size_t>(model.coefficients.env_dim));
    const double origin[] = {0.0};
    model.coefficients.env_coeff(origin, 0.0, g_probe);
    bool noise_free = true;
    for (double gv : g_probe) noise_free &= gv == 0.0;
    ResidualTable table;
    if (noise_free) {
        std::vector<double> vt((grid.n_steps + 1) * x_axis.size(), 0.0);
        for (std::size_t it = 0; it <= grid.n_steps; ++it)
            for (std::size_t ix = 0; ix < x_axis.size(); ++ix)
                vt[it * x_axis.size() + ix] = field.slices.front().values[0];
        table = pde_residual(flow, model, vt);
    } else {
        const std::size_t window = static_cast<std::size_t>(opt_num(cfg, "mollify_window", 10));
        std::vector<double> db(grid.n_steps * model.coefficients.env_dim);
        for (int c = 0; c < model.coefficients.env_dim; ++c) {
            const auto path = mollified_path(b, window, c);
            for (std::size_t i = 0; i < grid.n_steps; ++i)
                db[i * model.coefficients.env_dim + c] = path[i + 1] - path[i];
        }
        const auto smooth_flow = solve_flow(model.coefficients, db, grid, x_axis, y_axis,
                                            resolve_workers(cfg.workers));
        std::vector<double> vt((grid.n_steps + 1) * x_axis.size(), 0.0);
        for (std::size_t it = 0; it <= grid.n_steps; ++it)
            for (std::size_t ix = 0; ix < x_axis.size(); ++ix)
                vt[it * x_axis.size() + ix] = field.slices.front().values[0];
        table = pde_residual(smooth_flow, model, vt);
        table.mollified = true;
    }
    csv::Writer rw(cfg.out_dir / "pde_residual.csv", {"t", "x", "residual", "mollified"});
    for (std::size_t i = 0; i < table.residual.size(); ++i)
        rw.row({csv::number(table.t[i]), csv::number(table.x[i]),
                csv::number(table.residual[i]), table.mollified ? "1" : "0"});
    manifest.add_output(cfg.out_dir / "pde_residual.csv");
    manifest.stage_done("doss", std::chrono::duration<double>(Clock::now() - t0).count());
    manifest.write(cfg.out_dir / "manifest.json");
    return kExitOk;
}

int run_test_stationarity(const ExperimentConfig& cfg) {
    RunManifest manifest(cfg, "test-stationarity");
    const auto t0 = Clock::now();
    const auto model = cfg.build_model();
    SolverConfig solver = cfg.solver;
    solver.workers = 1;
    std::vector<double> x0(static_cast<std::size_t>(cfg.constants.d), 0.0);

    const double calibrated = calibrate_shift_tolerance(
        model, 0.0, static_cast<long long>(std::llround(0.25 / cfg.grid.h)), x0, cfg.seed + 7,
        20, cfg.epsilon, cfg.grid.h, solver);

    csv::Writer sw(cfg.out_dir / "shift_reports.csv",
                   {"t", "r", "deviation", "tolerance", "pass"});
    bool all_pass = true;
    for (const double t : {0.0, 0.25}) {
        for (const long long r :
             {0ll, static_cast<long long>(std::llround(0.25 / cfg.grid.h)),
              static_cast<long long>(std::llround(0.5 / cfg.grid.h))}) {
            const auto rep = crude_stationarity_check(model, t, r, x0, cfg.seed, 0, cfg.epsilon,
                                                      cfg.grid.h, solver, calibrated);
            all_pass &= rep.pass;
            sw.row({csv::number(rep.t), csv::number(rep.r), csv::number(rep.deviation),
                    csv::number(rep.tolerance), rep.pass ? "1" : "0"});
        }
    }
    manifest.add_output(cfg.out_dir / "shift_reports.csv");

    const std::vector<double> t_grid = {0.25 * cfg.grid.T, 0.75 * cfg.grid.T};
    const std::vector<double> x_grid = {0.0};
    const auto field = build_stationary_field_ensemble(
        model, cfg.grid.T, t_grid, x_grid, std::max<std::size_t>(cfg.environments, 200),
        cfg.seed, cfg.epsilon, cfg.grid.h, solver, resolve_workers(cfg.workers));
    const auto law = law_stationarity_test(field, 0, 1, 0);
    csv::Writer lw(cfg.out_dir / "law_reports.csv",
                   {"statistic", "p_value", "mean_diff", "variance_diff", "pass"});
    lw.row({csv::number(law.statistic), csv::number(law.p_value), csv::number(law.mean_diff),
            csv::number(law.variance_diff), law.pass ? "1" : "0"});
    manifest.add_output(cfg.out_dir / "law_reports.csv");

    // Human-readable summary.
    std::ofstream summary(cfg.out_dir / "summary.txt");
    summary << "shift checks: " << (all_pass ? "pass" : "FAIL")
            << " (calibrated tolerance " << calibrated << ")\n"
            << "law test: KS statistic " << law.statistic << ", p " << law.p_value << " -> "
            << (law.pass ? "pass" : "FAIL") << "\n";
    summary.close();
    manifest.add_output(cfg.out_dir / "summary.txt");
    manifest.stage_done("test-stationarity",
                        std::chrono::duration<double>(Clock::now() - t0).count());
    manifest.write(cfg.out_dir / "manifest.json");
    return (all_pass && law.pass) ? kExitOk : kExitTestFailure;
}

int run_bench(const ExperimentConfig& cfg) {
    RunManifest manifest(cfg, "bench");
    const auto t0 = Clock::now();
    const auto results =
        run_full_acceptance(cfg.out_dir, cfg.seed, resolve_workers(cfg.workers));
    csv::Writer w(cfg.out_dir / "acceptance.csv", {"criterion", "name", "pass", "detail"});
    bool ok = true;
    for (const auto& r : results) {
        w.row({std::to_string(r.id), r.name, r.pass ? "1" : "0", r.detail});
        manifest.stage_done("criterion " + std::to_string(r.id), r.seconds);
        ok &= r.pass;
        std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.name
                  << " — " << r.detail << "\n";
    }
    manifest.add_output(cfg.out_dir / "acceptance.csv");
    manifest.stage_done("bench", std::chrono::duration<double>(Clock::now() - t0).count());
    manifest.write(cfg.out_dir / "manifest.json");
    return ok ? kExitOk : kExitTestFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pathwise stationary solutions of parabolic SPDEs via infinite-horizon "
                 "backward doubly stochastic differential equations"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "JSON configuration file");
    app.add_option("--seed", opt.seed, "root seed")->each([&](const std::string&) {
        opt.seed_set = true;
    });
    app.add_option("--out", opt.out, "output directory");
    app.add_option("--workers", opt.workers, "worker count (0 = all cores)");
    app.add_flag("--override-assumptions", opt.override_assumptions,
                 "solve even when margin conditions fail");

    const std::map<std::string, int (*)(const ExperimentConfig&)> commands = {
        {"check", run_check},           {"forward", run_forward},
        {"solve", run_solve},           {"stationary", run_stationary},
        {"doss", run_doss},             {"test-stationarity", run_test_stationarity},
        {"bench", run_bench},
    };
    for (const auto& [name, fn] : commands) {
        (void)fn;
        app.add_subcommand(name)->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        const auto cfg = load_config(opt, sub);
        return commands.at(sub)(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure in '" << sub << "': " << e.what() << "\n";
        return kExitNumericFailure;
    }
}
