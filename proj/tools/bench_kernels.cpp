// Compares the OpenMP kernels against their serial reference implementations:
// asserts bit-identical results, and in timing mode reports the speedup of
// the parallel paths (forward simulation, design assembly, environment sweep).

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "bdsde/horizon.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/regression.hpp"

using namespace bdsde;
using Clock = std::chrono::steady_clock;

namespace {

double run_ms(const std::function<void()>& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

ModelSpec bench_model() {
    LinearModelParams p;
    p.mu = 1;
    p.b1 = 0.5;
    p.s0 = 0.8;
    p.g0 = {1.0};
    ModelSpec m;
    m.coefficients = make_linear_coefficients(p);
    m.constants.mu = 1;
    m.constants.K = 0.5;
    m.constants.Kprime = 0.8;
    m.constants.p = 4;
    m.constants.C1 = 1;
    m.constants.L = 0.5;
    return m;
}

bool identical(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t paths = 20000, steps = 500, environments = 16;
    bool check_only = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--paths" && i + 1 < argc) paths = std::strtoull(argv[++i], nullptr, 10);
        else if (arg == "--steps" && i + 1 < argc) steps = std::strtoull(argv[++i], nullptr, 10);
        else if (arg == "--environments" && i + 1 < argc)
            environments = std::strtoull(argv[++i], nullptr, 10);
        else if (arg == "--check-only") check_only = true;
        else {
            std::fprintf(stderr,
                         "usage: bench_kernels [--paths N] [--steps N] [--environments N] "
                         "[--check-only]\n");
            return 2;
        }
    }

    const auto model = bench_model();
    const TimeGrid grid{1e-2, 0, steps};
    const double x0[] = {0.5};
    const int nw = hardware_workers();
    std::printf("hardware workers: %d\n", nw);
    int failures = 0;

    // Forward path kernel.
    ForwardEnsemble serial = simulate_forward_serial(model, grid, 0.0, x0, lattice_noise(9), paths);
    ForwardEnsemble parallel = simulate_forward(model, grid, 0.0, x0, lattice_noise(9), paths, nw);
    if (!identical(serial.flat(), parallel.flat())) {
        std::printf("FAIL forward kernel: serial and parallel outputs differ\n");
        ++failures;
    } else {
        std::printf("OK   forward kernel: bit-identical\n");
    }
    if (!check_only) {
        const double ts = run_ms([&] {
            volatile auto e = simulate_forward_serial(model, grid, 0.0, x0, lattice_noise(9),
                                                      paths).n_paths();
            (void)e;
        });
        const double tp = run_ms([&] {
            volatile auto e =
                simulate_forward(model, grid, 0.0, x0, lattice_noise(9), paths, nw).n_paths();
            (void)e;
        });
        std::printf("     forward %zu paths x %zu steps: serial %.0f ms, %d workers %.0f ms "
                    "(%.2fx)\n",
                    paths, steps, ts, nw, tp, ts / tp);
    }

    // Design assembly kernel.
    const auto basis = NormalizedBasis::fit(BasisSpec{BasisSpec::Kind::polynomial, 3, {}},
                                            serial, steps / 2);
    const auto d1 = assemble_design(basis, serial, steps / 2, 1);
    const auto dn = assemble_design(basis, serial, steps / 2, nw);
    if ((d1 - dn).cwiseAbs().maxCoeff() != 0.0) {
        std::printf("FAIL design kernel: serial and parallel designs differ\n");
        ++failures;
    } else {
        std::printf("OK   design kernel: bit-identical\n");
    }
    if (!check_only) {
        const double ts =
            run_ms([&] { volatile auto r = assemble_design(basis, serial, steps / 2, 1).rows(); (void)r; });
        const double tp =
            run_ms([&] { volatile auto r = assemble_design(basis, serial, steps / 2, nw).rows(); (void)r; });
        std::printf("     design %zu x %zu: serial %.1f ms, %d workers %.1f ms (%.2fx)\n", paths,
                    basis.size(), ts, nw, tp, ts / tp);
    }

    // Environment sweep (stationary field over independent environments).
    SolverConfig config;
    config.paths = 48;
    config.basis.degree = 0;
    config.workers = 1;
    const double t_grid[] = {0.25};
    const double x_grid[] = {0.0};
    auto sweep = [&](int workers) {
        return build_stationary_field_ensemble(model, 0.5, t_grid, x_grid, environments, 11,
                                               2e-2, 1e-2, config, workers);
    };
    const auto f1 = sweep(1);
    const auto fn = sweep(nw);
    bool same = f1.slices.size() == fn.slices.size();
    for (std::size_t e = 0; same && e < f1.slices.size(); ++e)
        same = f1.slices[e].values == fn.slices[e].values;
    if (!same) {
        std::printf("FAIL environment sweep: worker counts disagree\n");
        ++failures;
    } else {
        std::printf("OK   environment sweep: bit-identical across worker counts\n");
    }
    if (!check_only) {
        const double ts = run_ms([&] { volatile auto f = sweep(1).slices.size(); (void)f; });
        const double tp = run_ms([&] { volatile auto f = sweep(nw).slices.size(); (void)f; });
        std::printf("     sweep %zu environments: serial %.0f ms, %d workers %.0f ms (%.2fx)\n",
                    environments, ts, nw, tp, ts / tp);
    }

    return failures == 0 ? 0 : 1;
}
