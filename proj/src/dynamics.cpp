#include "mrulab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrulab/threadpool.hpp"

namespace mrulab {

namespace {
constexpr double kMarginalBand = 1e-9;

double sech2(double u) {
    const double c = std::cosh(u);
    return 1.0 / (c * c);
}
}  // namespace

ScalarSystem toy_cell_system(const ToyCellParams& p) {
    if (!(p.c > 0.0 && p.c <= 1.0)) {
        throw std::invalid_argument("toy cell: c must be in (0, 1]");
    }
    const double beta = p.beta, c = p.c;
    ScalarSystem sys;
    sys.residual = [beta](double h, double x) {
        return h - std::tanh(x + (beta + 1.0) * h);
    };
    sys.step = [beta, c](double h, double x) {
        return (1.0 - c) * h + c * std::tanh(x + (beta + 1.0) * h);
    };
    sys.step_dh = [beta, c](double h, double x) {
        return (1.0 - c) + c * (beta + 1.0) * sech2(x + (beta + 1.0) * h);
    };
    return sys;
}

double brc_steady_residual(const BrcParams& p, double x, double h) {
    const double a = 1.0 + std::tanh(p.u_a * x + p.w_a * h + p.b_a);
    return std::tanh(p.u_h * x + a * h + p.b_h) - h;
}

ScalarSystem brc_system(const BrcParams& p) {
    ScalarSystem sys;
    sys.residual = [p](double h, double x) { return brc_steady_residual(p, x, h); };
    // One-step map of the clocked BRC update; c_t is the sigmoid update gate.
    sys.step = [p](double h, double x) {
        const double c = 1.0 / (1.0 + std::exp(-(p.u_c * x + p.w_c * h + p.b_c)));
        const double a = 1.0 + std::tanh(p.u_a * x + p.w_a * h + p.b_a);
        return c * h + (1.0 - c) * std::tanh(p.u_h * x + a * h + p.b_h);
    };
    sys.step_dh = [p](double h, double x) {
        const double cz = p.u_c * x + p.w_c * h + p.b_c;
        const double c = 1.0 / (1.0 + std::exp(-cz));
        const double az = p.u_a * x + p.w_a * h + p.b_a;
        const double a = 1.0 + std::tanh(az);
        const double hz = p.u_h * x + a * h + p.b_h;
        const double th = std::tanh(hz);
        const double dc = c * (1.0 - c) * p.w_c;
        const double da = sech2(az) * p.w_a;
        return dc * h + c + (1.0 - c) * sech2(hz) * (da * h + a) - dc * th;
    };
    return sys;
}

ClockTrace simulate_internal_clock(const ToyCellParams& p, double x, double h0,
                                   size_t n_iters) {
    if (n_iters < 1) throw std::invalid_argument("simulate_internal_clock: N >= 1");
    ScalarSystem sys = toy_cell_system(p);
    ClockTrace trace;
    trace.h0 = h0;
    trace.x = x;
    trace.values.resize(n_iters + 1);
    trace.values[0] = h0;
    for (size_t n = 1; n <= n_iters; ++n) {
        trace.values[n] = sys.step(trace.values[n - 1], x);
    }
    return trace;
}

std::vector<EquilibriumPoint> solve_steady_states(const ScalarSystem& sys,
                                                  double x, double h_lo,
                                                  double h_hi, size_t grid_points,
                                                  double tol) {
    if (grid_points < 2001) {
        throw std::invalid_argument("solve_steady_states: grid must have >= 2001 points");
    }
    if (!(tol > 0.0)) throw std::invalid_argument("solve_steady_states: tol > 0");

    std::vector<EquilibriumPoint> roots;
    const double dh = (h_hi - h_lo) / static_cast<double>(grid_points - 1);
    double prev_h = h_lo;
    double prev_f = sys.residual(prev_h, x);
    auto push_root = [&](double h) {
        EquilibriumPoint pt;
        pt.x = x;
        pt.h = h;
        const double slope = std::abs(sys.step_dh(h, x));
        pt.marginal = std::abs(slope - 1.0) < kMarginalBand;
        pt.stable = slope < 1.0 && !pt.marginal;
        // Dedup: grid nodes that are exact roots would otherwise appear twice.
        if (!roots.empty() && std::abs(roots.back().h - h) < dh * 0.5) return;
        roots.push_back(pt);
    };
    if (prev_f == 0.0) push_root(prev_h);
    for (size_t i = 1; i < grid_points; ++i) {
        const double h = h_lo + dh * static_cast<double>(i);
        const double f = sys.residual(h, x);
        if (f == 0.0) {
            push_root(h);
        } else if (prev_f != 0.0 && ((prev_f < 0.0) != (f < 0.0))) {
            // Bisection on the bracket [prev_h, h].
            double lo = prev_h, hi = h, flo = prev_f;
            double mid = 0.5 * (lo + hi);
            for (int it = 0; it < 200; ++it) {
                mid = 0.5 * (lo + hi);
                const double fm = sys.residual(mid, x);
                if (std::abs(fm) <= tol) break;
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            push_root(mid);
        }
        prev_h = h;
        prev_f = f;
    }
    return roots;
}

std::vector<EquilibriumPoint> sweep_bifurcation(const ScalarSystem& sys,
                                                double x_min, double x_max,
                                                size_t n_x, double h_lo,
                                                double h_hi, size_t grid_points,
                                                double tol) {
    if (n_x < 2) throw std::invalid_argument("sweep_bifurcation: n_x >= 2");
    std::vector<std::vector<EquilibriumPoint>> per_x(n_x);
    const double dx = (x_max - x_min) / static_cast<double>(n_x - 1);
    ThreadPool::instance().parallel_for(n_x, [&](size_t i) {
        const double x = x_min + dx * static_cast<double>(i);
        per_x[i] = solve_steady_states(sys, x, h_lo, h_hi, grid_points, tol);
    });
    std::vector<EquilibriumPoint> all;
    for (auto& pts : per_x) {
        std::sort(pts.begin(), pts.end(),
                  [](const EquilibriumPoint& a, const EquilibriumPoint& b) {
                      return a.h < b.h;
                  });
        all.insert(all.end(), pts.begin(), pts.end());
    }
    return all;
}

}  // namespace mrulab
