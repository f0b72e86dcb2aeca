#pragma once

#include <functional>
#include <vector>

namespace mrulab {

// Scalar dynamical-systems lab: internal-clock simulation, steady-state
// solving on implicit functions, stability classification, bifurcation
// sweeps. Everything here is f64; tolerances go well below f32 resolution.

struct ToyCellParams {
    double beta = 0.0;  // bifurcation/unfolding parameter
    double c = 0.01;    // update rate, in (0, 1]
};

struct ClockTrace {
    double h0 = 0.0;
    double x = 0.0;
    std::vector<double> values;  // h at internal iterations 0..N
};

struct EquilibriumPoint {
    double x = 0.0;
    double h = 0.0;
    bool stable = false;
    bool marginal = false;  // |df/dh| within 1e-9 of 1; excluded from claims
};

struct BrcParams {
    double u_c = 0.0, w_c = 0.0, b_c = 0.0;
    double u_a = 0.0, w_a = 0.0, b_a = 0.0;
    double u_h = 1.0, b_h = 0.0;
};

// A scalar system under one held input x: residual F(h, x) whose roots are
// the equilibria, the one-step map f(h, x) of the clocked update, and the map
// derivative df/dh used by the stability test |df/dh| < 1.
struct ScalarSystem {
    std::function<double(double h, double x)> residual;
    std::function<double(double h, double x)> step;
    std::function<double(double h, double x)> step_dh;
};

ScalarSystem toy_cell_system(const ToyCellParams& p);
ScalarSystem brc_system(const BrcParams& p);

// values[n] = (1-c) h + c tanh(x + (beta+1) h) iterated N times from h0.
ClockTrace simulate_internal_clock(const ToyCellParams& p, double x, double h0,
                                   size_t n_iters);

// tanh(U_h x + (1 + tanh(U_a x + w_a h + b_a)) h + b_h) - h
double brc_steady_residual(const BrcParams& p, double x, double h);

// All roots of F(., x) bracketed on a uniform h grid over [h_lo, h_hi]
// (>= 2001 points) and refined by bisection to |F| <= tol, each classified
// stable iff |df/dh| < 1. Returns an empty list if no sign change exists
// anywhere (a grid bug for the continuous systems used here).
std::vector<EquilibriumPoint> solve_steady_states(const ScalarSystem& sys,
                                                  double x, double h_lo,
                                                  double h_hi, size_t grid_points,
                                                  double tol);

// Concatenated solve_steady_states over a uniform x grid; rows sorted by x
// then h (the data behind the bifurcation diagrams).
std::vector<EquilibriumPoint> sweep_bifurcation(const ScalarSystem& sys,
                                                double x_min, double x_max,
                                                size_t n_x, double h_lo = -2.0,
                                                double h_hi = 2.0,
                                                size_t grid_points = 2001,
                                                double tol = 1e-12);

}  // namespace mrulab
