"""Smoke test for the curlgrid extension module.

Build and install first, e.g.

    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/curlgrid-*.whl
    python python/smoke_test.py
"""

import math
import os
import sys
import tempfile

import curlgrid


def check(cond, msg):
    if not cond:
        print(f"FAIL {msg}")
        sys.exit(1)
    print(f"ok   {msg}")


def main():
    g = curlgrid.GridSpec(2, 17)
    check(len(g) == 289 and g.spacing == 1 / 16, "grid shape")

    ident = curlgrid.Transformation.identity(g)
    jac = curlgrid.jacobian_det(ident)
    check(max(abs(v - 1) for v in jac.values()) < 1e-14, "identity has unit Jacobian")

    c = curlgrid.poincare_constant(curlgrid.GridSpec(2, 3))
    check(abs(c - 1 / 16) < 1e-15, "Poincare constant at N=3")

    rhs_vals = [
        -2 * math.pi**2 * math.sin(math.pi * x) * math.sin(math.pi * y)
        for x, y in (g.coords(i) for i in range(len(g)))
    ]
    s = curlgrid.solve_dirichlet(curlgrid.ScalarField(g, rhs_vals))
    peak = max(s.values(), key=abs)
    check(abs(peak - 1) < 1e-2, "Poisson solve recovers sin sin")

    g33 = curlgrid.GridSpec(2, 33)
    t0 = curlgrid.Transformation.sine_target(g33, 0.05)
    t1, _ = curlgrid.reconstruct(t0, use_curl=False, max_outer=200)
    t2, trace = curlgrid.reconstruct(t0, use_curl=True, max_outer=200)
    check(t2.distance(t0) < t1.distance(t0), "curl target improves reconstruction")
    check(all(b < a for a, b in zip(trace["ssd"], trace["ssd"][1:])), "ssd strictly decreases")

    u = curlgrid.random_zero_boundary(g33, 2, seed=3)
    rows = curlgrid.chain_report(u, curlgrid.poincare_constant(g33))
    check(all(p for _, _, _, p, cond in rows if not cond), "inequality chain holds")

    b = curlgrid.bound_sequence(0.1, 1 / (2 * math.pi**2), 5)
    check(b["convergent"] and abs(b["bound_u"][0] - 5.066e-4) < 1e-7, "bound sequence")

    seed = curlgrid.scaled_seed(curlgrid.GridSpec(3, 9), 0.1, seed=1)
    run = curlgrid.fixed_point(seed, 40)
    check(not run["diverged"] and run["u_l2"][-1] < 1e-10, "fixed point contracts to zero")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "white.pgm")
        with open(path, "wb") as fh:
            fh.write(b"P5\n4 4\n255\n" + bytes([255] * 16))
        m = curlgrid.monitor_from_image(path, g)
        check(abs(m.f0.integral() - 1) < 1e-12, "white image gives unit-mass monitor")

    try:
        curlgrid.GridSpec(4, 9)
    except ValueError:
        check(True, "bad grid raises ValueError")
    else:
        check(False, "bad grid raises ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
