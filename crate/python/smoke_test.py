#!/usr/bin/env python3
"""Smoke test for the spinrs extension module.

Builds nothing itself: it locates the cdylib produced by
`cargo build -p spinrs-py [--release]`, imports it, and exercises a few
identities end to end.
"""

import math
import pathlib
import shutil
import sys
import tempfile


def locate_cdylib():
    root = pathlib.Path(__file__).resolve().parents[1]
    names = ["libspinrs.so", "libspinrs.dylib", "spinrs.dll"]
    candidates = []
    for profile in ("release", "debug"):
        for name in names:
            p = root / "target" / profile / name
            if p.exists():
                candidates.append(p)
    if not candidates:
        sys.exit(
            "spinrs cdylib not found; run `cargo build -p spinrs-py` "
            "(or --release) first"
        )
    return max(candidates, key=lambda p: p.stat().st_mtime)


def import_module():
    lib = locate_cdylib()
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="spinrs-py-"))
    suffix = ".so" if lib.suffix in (".so", ".dylib") else ".pyd"
    shutil.copy2(lib, tmp / f"spinrs{suffix}")
    sys.path.insert(0, str(tmp))
    import spinrs  # noqa: E402

    return spinrs


def approx(a, b, tol):
    return abs(a - b) <= tol


def main():
    spinrs = import_module()

    # potential value at the quarter period
    gamma = 0.8
    v = spinrs.potential_v(complex(math.pi / 2, 0.0), gamma)
    assert approx(v.real, 0.0, 1e-14) and approx(v.imag, -math.tanh(gamma), 1e-14), v

    # moment map factorization b b^dag = 1 + w w^dag
    w = [complex(0.3, -0.6), complex(1.1, 0.2), complex(-0.4, 0.5)]
    b = spinrs.moment_b(w)
    n = len(w)
    for i in range(n):
        for j in range(n):
            lhs = sum(b[i][k] * b[j][k].conjugate() for k in range(n))
            rhs = (1.0 if i == j else 0.0) + w[i] * w[j].conjugate()
            assert abs(lhs - rhs) < 1e-13, (i, j, lhs, rhs)

    # factorization round trip through iwasawa
    k = [
        [complex(1.2, 0.1), complex(0.3, -0.2)],
        [complex(-0.5, 0.4), complex(0.9, 0.0)],
    ]
    b_l, g_r, g_l, b_r = spinrs.iwasawa(k)
    for i in range(2):
        for j in range(2):
            rec = sum(b_l[i][s] * g_r[j][s].conjugate() for s in range(2))
            assert abs(rec - k[i][j]) < 1e-12, "left factorization"

    # normal form satisfies the constraint and drifts stay tiny
    y = [0.52, 0.168, 0.052]
    nf = spinrs.normal_form(y, 2, 0.5)
    assert nf["residual"] < 1e-10, nf["residual"]

    run = spinrs.simulate(y, 2, 0.5, 1e-3, 0.5, 25)
    assert run["abort"] is None
    assert max(run["tr_l_drift"]) < 1e-9, run["tr_l_drift"]
    assert run["max_constraint_residual"] < 1e-10

    # the exact solver agrees with the integrator on the Lax traces
    exact = spinrs.exact_state(y, 2, 0.5, 0.5)
    for a, b2 in zip(run["tr_l"][-1], exact["tr_l"]):
        assert approx(a, b2, 1e-8 * max(1.0, abs(a))), (a, b2)

    # a verification suite and the rank count
    rep = spinrs.verify("zakrzewski", seed=3, samples=15)
    assert rep["pass"], rep
    full, ham = spinrs.jacobian_rank(2, 2, 0.5, seed=1)
    assert (full, ham) == (6, 2), (full, ham)

    print("spinrs python smoke test: all checks passed")


if __name__ == "__main__":
    main()
