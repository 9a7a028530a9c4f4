"""Smoke test of the compiled `masslab` module.

Build and install first:  pip install maturin && maturin develop -m crates/py/Cargo.toml
"""

import math

import masslab


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    pme = masslab.EquationSpec("pme", 1, m=2.0)
    alpha, beta = pme.exponents()
    assert close(alpha, 1 / 3, 1e-14) and close(beta, 1 / 3, 1e-14)
    assert pme.classify()["regime"] == "Slow"

    fde = masslab.EquationSpec("pme", 3, m=0.2)
    verdict = fde.classify()
    assert verdict["regime"] == "VeryFast" and not verdict["conserves_mass"]
    try:
        fde.exponents()
    except ValueError as e:
        assert "self-similar" in str(e)
    else:
        raise AssertionError("m below the critical exponent has no exponents")

    # m = 2, N = 1: F(y) = (C - y^2/12)_+ with (4/3) sqrt(12) C^{3/2} = 1
    sol = masslab.ClosedFormSolution("BarenblattPME", pme, mass=1.0)
    assert close(sol.C, (3 / (4 * math.sqrt(12))) ** (2 / 3), 1e-12)
    assert close(sol.mass_at(2.0), 1.0, 1e-10)

    run = masslab.solve(pme, sol, t0=1.0, radius=4.0, cells=200, dt=5e-3, checkpoints=[2.0])
    drift = max(abs(m - run["mass"][0]) for m in run["mass"])
    assert drift < 1e-10, drift
    assert run["l1_to_reference"][-1] < 0.02

    rows = masslab.concentration_scan("pme", 3, [5e-3, 2.5e-3])
    assert rows[1][1] < rows[0][1] and all(r[4] for r in rows)

    passed, report = masslab.verify(1)
    assert passed, report
    print("masslab", masslab.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
