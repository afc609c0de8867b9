"""Smoke test for the bibee_py extension.

    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/*.whl
    python python/smoke_test.py
"""

import math
import os
import tempfile

import bibee_py as b

K = b.COULOMB_CONSTANT


def born(radius, e1, e2, q):
    return -0.5 * K * (1 / e1 - 1 / e2) * q * q / radius


def close(a, c, tol):
    return abs(a - c) <= tol * abs(c)


def main():
    ion = b.ChargeDistribution([(0.0, 0.0, 0.0, 1.0)], "ion")
    model = b.SphereModel(2.0, 4.0, 80.0)
    kirk, cfa, p = b.sphere_energies(ion, model, ["kirkwood", "cfa", "p"])
    expected = born(2.0, 4.0, 80.0, 1.0)
    assert close(kirk.value, expected, 1e-12), kirk
    assert close(cfa.value, expected, 1e-12), cfa
    assert p.value < kirk.value

    # P_2^1(x) = 3x sqrt(1-x^2) without the Condon-Shortley sign
    x = 0.3
    assert close(b.assoc_legendre(2, 1, x), 3 * x * math.sqrt(1 - x * x), 1e-14)
    assert close(b.assoc_legendre(3, 0, x), 0.5 * (5 * x**3 - 3 * x), 1e-14)

    pair = b.ChargeDistribution([(1.0, 0.0, 0.5, 0.7), (-0.5, 1.0, 0.0, -0.4)], "pair")
    moments = dict(((n, m), c) for n, m, c in b.source_moments(pair, 4))
    assert close(moments[(0, 0)].real, 0.3, 1e-14)

    big = b.SphereModel(5.0, 4.0, 80.0, n_max=60)
    total = 0.5 * sum(b.pair_interaction(qi, qj, big) for qi in pair.charges for qj in pair.charges)
    (direct,) = b.sphere_energies(pair, big, ["kirkwood"], escalate=False)
    assert close(total, direct.value, 1e-10)

    try:
        b.sphere_energies(b.ChargeDistribution([(2.0, 0.0, 0.0, 1.0)]), model, ["kirkwood"])
    except b.BibeeError:
        pass
    else:
        raise AssertionError("charge on the boundary accepted")

    surface = b.Surface.icosphere(2.0, 3)
    assert len(surface) == 1280
    assert surface.contains((0.0, 0.0, 0.0)) and not surface.contains((3.0, 0.0, 0.0))
    solver = b.BemSolver(surface)
    exact = solver.energy(ion, 4.0, 80.0)
    assert close(exact.value, expected, 0.01), exact

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "s.off")
        with open(path, "w") as f:
            f.write(surface.to_off())
        again = b.Surface.load(path)
        assert len(again) == len(surface)
        pqr = os.path.join(d, "pair.pqr")
        with open(pqr, "w") as f:
            f.write(pair.to_pqr())
        assert b.ChargeDistribution.from_pqr(pqr).charges == pair.charges

    config = "seed = 3\nnum_configs = 20\n"
    first = b.run_comparison(config)
    assert first == b.run_comparison(config)
    assert first["bound_violations"] == 0
    assert b.random_sphere_config(3, 0, config).charges == b.random_sphere_config(3, 0, config).charges

    sweep = b.lambda_sweep("seed = 1\nnum_configs = 10\nlambda_grid = [-0.1, -0.2]\n")
    assert sweep["best_lambda"] in (-0.1, -0.2)

    print("bibee_py smoke test passed")


if __name__ == "__main__":
    main()
