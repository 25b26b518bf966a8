"""Smoke test for the squid_grover_py extension. Run after `maturin develop`."""
import math

import squid_grover_py as sg


def main():
    m = sg.phase_gate_matrix()
    for i in range(8):
        for j in range(8):
            want = (-1.0 if i == 7 else 1.0) if i == j else 0.0
            assert abs(m[i][j] / m[0][0] - want) < 1e-10, (i, j, m[i][j])

    run = sg.grover_run("111", 6)
    assert len(run) == 7
    assert abs(run[1]["target_probability"] - 25 / 32) < 1e-12
    assert abs(run[6]["target_probability"] - sg.ideal_success_probability(6)) < 1e-9

    noisy = sg.grover_run("111", 2, gamma3_over_g=0.004)
    assert noisy[2]["target_probability"] < run[2]["target_probability"]

    analytic, simulated = sg.favg_level_decay(0.004)
    assert abs(analytic - simulated) < 1e-5
    f, p = sg.favg_cavity_decay(0.0)
    assert f == 1.0 and p == 1.0
    assert abs(sg.favg_offresonant(0.6) - 1.0) < 0.01

    header, rows = sg.figure("fig3")
    assert header[0] == "gamma3_over_g"
    assert all(abs(a - b) < 1e-12 for a, b in zip(rows[0], [0.0, 1.0, 1.0]))
    try:
        sg.figure("fig9")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown figure accepted")

    t = sg.timing()
    assert 12.9e-9 < t["tau_gate"] < 13.1e-9
    assert "total" in sg.schedule_dump()
    assert not math.isnan(t["tau_algorithm"])
    print("smoke test ok, version", sg.__version__)


if __name__ == "__main__":
    main()
