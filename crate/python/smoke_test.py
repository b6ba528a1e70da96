#!/usr/bin/env python3
"""Smoke test for the pydualpol extension module."""

import math
import os
import tempfile

import pydualpol as dp


def main() -> None:
    c = dp.Constellation.qam(6)
    assert len(c) == 64 and c.bits == 6
    energy = sum(abs(a) ** 2 + abs(b) ** 2 for a, b in c.symbols()) / len(c)
    assert abs(energy - 2.0) < 1e-9, energy

    gray = dp.Labeling.gray(c)
    assert gray.quasi_gray_order(c) == 1
    air, air_se = c.air(10.0, samples=20_000, seed=3)
    pair, _ = c.pair(gray, 10.0, samples=20_000, seed=3)
    assert 0.0 < pair <= air + 4 * air_se <= 6.0 + 4 * air_se, (air, pair)
    print(f"QAM64 at 10 dB: AIR {air:.3f}, PAIR {pair:.3f} bits")

    post = c.posterior(c.symbols()[5], 5.0)
    assert abs(sum(post) - 1.0) < 1e-9 and max(range(64), key=post.__getitem__) == 5

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "c.csv")
        c.save(path)
        assert dp.Constellation.load(path).symbols() == c.symbols()

    lam = dp.Constellation.lam(16, generations=5, population=8, samples=500, seed=2)
    assert len(lam) == 16

    g = dp.miesm_phi(2, 5.0)
    back, clamped = dp.miesm_phi_inv(2, g)
    assert abs(back - 5.0) < 0.05 and not clamped
    assert abs(dp.effective_sinr([7.0, 7.0], 4) - 7.0) < 1e-6

    h = [[1 + 0j, 0j], [0j, 1 + 0j]]
    assert all(abs(v - 10.0) < 1e-9 for v in dp.mimo_post_sinr("siso", h, 0.1))
    try:
        dp.mimo_post_sinr("nope", h, 0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown scheme accepted")

    assert abs(dp.cancellation_from_amplitude_error(0.01) - 40.0) < 1e-9
    assert abs(dp.cancellation_from_delay_error(1e6, 1e-7) - 35.72) < 0.01
    b = dp.Budget()
    print(f"default budget SINR {b.sinr_db():.2f} dB")
    try:
        dp.Budget(digital_db=0.0, analog_db=0.0, enob=2.0).required_passive_db(60.0, 200.0)
    except dp.InfeasibleError:
        pass
    else:
        raise AssertionError("infeasible target accepted")

    canc = dp.simulate_canceller(3, 1e-8, 1e6, [(0.0, 1 + 0j), (2.3e-8, 0.2 + 0.1j)])
    assert canc > 20.0, canc

    s = dp.simulate_trip(trip_km=1.0, seed=4)
    assert s["blocks"] == 3600 and math.isfinite(s["mean_throughput_bps"])
    print(f"1 km trip: {s['mean_throughput_bps'] / 1e3:.1f} kbit/s over {s['blocks']} blocks")
    print("smoke test OK")


if __name__ == "__main__":
    main()
