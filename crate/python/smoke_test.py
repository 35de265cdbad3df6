"""Quick end-to-end check of the wavemetro Python module.

Build and run from the repository root:

    cargo build -p wavemetro-py --release --features extension-module
    cp target/release/libwavemetro_py.so python/wavemetro.so
    python3 python/smoke_test.py
"""

import math
import random

import wavemetro


def check_symbols():
    bits = wavemetro.prbs(7, 127 * 4)
    assert len(bits) == 508 and sum(bits[:127]) == 64
    syms = wavemetro.map_symbols(bits, "16qam")
    power = sum(abs(s) ** 2 for s in syms) / len(syms)
    assert abs(power - 1.0) < 0.05, power
    _, decided = wavemetro.decide(syms, "16qam")
    assert decided == bits


def check_evm_and_ber():
    bits = wavemetro.prbs(15, 2 * 20000)
    tx = wavemetro.map_symbols(bits, "qpsk")
    rx = wavemetro.add_awgn(tx, 10.0, seed=7)
    e = wavemetro.evm(rx, "qpsk", reference=tx)
    assert abs(e["snr_db"] - 10.0) < 0.3, e
    _, rx_bits = wavemetro.decide(rx, "qpsk")
    ber, errors, n, (lo, hi) = wavemetro.count_bit_errors(rx_bits, bits)
    assert n == len(bits) and lo <= ber <= hi
    theory = wavemetro.ber_from_snr(10.0, "qpsk")
    assert abs(theory - wavemetro.q_function(math.sqrt(10.0))) < 1e-15
    rows = wavemetro.ber_sweep("qpsk", [6.0, 8.0], 20000, 1)
    assert rows == wavemetro.ber_sweep("qpsk", [6.0, 8.0], 20000, 1)
    assert rows[0][2] > rows[1][2]


def check_interleave():
    plan = wavemetro.interleave_plan("25", "7", 127)
    assert (plan.p, plan.q, plan.required_samples) == (25, 7, 25 * 127)
    dense = [math.sin(0.01 * k) for k in range(plan.required_samples)]
    acquired = [dense[u] for u in plan.positions()]
    assert plan.reconstruct(acquired) == dense
    try:
        wavemetro.interleave_plan("25", "7", 7 * 18)
    except wavemetro.WavemetroError as err:
        assert "coprime" in str(err)
    else:
        raise AssertionError("expected a coprimality error")
    try:
        wavemetro.interleave_plan("2.5e10", "1", 127)
    except ValueError:
        pass
    else:
        raise AssertionError("float rates must be rejected")


def pulse(n, dt, center, width):
    return [math.exp(-(((k * dt) - center) / width) ** 2) for k in range(n)]


def check_cmrr_and_delay():
    n, dt = 1024, 1e-12
    vn = pulse(n, dt, 300e-12, 8e-12)
    vp = [0.9 * x for x in wavemetro.fractional_delay(vn, dt, -2.3e-12)]
    r = wavemetro.cmrr(vp, vn, dt, band=(1e9, 40e9), tau_window=20e-12)
    assert abs(r["alpha"] - 1 / 0.9) < 1e-9, r["alpha"]
    assert abs(r["tau"] - 2.3e-12) < 1e-15, r["tau"]
    assert r["min_rejection_db"] > 150


def check_jitter():
    rng = random.Random(3)
    n, dt, f_ref, f_sig = 2000, 5e-12, 1e9, 10e9
    sigs, refs = [], []
    for _ in range(20):
        d = rng.uniform(-1e-12, 1e-12)
        t = [k * dt - d for k in range(n)]
        sigs.append([math.sin(2 * math.pi * f_sig * x) for x in t])
        refs.append([math.cos(2 * math.pi * f_ref * x) for x in t])
    est = wavemetro.jitter_estimate(refs, dt, f_ref)
    assert len(est["offsets"]) == 20 and not any(est["ambiguous"])
    avg = wavemetro.jitter_compensate(sigs, refs, dt, f_ref)
    assert abs(max(avg) - 1.0) < 1e-3


def check_wavesplit():
    n, dt, v = 512, 1e-12, 2e8
    fwd = pulse(n, dt, 100e-12, 5e-12)
    rev = pulse(n, dt, 300e-12, 5e-12)
    positions = [0.0, 1e-3, 2.5e-3]
    records = []
    for z in positions:
        a = wavemetro.fractional_delay(fwd, dt, z / v)
        b = wavemetro.fractional_delay(rev, dt, -z / v)
        records.append([x + 0.5 * y for x, y in zip(a, b)])
    r = wavemetro.split_waves(records, dt, positions, v)
    assert len(r["forward"]) == len(r["freqs"])
    assert r["singular_mask"].count(True) <= 1


if __name__ == "__main__":
    for check in (check_symbols, check_evm_and_ber, check_interleave, check_cmrr_and_delay, check_jitter, check_wavesplit):
        check()
        print(f"ok  {check.__name__}")
    print("smoke test passed")
