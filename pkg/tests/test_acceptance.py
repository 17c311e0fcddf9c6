"""Acceptance suite: one test per numbered criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -s` to see the
lines as they complete."""

import json
import math
import time

import numpy as np
import pytest
from scipy import integrate

from preictal.conditioning import CauchyParams, cauchy_pdf, gaussian_pdf
from preictal.config import EngineConfig
from preictal.detector import AdaptiveThreshold, update_threshold
from preictal.evaluate import (
    baseline_roc_points,
    roc_area,
    score_run,
    threshold_sweep,
)
from preictal.immune import (
    AisParams,
    Antibody,
    Population,
    append_new,
    clonal_step,
    load_bundle,
    match,
    mutation_tick,
    negative_selection_train,
    promote,
    save_bundle,
    self_tolerance_violations,
)
from preictal.pipeline import run_recording
from preictal.recording import SynthSpec, generate_synthetic
from preictal.signature import (
    GLOBAL_MAX,
    LOCAL_MAX,
    PACKED_BYTES,
    Signature,
    pack,
    unpack,
)
from preictal.training import train_population


def criterion(number: int, name: str, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number} {name}: {verdict} ({detail})")
    assert ok, f"criterion {number} {name}: {detail}"


TABLE_PARAMS = AisParams()  # antibodies 50, clones 25, genes 255, cycle 83,
                            # remove 0.3, selection 0.01, diversity 0.64, tp 0.09


@pytest.fixture(scope="module")
def corpus():
    """Training recording plus the 10-recording evaluation corpus."""
    cfg = EngineConfig()  # td 0.23, tp 0.09
    train_rec = generate_synthetic(
        SynthSpec(duration_s=600.0, seizure_times=(100.0, 220.0, 340.0, 460.0),
                  seizure_len_s=20.0, preictal_lead_s=14.0, seed=101)
    )
    t0 = time.perf_counter()
    pop, ranges = train_population([train_rec], cfg, TABLE_PARAMS, seed=42)
    train_time = time.perf_counter() - t0
    recordings = [
        generate_synthetic(
            SynthSpec(duration_s=300.0, seizure_times=(150.0 + (i % 5),),
                      seizure_len_s=20.0, preictal_lead_s=14.0, seed=1000 + i)
        )
        for i in range(10)
    ]
    return {
        "config": cfg,
        "pop": pop,
        "ranges": ranges,
        "recordings": recordings,
        "train_time": train_time,
    }


def reload_population(corpus, tmp_path):
    path = tmp_path / "pop.ais1"
    save_bundle(corpus["pop"], path, corpus["ranges"])
    return load_bundle(path)


def test_criterion_1_signature_codec():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for _ in range(10_000):
        sig = Signature(
            local_values=tuple(int(v) for v in rng.integers(0, LOCAL_MAX + 1, 8)),
            global_values=tuple(int(v) for v in rng.integers(0, GLOBAL_MAX + 1, 4)),
            priority_bits=int(rng.integers(0, 4)),
            ordering_bits=int(rng.integers(0, 4)),
            control_bit=int(rng.integers(0, 2)),
        )
        blob = pack(sig)
        assert len(blob) == PACKED_BYTES == 21
        word = int.from_bytes(blob, "little")
        assert word >> 165 == 0  # 3 padding bits zero
        assert unpack(blob) == sig
    elapsed = time.perf_counter() - t0
    criterion(1, "signature-codec", elapsed < 5.0,
              f"10000 bit-exact round trips in {elapsed:.2f}s")


def test_criterion_2_streaming_threshold_oracle():
    rng = np.random.default_rng(7)
    n = 256
    thr = AdaptiveThreshold(gamma_s=1.5, window_n=n)
    history: list[float] = []
    worst = 0.0
    for e in rng.normal(0.0, 3.0, 100_000):
        update_threshold(thr, float(e))
        history.append(float(e) ** 2)
        scratch = 1.5 * float(np.mean(history[-n:]))
        worst = max(worst, abs(thr.current_value - scratch))
    criterion(2, "adaptive-threshold-oracle", worst <= 1e-12,
              f"max |streaming - scratch| = {worst:.2e} over 1e5 updates")


def test_criterion_3_heavy_tail_density():
    p = CauchyParams(x0=1.2, gamma_c=0.7)
    peak_err = abs(cauchy_pdf(p.x0, p) - 1.0 / (math.pi * p.gamma_c))
    body, _ = integrate.quad(lambda x: cauchy_pdf(x, p),
                             p.x0 - 1000 * p.gamma_c, p.x0 + 1000 * p.gamma_c,
                             limit=200)
    tails = 2 * (0.5 - math.atan(1000.0) / math.pi)
    integral_err = abs(body + tails - 1.0)
    sigma = p.gamma_c
    xs = np.concatenate([
        np.linspace(p.x0 + 3.0001 * sigma, p.x0 + 60 * sigma, 500),
        np.linspace(p.x0 - 60 * sigma, p.x0 - 3.0001 * sigma, 500),
    ])
    dominance = bool(np.all(cauchy_pdf(xs, p) > gaussian_pdf(xs, p.x0, sigma)))
    ok = peak_err <= 1e-12 and integral_err <= 1e-6 and dominance
    criterion(3, "cauchy-density", ok,
              f"peak err {peak_err:.1e}, integral err {integral_err:.1e}, "
              f"tail dominance {dominance}")


def test_criterion_4_matcher_oracle():
    rng = np.random.default_rng(99)
    mismatches = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 65))
        mat = rng.random((n, 12))
        pop = Population(
            slt=[Antibody(vector=v) for v in mat],
            self_set=[np.zeros(12)],
            params=TABLE_PARAMS,
        )
        q = rng.random(12)
        best_i, best_d = 0, None
        for i in range(n):
            d = 0.0
            for k in range(12):
                d += (q[k] - mat[i][k]) ** 2
            if best_d is None or d < best_d:
                best_d, best_i = d, i
        if match(pop, q).winner != best_i:
            mismatches += 1
    criterion(4, "matcher-oracle", mismatches == 0,
              f"{mismatches} disagreements in 10000 population/query pairs")


def test_criterion_5_self_tolerance_over_long_run():
    rng = np.random.default_rng(5)
    self_set = [np.clip(0.2 + rng.normal(0, 0.02, 12), 0, 1) for _ in range(60)]
    pop = negative_selection_train(self_set, TABLE_PARAMS, seed=5)
    audits = [len(self_tolerance_violations(pop))]
    pattern = np.clip(rng.uniform(0.5, 1.0, 12), 0, 1)
    ticks = 0
    for wid in range(1, 10_001):
        if wid % 500 == 0:  # periodic confirmed detections feed the stack
            append_new(pop, np.clip(pattern + rng.normal(0, 0.05, 12), 0, 1))
        if wid % 37 == 0:  # occasional matches drive promotion + refinement
            probe = np.clip(pattern + rng.normal(0, 0.03, 12), 0, 1)
            m = match(pop, probe)
            if m.fired:
                promote(pop, m.winner)
                clonal_step(pop, probe)
        pop.tick_age()
        if mutation_tick(pop, wid):
            ticks += 1
            audits.append(len(self_tolerance_violations(pop)))
    total = sum(audits)
    criterion(5, "negative-selection-tolerance", total == 0,
              f"{total} self-binding detectors across {len(audits)} audits "
              f"({ticks} mutation passes in 10000 windows)")


def test_criterion_6_end_to_end_reproduction(corpus, tmp_path):
    t0 = time.perf_counter()
    annotated = predicted = detected = 0
    leads: list[float] = []
    for i, rec in enumerate(corpus["recordings"]):
        pop, ranges = reload_population(corpus, tmp_path)
        _, events = run_recording(rec, corpus["config"],
                                  population=pop, ranges=ranges)
        row = score_run(events, rec.annotations, horizon_s=20.0,
                        duration_s=rec.duration_s)
        annotated += row.seizures_annotated
        predicted += row.predicted
        detected += row.detected
        leads.extend(row.lead_times_s)
    elapsed = time.perf_counter() - t0 + corpus["train_time"]
    sensitivity = detected / annotated
    mean_lead = float(np.mean(leads)) if leads else 0.0
    ok = sensitivity >= 0.70 and mean_lead >= 10.0 and elapsed < 120.0
    criterion(6, "end-to-end-synthetic", ok,
              f"sensitivity {sensitivity:.2f} (>=0.70), predicted {predicted}/"
              f"{annotated}, mean lead {mean_lead:.2f}s (>=10), "
              f"runtime {elapsed:.1f}s (<120)")


def test_criterion_7_roc_beats_random_baseline(corpus):
    grid = [0.05, 0.1, 0.15, 0.2, 0.23, 0.3, 0.45, 0.65, 0.85, 0.95]
    engine_points = threshold_sweep(corpus["recordings"], corpus["config"], grid)
    engine_area = roc_area(engine_points)

    rates = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]
    areas = [
        roc_area(baseline_roc_points(corpus["recordings"][0], corpus["config"],
                                     rates, seed=seed * 31))
        for seed in range(50)
    ]
    baseline_area = float(np.mean(areas))
    ok = (engine_area >= baseline_area + 0.1
          and abs(baseline_area - 0.5) <= 0.05)
    criterion(7, "roc-vs-random", ok,
              f"engine area {engine_area:.3f}, baseline {baseline_area:.3f} "
              f"+- need 0.5+-0.05, margin {engine_area - baseline_area:.3f} (>=0.1)")


def test_criterion_8_deterministic_event_logs(corpus, tmp_path):
    rec = corpus["recordings"][0]
    logs = []
    for _ in range(2):
        pop, ranges = reload_population(corpus, tmp_path)
        _, events = run_recording(rec, corpus["config"],
                                  population=pop, ranges=ranges)
        logs.append(("\n".join(e.to_json() for e in events) + "\n").encode())
    ok = logs[0] == logs[1] and len(logs[0]) > 1
    criterion(8, "determinism", ok,
              f"two runs, {len(logs[0])} log bytes, byte-identical {logs[0] == logs[1]}")


def test_criterion_9_service_contract(corpus, tmp_path):
    from fastapi.testclient import TestClient

    from preictal.recording import write_recording
    from preictal.service import create_app

    rec_path = tmp_path / "rec.csv"
    write_recording(corpus["recordings"][0], rec_path)
    bundle_path = tmp_path / "pop.ais1"
    save_bundle(corpus["pop"], bundle_path, corpus["ranges"])

    app = create_app(tmp_path / "sessions")
    with TestClient(app) as client:
        resp = client.post("/sessions", json={
            "recording_path": str(rec_path),
            "bundle_path": str(bundle_path),
            "speed": 60.0,
        })
        sid = resp.json()["session_id"]
        time.sleep(0.5)
        ack = client.put(f"/sessions/{sid}/config", json={"td": 0.5}).json()
        boundary = ack["effective_after_window"]
        new_version = ack["applied_version"]

        def drain(ws):
            json.loads(ws.receive_text())  # hello
            out = []
            while True:
                r = json.loads(ws.receive_text())
                if r.get("end_of_session"):
                    return out
                out.append(r)

        with client.websocket_connect(f"/sessions/{sid}/events") as w1, \
             client.websocket_connect(f"/sessions/{sid}/events") as w2:
            r1 = drain(w1)
            r2 = drain(w2)

    identical = r1 == r2
    ordered = [r["window_id"] for r in r1] == sorted(r["window_id"] for r in r1)
    unique = len({(r["window_id"], r["kind"]) for r in r1}) == len(r1)
    versions_ok = all(
        (r["config_version"] == 1) == (r["window_id"] <= boundary)
        and (r["config_version"] == new_version) == (r["window_id"] > boundary)
        for r in r1
    )
    ok = identical and ordered and unique and versions_ok and len(r1) >= 1
    criterion(9, "service-contract", ok,
              f"{len(r1)} events to both subscribers, identical {identical}, "
              f"in-order {ordered}, exactly-once {unique}, config boundary at "
              f"window {boundary} honored {versions_ok}")
