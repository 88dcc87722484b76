"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a ``criterion N: PASS|FAIL ...`` line; the lines are
printed in the pytest terminal summary and when this file is run directly.
"""

import json
import math
import time

import numpy as np
import pytest

from volleygraph import metrics, records
from volleygraph.autodiff import Tensor
from volleygraph.cli import gradcheck_error, main
from volleygraph.encoding import DESTINATION, HIT_TYPE, KIND, RATING, encode_dataset
from volleygraph.layers import gcn_layer, graph_transformer_layer, gru_cell
from volleygraph.synth import bayes_accuracy, college_profile, generate, professional_profile
from volleygraph.training import COLUMNS, TrainConfig, accuracy, majority_baseline, predict, split_dataset, train

from oracles import gcn_oracle, gru_scalar, pairwise_auc, path_adjacency, random_graph, transformer_oracle, transformer_params

RESULTS: dict[int, str] = {}

# training setup for the learnability runs
N_RALLIES = 10_000
RATIOS = (0.8, 0.1, 0.1)
LEARN = dict(architecture="graph_transformer", learning_rate=3e-3, batch_size=64, max_epochs=20, patience=4, seed=0)


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_criterion_1_gradient_correctness():
    t0 = time.perf_counter()
    errs = {arch: max(gradcheck_error(arch, seed=0, task=t) for t in ("outcome", "set", "hit")) for arch in ("gcn", "graph_gru", "graph_transformer")}
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) < 1e-4 and elapsed < 30
    detail = ", ".join(f"{a} {e:.1e}" for a, e in errs.items())
    record(1, ok, f"max rel. error {detail} (< 1e-4); {elapsed:.1f}s (< 30s)")


def test_criterion_2_layer_oracles():
    gcn_err = tr_err = gru_err = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        a = random_graph(rng)
        n, f, h = a.shape[0], int(rng.integers(1, 6)), int(rng.integers(1, 6))
        x, w, b = rng.standard_normal((n, f)), rng.standard_normal((f, h)), rng.standard_normal((1, h))
        gcn_err = max(gcn_err, np.abs(gcn_layer(Tensor(x), a, Tensor(w), Tensor(b)).value - gcn_oracle(x, a, w, b)).max())

        a4 = path_adjacency(4)
        x4 = rng.standard_normal((4, f))
        p = transformer_params(rng, f, h)
        tr_err = max(tr_err, np.abs(graph_transformer_layer(Tensor(x4), a4, p, heads=1).value - transformer_oracle(x4, a4, p)).max())

        scal = {k: float(rng.standard_normal()) for k in ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")}
        m, hh = rng.standard_normal(2)
        got = gru_cell(Tensor([[m]]), Tensor([[hh]]), {k: Tensor([[v]]) for k, v in scal.items()}).item()
        gru_err = max(gru_err, abs(got - gru_scalar(m, hh, scal)))
    ok = max(gcn_err, tr_err, gru_err) < 1e-12
    record(2, ok, f"max abs. error gcn {gcn_err:.1e}, transformer {tr_err:.1e}, gru {gru_err:.1e} (< 1e-12)")


def test_criterion_3_encoder_leakage_and_shape():
    rallies, rounds, seed = [], 0, 0
    while rounds < 10_000:
        batch = generate(college_profile() if seed % 2 == 0 else professional_profile(), 1000, seed=seed)
        rallies += batch
        rounds += sum(len(r.rounds) for r in batch)
        seed += 1
    problems = []
    sets = encode_dataset(rallies, "set").graphs
    hits = encode_dataset(rallies, "hit").graphs
    outcome = encode_dataset(rallies, "outcome").graphs
    for g in sets:
        is_set = g.nodes[:, KIND][:, 1] == 1
        if g.nodes[is_set][:, RATING].any() or g.nodes[:, DESTINATION].any():
            problems.append(f"set leak {g.rally_id}/{g.round_number}")
    for g in hits:
        if g.nodes[:, HIT_TYPE].any():
            problems.append(f"hit leak {g.rally_id}/{g.round_number}")
    for g in sets + hits + outcome:
        if g.edges != tuple((i, i + 1) for i in range(g.n_nodes - 1)):
            problems.append(f"non-path edges {g.rally_id}/{g.round_number}")
    full = [g for g, rd in zip(outcome, (rd for r in rallies for rd in r.rounds)) if len(rd.contacts) == 4]
    bad_full = [g for g in full if g.n_nodes != 4 or len(g.edges) != 3]
    ok = not problems and not bad_full and len(full) > 0
    record(3, ok, f"{rounds} rounds, {len(sets)} set / {len(hits)} hit graphs scanned, {len(full)} four-contact rounds; {len(problems) + len(bad_full)} problems")


def test_criterion_4_parser_round_trip():
    rallies = generate(college_profile(), 500, seed=41) + generate(professional_profile(), 500, seed=42)
    text = records.serialize(rallies, "acceptance")
    back = records.parse(text)
    same = back.rallies == rallies and not back.diagnostics
    stable = records.serialize(rallies, "acceptance") == text == records.serialize(back.rallies, "acceptance")
    record(4, same and stable, f"{len(rallies)} rallies: structural equality {same}, byte-stable {stable}")


def test_criterion_5_metric_oracles():
    worst, identity = 0.0, True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 2, 50)
        y[:2] = [0, 1]
        s = np.round(rng.random(50), 1) if seed % 2 else rng.random(50)
        worst = max(worst, abs(metrics.auc(s, y) - pairwise_auc(s, y)))
        identity &= metrics.brier(s, y) == metrics.mse(s, y)
    y = np.array([0, 1, 1, 0, 1, 0])
    const = metrics.brier(np.full(6, 0.5), y)
    perfect = metrics.auc(y.astype(float), y)
    ok = worst < 1e-12 and identity and const == 0.25 and perfect == 1.0
    record(5, ok, f"auc vs pairwise max diff {worst:.1e}; brier==mse {identity}; constant-0.5 brier {const}; perfect auc {perfect}")


def learn(profile, seed, task, include_blocked):
    rallies = generate(profile, N_RALLIES, seed=seed)
    tr, va, te = split_dataset(rallies, RATIOS, seed=0)
    enc = lambda rs: encode_dataset(rs, task, include_blocked).graphs
    train_g, val_g, test_g = enc(tr), enc(va), enc(te)
    config = TrainConfig(task=task, include_blocked=include_blocked, **LEARN)
    ckpt, history = train(config, train_g, val_g)
    acc = accuracy(task, predict(ckpt.model(), test_g), test_g)
    return {
        "acc": acc,
        "bayes": bayes_accuracy(profile, task, include_blocked),
        "majority": majority_baseline(train_g, test_g),
        "n_test": len(test_g),
        "epochs": len(history),
    }


@pytest.fixture(scope="module")
def college_runs():
    t0 = time.perf_counter()
    runs = {
        (task, blocked): learn(college_profile(), 7, task, blocked)
        for task, blocked in (("outcome", True), ("set", True), ("hit", True), ("hit", False))
    }
    return runs, time.perf_counter() - t0


def test_criterion_6_synthetic_learnability(college_runs):
    runs, elapsed = college_runs
    parts, ok = [], elapsed < 600
    for (task, blocked), r in runs.items():
        sigma = math.sqrt(r["bayes"] * (1 - r["bayes"]) / r["n_test"])
        close = abs(r["acc"] - r["bayes"]) <= 0.05
        above = r["acc"] >= r["majority"] + 0.10
        bounded = r["acc"] <= r["bayes"] + 3 * sigma
        ok &= close and above and bounded
        name = task if task != "hit" else f"hit({'incl' if blocked else 'excl'})"
        parts.append(f"{name} {100 * r['acc']:.1f}% (bayes {100 * r['bayes']:.1f}, majority {100 * r['majority']:.1f})")
    record(6, ok, "; ".join(parts) + f"; {elapsed:.0f}s (< 600s)")


def test_criterion_7_blocked_hit_ablation(college_runs):
    runs, _ = college_runs
    pro = {b: learn(professional_profile(), 8, "hit", b) for b in (True, False)}
    col_in, col_ex = runs["hit", True]["acc"], runs["hit", False]["acc"]
    pro_in, pro_ex = pro[True]["acc"], pro[False]["acc"]
    ok = col_ex > col_in and pro_ex > pro_in
    record(7, ok, f"college excluded {100 * col_ex:.2f}% vs included {100 * col_in:.2f}%; professional excluded {100 * pro_ex:.2f}% vs included {100 * pro_in:.2f}%")


def test_criterion_8_report_fidelity(tmp_path, capsys):
    data = tmp_path / "d.vrr"
    records.write(data, generate(college_profile(), 150, seed=1) + generate(professional_profile(), 150, seed=2))
    problems = []
    for task, flags in (("outcome", []), ("set", []), ("hit", ["--include-blocked"]), ("hit", [])):
        ck = tmp_path / f"{task}{len(flags)}.ckpt"
        rc = main(["train", "--task", task, "--arch", "gcn", "--data", str(data), "--out", str(ck), "--seed", "0", *flags])
        capsys.readouterr()
        rc |= main(["eval", "--ckpt", str(ck), "--data", str(data), "--group-by", "level", "--json-out", str(tmp_path / "r.json")])
        out = capsys.readouterr().out.splitlines()
        header = [c.strip() for c in out[0].split("|")]
        rows = [[c.strip() for c in line.split("|")] for line in out[2:]]
        if rc or header != COLUMNS[task] or [r[0] for r in rows] != ["college", "professional"]:
            problems.append(f"{task}: layout")
        reps = json.loads((tmp_path / "r.json").read_text())
        for row, rep in zip(rows, reps):
            key = "binary_accuracy" if task == "outcome" else "categorical_accuracy"
            pct = row[header.index(next(h for h in header if "ccuracy(%)" in h))]
            if pct != f"{100 * rep['metrics'][key]:.2f}":
                problems.append(f"{task}: percent cell {pct}")
            if task == "hit" and row[1] != ("included" if flags else "excluded"):
                problems.append("hit: blocked column")
    record(8, not problems, "eval headers match the published table columns for outcome, set, hit(incl/excl); percent cells two-decimal" + (f"; {problems}" if problems else ""))


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
