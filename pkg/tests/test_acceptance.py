"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""
import itertools
import json
import time

import numpy as np

from affsphere import (
    characterize,
    closed_form_tensors,
    compose,
    flat_closed_forms,
    flat_hypersphere,
    plant_violation,
    point_invariants,
    quadric_hypersphere,
    sample_blocks,
)
from affsphere.characterize import FAMILIES
from affsphere.cli import main
from affsphere.geometry import taylor4
from affsphere.jets import extract_partial

import _oracle
from _grid import center_fixtures, grid_cases, sample_points


def _max(values):
    return max(values, default=0.0)


def test_criterion_1_flat_example(acceptance):
    t0 = time.perf_counter()
    g_err = L1_err = A_err = pick_err = 0.0
    for n0, c0 in itertools.product((2, 3, 4), (1.0, 2.0)):
        spec, cf = flat_hypersphere(n0, c0), flat_closed_forms(n0, c0)
        for p in sample_points(spec, 5, seed=100 + n0):
            inv = point_invariants(spec, p)
            g_err = max(g_err, np.max(np.abs(inv.g - cf.g)) / np.max(np.abs(cf.g)))
            L1_err = max(L1_err, abs(inv.L1 - cf.L1) / abs(cf.L1))
            A_err = max(A_err, np.max(np.abs(inv.A - cf.A)))
            pick_err = max(pick_err, abs(inv.J + inv.L1))
    elapsed = time.perf_counter() - t0
    ok = g_err < 1e-6 and L1_err < 1e-6 and A_err < 1e-6 and pick_err < 1e-8 and elapsed < 5.0
    acceptance(1, "flat example closed forms", ok,
               f"metric {g_err:.1e}, L1 {L1_err:.1e}, A {A_err:.1e}, J+L1 {pick_err:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_quadric(acceptance):
    A_err = B_err = par_err = 0.0
    for n in (1, 2, 3):
        spec = quadric_hypersphere(n)
        for p in sample_points(spec, 5, seed=200 + n, box=1.0):
            inv = point_invariants(spec, p)
            A_err = max(A_err, np.max(np.abs(inv.A)))
            B_err = max(B_err, np.max(np.abs(inv.B - inv.L1 * np.eye(n))))
            wedge = np.outer(inv.xi, inv.x) - np.outer(inv.x, inv.xi)
            par_err = max(par_err, np.max(np.abs(wedge)) / (np.linalg.norm(inv.xi) * np.linalg.norm(inv.x)))
    ok = A_err < 1e-8 and B_err < 1e-7 and par_err < 1e-8
    acceptance(2, "quadric sanity", ok, f"|A| {A_err:.1e}, |B-L1 Id| {B_err:.1e}, xi^x {par_err:.1e}")
    assert ok


def test_criterion_3_composition_tables(acceptance):
    t0 = time.perf_counter()
    cases = grid_cases()
    worst = dict.fromkeys(("metric", "cubic", "L1", "apolarity", "gauss_sphere"), 0.0)
    for _, spec in cases:
        for p in sample_points(spec, 3, seed=300):
            inv = point_invariants(spec, p)
            g, A, L1 = closed_form_tensors(spec, p)
            worst["metric"] = max(worst["metric"], np.max(np.abs(inv.g - g)) / np.max(np.abs(g)))
            worst["cubic"] = max(worst["cubic"], np.max(np.abs(inv.A - A)))
            worst["L1"] = max(worst["L1"], abs(inv.L1 - L1) / abs(L1))
            worst["apolarity"] = max(worst["apolarity"], inv.residuals["apolarity"])
            worst["gauss_sphere"] = max(worst["gauss_sphere"], inv.residuals["gauss_sphere"])
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-6 and elapsed < 60.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    acceptance(3, f"closed-form tables on {len(cases)} grid specs", ok, f"{detail}, {elapsed:.1f}s")
    assert ok


def test_criterion_4_codazzi(acceptance):
    worst = dict.fromkeys(("codazzi_basic3", "trace_codazzi", "gauss_metric_form"), 0.0)
    for _, spec in grid_cases():
        for p in sample_points(spec, 3, seed=400):
            res = point_invariants(spec, p).residuals
            for k in worst:
                worst[k] = max(worst[k], res[k])
    ok = max(worst.values()) < 1e-6
    acceptance(4, "Codazzi and metric Gauss identities", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


def test_criterion_5_soundness(acceptance):
    verdicts, lemma, gram_off, norm, L1_rec = [], 0.0, 0.0, 0.0, 0.0
    minor_neg = True
    for _, spec in grid_cases():
        data = sample_blocks(spec)
        rep = characterize(data)
        verdicts.append(rep.verdict)
        lr = rep.lemma_residuals
        lemma = max(lemma, lr["isotropy"], lr["mixed_block"], lr["center_transversal"])
        gram = np.array(rep.gram)
        off = gram[~np.eye(spec.s, dtype=bool)]
        gram_off = max(gram_off, _max(np.abs(off - data.L1)))
        pred = np.array([(data.n - d) / (d + 1) * -data.L1 for d in data.dims])
        norm = max(norm, np.max(np.abs(np.array(rep.cbar) ** 2 - pred)))
        if spec.s >= 2:
            minor_neg = minor_neg and rep.gram_checks["gram_minor_negative"]
        for fac, L in zip(rep.reconstructed["factors"], spec.factor_L1):
            L1_rec = max(L1_rec, abs(fac["L1"] - L))
    accepted = sum(v == "ACCEPT" for v in verdicts)
    ok = (accepted == len(verdicts) and lemma < 1e-6 and gram_off < 1e-7 and norm < 1e-7
          and minor_neg and L1_rec < 1e-6)
    acceptance(5, "characterization soundness", ok,
               f"{accepted}/{len(verdicts)} ACCEPT, lemma {lemma:.1e}, gram off-diag {gram_off:.1e}, "
               f"cbar^2 {norm:.1e}, minor negative {minor_neg}, factor L1 {L1_rec:.1e}")
    assert ok


def _family_residuals(rep):
    return {
        "condition2": rep.residuals["condition2"],
        "condition3": rep.residuals["condition3"],
        "isotropy": rep.lemma_residuals["isotropy"],
        "mixed_block": rep.lemma_residuals["mixed_block"],
        "center_transversal": rep.lemma_residuals["center_transversal"],
    }


def test_criterion_6_sensitivity(acceptance):
    spec = compose(1, [1.0, 0.8, 1.3], [flat_hypersphere(2, 1.2), quadric_hypersphere(2)])
    data = sample_blocks(spec, count=3, seed=6)
    eps = 1e-2
    results, ok = [], characterize(data).accepted
    for fam in FAMILIES:
        rep = characterize(plant_violation(data, fam, eps))
        res = _family_residuals(rep)
        others = max(v for k, v in res.items() if k != fam)
        good = rep.verdict == "REJECT" and fam in rep.reasons and others <= 1e-6
        ok = ok and good
        results.append(f"{fam} {res[fam]:.1e} (others {others:.0e})")
    acceptance(6, "characterization sensitivity at eps=1e-2", ok, "; ".join(results))
    assert ok


def test_criterion_7_center_block(acceptance):
    trace = gauss = pick = 0.0
    member = True
    labels = []
    for label, spec in center_fixtures():
        data = sample_blocks(spec)
        cb = characterize(data).center_block
        c = (data.n + 1) * data.L1 / spec.r
        trace = max(trace, cb["trace_perp"])
        gauss = max(gauss, cb["membership"]["gauss"])
        member = member and cb["membership"]["member"] and cb["membership_constant"] == c
        pick = max(pick, abs(cb["pick_invariant"] + c))
        labels.append(label)
    ok = trace < 1e-8 and gauss < 1e-6 and member and pick < 1e-6
    acceptance(7, f"centre-block fingerprint ({', '.join(labels)})", ok,
               f"trace {trace:.1e}, Gauss {gauss:.1e}, member {member}, J+(n+1)L1/r {pick:.1e}")
    assert ok


def test_criterion_8_jets(acceptance):
    specs = [flat_hypersphere(n0, c0) for n0 in (1, 2, 3) for c0 in (1.0, 2.0)]
    specs += [quadric_hypersphere(n) for n in (1, 2, 3)]
    worst, count = 0.0, 0
    for i, spec in enumerate(specs):
        for p in np.random.default_rng(800 + i).uniform(-1, 1, (20, spec.dim)):
            x = taylor4(spec, p).x
            for mu in itertools.product(range(5), repeat=spec.dim):
                if not 0 < sum(mu) <= 4:
                    continue
                exact = np.asarray(extract_partial(x, mu))
                fd = _oracle.partial(spec, p, mu)
                # relative error with a unit floor: several partials vanish identically
                worst = max(worst, np.max(np.abs(exact - fd) / np.maximum(1.0, np.abs(exact))))
                count += exact.size
    ok = worst < 1e-4
    acceptance(8, "jet partials vs Richardson differences", ok, f"{count} partials, worst relative {worst:.1e}")
    assert ok


def test_criterion_9_determinism(acceptance, tmp_path):
    man = {"version": 1,
           "spec": {"kind": "composition", "points": 2, "constants": [1.0, 0.7, 1.3, 0.9],
                    "factors": [{"kind": "flat", "dim": 1, "c0": 1.5}, {"kind": "quadric", "dim": 2}]},
           "evaluation": {"sampler": {"count": 4, "seed": 123}}}
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(man))
    same = []
    for command in ("verify", "characterize", "compose-table", "invariants"):
        outs = []
        for run in range(2):
            out = tmp_path / f"{command}-{run}.json"
            assert main([command, "--spec", str(path), "--out", str(out)]) == 0
            outs.append(b"\n".join(ln for ln in out.read_bytes().splitlines() if b'"wall_time"' not in ln))
        same.append(outs[0] == outs[1])
    ok = all(same)
    acceptance(9, "byte-identical reports", ok, f"{sum(same)}/{len(same)} commands identical")
    assert ok
