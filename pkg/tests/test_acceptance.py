"""End-to-end acceptance: every experiment on the default configuration.

One serial run produces the verdicts and the per-experiment timings; a second
run with four workers must reproduce the output tree byte for byte. Each test
prints a ``criterion k: PASS/FAIL`` line with the checks it rests on.
"""
import filecmp
import json
import time

import pytest

from phikit import cli
from phikit.config import RunConfig

# criterion -> (experiment, runtime budget in seconds)
CRITERIA = {
    1: ("lp-check", 5),
    2: ("reconstruct", 30),
    3: ("norms", 10),
    4: ("adp", 300),
    5: ("lemma-checks", 120),
    6: ("kernel-synth", 300),
    7: ("paraproduct", 180),
    8: ("decomposition", 300),
    9: ("sharpness", 120),
    10: ("counterexample", 120),
}
TOTAL_BUDGET = 20 * 60


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    # first pass: a plain serial verify-all, timing each experiment in-process
    first = tmp_path_factory.mktemp("run1")
    timings = {}
    inner = cli._run_one

    def timed(name, cfg_dict, out):
        t0 = time.perf_counter()
        try:
            return inner(name, cfg_dict, out)
        finally:
            timings[name] = time.perf_counter() - t0

    cli._run_one = timed
    try:
        status1 = cli.run(RunConfig.from_dict({"out": str(first)}))
    finally:
        cli._run_one = inner
    second = tmp_path_factory.mktemp("run2")
    t0 = time.perf_counter()
    status2 = cli.run(RunConfig.from_dict({"out": str(second)}), jobs=4)
    return {"first": first, "second": second, "timings": timings, "status": max(status1, status2),
            "parallel_time": time.perf_counter() - t0}


# collected here and printed in the terminal summary (see conftest.py)
SUMMARY = {}


def _report(k, ok, lines):
    text = [f"criterion {k}: {'PASS' if ok else 'FAIL'}"] + [f"    {line}" for line in lines]
    SUMMARY[k] = text
    print("\n" + "\n".join(text))


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(runs, k):
    name, budget = CRITERIA[k]
    verdict = json.loads((runs["first"] / name / "verdict.json").read_text())
    checks = verdict.get("checks", [])
    elapsed = runs["timings"][name]
    lines = [f"{'ok  ' if c['passes'] else 'FAIL'} {c['name']}: {c['value']} {c['relation']} {c['threshold']}"
             for c in checks if not isinstance(c["value"], (list, dict))]
    if "error" in verdict:
        lines.append(f"error: {verdict['error']}")
    lines.append(f"runtime {elapsed:.1f} s (budget {budget} s)")
    ok = verdict["verdict"] == "pass" and bool(checks) and elapsed <= budget
    _report(k, ok, lines)
    assert verdict["verdict"] == "pass", [c for c in checks if not c["passes"]]
    assert checks
    assert elapsed <= budget


def _tree_diff(a, b):
    cmp = filecmp.dircmp(a, b)
    bad = cmp.left_only + cmp.right_only + cmp.funny_files
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    bad += mismatch + errors
    for sub in cmp.common_dirs:
        bad += [f"{sub}/{x}" for x in _tree_diff(a / sub, b / sub)]
    return bad


def test_criterion_11_determinism_and_runtime(runs):
    diff = _tree_diff(runs["first"], runs["second"])
    total = sum(runs["timings"].values())
    ok = not diff and runs["status"] == 0 and total <= TOTAL_BUDGET
    _report(11, ok, [f"files differing between runs: {diff or 'none'}",
                     f"serial suite {total:.1f} s (budget {TOTAL_BUDGET} s), four workers {runs['parallel_time']:.1f} s"])
    assert runs["status"] == 0
    assert not diff
    assert total <= TOTAL_BUDGET
