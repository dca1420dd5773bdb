#!/usr/bin/env python3
# Copyright 2026 The Tsallis FPD Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the problem files under tests/fixtures and docs.

Probabilities are rounded to six decimals and the last entry of each row
absorbs the rounding, so every row sums to one exactly in decimal.
"""

import argparse
import json
import pathlib

import numpy as np

DIGITS = 6


def pmf(rng, k, concentration=1.0):
    w = rng.dirichlet(np.full(k, concentration))
    w = np.maximum(w, 0.02)
    w /= w.sum()
    head = [round(float(v), DIGITS) for v in w[:-1]]
    return head + [round(1.0 - sum(head), DIGITS)]


def uniform(k):
    head = [round(1.0 / k, DIGITS)] * (k - 1)
    return head + [round(1.0 - sum(head), DIGITS)]


def labels(prefix, n):
    return [f"{prefix}{i}" for i in range(n)]


def random_problem(seed, n, m, horizon, r, mix=0.5, solver=None):
    rng = np.random.default_rng(seed)
    states, actions = labels("s", n), labels("a", m)
    doc = {"r": r, "horizon": horizon, "states": states, "actions": actions}
    ref_prior = pmf(rng, n)
    doc["prior"] = ref_prior
    doc["ref_prior"] = ref_prior
    plant, ref_plant, ref_policy, costs = {}, {}, {}, {}
    for k in range(1, horizon + 1):
        stage_p, stage_q = {}, {}
        for s in states:
            stage_p[s], stage_q[s] = {}, {}
            for a in actions:
                q = pmf(rng, n)
                noise = pmf(rng, n)
                p = [(1 - mix) * x + mix * y for x, y in zip(q, noise)]
                head = [round(v, DIGITS) for v in p[:-1]]
                stage_q[s][a] = q
                stage_p[s][a] = head + [round(1.0 - sum(head), DIGITS)]
        plant[str(k)], ref_plant[str(k)] = stage_p, stage_q
        ref_policy[str(k)] = {s: pmf(rng, m) for s in states}
        costs[str(k)] = {s: round(float(rng.uniform()), DIGITS) for s in states}
    doc.update(plant=plant, ref_plant=ref_plant, ref_policy=ref_policy, costs=costs)
    if solver is not None:
        doc["solver"] = solver
    return doc


def matched_problem(n, m, horizon, r):
    states, actions = labels("s", n), labels("a", m)
    row_s, row_a = uniform(n), uniform(m)
    table = {s: {a: list(row_s) for a in actions} for s in states}
    stages = [str(k) for k in range(1, horizon + 1)]
    return {
        "r": r,
        "horizon": horizon,
        "states": states,
        "actions": actions,
        "prior": list(row_s),
        "ref_prior": list(row_s),
        "plant": {k: json.loads(json.dumps(table)) for k in stages},
        "ref_plant": {k: json.loads(json.dumps(table)) for k in stages},
        "ref_policy": {k: {s: list(row_a) for s in states} for k in stages},
        "costs": {k: {s: 0.0 for s in states} for k in stages},
        "solver": {"omega": 0.4, "tol": 1e-10, "max_outer": 10000,
                   "init_mode": "reference", "seed": 0},
    }


def dump(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", type=pathlib.Path,
                        default=pathlib.Path(__file__).resolve().parents[1])
    root = parser.parse_args().root
    fx = root / "tests" / "fixtures"
    solver = {"omega": 0.4, "tol": 1e-10, "max_outer": 10000,
              "init_mode": "reference", "seed": 0}

    dump(fx / "matched_zero_cost.json", matched_problem(2, 2, 3, 2.0))
    regression = random_problem(20261016, 2, 2, 3, 2.0, solver=solver)
    dump(fx / "regression_r2.json", regression)
    dump(root / "docs" / "example_problem.json", regression)
    dump(fx / "kl_limit.json", random_problem(7, 3, 2, 3, 1.001, solver=solver))
    dump(fx / "guard_large.json", random_problem(11, 3, 2, 4, 2.0, solver=solver))

    bad = random_problem(3, 2, 2, 2, 2.0)
    bad["plant"]["2"]["s1"]["a0"] = [0.5, 0.4]
    dump(fx / "bad_row.json", bad)

    cont = random_problem(4, 2, 2, 2, 2.0)
    cont["ref_plant"]["1"]["s0"]["a1"] = [1.0, 0.0]
    cont["plant"]["1"]["s0"]["a1"] = [0.7, 0.3]
    dump(fx / "absolute_continuity.json", cont)

    action_cost = random_problem(5, 2, 2, 2, 2.0)
    action_cost["costs"]["1"]["s0"] = [0.1, 0.2]
    dump(fx / "action_cost.json", action_cost)

    overflow = random_problem(6, 2, 2, 2, 2.0, solver=solver)
    for k in ("1", "2"):
        overflow["costs"][k] = {"s0": 1.5e308, "s1": 1.5e308}
    dump(fx / "overflow_cost.json", overflow)

    text = json.dumps(random_problem(8, 2, 2, 2, 2.0), indent=2)
    (fx / "truncated.json").write_text(text[: len(text) // 2])


if __name__ == "__main__":
    main()
