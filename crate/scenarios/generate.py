#!/usr/bin/env python3
"""Regenerates the scenario corpora in this directory.

Output is deterministic: every file is drawn from a fixed seed, so rerunning
the script reproduces the committed files byte for byte.
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent


def dump(name, doc):
    text = json.dumps(doc, indent=1)
    (HERE / name).write_text(text + "\n")


def masses(rng, n, total, lo=50, hi=400):
    """Positive masses in thousandths summing to `total` thousandths."""
    while True:
        w = [rng.randint(lo, hi) for _ in range(n)]
        s = sum(w)
        k = [max(1, round(x * total / s)) for x in w]
        k[-1] += total - sum(k)
        if k[-1] > 0:
            return k


def th(ks):
    return [k / 1000 for k in ks]


def random_points(rng, n, dim=2):
    return [[round(rng.uniform(0, 1), 4) for _ in range(dim)] for _ in range(n)]


def sym_cost(rng, n):
    c = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            c[i][j] = c[j][i] = round(rng.uniform(0.2, 1.5), 4)
    return c


def balanced_pair(rng, n, u):
    """mu1, mu2 of mass 1 with mass moved from outside U onto U."""
    mu1 = masses(rng, n, 1000)
    mu2 = list(mu1)
    out = [i for i in range(n) if i not in u]
    moved = 0
    for i in out:
        d = rng.randint(0, mu2[i] - 1)
        mu2[i] -= d
        moved += d
    # Spread the removed mass over U.
    share = masses(rng, len(u), moved, lo=1, hi=10) if moved >= len(u) else [moved] + [0] * (len(u) - 1)
    for i, s in zip(u, share):
        mu2[i] += s
    return mu1, mu2


def potentials():
    rng = random.Random(20240611)
    spaces, costs, meas, scen = {}, {}, {}, []
    kinds = [
        ("exact", lambda: {"kind": "exact"}),
        ("entropic", lambda: {"kind": "entropic", "eps": rng.choice([0.05, 0.1, 0.2])}),
        ("unbalanced", lambda: {"kind": "unbalanced", "h0": rng.choice(ENT), "h1": rng.choice(ENT)}),
    ]
    for kname, tr in kinds:
        for k in range(36):
            n = rng.randint(3, 7)
            key = f"{kname}{k}"
            spaces[key] = {"type": "points", "coords": random_points(rng, n)}
            costs[key] = {"type": "ground", "rows": key, "ground": rng.choice(["sq_euclidean", "euclidean"])}
            u = sorted(rng.sample(range(n), rng.randint(1, n - 1)))
            if kname == "unbalanced":
                mu1 = masses(rng, n, rng.randint(600, 1400))
                mu2 = [m + (rng.randint(0, 200) if i in u else 0) for i, m in enumerate(mu1)]
                nu = masses(rng, n, rng.randint(600, 1400))
            else:
                mu1, mu2 = balanced_pair(rng, n, u)
                nu = masses(rng, n, 1000)
            for tag, v in (("mu1", mu1), ("mu2", mu2), ("nu", nu)):
                meas[f"{key}_{tag}"] = {"space": key, "values": th(v)}
            scen.append({
                "type": "potential_comparison", "name": f"{kname} comparison {k}", "check": "comparison",
                "transport": tr(), "cost": key, "mu1": f"{key}_mu1", "mu2": f"{key}_mu2", "nu": f"{key}_nu", "u": u,
            })
    for k in range(24):
        n = rng.randint(3, 6)
        key = f"mp{k}"
        spaces[key] = {"type": "points", "coords": random_points(rng, n)}
        costs[key] = {"type": "ground", "rows": key, "ground": "sq_euclidean"}
        mu1, mu2 = masses(rng, n, 1000), masses(rng, n, 1000)
        nu = masses(rng, n, 1000)
        for tag, v in (("mu1", mu1), ("mu2", mu2), ("nu", nu)):
            meas[f"{key}_{tag}"] = {"space": key, "values": th(v)}
        tr = {"kind": "exact"} if k < 16 else {"kind": "entropic", "eps": 0.1}
        scen.append({
            "type": "potential_comparison", "name": f"two-potential maximum principle {k}", "check": "max_principle",
            "transport": tr, "cost": key, "mu1": f"{key}_mu1", "mu2": f"{key}_mu2", "nu": f"{key}_nu", "u": [],
        })
    for k in range(16):
        n = rng.randint(3, 6)
        key = f"smp{k}"
        spaces[key] = {"type": "abstract", "n": n}
        costs[key] = {"type": "table", "rows": key, "values": sym_cost(rng, n)}
        for tag in ("mu", "nu"):
            meas[f"{key}_{tag}"] = {"space": key, "values": th(masses(rng, n, 1000))}
        scen.append({
            "type": "potential_comparison", "name": f"single-potential maximum principle {k}",
            "check": "single_max_principle", "transport": {"kind": "exact"}, "cost": key,
            "mu1": f"{key}_mu", "nu": f"{key}_nu", "u": [],
        })
    dump("potentials.json", {
        "version": "1", "seed": 11, "spaces": spaces, "costs": costs, "measures": meas, "scenarios": scen,
    })


ENT = [{"type": "boltzmann"}, {"type": "kl"}, {"type": "quadratic_deviation", "lambda": 2.0}]
ENERGY = [{"type": "boltzmann"}, {"type": "square"}, {"type": "kl"}]


def jko():
    rng = random.Random(987)
    spaces, costs, scen = {}, {}, []

    def line(n):
        key = f"line{n}"
        spaces.setdefault(key, {"type": "line", "n": n, "spacing": round(1 / (n - 1), 6)})
        costs.setdefault(key, {"type": "ground", "rows": key, "ground": "sq_euclidean"})
        return key

    for k in range(4):
        n = rng.randint(3, 6)
        m = th(masses(rng, n, 1000 * n))
        for kk in (0.5, 1.0, 2.0):
            scen.append({
                "type": "jko_check", "name": f"stationary {k} K={kk}", "check": "stationarity",
                "transport": {"kind": "exact"}, "cost": line(n), "m": m, "k": kk,
            })
    for k in range(50):
        n = rng.randint(2, 4)
        mu = masses(rng, n, rng.randint(500, 1500))
        mu2 = [v + rng.randint(0, 300) for v in mu]
        scen.append({
            "type": "jko_check", "name": f"unbalanced order {k}", "check": "comparison",
            "transport": {"kind": "unbalanced", "h0": rng.choice(ENT), "h1": rng.choice(ENT)},
            "cost": line(n), "f": rng.choice(ENERGY), "m": th(masses(rng, n, 1000 * n // 2)),
            "v": [round(rng.uniform(-0.5, 0.5), 3) for _ in range(n)],
            "mu": th(mu), "mu2": th(mu2), "cost_scale": rng.choice([1.0, 4.0]),
        })
    for kind in ("exact", "entropic"):
        for k in range(100):
            n = rng.randint(2, 5)
            total = rng.randint(500, 1500)
            tr = {"kind": "exact"} if kind == "exact" else {"kind": "entropic", "eps": rng.choice([0.1, 0.3, 1.0])}
            scen.append({
                "type": "jko_check", "name": f"{kind} total variation {k}", "check": "tv_contraction",
                "transport": tr, "cost": line(n), "f": rng.choice(ENERGY),
                "m": th(masses(rng, n, 1000 * n // 2)), "v": [round(rng.uniform(-0.5, 0.5), 3) for _ in range(n)],
                "mu": th(masses(rng, n, total)), "mu2": th(masses(rng, n, total)), "cost_scale": rng.choice([1.0, 4.0]),
            })
    for k in range(20):
        n = rng.randint(3, 6)
        m = [rng.randint(200, 800) for _ in range(n)]
        c0, c1 = 0.5, 1.5
        mu = [round(mi * rng.uniform(c0, c1)) for mi in m]
        scen.append({
            "type": "jko_check", "name": f"density bounds {k}", "check": "max_principle",
            "transport": {"kind": "exact"}, "cost": line(n), "f": rng.choice(ENERGY),
            "m": th(m), "mu": th(mu), "c0": c0, "c1": c1, "cost_scale": rng.choice([1.0, 4.0, 16.0]),
        })
    for kind in ("exact", "entropic", "unbalanced"):
        tr = {"exact": {"kind": "exact"}, "entropic": {"kind": "entropic", "eps": 0.05},
              "unbalanced": {"kind": "unbalanced", "h0": {"type": "kl"}, "h1": {"type": "kl"}}}[kind]
        scen.append({
            "type": "jko_check", "name": f"{kind} flow", "check": "flow", "transport": tr, "cost": line(8),
            "m": [1] * 8, "mu": th(masses(rng, 8, 1000)), "steps": 5, "cost_scale": 20,
        })
        scen.append({
            "type": "jko_check", "name": f"{kind} three-point step", "check": "step", "transport": tr,
            "cost": line(3), "f": {"type": "square"}, "m": [1, 2, 1], "mu": th(masses(rng, 3, 1000)),
        })
    dump("jko.json", {"version": "1", "seed": 5, "spaces": spaces, "costs": costs, "scenarios": scen})


def functionals():
    cube = lambda d, a=-2.0, b=2.0: {"lo": [a] * d, "hi": [b] * d}
    sub = [
        ("quadratic, nonpositive off-diagonal", {"type": "quadratic", "a": [[2, -1, 0], [-1, 2, -0.5], [0, -0.5, 1]]}, cube(3)),
        ("convex of a difference", {"type": "convex_diff", "f": {"type": "abs_power", "p": 1.5}, "i": 0, "j": 2, "dim": 3}, cube(3)),
        ("concave of a nonnegative sum", {"type": "concave_of_sum", "g": {"type": "neg_square"}, "weights": [1, 0.5, 2]}, cube(3)),
        ("coordinate supremum", {"type": "sup_coord", "dim": 4}, cube(4)),
        ("graph Dirichlet energy", {"type": "dirichlet", "dim": 4, "edges": [[0, 1, 1.0], [1, 2, 0.5], [2, 3, 2.0], [0, 3, 1.0]]}, cube(4)),
        ("Gagliardo seminorm analogue", {"type": "gagliardo", "points": [[0.0], [0.3], [0.7], [1.0]], "s": 0.5, "p": 2.0}, cube(4)),
        ("internal energy", {"type": "internal_energy", "f": {"type": "boltzmann"}, "m": [1.0, 0.5, 2.0]},
         dict(cube(3, 0.0, 3.0), comparable=True)),
    ]
    scen = [
        {"type": "functional_check", "name": name, "check": "p_dominance", "functional": f, "sampler": s, "pairs": 10000}
        for name, f, s in sub
    ]
    scen += [
        {"type": "functional_check", "name": "quadratic, positive off-diagonal", "check": "p_dominance",
         "functional": {"type": "quadratic", "a": [[1, 0.5], [0.5, 1]]}, "sampler": cube(2), "pairs": 10000, "expect": "fail"},
        {"type": "functional_check", "name": "convex of a sum", "check": "p_dominance",
         "functional": {"type": "convex_of_sum", "g": {"type": "square"}, "weights": [1, 1, 1]}, "sampler": cube(3),
         "pairs": 10000, "expect": "fail"},
    ]
    dump("functionals.json", {"version": "1", "seed": 3, "scenarios": scen})


if __name__ == "__main__":
    potentials()
    jko()
    functionals()
