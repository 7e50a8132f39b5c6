"""Extended-precision reference values for the episode objective and adapter.

Inputs come from numpy (seed 7); every formula is re-evaluated line by line
in mpmath at 50 digits, independent of the C++ code path. Writes
tests/fixtures/objective_golden.json and tests/fixtures/adapter_golden.json.
"""

import json
import pathlib

import mpmath as mp
import numpy as np

mp.mp.dps = 50
ROOT = pathlib.Path(__file__).resolve().parents[2]


def mpm(a):
    return [[mp.mpf(float(x)) for x in row] for row in np.atleast_2d(a)]


def unit(row):
    n = mp.sqrt(mp.fsum(x * x for x in row))
    return [x / n for x in row]


def gelu(x):
    return x * (1 + mp.erf(x / mp.sqrt(2))) / 2


def adapter(v, wd, bd, wu, bu):
    d, h = len(wd), len(wd[0])
    out = []
    for row in v:
        hidden = [gelu(mp.fsum(row[a] * wd[a][j] for a in range(d)) + bd[0][j]) for j in range(h)]
        out.append([row[c] + mp.fsum(hidden[j] * wu[j][c] for j in range(h)) + bu[0][c] for c in range(d)])
    return out


def dot(a, b):
    return mp.fsum(x * y for x, y in zip(a, b))


def objective(inp):
    v = mpm(inp["features"])
    t = mpm(inp["class_embeddings"])
    pool = mpm(inp["prompt_pool"])  # (K*T) x d, row k*T + t
    K, T = inp["K"], inp["T"]
    delta = mpm(inp["delta"])[0]
    vp = [unit(r) for r in adapter(v, mpm(inp["w_down"]), mpm(inp["b_down"]), mpm(inp["w_up"]),
                                    mpm(inp["b_up"]))]
    th = [unit(r) for r in t]
    eh = [unit([a + b for a, b in zip(r, delta)]) for r in pool]
    lam, kappa = mp.mpf(inp["lambda"]), mp.mpf(inp["kappa"])
    num = mp.mpf(0)
    den = mp.mpf(0)
    for j, i in enumerate(inp["top_m"]):
        g = []
        for k in range(K):
            s = dot(vp[i], th[k])
            sel = inp["selections"][k]
            zt = mp.fsum(dot(vp[i], eh[k * T + q]) for q in sel) / len(sel)
            g.append(lam * zt + (1 - lam) * s)
        z = [mp.exp(kappa * x) for x in g]
        total = mp.fsum(z)
        p = [x / total for x in z]
        h = -mp.fsum(x * mp.log(x) for x in p)
        w = mp.mpf(inp["weights"][j])
        num += w * h
        den += w
    return num / den


def main():
    rng = np.random.default_rng(7)
    N, K, T, d, r = 4, 2, 2, 3, 3
    h = d // r
    boxes = [[0, 0, 10, 10], [1, 1, 11, 11], [40, 40, 50, 50], [41, 40, 51, 50]]
    top_m = [2, 0, 3]
    sizes = [2, 1, 2]
    inp = {
        "N": N, "K": K, "T": T, "d": d, "r": r,
        "boxes": boxes,
        "features": rng.normal(size=(N, d)).tolist(),
        "class_embeddings": rng.normal(size=(K, d)).tolist(),
        "prompt_pool": rng.normal(size=(K * T, d)).tolist(),
        "w_down": rng.normal(size=(d, h)).tolist(),
        "b_down": rng.normal(scale=0.1, size=(1, h)).tolist(),
        "w_up": rng.normal(scale=0.3, size=(h, d)).tolist(),
        "b_up": rng.normal(scale=0.1, size=(1, d)).tolist(),
        "delta": rng.normal(scale=0.2, size=(1, d)).tolist(),
        "top_m": top_m,
        "weights": [float(s) ** 1.1 for s in sizes],
        "selections": [[1], [0]],
        "lambda": 0.3,
        "kappa": 6.0,
    }
    loss = objective(inp)
    inp["expected_loss"] = float(loss)
    inp["expected_loss_digits"] = mp.nstr(loss, 30)
    (ROOT / "tests/fixtures/objective_golden.json").write_text(json.dumps(inp, indent=1) + "\n")

    d2, r2 = 4, 2
    a = {
        "d": d2, "r": r2,
        "features": rng.normal(size=(3, d2)).tolist(),
        "w_down": rng.normal(size=(d2, d2 // r2)).tolist(),
        "b_down": rng.normal(scale=0.5, size=(1, d2 // r2)).tolist(),
        "w_up": rng.normal(size=(d2 // r2, d2)).tolist(),
        "b_up": rng.normal(scale=0.5, size=(1, d2)).tolist(),
    }
    a["features"][0] = [1.0, 0.0, 0.0, 0.0]
    out = adapter(mpm(a["features"]), mpm(a["w_down"]), mpm(a["b_down"]), mpm(a["w_up"]), mpm(a["b_up"]))
    a["expected"] = [[float(x) for x in row] for row in out]
    (ROOT / "tests/fixtures/adapter_golden.json").write_text(json.dumps(a, indent=1) + "\n")
    print("loss", inp["expected_loss_digits"])


if __name__ == "__main__":
    main()
