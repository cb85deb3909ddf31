"""Reduced-scale calibration of every acceptance-facing observable."""
import time
import numpy as np
from dualcirc import analysis, experiments as ex


def timed(label, fn):
    t0 = time.time()
    out = fn()
    print(f"[{label}] {time.time()-t0:.1f}s", flush=True)
    return out


def crossing(curves):
    """Pairwise crossing estimates of y(x) curves keyed by L."""
    import itertools
    out = []
    items = sorted(curves.items())
    for (l1, (x1, y1)), (l2, (x2, y2)) in itertools.combinations(items, 2):
        lo, hi = max(x1[0], x2[0]), min(x1[-1], x2[-1])
        xs = np.linspace(lo, hi, 400)
        d = np.interp(xs, x1, y1) - np.interp(xs, x2, y2)
        sign = np.sign(d)
        idx = np.nonzero(np.diff(sign))[0]
        if len(idx):
            k = idx[0]
            x0 = xs[k] - d[k] * (xs[k+1]-xs[k]) / (d[k+1]-d[k])
            out.append((l1, l2, x0))
    return out


# --- aa-unitary volume-law density -------------------------------------
def aa_unit():
    cfg = ex.resolve_config("aa-unitary", sizes=(512,), values=(0.2,), realizations=5)
    run = ex.run_experiment(cfg)
    vals = [r["value"] for r in run.records if r["observable"] == "entropy_density"]
    print("aa-unitary L=512 lam=0.2 S/L_A:", np.mean(vals), "+-", np.std(vals), flush=True)
timed("aa-unitary", aa_unit)

# --- aa-dual: log phase + crossing at small sizes ----------------------
def aa_dual():
    cfg = ex.resolve_config("aa-dual", sizes=(32, 64, 128), realizations=3, periods="2L")
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_density")
    print("aa-dual crossings:", crossing(curves), flush=True)
    ecurves = ex.curves_from_records(run.records, "entropy")
    for lam in (0.2, 1.2):
        ss = {L: float(np.interp(lam, x, y)) for L, (x, y) in ecurves.items()}
        rep = analysis.scaling_diagnostics(sorted(ss), [ss[k] for k in sorted(ss)])
        print(f"aa-dual lam={lam} S(L)={ss} prefers log over linear:",
              rep.prefers("log", "linear") if hasattr(rep, "prefers") else rep, flush=True)
timed("aa-dual", aa_dual)

# --- aa-purify thresholds ---------------------------------------------
def aa_pur():
    cfg = ex.resolve_config("aa-purify", sizes=(64, 128), realizations=3)
    run = ex.run_experiment(cfg)
    recs = [r for r in run.records if r["observable"] == "entropy_density"]
    for L in (64, 128):
        for lam in (0.2, 1.2):
            tr = sorted((r["t"], r["value"]) for r in recs
                        if r["L"] == L and abs(r["param_value"] - lam) < 1e-9 and r["realization"] == 0)
            final = np.mean([r["value"] for r in recs
                             if r["L"] == L and abs(r["param_value"] - lam) < 1e-9 and r["t"] == 4 * L])
            below = [t for t, v in tr if v < 1e-3]
            print(f"aa-purify L={L} lam={lam}: S/L(4L)={final:.4g} first t below 1e-3: "
                  f"{below[0] if below else 'never'}", flush=True)
timed("aa-purify", aa_pur)

# --- 2D Clifford both circuits, reduced -------------------------------
def c2d(name):
    cfg = ex.resolve_config(name, sizes=(8, 12, 16), realizations=100)
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_per_l")
    print(name, "crossings:", crossing(curves), flush=True)
    fit = analysis.collapse_fit(curves, mode="difference", n_boot=20)
    print(name, "collapse:", fit, flush=True)
    print(name, "stats:", run.stats, flush=True)
timed("clifford2d", lambda: c2d("clifford2d"))
timed("clifford2d-dual", lambda: c2d("clifford2d-dual"))

# --- MBL eigenstate collapse, reduced ---------------------------------
def mbl():
    cfg = ex.resolve_config("mbl-eigen", sizes=(6, 8, 10), realizations=100,
                            size_realizations={10: 24})
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_ratio")
    print("mbl-eigen crossings:", crossing(curves), flush=True)
    fit = analysis.collapse_fit(curves, mode="ratio", n_boot=20)
    print("mbl-eigen collapse:", fit, flush=True)
timed("mbl-eigen", mbl)

# --- ancilla purification ---------------------------------------------
def anc():
    cfg = ex.resolve_config("mbl-ancilla", sizes=(8, 10, 12), realizations=40)
    run = ex.run_experiment(cfg)
    agg = analysis.aggregate(run.records, keys=("param_value", "L")).points
    for (jx, L), pt in sorted(agg.items()):
        print(f"mbl-ancilla jx={jx} L={L}: t_p = {pt.mean:.2f} +- {pt.sem:.2f}", flush=True)
timed("mbl-ancilla", anc)

# --- correlator -------------------------------------------------------
def corr():
    cfg = ex.resolve_config("correlator", sizes=(8, 10), realizations=64,
                            size_realizations={10: 16})
    run = ex.run_experiment(cfg)
    agg = analysis.aggregate(run.records, keys=("L", "param_value")).points
    for key, pt in sorted(agg.items()):
        print("correlator", key, f"{pt.mean:.6f} +- {pt.sem:.4f}", flush=True)
timed("correlator", corr)
