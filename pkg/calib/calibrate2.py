import itertools, time
import numpy as np
from dualcirc import analysis, experiments as ex

def timed(label, fn):
    t0 = time.time()
    fn()
    print(f"[{label}] {time.time()-t0:.1f}s", flush=True)

def crossing(curves):
    out = []
    for (l1, (x1, y1)), (l2, (x2, y2)) in itertools.combinations(sorted(curves.items()), 2):
        lo, hi = max(x1[0], x2[0]), min(x1[-1], x2[-1])
        xs = np.linspace(lo, hi, 400)
        d = np.interp(xs, x1, y1) - np.interp(xs, x2, y2)
        idx = np.nonzero(np.diff(np.sign(d)))[0]
        if len(idx):
            k = idx[0]
            out.append((l1, l2, round(xs[k] - d[k]*(xs[k+1]-xs[k])/(d[k+1]-d[k]), 4)))
    return out

def show(curves, label):
    for L, (x, y) in sorted(curves.items()):
        print(f"  {label} L={int(L)}: " + " ".join(f"{xi:g}:{yi:.4f}" for xi, yi in zip(x, y)), flush=True)

def aa_dual():
    cfg = ex.resolve_config("aa-dual", sizes=(32, 48, 64, 96, 128), realizations=4, periods="2L")
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_density")
    show(curves, "aa-dual")
    print("aa-dual crossings:", crossing(curves), flush=True)
    ecurves = ex.curves_from_records(run.records, "entropy")
    for lam in (0.2, 1.2):
        ss = {int(L): float(np.interp(lam, x, y)) for L, (x, y) in ecurves.items()}
        rep = analysis.scaling_diagnostics(sorted(ss), [ss[k] for k in sorted(ss)])
        print(f"aa-dual lam={lam} S(L)={ss}")
        print("   report:", rep, flush=True)
timed("aa-dual", aa_dual)

def c2d(name):
    cfg = ex.resolve_config(name, sizes=(8, 12, 16), realizations=100)
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_per_l")
    show(curves, name)
    print(name, "crossings:", crossing(curves), flush=True)
    print(name, "collapse:", analysis.collapse_fit(curves, mode="difference", n_boot=20), flush=True)
    print(name, "stats:", run.stats, flush=True)
timed("clifford2d", lambda: c2d("clifford2d"))
timed("clifford2d-dual", lambda: c2d("clifford2d-dual"))

def mbl():
    cfg = ex.resolve_config("mbl-eigen", sizes=(6, 8, 10), realizations=100,
                            size_realizations={10: 24})
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_ratio")
    show(curves, "mbl-eigen")
    print("mbl-eigen crossings:", crossing(curves), flush=True)
    print("mbl-eigen collapse:", analysis.collapse_fit(curves, mode="ratio", n_boot=20), flush=True)
timed("mbl-eigen", mbl)

def anc():
    cfg = ex.resolve_config("mbl-ancilla", sizes=(8, 10, 12), realizations=40)
    run = ex.run_experiment(cfg)
    agg = analysis.aggregate(run.records, keys=("param_value", "L")).points
    for (jx, L), pt in sorted(agg.items()):
        print(f"mbl-ancilla jx={jx} L={L}: t_p = {pt.mean:.2f} +- {pt.sem:.2f}", flush=True)
timed("mbl-ancilla", anc)

def corr():
    cfg = ex.resolve_config("correlator", sizes=(8, 10), realizations=64,
                            size_realizations={10: 16})
    run = ex.run_experiment(cfg)
    agg = analysis.aggregate(run.records, keys=("L", "param_value")).points
    for key, pt in sorted(agg.items()):
        print("correlator", key, f"{pt.mean:.6f} +- {pt.sem:.4f}", flush=True)
timed("correlator", corr)

def aa_unit():
    cfg = ex.resolve_config("aa-unitary", sizes=(512,), values=(0.2,), realizations=8)
    run = ex.run_experiment(cfg)
    vals = [r["value"] for r in run.records if r["observable"] == "entropy_density"]
    print("aa-unitary random-z L=512 lam=0.2:", np.mean(vals), "+-",
          np.std(vals)/np.sqrt(len(vals)), flush=True)
timed("aa-unitary", aa_unit)

def aa_pur():
    cfg = ex.resolve_config("aa-purify", sizes=(64, 128), realizations=3)
    run = ex.run_experiment(cfg)
    recs = [r for r in run.records if r["observable"] == "entropy_density"]
    for L in (64, 128):
        for lam in (0.2, 1.2):
            mine = [r for r in recs if r["L"] == L and abs(r["param_value"]-lam) < 1e-9]
            final = np.mean([r["value"] for r in mine if r["t"] == 4*L])
            below = sorted({r["t"] for r in mine if r["value"] < 1e-3})
            print(f"aa-purify L={L} lam={lam}: S/L(4L)={final:.5g} "
                  f"first t<1e-3: {below[0] if below else 'never'}", flush=True)
timed("aa-purify", aa_pur)
