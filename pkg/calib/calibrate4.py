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

def c2d(name, values, realizations=300):
    cfg = ex.resolve_config(name, sizes=(8, 12, 16, 20), values=values,
                            realizations=realizations, periods="L")
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_per_l")
    show(curves, name)
    print(f"{name} crossings:", crossing(curves), flush=True)
    print(f"{name} stats:", run.stats, flush=True)

timed("c2d-wide", lambda: c2d("clifford2d", (0.31, 0.34, 0.37, 0.40, 0.43)))
timed("c2d-dual-wide", lambda: c2d("clifford2d-dual", (0.23, 0.26, 0.29, 0.32, 0.35)))

def aa_dual_crossing():
    cfg = ex.resolve_config("aa-dual", sizes=(48, 64, 96, 128), realizations=16, periods="2L")
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_density")
    show(curves, "aa-dual16")
    print("aa-dual16 crossings:", crossing(curves), flush=True)
timed("aa-dual16", aa_dual_crossing)

def aa_dual_log():
    cfg = ex.resolve_config("aa-dual", sizes=(64, 96, 128, 256), values=(0.2, 1.2), realizations=8)
    run = ex.run_experiment(cfg)
    ecurves = ex.curves_from_records(run.records, "entropy")
    for lam in (0.2, 1.2):
        ss = {int(L): float(np.interp(lam, x, y)) for L, (x, y) in ecurves.items()}
        print(f"aa-dual-log lam={lam} S(L)={ss}", flush=True)
        sizes = sorted(ss)
        rep = analysis.scaling_diagnostics(sizes, [ss[k] for k in sizes])
        print("   residuals:", {k: round(v, 4) for k, v in rep.residuals.items()},
              "best:", rep.best, flush=True)
timed("aa-dual-log", aa_dual_log)
