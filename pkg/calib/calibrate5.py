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

def time_512():
    cfg = ex.resolve_config("aa-dual", sizes=(512,), values=(1.2,), realizations=1)
    run = ex.run_experiment(cfg)
    print("aa-dual L=512 one realization:", run.records[0], flush=True)
timed("time-512", time_512)

def log_stats():
    cfg = ex.resolve_config("aa-dual", sizes=(48, 64, 96, 128, 192), values=(0.2, 1.2),
                            realizations=32)
    run = ex.run_experiment(cfg)
    ecurves = ex.curves_from_records(run.records, "entropy")
    for lam in (0.2, 1.2):
        ss = {int(L): float(np.interp(lam, x, y)) for L, (x, y) in ecurves.items()}
        print(f"log32 lam={lam} S(L)={ss}", flush=True)
        sizes = sorted(ss)
        rep = analysis.scaling_diagnostics(sizes, [ss[k] for k in sizes])
        print("   residuals:", {k: round(v, 4) for k, v in rep.residuals.items()},
              "best:", rep.best, flush=True)
timed("log32", log_stats)

def crossing64():
    cfg = ex.resolve_config("aa-dual", sizes=(48, 64, 96, 128),
                            values=(0.44, 0.49, 0.54, 0.59, 0.64, 0.69, 0.74, 0.84),
                            realizations=64, periods="2L")
    run = ex.run_experiment(cfg)
    curves = ex.curves_from_records(run.records, "entropy_density")
    show(curves, "aa-dual64")
    print("aa-dual64 crossings:", crossing(curves), flush=True)
timed("cross64", crossing64)
