"""
Randomized comparison of the bounds against certified optima.

Each trial draws a state set and an inconclusive rate ``p``, computes
every bound, and measures ``|bound - opt| / opt``. The optimum is pinned
to the narrowest interval certified by the oracle and the bounds
themselves; its midpoint is the reference and its width is reported.
"""

from __future__ import annotations

import io
import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .inconclusive import IncParams, pcuip
from .minerr import minerr_bounds
from .oracle import OracleNotConverged, inc_oracle, minerr_oracle
from .states import random_state_set

CSV_VERSION = "# qsd-bounds v1"

ME_KEYS = ("pcup", "pcup_prime", "qiu", "pclp", "srm")
INC_KEYS = ("pcuip", "pclip")

# slack for the re-checked inequalities at emission
SANDWICH_SLACK = 1e-7
INC_SANDWICH_SLACK = 1e-6
QIU_SLACK = 1e-10


def default_dim(m: int, r: int) -> int:
    return max(m, r + 1)


@dataclass(frozen=True)
class ExperimentConfig:
    M: int
    R: int
    N: int | None = None
    trials: int = 100
    seed: int = 0
    p_range: tuple[float, float] = (0.0, 0.2)
    J: int = 3
    me_tol: float = 1e-8
    inc_tol: float = 1e-5
    max_iters: int = 20000

    def __post_init__(self):
        if self.N is None:
            object.__setattr__(self, "N", default_dim(self.M, self.R))
        lo, hi = self.p_range
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 1 <= self.R <= self.N:
            raise ValueError(f"need 1 <= R <= N, got R={self.R}, N={self.N}")
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError(f"need 0 <= p_lo <= p_hi <= 1, got ({lo}, {hi})")
        if self.J < 0:
            raise ValueError(f"J must be >= 0, got {self.J}")


class Trial(NamedTuple):
    index: int
    p: float
    values: dict[str, float]
    opt: float
    opt_width: float
    opt_p: float
    opt_p_width: float
    gap_me: float
    gap_inc: float
    converged: bool
    violations: list[str]


def trial_rng(seed: int, m: int, r: int, index: int) -> np.random.Generator:
    """Independent substream per trial, so results do not depend on execution order."""
    return np.random.default_rng([seed, m, r, index])


def run_trial(cfg: ExperimentConfig, index: int) -> Trial:
    rng = trial_rng(cfg.seed, cfg.M, cfg.R, index)
    states = random_state_set(cfg.N, cfg.M, cfg.R, rng)
    p = float(rng.uniform(*cfg.p_range))

    rep = minerr_bounds(states)
    inc = pcuip(states, IncParams(p, cfg.J))
    values = {
        "pcup": rep.pcup,
        "pcup_prime": rep.pcup_prime,
        "qiu": rep.qiu,
        "pclp": rep.pclp,
        "srm": rep.srm_value,
        "pcuip": inc.pcuip,
        "pclip": inc.pclip,
    }

    converged = True
    try:
        me = minerr_oracle(states, tol=cfg.me_tol, max_iters=cfg.max_iters)
    except OracleNotConverged as exc:
        me, converged = exc.certificate, False
    try:
        ic = inc_oracle(states, p, tol=cfg.inc_tol, max_iters=cfg.max_iters)
    except OracleNotConverged as exc:
        ic, converged = exc.certificate, False

    violations = []
    if rep.pclp > me.dual_value + SANDWICH_SLACK:
        violations.append("pclp > oracle dual")
    if me.primal_value > rep.pcup + SANDWICH_SLACK:
        violations.append("oracle primal > pcup")
    if rep.pcup_prime > rep.qiu + QIU_SLACK:
        violations.append("pcup_prime > qiu")
    if inc.pclip > ic.dual_value + INC_SANDWICH_SLACK:
        violations.append("pclip > inc oracle dual")
    if ic.primal_value > inc.pcuip + INC_SANDWICH_SLACK:
        violations.append("inc oracle primal > pcuip")

    # every quantity below is a certified bound on the optimum
    lo = max(me.primal_value, rep.pclp, rep.srm_value)
    hi = min(me.dual_value, rep.pcup, rep.pcup_prime, rep.qiu)
    lo_p = max(ic.primal_value, inc.pclip)
    hi_p = min(ic.dual_value, inc.pcuip)
    return Trial(
        index=index,
        p=p,
        values=values,
        opt=0.5 * (lo + hi),
        opt_width=max(hi - lo, 0.0),
        opt_p=0.5 * (lo_p + hi_p),
        opt_p_width=max(hi_p - lo_p, 0.0),
        gap_me=me.gap,
        gap_inc=ic.gap,
        converged=converged,
        violations=violations,
    )


@dataclass
class CellResult:
    config: ExperimentConfig
    trials: list[Trial]
    seconds: float = 0.0
    mean_rel_err: dict[str, float] = field(default_factory=dict)

    @property
    def used(self) -> list[Trial]:
        return [t for t in self.trials if t.converged]

    @property
    def excluded(self) -> int:
        return len(self.trials) - len(self.used)

    @property
    def violations(self) -> int:
        return sum(len(t.violations) for t in self.trials)

    def summarize(self) -> None:
        used = self.used
        self.mean_rel_err = {}
        for key in ME_KEYS:
            self.mean_rel_err[key] = _mean(abs(t.values[key] - t.opt) / t.opt for t in used)
        for key in INC_KEYS:
            self.mean_rel_err[key] = _mean(abs(t.values[key] - t.opt_p) / t.opt_p for t in used)

    def mean(self, attr: str) -> float:
        return _mean(getattr(t, attr) for t in self.used)


def _mean(xs: Iterable[float]) -> float:
    xs = list(xs)
    return float(np.mean(xs)) if xs else float("nan")


def _cell_trial(args):
    cfg, index = args
    return run_trial(cfg, index)


def run_cell(cfg: ExperimentConfig, jobs: int = 1) -> CellResult:
    start = time.perf_counter()
    tasks = [(cfg, i) for i in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(_cell_trial, tasks, chunksize=max(1, cfg.trials // (4 * jobs))))
    else:
        trials = [_cell_trial(t) for t in tasks]
    trials.sort(key=lambda t: t.index)
    cell = CellResult(cfg, trials, time.perf_counter() - start)
    cell.summarize()
    return cell


def run_experiment(
    ms: Iterable[int],
    rs: Iterable[int],
    n: int | None = None,
    jobs: int = 1,
    **kwargs,
) -> list[CellResult]:
    """Run every ``(M, R)`` cell; ``N`` defaults to ``max(M, R + 1)`` per cell."""
    return [run_cell(ExperimentConfig(M=m, R=r, N=n, **kwargs), jobs) for m in ms for r in rs]


COLUMNS = (
    ["M", "R", "N", "trials", "used", "excluded", "J", "p_lo", "p_hi"]
    + [f"mean_rel_err_{k}" for k in ME_KEYS + INC_KEYS]
    + ["oracle_mean_gap_me", "oracle_mean_gap_inc", "opt_mean_width", "opt_p_mean_width", "violations"]
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def to_csv(cells: list[CellResult], timing: bool = False) -> str:
    """
    CSV text, one row per cell.

    Rows are a pure function of the configurations, so output is
    byte-identical across runs; ``timing`` appends a wall-clock column,
    which is not.
    """
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    buf.write("# ensemble: sigma = A A^dagger / Tr, A complex Ginibre N x R; priors normalized standard exponentials\n")
    dims = sorted({(c.config.M, c.config.R, c.config.N) for c in cells})
    buf.write("# N per cell: " + " ".join(f"M={m},R={r}:N={n}" for m, r, n in dims) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS + (["wall_clock_s"] if timing else []))
    for c in cells:
        cfg = c.config
        row = [cfg.M, cfg.R, cfg.N, cfg.trials, len(c.used), c.excluded, cfg.J, float(cfg.p_range[0]), float(cfg.p_range[1])]
        row += [c.mean_rel_err[k] for k in ME_KEYS + INC_KEYS]
        row += [c.mean("gap_me"), c.mean("gap_inc"), c.mean("opt_width"), c.mean("opt_p_width"), c.violations]
        if timing:
            row.append(round(c.seconds, 3))
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()
