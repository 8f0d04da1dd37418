"""Density-increment experiments on small subsets of [N'].

A step embeds A into Z/NZ for the smallest prime N in [1024 N', 2048 N'],
compares its 5-AP count with that of the constant delta on [N'], and, if
the two differ, refines the factor B* = {[N'], complement} with phases
found by the correlation search.  An atom of elevated density is then cut
into progressions with the partitioner and the longest dense one is kept.
All thresholds that the asymptotic argument leaves implicit are explicit
configuration values, expressed relative to the scale N'/N where that is
the natural unit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np
from sympy import nextprime

from .apcount import SetInInterval, count_5aps, count_5aps_integers, interval_ap_count, lift
from .factors import (
    CorrelationWitness,
    Factor,
    build_phase_factor,
    join,
    witness_components,
    cubic_correlation_search,
    find_increment_atom,
    kvn_decompose,
    window_labels,
)
from .gowers import u_norm
from .partitioner import (
    CubicPhaseOnProgression,
    Progression,
    covers_exactly,
    cut_by_window,
    partition_by_linear,
    reduce_degree_partition,
)

__all__ = [
    "ExperimentConfig",
    "TrichotomyOutcome",
    "StepRecord",
    "RunTrace",
    "prime_embed",
    "trichotomy_step",
    "density_increment_run",
    "generate_ap_free_set",
    "atom_progressions",
]


def prime_embed(n_prime: int) -> int:
    """Smallest prime in [1024 N', 2048 N']."""
    if n_prime < 1:
        raise ValueError("N' must be >= 1")
    lo = 1024 * n_prime
    p = int(nextprime(lo - 1))
    if p > 2 * lo:
        raise AssertionError(f"no prime found in [{lo}, {2 * lo}]")
    return p


@dataclass
class ExperimentConfig:
    c: float = 0.1
    c_prime: float = 1e-5
    resolution: int = 64
    oracle_budget: int = 10**8
    oracle_threshold_rel: float = 0.05  # correlation threshold in units of N'/N
    oracle_max_height: int = 2
    oracle_rank_cap: int = 0
    eta_rel: float = 0.1  # U^4 target in units of ||1_[N']||_{U^4}
    kvn_max_iterations: int = 3
    max_atoms: Optional[int] = None
    atom_floor_rel: float = 0.01  # atom size floor in units of N'
    partition_eps: float = 1 / 256
    small_n_floor: int = 16
    max_steps: int = 40
    work_cap: int = 10**10
    seed: int = 0
    trace_csv: Optional[str] = None
    trace_json: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.c_prime <= max(self.c, 1) / 1e5:
            raise ValueError("c' must satisfy 0 < c' <= max(c, 1)/1e5")
        if self.resolution < 2:
            raise ValueError("resolution K must be >= 2")
        if not 0 < self.partition_eps < 1:
            raise ValueError("partition_eps must lie in (0, 1)")
        for name in ("oracle_budget", "kvn_max_iterations", "max_steps", "work_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.oracle_threshold_rel < 0 or self.eta_rel <= 0 or self.atom_floor_rel < 0:
            raise ValueError("relative thresholds must be nonnegative (eta positive)")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass
class TrichotomyOutcome:
    kind: str  # SmallN | LambdaClose | Increment | OracleFailed
    deficit: Optional[float] = None
    progression: Optional[Progression] = None
    new_density: Optional[float] = None
    witness: Optional[CorrelationWitness] = None
    detail: str = ""

    KINDS = ("SmallN", "LambdaClose", "Increment", "OracleFailed")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown outcome {self.kind!r}")
        if self.kind == "Increment" and (self.progression is None or self.new_density is None):
            raise ValueError("Increment needs a progression and a density")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "deficit": self.deficit,
            "progression": None if self.progression is None else self.progression.to_json(),
            "new_density": self.new_density,
            "witness": None if self.witness is None else self.witness.to_json(),
            "detail": self.detail,
        }


@dataclass
class StepRecord:
    step: int
    n_prime: int
    modulus: int
    size: int
    density: float
    ap_count: int
    ap_count_constant: float
    outcome: TrichotomyOutcome
    kvn: Optional[dict] = None

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in ("step", "n_prime", "modulus", "size", "density", "ap_count", "ap_count_constant")}
        d["outcome"] = self.outcome.to_json()
        d["kvn"] = self.kvn
        return d


@dataclass
class RunTrace:
    config: ExperimentConfig
    steps: List[StepRecord] = field(default_factory=list)

    CSV_FIELDS = ("step", "n_prime", "density", "outcome", "progression")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for s in self.steps:
            p = s.outcome.progression
            prog = "" if p is None else f"{p.base}:{p.step}:{p.length}"
            w.writerow([s.step, s.n_prime, repr(s.density), s.outcome.kind, prog])
        return buf.getvalue()

    def to_json(self) -> dict:
        # output paths are not experiment parameters; keep them out of the trace
        cfg = {k: v for k, v in self.config.to_json().items() if k not in ("trace_csv", "trace_json")}
        return {"config": cfg, "steps": [s.to_json() for s in self.steps]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def write(self):
        if self.config.trace_csv:
            Path(self.config.trace_csv).write_text(self.to_csv())
        if self.config.trace_json:
            Path(self.config.trace_json).write_text(self.dumps())


def _interval_factor(n: int, n_prime: int) -> Factor:
    lab = np.zeros(n, dtype=np.int64)
    lab[1 : n_prime + 1] = 1
    return Factor(lab)


def atom_progressions(components, labels_by_comp, target, n: int, n_prime: int, eps: float) -> List[Progression]:
    """Progressions in [1, N'] whose union is the atom with the given label tuple.

    Linear components are handled first (a common step from the linear
    partition, then one window cut per phase); each surviving progression
    is then split by degree reduction of the cubic components and cut again.
    """
    lin = [i for i, s in enumerate(components) if s.phase.coeffs[2] % n == 0 and s.phase.coeffs[3] % n == 0 and s.phase.domain is None]
    cub = [i for i in range(len(components)) if i not in lin]
    pieces = [Progression(1, 1, n_prime)]
    if lin:
        alphas = [Fraction(int(components[i].phase.coeffs[1]) % n, n) for i in lin]
        pieces = partition_by_linear(pieces[0], alphas, eps)
        for i in lin:
            lab, t = labels_by_comp[i], target[i]
            pieces = cut_by_window(pieces, (max(t, 0), components[i].resolution), membership=lambda x, lab=lab, t=t: lab[x] == t)
    if cub:
        out = []
        for p in pieces:
            cubics = [
                CubicPhaseOnProgression.from_integer_polynomial(components[i].phase.coeffs, n, p, components[i].offset)
                for i in cub
            ]
            sub = reduce_degree_partition(p, cubics, eps)
            for i in cub:
                lab, t = labels_by_comp[i], target[i]
                sub = cut_by_window(sub, (max(t, 0), components[i].resolution), membership=lambda x, lab=lab, t=t: lab[x] == t)
            out.extend(sub)
        pieces = sorted(out)
    return pieces


def _density_on(a: SetInInterval, p: Progression) -> float:
    els = p.elements()
    return float(np.isin(els, np.array(a.elements, dtype=np.int64)).sum()) / p.length


def trichotomy_step(a: SetInInterval, cfg: ExperimentConfig, step: int = 0) -> StepRecord:
    if len(a) == 0:
        raise ValueError("A must be nonempty")
    m = a.bound
    n = prime_embed(m)
    delta = a.density
    count = count_5aps(a, n)
    const = delta**5 * interval_ap_count(m)
    rec = StepRecord(step, m, n, len(a), delta, count, const, None)
    if m < cfg.small_n_floor:
        rec.outcome = TrichotomyOutcome("SmallN", detail=f"N'={m} below floor {cfg.small_n_floor}")
        return rec
    # |Lambda(f) - Lambda(delta 1)| against c delta^5 Lambda(1_[N']), all times N^2
    deficit = abs(count - const) / n**2
    if abs(count - const) <= cfg.c * const:
        rec.outcome = TrichotomyOutcome("LambdaClose", deficit=deficit)
        return rec

    f = lift(a.indicator(), n)
    scale = m / n
    base = _interval_factor(n, m)
    eta = cfg.eta_rel * u_norm(lift(np.ones(m), n), 4, work_cap=cfg.work_cap)
    threshold = cfg.oracle_threshold_rel * scale

    def oracle(g):
        return cubic_correlation_search(
            g, cfg.oracle_budget, threshold,
            rank_cap=cfg.oracle_rank_cap, max_height=cfg.oracle_max_height, report=True,
        )

    res = kvn_decompose(
        f, eta, oracle, resolution=cfg.resolution, threshold=threshold,
        max_iterations=cfg.kvn_max_iterations, max_atoms=cfg.max_atoms, initial=base,
        norm=lambda g: u_norm(g, 4, work_cap=cfg.work_cap),
    )
    rec.kvn = {
        "outcome": res.outcome,
        "iterations": res.iterations,
        "energies": [s.energy for s in res.trace],
        "residual_norms": [s.residual_norm for s in res.trace],
        "atoms": res.factor.num_atoms,
        "eta": eta,
        "threshold": threshold,
        "witnesses": [s.witness.to_json() for s in res.trace if s.witness is not None],
    }
    # factor chain B* = B_0 < B_1 < ... ; the finest level holding an atom wins
    chain = [(base, [])]
    comps: list = []
    for st in res.trace[1:]:
        comps = comps + witness_components(st.witness, cfg.resolution)
        fac = chain[-1][0]
        for spec in comps[len(chain[-1][1]):]:
            fac = join(fac, build_phase_factor(spec))
        chain.append((fac, comps))
    if chain[-1][0] != res.factor:
        raise AssertionError("rebuilt factor chain disagrees with the KvN factor")
    floor_measure = cfg.atom_floor_rel * scale
    atom = None
    for level in range(len(chain) - 1, -1, -1):
        fac, comps = chain[level]
        atom = find_increment_atom(f, fac, delta, cfg.c_prime, floor_measure)
        if atom is not None:
            break
    rec.kvn["increment_level"] = None if atom is None else level
    if atom is None:
        rec.outcome = TrichotomyOutcome(
            "OracleFailed", deficit=deficit, witness=res.best_witness,
            detail=f"kvn {res.outcome}; no atom with mean >= (1+c')delta",
        )
        return rec
    members = fac.atom(atom)
    if members.min() < 1 or members.max() > m:
        raise AssertionError("increment atom leaves [N']")
    labels = [window_labels(s) for s in comps]
    target = [int(lab[members[0]]) for lab in labels]
    progs = atom_progressions(comps, labels, target, n, m, cfg.partition_eps)
    if not covers_exactly(progs, members):
        raise AssertionError("partition pieces do not cover the atom exactly")
    floor = cfg.c_prime * delta * len(members) / max(len(progs), 1)
    goal = (1 + cfg.c_prime) * delta
    best = None
    for p in progs:
        if p.length < floor:
            continue
        dens = _density_on(a, p)
        if dens < goal:
            continue
        key = (-p.length, -dens, p.base, p.step)
        if best is None or key < best[0]:
            best = (key, p, dens)
    if best is None:
        rec.outcome = TrichotomyOutcome(
            "OracleFailed", deficit=deficit, witness=res.best_witness,
            detail=f"atom split into {len(progs)} progressions, none dense enough",
        )
        return rec
    _, p, dens = best
    rec.outcome = TrichotomyOutcome("Increment", deficit=deficit, progression=p, new_density=dens, witness=res.best_witness)
    return rec


def _rescale(a: SetInInterval, p: Progression) -> SetInInterval:
    s = set(a.elements)
    return SetInInterval(p.length, [t + 1 for t in range(p.length) if p.base + p.step * t in s])


def density_increment_run(a: SetInInterval, cfg: ExperimentConfig) -> RunTrace:
    cfg.validate()
    trace = RunTrace(cfg)
    delta0 = a.density
    bound = math.ceil(math.log(1 / delta0) / math.log1p(cfg.c_prime)) + 1 if delta0 < 1 else 1
    cur = a
    for i in range(cfg.max_steps):
        rec = trichotomy_step(cur, cfg, i)
        trace.steps.append(rec)
        out = rec.outcome
        if out.kind != "Increment":
            break
        p = out.progression
        direct = _density_on(cur, p)
        if direct != out.new_density or direct < (1 + cfg.c_prime) * cur.density:
            raise AssertionError("increment density does not re-verify")
        cur = _rescale(cur, p)
        if cur.density > 1:
            break
    if len(trace.steps) > bound:
        raise AssertionError(f"{len(trace.steps)} steps exceed the bound {bound}")
    trace.write()
    return trace


def _completes_ap(x: int, chosen: set, hi: int) -> bool:
    for pos in range(5):
        for d in range(1, hi):
            lo_t, hi_t = x - pos * d, x + (4 - pos) * d
            if lo_t < 1 or hi_t > hi:
                if lo_t < 1 and hi_t > hi:
                    break
                continue
            if all(x + (i - pos) * d in chosen for i in range(5) if i != pos):
                return True
    return False


def generate_ap_free_set(n_prime: int, strategy: str = "greedy", seed: int = 0) -> SetInInterval:
    if n_prime < 1:
        raise ValueError("N' must be >= 1")
    chosen: set = set()
    if strategy == "greedy":
        for x in range(1, n_prime + 1):
            if not any(all(x - i * d in chosen for i in range(1, 5)) for d in range(1, (x - 1) // 4 + 1)):
                chosen.add(x)
    elif strategy == "random-greedy":
        order = np.random.default_rng(seed).permutation(np.arange(1, n_prime + 1))
        for x in order.tolist():
            if not _completes_ap(x, chosen, n_prime):
                chosen.add(x)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    out = SetInInterval(n_prime, chosen)
    if count_5aps_integers(out.elements) != len(out):
        raise AssertionError("generated set contains a 5-AP")
    return out
