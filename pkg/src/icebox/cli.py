"""Command-line front end: ``icebox enumerate|escape|sweep|verify|geom|saw|trace``.

Every output carries the resolved config, the seed and the package version,
and nothing time-dependent, so identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .errors import BudgetExceeded, IceboxError, UnsupportedGeometry
from .lattice import BoundaryCondition, build_lattice
from .state import WeightParams

log = logging.getLogger("icebox")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3

COMMANDS = ("enumerate", "escape", "sweep", "verify", "geom", "saw", "trace")
_JSON_FIRST = {"enumerate", "verify", "geom"}

SAW_EXACT_MASS_MAX_N = 3

# largest n with an exact kernel, per (chain, boundary)
EXACT_MAX_N = {("glauber", "free"): 3, ("loop", "free"): 2, ("loop", "periodic"): 2}


class ConfigError(IceboxError):
    pass


@dataclass
class ExperimentConfig:
    n: int = 2
    bc: str = "free"
    a: float = 1.0
    b: float = 1.0
    c: float = 3.0
    chain: str = "glauber"
    steps: int = 1000
    cap: int = 10**6
    seed: int = 0
    replicas: int = 20
    stride: int | None = None
    out: str | None = None
    format: str | None = None
    c_values: list | None = None
    near_perfect: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.stride is None:
            # cheap exact runs check every step; long runs classify every 100
            self.stride = 1 if isinstance(self.n, int) and self.n <= 3 else 100
        try:
            self.bc = BoundaryCondition.parse(self.bc).value
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.chain not in ("glauber", "loop"):
            raise ConfigError(f"chain must be glauber or loop, got {self.chain!r}")
        if self.format not in (None, "csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        for name in ("n", "steps", "cap", "replicas", "stride"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0 or not math.isfinite(v):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
            setattr(self, name, float(v))
        if self.c_values is not None:
            if not isinstance(self.c_values, list) or not self.c_values:
                raise ConfigError("c_values must be a non-empty list")
            for v in self.c_values:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                    raise ConfigError(f"c_values entries must be positive, got {v!r}")
            self.c_values = [float(v) for v in self.c_values]
        return self

    @property
    def params(self) -> WeightParams:
        return WeightParams(self.a, self.b, self.c)

    def geometry(self):
        return build_lattice(self.n, self.bc)

    def to_dict(self) -> dict:
        return asdict(self)


_KEYS = {f.name for f in fields(ExperimentConfig)}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the config file, then explicit flags."""
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(merged) - _KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**merged).validate()


# ---------------------------------------------------------------------------
# output helpers

def _meta(command: str, cfg: ExperimentConfig) -> dict:
    return {"command": command, "version": __version__, "seed": cfg.seed, "config": cfg.to_dict()}


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _csv(command: str, cfg: ExperimentConfig, header, rows, trailer=None) -> str:
    buf = io.StringIO()
    buf.write(f"# icebox {__version__} {command}\n")
    buf.write(f"# config {json.dumps(cfg.to_dict(), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    for line in trailer or ():
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _format(command: str, cfg: ExperimentConfig) -> str:
    if cfg.format is not None:
        return cfg.format
    return "json" if command in _JSON_FIRST else "csv"


def _mask_for(space, cls):
    from .topology import classify

    return np.array([classify(s) is cls for s in space.states[: space.num_perfect]]
                    + [False] * (len(space) - space.num_perfect))


def _exact_ok(cfg: ExperimentConfig) -> bool:
    return cfg.n <= EXACT_MAX_N.get((cfg.chain, cfg.bc), 0)


def censored_summary(results, cap: int) -> dict:
    """Hit fraction and median escape time with capped replicas counted at ``cap``."""
    from .chains import CAP_EXCEEDED

    vals = [cap if r is CAP_EXCEEDED else int(r) for r in results]
    capped = sum(r is CAP_EXCEEDED for r in results)
    total = len(results)
    return {
        "replicas": total,
        "hits": total - capped,
        "hit_fraction": (total - capped) / total if total else float("nan"),
        "median": float(np.median(vals)) if vals else float("nan"),
        "median_censored": capped * 2 > total,
        "capped": capped,
    }


# ---------------------------------------------------------------------------
# commands

def cmd_enumerate(cfg: ExperimentConfig) -> tuple[dict, str]:
    from scipy.special import logsumexp

    from .exact import enumerate_states, gibbs, log_partition_function
    from .topology import PartitionClass, classify

    geom = cfg.geometry()
    p = cfg.params
    space = enumerate_states(geom)
    report = {
        "omega": len(space),
        "omega_prime": None,
        "log_Z": log_partition_function(space, p),
    }
    report["Z"] = math.exp(report["log_Z"]) if report["log_Z"] < 700 else math.inf
    if cfg.near_perfect:
        full = enumerate_states(geom, include_near_perfect=True)
        report["omega_prime"] = len(full) - full.num_perfect
    torus_odd = geom.periodic and geom.n % 2
    hist = None
    if not torus_odd:
        pi = gibbs(space, p)
        counts = Counter()
        mass = defaultdict(list)
        for s, w in zip(space.states, space.log_weights(p)):
            k = classify(s).value
            counts[k] += 1
            mass[k].append(w)
        lz = logsumexp(space.log_weights(p))
        hist = {cls.value: {"count": counts[cls.value],
                            "mass": float(math.exp(logsumexp(mass[cls.value]) - lz)) if mass[cls.value] else 0.0}
                for cls in PartitionClass}
        report["mass_total"] = float(sum(h["mass"] for h in hist.values()))
        report["uniform"] = bool(np.allclose(pi, 1.0 / len(space), rtol=0, atol=1e-15))
    report["classes"] = hist
    report["digest"] = space.digest()
    if _format("enumerate", cfg) == "json":
        return report, _json({"meta": _meta("enumerate", cfg), "report": report})
    rows = [[k, v["count"], repr(v["mass"])] for k, v in (hist or {}).items()]
    trailer = [f"omega={report['omega']} omega_prime={report['omega_prime']} log_Z={report['log_Z']!r}"]
    return report, _csv("enumerate", cfg, ["class", "count", "mass"], rows, trailer)


def run_escape(cfg: ExperimentConfig, p: WeightParams | None = None):
    from .chains import hitting_times
    from .state import reference_state_green

    geom = cfg.geometry()
    if cfg.chain == "glauber" and geom.periodic:
        raise UnsupportedGeometry("Glauber escape runs need the free boundary")
    if geom.periodic and geom.n % 2:
        raise UnsupportedGeometry("torus crosses need even n")
    return hitting_times(reference_state_green(geom), "red_cross", cfg.cap, cfg.chain,
                         p or cfg.params, seed=cfg.seed, replicas=cfg.replicas, stride=cfg.stride)


def cmd_escape(cfg: ExperimentConfig) -> tuple[dict, str]:
    from .chains import CAP_EXCEEDED

    res = run_escape(cfg)
    summary = censored_summary([r for _, _, r in res], cfg.cap)
    rows = [[i, s, cfg.cap if r is CAP_EXCEEDED else r, r is not CAP_EXCEEDED] for i, s, r in res]
    if _format("escape", cfg) == "json":
        doc = {"meta": _meta("escape", cfg), "summary": summary,
               "replicas": [dict(zip(("replica", "seed", "steps_or_cap", "hit"), r)) for r in rows]}
        return summary, _json(doc)
    return summary, _csv("escape", cfg, ["replica", "seed", "steps_or_cap", "hit"], rows,
                         [f"summary {json.dumps(summary, sort_keys=True)}"])


def exact_phi(space, chain: str, p: WeightParams, mask) -> dict:
    from .exact import conductance, transition_matrix

    kernel = transition_matrix(space, chain, p)
    return conductance(kernel, S=mask[: kernel.matrix.shape[0]]).to_dict()


def cmd_sweep(cfg: ExperimentConfig) -> tuple[list, str]:
    from .exact import enumerate_states
    from .topology import PartitionClass

    cs = cfg.c_values or [1.0, 2.0, 3.0, 4.0]
    exact = _exact_ok(cfg)
    space = mask = None
    if exact:
        space = enumerate_states(cfg.geometry(), include_near_perfect=cfg.chain == "loop")
        mask = _mask_for(space, PartitionClass.GREEN_CROSS)
    rows = []
    for c in cs:
        p = WeightParams(cfg.a, cfg.b, c)
        summ = censored_summary([r for _, _, r in run_escape(cfg, p)], cfg.cap)
        row = {"c": c, "phase": p.phase(), **{k: summ[k] for k in ("hit_fraction", "median", "median_censored")}}
        if exact:
            cut = exact_phi(space, cfg.chain, p, mask)
            row.update(phi_CG=cut["phi"], mixing_lower_bound=cut["mixing_lower_bound"], pi_CG=cut["pi_S"])
        rows.append(row)
    if _format("sweep", cfg) == "json":
        return rows, _json({"meta": _meta("sweep", cfg), "rows": rows})
    header = list(rows[0])
    return rows, _csv("sweep", cfg, header, [[_cell(r[k]) for k in header] for r in rows])


def _cell(v):
    return repr(v) if isinstance(v, float) else v


def cmd_geom(cfg: ExperimentConfig) -> tuple[dict, str]:
    if _format("geom", cfg) != "json":
        raise ConfigError("geom output is JSON only")
    geom = cfg.geometry()
    doc = geom.to_dict()
    return doc, _json({"meta": _meta("geom", cfg), "geometry": doc})


def cmd_saw(cfg: ExperimentConfig) -> tuple[dict, str]:
    from .exact import enumerate_states
    from .peierls import (
        BOUNDARY, ORIGIN, SAW_CAP, fault_mass_exact, fault_states, peierls_upper_bound, saw_table,
    )

    cap = min(cfg.steps, SAW_CAP)
    origin, boundary = saw_table(cap, ORIGIN), saw_table(cap, BOUNDARY)
    walks = [{"l": l, "origin": origin.counts[l], "boundary": boundary.counts[l],
              "origin_growth": origin.growth(l) if l else None}
             for l in range(cap + 1)]
    cs = cfg.c_values or [cfg.c]
    masks = {}
    bounds = []
    for c in cs:
        p = WeightParams(cfg.a, cfg.b, c)
        for n in range(1, cfg.n + 1):
            row = peierls_upper_bound(n, p, cap=cap).to_dict()
            row["exact_mass"] = None
            if n <= SAW_EXACT_MASS_MAX_N:
                if n not in masks:
                    space = enumerate_states(build_lattice(n))
                    masks[n] = (space, fault_states(space))
                space, mask = masks[n]
                row["exact_mass"] = fault_mass_exact(space, p, mask)
            bounds.append(row)
    doc = {"walks": walks, "bounds": bounds}
    if _format("saw", cfg) == "json":
        return doc, _json({"meta": _meta("saw", cfg), **doc})
    out = _csv("saw", cfg, list(walks[0]), [[_cell(w[k]) for k in walks[0]] for w in walks])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(bounds[0]))
    for b in bounds:
        w.writerow(["" if b[k] is None else _cell(b[k]) for k in bounds[0]])
    return doc, out + "\n" + buf.getvalue()


def cmd_trace(cfg: ExperimentConfig) -> tuple[list, str]:
    """Observer log of one run: class and log weight every ``stride`` steps."""
    from .chains import ChainState, step
    from .state import log_weight, reference_state_green
    from .topology import classify

    geom = cfg.geometry()
    if cfg.chain == "glauber" and geom.periodic:
        raise UnsupportedGeometry("Glauber runs need the free boundary")
    classify_ok = not (geom.periodic and geom.n % 2)
    s = ChainState.start(reference_state_green(geom), cfg.seed)
    p = cfg.params
    rows = []
    for t in range(1, cfg.steps + 1):
        out = step(s, cfg.chain, p)
        if t % cfg.stride == 0 or t == cfg.steps:
            cls = classify(s.cfg).value if classify_ok and s.cfg.is_perfect else ""
            rows.append({"step": t, "move_kind": out.move_kind.value, "class": cls,
                         "log_weight": log_weight(s.cfg, p) if s.cfg.is_perfect else None})
    if _format("trace", cfg) == "json":
        return rows, _json({"meta": _meta("trace", cfg), "rows": rows})
    header = ["step", "move_kind", "class", "log_weight"]
    return rows, _csv("trace", cfg, header, [[_cell(r[k]) if r[k] is not None else "" for k in header] for r in rows])


# ---------------------------------------------------------------------------
# verify

def _entry(name, checked, violations, worst_margin=None, **extra):
    return {"name": name, "passed": violations == 0, "checked": checked,
            "violations": violations, "worst_margin": worst_margin, **extra}


def _skip(name, reason):
    return {"name": name, "passed": True, "skipped": reason, "checked": 0, "violations": 0,
            "worst_margin": None}


def _check_chain(space, chain, p):
    from .exact import detailed_balance_error, gibbs, is_strongly_connected, stationarity_error, transition_matrix

    k = transition_matrix(space, chain, p)
    pi = gibbs(space, p)[: k.matrix.shape[0]]
    db = detailed_balance_error(k, pi)
    rows = np.asarray(k.csr().sum(axis=1)).ravel()
    row_err = float(np.max(np.abs(rows - 1.0)))
    lazy = float(np.min(k.diagonal))
    unif = transition_matrix(space, chain, WeightParams(1, 1, 1))
    size = unif.matrix.shape[0]
    u_err = stationarity_error(unif, np.full(size, 1.0 / size))
    conn = is_strongly_connected(k)
    bad = int(db > 1e-12) + int(row_err > 1e-12) + int(lazy < 0.5 - 1e-12) + int(u_err > 1e-12) + int(not conn)
    return _entry(f"chain_{chain}", size, bad, float(lazy - 0.5), detailed_balance_error=db,
                  row_sum_error=row_err, min_holding=lazy, uniform_stationarity_error=u_err,
                  strongly_connected=conn)


def _saw_checks():
    from .peierls import BOUNDARY, MU_REF, ORIGIN, naive_saw_count, saw_table

    out = []
    for rooting, naive_max in ((ORIGIN, 12), (BOUNDARY, 12)):
        t = saw_table(20, rooting)
        mism = sum(t.counts[l] != naive_saw_count(l, rooting) for l in range(naive_max + 1))
        out.append(_entry(f"saw_{rooting}_naive", naive_max + 1, mism))
    # half-plane walks split into a wall walk and a free walk, so only the
    # origin table is submultiplicative
    viol = saw_table(20, ORIGIN).submultiplicative_violations()
    out.append(_entry("saw_origin_submultiplicative", 20 * 19 // 2, len(viol)))
    t = saw_table(20, ORIGIN)
    growth = [t.growth(l) for l in range(1, 21)]
    floor = math.floor(MU_REF * 1000) / 1000
    out.append(_entry("saw_growth_floor", 20, sum(g < floor for g in growth), float(min(growth) - floor)))
    return out


def run_verify_suite(cfg: ExperimentConfig, classifier=None) -> list:
    """Exact lemma checks at ``cfg.n``; ``classifier`` replaces the partition classifier (test hook)."""
    from .exact import brute_force_count, enumerate_states
    from .peierls import fault_mass_exact, fault_states, peierls_upper_bound
    from .state import GREEN, RED, is_eulerian, log_weight
    from .topology import (
        Direction, PartitionClass, canonical_almost_fault_line, canonical_fault_line, classify,
        fault_line_exists, find_almost_fault_line, find_fault_line, has_cross, one_flip_neighbors,
        peierls_map, torus_cross_and_cycles,
    )

    classifier = classifier or classify
    geom = cfg.geometry()
    p = cfg.params
    space = enumerate_states(geom)
    states = space.states
    ledger = []

    if geom.num_edges <= 22:
        bf = brute_force_count(geom)
        ledger.append(_entry("enumeration_oracle", bf, int(bf != len(space)), enumerated=len(space)))
    else:
        ledger.append(_skip("enumeration_oracle", "too many edges for brute force"))

    if geom.periodic:
        if geom.n % 2:
            raise UnsupportedGeometry("torus checks need even n")
        info = [torus_cross_and_cycles(s) for s in states]
        both = sum(d["green_cross"] and d["red_cross"] for d in info)
        ledger.append(_entry("coexistence", len(states), both))
        odd = sum(len(d["ltau_noncontractible_cycles"]) % 2 for d in info)
        ledger.append(_entry("ltau_cycle_parity", len(states), odd))
        bad = 0
        for s, d in zip(states, info):
            truth = [d["green_cross"], d["red_cross"] and not d["green_cross"],
                     bool(d["fault_pair"]) and not (d["green_cross"] or d["red_cross"])]
            want = (PartitionClass.GREEN_CROSS, PartitionClass.RED_CROSS, PartitionClass.FAULT_LINE)
            ok = sum(truth) == 1 and want[truth.index(True)] is classifier(s)
            bad += not ok
        ledger.append(_entry("partition", len(states), bad))
        if _exact_ok(ExperimentConfig(n=cfg.n, bc=cfg.bc, chain="loop")):
            full = enumerate_states(geom, include_near_perfect=True)
            ledger.append(_check_chain(full, "loop", p))
        else:
            ledger.append(_skip("chain_loop", "state space too large"))
        ledger.extend(_saw_checks())
        return ledger

    green = [has_cross(s, GREEN) for s in states]
    red = [has_cross(s, RED) for s in states]
    fl = [[find_fault_line(s, d) for d in Direction] for s in states]
    ledger.append(_entry("coexistence", len(states), sum(g and r for g, r in zip(green, red))))

    bad = 0
    for s, g, r, f in zip(states, green, red, fl):
        truth = [g, r, any(x is not None for x in f)]
        want = (PartitionClass.GREEN_CROSS, PartitionClass.RED_CROSS, PartitionClass.FAULT_LINE)
        ok = sum(truth) == 1 and want[truth.index(True)] is classifier(s)
        bad += not ok
    ledger.append(_entry("partition", len(states), bad))

    dual = sum((x is not None) != fault_line_exists(s, d)
               for s, f in zip(states, fl) for d, x in zip(Direction, f))
    ledger.append(_entry("duality", 2 * len(states), dual))

    in_cg = {s.key: g and not r for s, g, r in zip(states, green, red)}
    checked = exc = 0
    for s, f in zip(states, fl):
        if in_cg[s.key] or not any(in_cg[y.key] for y in one_flip_neighbors(s)):
            continue
        checked += 1
        if not any(x is not None for x in f) and not any(find_almost_fault_line(s, d) for d in Direction):
            exc += 1
    ledger.append(_entry("boundary_lemma", checked, exc))

    lo, hi = min(p.a, p.b), max(p.a, p.b)
    if p.c > hi:
        seen = defaultdict(set)
        checked = noneul = coll = margin_bad = 0
        worst = math.inf
        for s in states:
            gam = canonical_fault_line(s, Direction.VERTICAL) or canonical_almost_fault_line(s, Direction.VERTICAL)
            if gam is None:
                continue
            checked += 1
            out = peierls_map(s, gam)
            noneul += not is_eulerian(out)
            key = (gam.faces, gam.edges)
            coll += out.key in seen[key]
            seen[key].add(out.key)
            gain = log_weight(out, p) - log_weight(s, p)
            need = math.log(lo / p.c) + (gam.length - 1) * math.log(p.c / hi)
            worst = min(worst, gain - need)
            margin_bad += gain < need - 1e-12
        ledger.append(_entry("peierls_eulerian", checked, noneul))
        ledger.append(_entry("peierls_injective", checked, coll))
        ledger.append(_entry("peierls_magnification", checked, margin_bad,
                             None if checked == 0 else float(worst)))
        mass = fault_mass_exact(space, p, fault_states(space))
        bound = peierls_upper_bound(cfg.n, p).value
        ledger.append(_entry("mass_le_bound", 1, int(mass > bound), float(bound - mass),
                             mass=mass, bound=bound))
    else:
        for name in ("peierls_eulerian", "peierls_injective", "peierls_magnification", "mass_le_bound"):
            ledger.append(_skip(name, "needs c > max(a, b)"))

    ledger.append(_check_chain(space, "glauber", p))
    if _exact_ok(ExperimentConfig(n=cfg.n, chain="loop")):
        ledger.append(_check_chain(enumerate_states(geom, include_near_perfect=True), "loop", p))
    else:
        ledger.append(_skip("chain_loop", "state space too large"))
    ledger.extend(_saw_checks())
    return ledger


def cmd_verify(cfg: ExperimentConfig, classifier=None) -> tuple[list, str]:
    ledger = run_verify_suite(cfg, classifier)
    ok = all(e["passed"] for e in ledger)
    if _format("verify", cfg) == "json":
        return ledger, _json({"meta": _meta("verify", cfg), "passed": ok, "checks": ledger})
    header = ["name", "passed", "checked", "violations", "worst_margin", "skipped"]
    rows = [[_cell(e.get(k)) if e.get(k) is not None else "" for k in header] for e in ledger]
    return ledger, _csv("verify", cfg, header, rows, [f"passed={ok}"])


HANDLERS = {
    "enumerate": cmd_enumerate,
    "escape": cmd_escape,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "geom": cmd_geom,
    "saw": cmd_saw,
    "trace": cmd_trace,
}


# ---------------------------------------------------------------------------
# entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _c_values(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad c value list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="icebox", description="Six-vertex model experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file with the same keys as the flags")
    ap.add_argument("--n", type=int)
    ap.add_argument("--bc", choices=("free", "periodic"))
    ap.add_argument("--a", type=float)
    ap.add_argument("--b", type=float)
    ap.add_argument("--c", type=float)
    ap.add_argument("--chain", choices=("glauber", "loop"))
    ap.add_argument("--steps", type=int, help="trajectory length (trace) or max walk length (saw)")
    ap.add_argument("--cap", type=int, help="step cap for escape runs")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--replicas", type=int)
    ap.add_argument("--stride", type=int, help="steps between classifications")
    ap.add_argument("--out", help="output file (default stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--c-values", dest="c_values", type=_c_values, help="comma-separated c list")
    ap.add_argument("--near-perfect", dest="near_perfect", action=argparse.BooleanOptionalAction,
                    default=None, help="also count near-perfect states (enumerate)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    opts = {k: getattr(args, k) for k in _KEYS}
    try:
        cfg = resolve_config(load_config(args.config) if args.config else None, opts)
        result, text = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"icebox: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnsupportedGeometry as exc:
        print(f"icebox: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"icebox: {exc}; try a smaller --n or --no-near-perfect", file=sys.stderr)
        return EXIT_BUDGET
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "verify" and not all(e["passed"] for e in result):
        failed = [e["name"] for e in result if not e["passed"]]
        print(f"icebox: verification failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
