"""Command-line front end: job specs, module I/O, reports and resumable batches.

Modules are named either by a path to a module JSON file or by a small
expression language::

    L(1)        simple module         V(2)   Weyl module
    H(2)        induced (dual Weyl)   Z(0)   baby Verma module
    D(0)        St_r (x) L(lambda^0)  Q(0)   projective cover inside D
    St, k       Steinberg, trivial
    A + B       direct sum            A * B  tensor product
    A^3         A + A + A
    tau(A), dual(A), twist(A), frob(A)

Weights are comma-separated fundamental coordinates, e.g. ``L(1,0)``.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .donkin import (MAX_DIM, REPORT_FORMAT, BudgetRefusal, Cache, canonical_json, content_key,
                     donkin_check, identify_Q, peel_check)
from .exactlin import FieldSpec, Subspace
from .homlab import (ENUM_BUDGET, RANDOM_DRAWS, FieldTooSmallError, InvariantViolation, decompose,
                     hom_space, radical, simple_head, socle, twist_by_weyl)
from .modcore import (GMod, LevelSpec, baby_verma, direct_sum, dual, frobenius_twist, induced_module,
                      simple_module, steinberg, tau_twist, tensor, trivial_module, weyl_module)
from .rootdata import GroupData, parse_weight, restricted_weights
from .summandvar import (CONDITION_BUDGET, BudgetExceeded, check_conditions, check_split_extension,
                         count_summands_bruteforce, find_stable_decomposition, make_context)

COMMANDS = ("build", "decompose", "hom", "conditions", "stability", "donkin", "peel",
            "split-ext", "count-summands")
EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4

# command-specific parameters and their defaults
PARAMS = {
    "build": {"module": None},
    "decompose": {"module": None, "level": "Gr"},
    "hom": {"source": None, "target": None, "level": "Gr"},
    "conditions": {"m": None, "n": None},
    "stability": {"module": None, "cls": None, "level": "G"},
    "donkin": {"lambda": None, "peel": False},
    "peel": {"lambda": None},
    "split-ext": {"module": None, "sub": "socle", "level": "G"},
    "count-summands": {"module": None, "cls": None},
}
BUDGETS = {"max_dim": MAX_DIM, "enum": ENUM_BUDGET, "condition": CONDITION_BUDGET, "draws": RANDOM_DRAWS}


@dataclass
class JobSpec:
    command: str
    group: dict = field(default_factory=lambda: {"type": "A1", "p": 2, "r": 1})
    params: dict = field(default_factory=dict)
    seed: int = 0
    field_e: int = 1
    budgets: dict = field(default_factory=dict)
    out: str | None = None
    cache: bool = True

    def resolved(self) -> "JobSpec":
        if self.command not in PARAMS:
            raise ValueError(f"unknown command {self.command!r}")
        g = GroupData.from_json(self.group)
        params = dict(PARAMS[self.command])
        extra = set(self.params) - set(params)
        if extra:
            raise ValueError(f"unexpected parameters for {self.command}: {sorted(extra)}")
        params.update({k: v for k, v in self.params.items() if v is not None})
        missing = [k for k, v in params.items() if v is None]
        if missing:
            raise ValueError(f"{self.command} needs {', '.join('--' + m for m in missing)}")
        if "lambda" in params:
            params["lambda"] = list(_weight(params["lambda"]))
        if "level" in params:
            params["level"] = LevelSpec.parse(params["level"]).value
        budgets = dict(BUDGETS)
        budgets.update({k: v for k, v in self.budgets.items() if v is not None})
        return JobSpec(self.command, g.to_json(), params, int(self.seed), int(self.field_e),
                       budgets, self.out, self.cache)

    def body(self) -> dict:
        """The part of the job that determines the result."""
        d = asdict(self)
        d.pop("out")
        d.pop("cache")
        return d


def _weight(x) -> tuple:
    if isinstance(x, (list, tuple)):
        return tuple(int(c) for c in x)
    return parse_weight(str(x))


# -- module expressions ----------------------------------------------------------

_TOKEN = re.compile(r"\s*(-?\d+|[A-Za-z_]+|[()+*^,])")
_WEIGHTED = {"L", "V", "H", "Z", "D", "Q"}
_UNARY = {"tau", "dual", "twist", "frob"}


class _Parser:
    def __init__(self, text: str, g: GroupData, F: FieldSpec, job: JobSpec):
        self.toks, pos = [], 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise ValueError(f"cannot parse module expression at {text[pos:]!r}")
            self.toks.append(m.group(1))
            pos = m.end()
        self.i, self.g, self.F, self.job = 0, g, F, job

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, want=None):
        t = self.peek()
        if t is None or (want is not None and t != want):
            raise ValueError(f"module expression: expected {want or 'a token'}, got {t!r}")
        self.i += 1
        return t

    def parse(self) -> GMod:
        m = self.expr()
        if self.peek() is not None:
            raise ValueError(f"module expression: trailing {self.peek()!r}")
        return m

    def expr(self) -> GMod:
        parts = [self.term()]
        while self.peek() == "+":
            self.take()
            parts.append(self.term())
        return parts[0] if len(parts) == 1 else direct_sum(*parts)

    def term(self) -> GMod:
        m = self.factor()
        while self.peek() == "*":
            self.take()
            m = tensor(m, self.factor())
        return m

    def factor(self) -> GMod:
        m = self.atom()
        if self.peek() == "^":
            self.take()
            k = int(self.take())
            if k < 1:
                raise ValueError("direct-sum power must be positive")
            m = direct_sum(*([m] * k)) if k > 1 else m
        return m

    def atom(self) -> GMod:
        t = self.take()
        g, F = self.g, self.F
        if t == "(":
            m = self.expr()
            self.take(")")
            return m
        if t == "St":
            return steinberg(g, F)
        if t == "k":
            return trivial_module(g, F)
        if t in _UNARY:
            self.take("(")
            m = self.expr()
            self.take(")")
            return {"tau": tau_twist, "dual": dual, "twist": twist_by_weyl, "frob": frobenius_twist}[t](m)
        if t in _WEIGHTED:
            self.take("(")
            lam = [int(self.take())]
            while self.peek() == ",":
                self.take()
                lam.append(int(self.take()))
            self.take(")")
            lam = tuple(lam)
            if len(lam) != g.rank:
                raise ValueError(f"weight {lam} needs {g.rank} coordinates for {g.type}")
            if t == "L":
                return simple_module(g, lam, F)
            if t == "V":
                return weyl_module(g, lam, F)[0]
            if t == "H":
                return induced_module(g, lam, F)
            if t == "Z":
                return baby_verma(g, lam, F)
            qd = identify_Q(g, lam, F, self.job.seed, self.job.budgets["max_dim"])
            return qd.D if t == "D" else qd.Q
        raise ValueError(f"unknown module name {t!r}")


def load_module(source: str, job: JobSpec) -> GMod:
    """A module from a JSON file path or an expression."""
    g = GroupData.from_json(job.group)
    F = FieldSpec(g.p, job.field_e)
    if source.endswith(".json") or os.path.sep in source:
        try:
            with open(source) as fh:
                m = GMod.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read module file {source}: {exc}") from exc
        if m.group != g:
            raise ValueError(f"module file is for {m.group}, job is for {g}")
        return m.with_field(F) if m.field != F else m
    m = _Parser(source, g, F, job).parse()
    if m.dim > job.budgets["max_dim"]:
        raise BudgetRefusal(f"module {source} has dim {m.dim} > budget {job.budgets['max_dim']}")
    return m


# -- pipelines -------------------------------------------------------------------


def _coordinate_parts(F: FieldSpec, a: int, b: int):
    import numpy as np

    n = a + b
    eye = np.eye(n, dtype=np.int64)
    return Subspace(F, n, eye[:a]), Subspace(F, n, eye[a:])


def execute(job: JobSpec) -> dict:
    """Run a resolved job and return its result document (no timing)."""
    P, B = job.params, job.budgets
    g = GroupData.from_json(job.group)
    F = FieldSpec(g.p, job.field_e)
    seed = job.seed
    cmd = job.command
    if cmd == "build":
        return {"module": load_module(P["module"], job).to_json()}
    if cmd == "decompose":
        v = load_module(P["module"], job)
        dec = decompose(v, P["level"], seed, draws=B["draws"])
        out = dec.to_json()
        if LevelSpec.parse(P["level"]) in (LevelSpec.Gr, LevelSpec.GrT):
            heads = [simple_head(s.module) for s in dec.summands]
            out["heads"] = [list(h) if h is not None else None for h in heads]
        return out
    if cmd == "hom":
        a, b = load_module(P["source"], job), load_module(P["target"], job)
        return {"dim": hom_space(a, b, P["level"]).dim, "level": P["level"]}
    if cmd == "conditions":
        m, n = load_module(P["m"], job), load_module(P["n"], job)
        v = direct_sum(m, n)
        mp, np_ = _coordinate_parts(v.field, m.dim, n.dim)
        ctx = make_context(v, mp, np_, LevelSpec.Gr)
        return check_conditions(ctx, budget=B["condition"], seed=seed)
    if cmd == "stability":
        v, m = load_module(P["module"], job), load_module(P["cls"], job)
        ctx = find_stable_decomposition(v, m, P["level"], seed)
        out = {"level": P["level"], "verdict": "found" if ctx else "none",
               "negative_verdicts": f"'none' means not found over F_{v.field.q} with seed {seed}"}
        if ctx is not None:
            out["m_dim"], out["n_dim"] = ctx.m_module.dim, ctx.n_module.dim
        return out
    if cmd == "donkin":
        cache = Cache() if job.cache else None
        rep = donkin_check(g, tuple(P["lambda"]), F, seed, B["max_dim"], P["peel"], cache)
        return rep.to_json()
    if cmd == "peel":
        return peel_check(g, tuple(P["lambda"]), F, seed, B["max_dim"])
    if cmd == "split-ext":
        v = load_module(P["module"], job)
        lev = LevelSpec.parse(P["level"])
        if P["sub"] == "socle":
            w = socle(v)
        elif P["sub"] == "radical":
            w = radical(v)
        else:
            raise ValueError(f"--sub must be socle or radical, got {P['sub']!r}")
        return {"level": lev.value, "sub": P["sub"], "splits": check_split_extension(v, w, lev)}
    if cmd == "count-summands":
        v, m = load_module(P["module"], job), load_module(P["cls"], job)
        return {"count": count_summands_bruteforce(v, m, budget=B["enum"], seed=seed),
                "field": v.field.to_json()}
    raise ValueError(f"unknown command {cmd!r}")


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, InvariantViolation):
        return EXIT_INVARIANT
    if isinstance(exc, (BudgetRefusal, BudgetExceeded, FieldTooSmallError)):
        return EXIT_BUDGET
    if isinstance(exc, (ValueError, KeyError, TypeError)):
        return EXIT_INPUT
    raise exc


def run(job: JobSpec) -> tuple[int, dict]:
    """Execute a job; returns (exit status, report).

    The report body (everything but ``meta``) depends only on the resolved
    spec, so equal specs give byte-identical bodies.
    """
    t0 = time.perf_counter()
    try:
        job = job.resolved()
        result, status, error = execute(job), "completed", None
        code = EXIT_OK
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code = exit_code(exc)
        result, error = None, f"{type(exc).__name__}: {exc}"
        status = {EXIT_INPUT: "invalid", EXIT_BUDGET: "refused", EXIT_INVARIANT: "violation"}[code]
    body = {"format": REPORT_FORMAT, "job": job.body() if isinstance(job, JobSpec) else None,
            "status": status, "error": error, "result": result}
    rep = dict(body)
    rep["meta"] = {"wall_time_s": round(time.perf_counter() - t0, 3), "content_key": content_key(body)}
    return code, rep


def write_report(rep: dict, out: str | None) -> None:
    text = canonical_json(rep) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    p = Path(out)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, p)


# -- batch -----------------------------------------------------------------------


def expand_manifest(doc: dict) -> list[JobSpec]:
    """Jobs from a manifest: explicit ``jobs`` plus ``grids`` of donkin runs.

    A grid entry ``{"type": "A1", "p": [2, 3], "r": 1, "lambda": "all"}``
    becomes one donkin job per restricted weight.
    """
    jobs = []
    defaults = doc.get("defaults", {})
    for gr in doc.get("grids", []):
        ps = gr["p"] if isinstance(gr["p"], list) else [gr["p"]]
        for p in ps:
            g = GroupData(gr["type"], int(p), int(gr.get("r", 1)))
            lams = gr.get("lambda", "all")
            lams = restricted_weights(g) if lams == "all" else [_weight(x) for x in lams]
            for lam in lams:
                jobs.append(JobSpec("donkin", g.to_json(),
                                    {"lambda": list(lam), "peel": bool(gr.get("peel", False))},
                                    seed=gr.get("seed", defaults.get("seed", 0)),
                                    field_e=gr.get("field_e", defaults.get("field_e", 1)),
                                    budgets=dict(defaults.get("budgets", {}), **gr.get("budgets", {}))))
    for j in doc.get("jobs", []):
        j = dict(j)
        grp = {"type": j.pop("type", "A1"), "p": j.pop("p", 2), "r": j.pop("r", 1)}
        cmd = j.pop("command")
        jobs.append(JobSpec(cmd, grp, j.pop("params", {}), seed=j.pop("seed", defaults.get("seed", 0)),
                            field_e=j.pop("field_e", defaults.get("field_e", 1)),
                            budgets=dict(defaults.get("budgets", {}), **j.pop("budgets", {}))))
        if j:
            raise ValueError(f"unknown job keys {sorted(j)}")
    return jobs


def _job_key(job: JobSpec) -> str:
    try:
        return content_key(job.resolved().body())
    except Exception:  # noqa: BLE001 - invalid specs still get a stable name
        return content_key(asdict(job))


def _run_to_file(job: JobSpec, path: str) -> tuple[int, str]:
    code, rep = run(job)
    write_report(rep, path)
    return code, rep["status"]


def batch(manifest: str | Path, out_dir: str | Path, workers: int = 1, cache: bool = True) -> int:
    """Run every job of a manifest; reports go to ``out_dir/reports``.

    Finished reports are skipped on rerun.  Returns the worst exit code.
    """
    try:
        with open(manifest) as fh:
            jobs = expand_manifest(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: bad manifest: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(out_dir)
    (out_dir / "reports").mkdir(parents=True, exist_ok=True)
    entries, todo = [], []
    for job in jobs:
        job.cache = cache
        key = _job_key(job)
        path = out_dir / "reports" / f"{key}.json"
        entry = {"key": key, "command": job.command, "group": job.group, "params": job.params,
                 "report": str(path.relative_to(out_dir))}
        entries.append(entry)
        prev = _read_status(path)
        if prev is not None:
            entry["status"], entry["skipped"] = prev, True
        else:
            todo.append((entry, job, str(path)))
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [(e, ex.submit(_run_to_file, j, p)) for e, j, p in todo]
            for e, fut in futs:
                e["status"], e["skipped"] = _settle(fut.result), False
    else:
        for e, j, p in todo:
            e["status"], e["skipped"] = _settle(lambda: _run_to_file(j, p)), False
    for e in entries:
        path = out_dir / e["report"]
        e["verdict"] = _verdict(path)
    index = {"format": REPORT_FORMAT, "manifest": str(manifest), "jobs": entries,
             "counts": {s: sum(e["status"] == s for e in entries)
                        for s in ("completed", "refused", "invalid", "violation", "error")}}
    write_report(index, str(out_dir / "index.json"))
    codes = {"completed": 0, "invalid": EXIT_INPUT, "refused": EXIT_BUDGET, "violation": EXIT_INVARIANT,
             "error": 1}
    return max((codes[e["status"]] for e in entries), default=0)


def _settle(call) -> str:
    try:
        return call()[1]
    except Exception:  # noqa: BLE001 - per-job isolation
        return "error"


def _read_status(path: Path) -> str | None:
    try:
        with open(path) as fh:
            return json.load(fh)["status"]
    except (OSError, ValueError, KeyError):
        return None


def _verdict(path: Path):
    try:
        with open(path) as fh:
            rep = json.load(fh)
    except (OSError, ValueError):
        return None
    res = rep.get("result") or {}
    if rep.get("job", {}).get("command") == "donkin" and res:
        return {"G": res["level_results"].get("G"), "multiplicity": res["multiplicity"]}
    return None


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grsummands", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--type", default="A1", help="Cartan type (A1, A2, B2, G2)")
    common.add_argument("--p", type=int, default=2, help="characteristic")
    common.add_argument("--r", type=int, default=1, help="Frobenius level")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--field-e", type=int, default=1, help="work over F_{p^e}")
    common.add_argument("--max-dim", type=int, default=None, help="refuse modules larger than this")
    common.add_argument("--enum-budget", type=int, default=None, help="cap on enumerated points")
    common.add_argument("--condition-budget", type=int, default=None,
                        help="largest hom-sum dimension enumerated exhaustively")
    common.add_argument("--draws", type=int, default=None, help="random endomorphism draws")
    common.add_argument("--out", default=None, help="report path (default: stdout)")
    common.add_argument("--no-cache", action="store_true", help="bypass the on-disk result cache")

    def add(name, help_, *opts):
        sp = sub.add_parser(name, parents=[common], help=help_)
        for flag, kw in opts:
            sp.add_argument(flag, **kw)
        return sp

    mod = ("--module", {"help": "module file or expression"})
    lev = lambda d: ("--level", {"default": d})  # noqa: E731
    b = add("build", "construct a module and write it as JSON", mod,
            ("--simple", {"help": "shortcut for --module 'L(weight)'"}),
            ("--weyl", {"help": "shortcut for --module 'V(weight)'"}),
            ("--baby-verma", {"help": "shortcut for --module 'Z(weight)'"}))
    b.set_defaults(shortcut=True)
    add("decompose", "Krull-Schmidt decomposition at a level", mod, lev("Gr"))
    add("hom", "dimension of a hom space", ("--source", {"required": True}),
        ("--target", {"required": True}), lev("Gr"))
    add("conditions", "nilpotency vs disjointness criteria for M + N",
        ("--m", {"required": True}), ("--n", {"required": True}))
    add("stability", "search a level decomposition with a part ~ CLASS", mod,
        ("--class", {"dest": "cls", "required": True}), lev("G"))
    add("donkin", "full check on D_r(lambda)", ("--lambda", {"dest": "lam", "required": True}),
        ("--peel", {"action": "store_true"}))
    add("peel", "peeled modules V1, V2 for D_r(lambda)", ("--lambda", {"dest": "lam", "required": True}))
    add("split-ext", "does V split off its socle (or radical) quotient at a level", mod,
        ("--sub", {"default": "socle", "choices": ["socle", "radical"]}), lev("G"))
    add("count-summands", "count summand subspaces of MODULE isomorphic to CLASS", mod,
        ("--class", {"dest": "cls", "required": True}))
    bt = sub.add_parser("batch", help="run a manifest of jobs")
    bt.add_argument("manifest")
    bt.add_argument("--out", required=True, help="output directory")
    bt.add_argument("--workers", type=int, default=1)
    bt.add_argument("--no-cache", action="store_true")
    return ap


def job_from_args(ns: argparse.Namespace) -> JobSpec:
    params = {}
    names = {"module": "module", "source": "source", "target": "target", "m": "m", "n": "n",
             "cls": "cls", "lam": "lambda", "peel": "peel", "sub": "sub", "level": "level"}
    for attr, key in names.items():
        if hasattr(ns, attr) and getattr(ns, attr) is not None:
            params[key] = getattr(ns, attr)
    if ns.command == "build":
        for flag, name in (("simple", "L"), ("weyl", "V"), ("baby_verma", "Z")):
            val = getattr(ns, flag, None)
            if val is not None:
                if "module" in params:
                    raise ValueError("give one of --module, --simple, --weyl, --baby-verma")
                params["module"] = f"{name}({val})"
    if ns.command == "donkin" and not params.get("peel"):
        params.pop("peel", None)
    budgets = {"max_dim": ns.max_dim, "enum": ns.enum_budget, "condition": ns.condition_budget,
               "draws": ns.draws}
    return JobSpec(ns.command, {"type": ns.type, "p": ns.p, "r": ns.r}, params, ns.seed, ns.field_e,
                   {k: v for k, v in budgets.items() if v is not None}, ns.out, not ns.no_cache)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    if ns.command == "batch":
        return batch(ns.manifest, ns.out, ns.workers, cache=not ns.no_cache)
    try:
        job = job_from_args(ns)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    code, rep = run(job)
    if rep["error"]:
        print(f"error: {rep['error']}", file=sys.stderr)
    if job.command == "build" and rep["result"] is not None and job.out:
        # a build writes a loadable module file, with the job echoed alongside
        doc = dict(rep["result"]["module"])
        doc["job"], doc["meta"] = rep["job"], rep["meta"]
        write_report(doc, job.out)
    else:
        write_report(rep, job.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
