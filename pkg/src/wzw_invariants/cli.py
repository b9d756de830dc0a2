"""Command-line interface: weights | modular | qdim | fuse | invariant | classify.

Settings are resolved as defaults < config file (key=value lines) <
environment (WZW_<KEY>) < command-line flags.  Exit codes: 0 success, 1 a
verification or classification mismatch, 2 usage or capacity errors.
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import classify as cl
from . import fusion as fu
from . import invariants as inv
from . import modular_data as mdm
from .weights import (
    AlgebraContext,
    CapacityError,
    DEFAULT_CAP,
    enumerate_p_plus,
    format_weight,
    orbit,
    parse_weight,
    rank_level_transpose,
    t_ality,
)

ENV_PREFIX = "WZW_"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    rank: Optional[int] = None
    level: Optional[int] = None
    divisor: Optional[int] = None
    tol_s: float = mdm.TOL_S
    tol_m: float = inv.TOL_M
    tol_n: float = fu.TOL_N
    cap: int = DEFAULT_CAP
    node_cap: int = cl.DEFAULT_NODE_CAP
    dim_cap: int = cl.DEFAULT_DIM_CAP
    out: Optional[str] = None
    format: str = "json"
    workers: int = 1
    extra: Dict[str, str] = field(default_factory=dict)

    def validate(self, need_ctx: bool = True):
        for name in ("tol_s", "tol_m", "tol_n"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive")
        if need_ctx:
            if self.rank is None or self.level is None:
                raise UsageError("rank (-r) and level (-k) are required")
            if self.rank < 1 or self.level < 1:
                raise UsageError("rank and level must be >= 1")
        if self.format not in ("json", "csv", "table"):
            raise UsageError(f"unknown format {self.format}")

    def ctx(self) -> AlgebraContext:
        return AlgebraContext(self.rank, self.level, self.cap)


_TYPES = {"rank": int, "level": int, "divisor": int, "tol_s": float, "tol_m": float, "tol_n": float,
          "cap": int, "node_cap": int, "dim_cap": int, "workers": int, "out": str, "format": str}


def read_config(path: str) -> Dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_").lower()] = val
    return out


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    cfg = RunConfig()
    layers = []
    if getattr(args, "config", None):
        layers.append(read_config(args.config))
    layers.append({k[len(ENV_PREFIX):].lower(): v for k, v in environ.items() if k.startswith(ENV_PREFIX)})
    layers.append({k: v for k, v in vars(args).items() if k in _TYPES and v is not None})
    for layer in layers:
        for key, val in layer.items():
            if key in _TYPES:
                try:
                    setattr(cfg, key, _TYPES[key](val))
                except ValueError:
                    raise UsageError(f"bad value for {key}: {val!r}")
            else:
                cfg.extra[key] = val
    return cfg


# ------------------------------------------------------------------ output

def _num(x) -> str:
    return repr(float(x))


def _cplx(z) -> List[str]:
    return [_num(z.real), _num(z.imag)]


def emit(cfg: RunConfig, payload, rows: Optional[List[Dict]] = None):
    if cfg.format == "json" or rows is None:
        text = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    else:
        cols = list(rows[0].keys()) if rows else []
        if cfg.format == "csv":
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            text = buf.getvalue()
        else:
            widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
            lines = ["  ".join(c.ljust(widths[c]) for c in cols)]
            lines += ["  ".join(str(r[c]).ljust(widths[c]) for c in cols) for r in rows]
            text = "\n".join(lines) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_weights(cfg: RunConfig, args) -> int:
    ctx = cfg.ctx()
    if args.transpose and ctx.k < 2:
        raise UsageError("rank-level transpose needs k >= 2")
    weights = enumerate_p_plus(ctx)
    d = cfg.divisor or 1
    if ctx.rbar % d:
        raise UsageError(f"d={d} does not divide rbar={ctx.rbar}")
    rows = []
    for i, w in enumerate(weights):
        row = {"index": i, "weight": format_weight(w), "t": t_ality(w) % ctx.rbar}
        if args.orbits:
            orb = orbit(w, d)
            row["orbit_rep"] = format_weight(max(orb))
            row["orbit_size"] = len(orb)
            row["fixed"] = len(orb) < ctx.rbar // d
        if args.transpose:
            row["transpose"] = format_weight(rank_level_transpose(w, ctx))
        rows.append(row)
    emit(cfg, {"ctx": {"r": ctx.r, "k": ctx.k}, "count": len(rows), "weights": rows}, rows)
    return EXIT_OK


def cmd_modular(cfg: RunConfig, args) -> int:
    ctx = cfg.ctx()
    md = mdm.build_modular_data(ctx)
    checks = mdm.check_modular_identities(md)
    payload = {"ctx": {"r": ctx.r, "k": ctx.k}, "n": md.n,
               "checks": {k: _num(v) for k, v in sorted(checks.items())}}
    ok = all(v < cfg.tol_s for v in checks.values())
    if args.duality:
        dev = mdm.rank_level_check(ctx)
        payload["duality"] = {k: _num(v) for k, v in sorted(dev.items())}
        ok &= all(v < cfg.tol_s for v in dev.values())
    rows = None
    if args.qdims:
        q = md.qdims()
        rows = [{"weight": format_weight(w), "qdim": _num(x)} for w, x in zip(md.weights, q)]
        payload["qdims"] = rows
    if args.matrices:
        payload["weights"] = [format_weight(w) for w in md.weights]
        payload["S"] = [[_cplx(z) for z in row] for row in md.S]
        payload["T"] = [_cplx(z) for z in (md.T.diagonal() if md.T.ndim == 2 else md.T)]
    payload["ok"] = bool(ok)
    if rows is None:
        rows = [{"check": k, "deviation": v} for k, v in payload["checks"].items()]
    emit(cfg, payload, rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_qdim(cfg: RunConfig, args) -> int:
    if args.grid == "screen":
        fails = cl.qdim_screen_grid(args.r_max, args.k_max)
        rows = [{"r": r, "k": k} for r, k in fails]
        emit(cfg, {"screen_failures": [[r, k] for r, k in fails]}, rows)
        return EXIT_OK
    if args.grid == "degeneracy":
        grid = cl.degeneracy_grid(args.r_max, args.k_max)
        rows = [{"r": r, "k": k, "W": " ".join(format_weight(w) for w in W)} for (r, k), W in sorted(grid.items())]
        emit(cfg, {"degenerate": rows}, rows)
        return EXIT_OK
    ctx = cfg.ctx()
    payload = {"ctx": {"r": ctx.r, "k": ctx.k}}
    rows = None
    if args.weight:
        w = parse_weight(args.weight, ctx)
        payload["weight"] = format_weight(w)
        payload["qdim"] = _num(mdm.qdim(w, ctx))
        rows = [{"weight": payload["weight"], "qdim": payload["qdim"]}]
    if args.screen:
        ds = [cfg.divisor] if cfg.divisor else ctx.divisors()
        res = {str(d): cl.qdim_screen(ctx, d) for d in ds}
        payload["screen"] = res
        rows = [{"d": d, "pass": v} for d, v in res.items()]
    if args.degeneracy:
        W = cl.qdim_degeneracy_scan(ctx)
        payload["degenerate"] = [format_weight(w) for w in W]
        rows = [{"weight": format_weight(w)} for w in W] or [{"weight": ""}]
    if rows is None:
        q = mdm.qdims(ctx)
        rows = [{"weight": format_weight(w), "qdim": _num(x)} for w, x in zip(enumerate_p_plus(ctx), q)]
        payload["qdims"] = rows
    emit(cfg, payload, rows)
    return EXIT_OK


def _parse_triple(text: str, ctx):
    parts = [p for p in text.lower().split("x") if p.strip()]
    if len(parts) not in (2, 3):
        raise UsageError("--triple wants 'lam x mu' or 'lam x mu x nu'")
    return [parse_weight(p, ctx) for p in parts]


def cmd_fuse(cfg: RunConfig, args) -> int:
    ctx = cfg.ctx()
    payload = {"ctx": {"r": ctx.r, "k": ctx.k}}
    rows = None
    ok = True
    if args.triple:
        ws = _parse_triple(args.triple, ctx)
        prod_ = fu.fusion_product(ws[0], ws[1], ctx)
        if len(ws) == 3:
            payload["coefficient"] = prod_.get(ws[2], 0)
            rows = [{"lam": format_weight(ws[0]), "mu": format_weight(ws[1]), "nu": format_weight(ws[2]),
                     "N": payload["coefficient"]}]
        else:
            rows = [{"nu": format_weight(n), "N": c} for n, c in sorted(prod_.items(), reverse=True)]
            payload["product"] = rows
    elif args.row:
        if args.row != "lambda1":
            raise UsageError("only --row lambda1 is available")
        lam1 = mdm.lambda_gen(ctx, 1)
        rows = []
        for mu in enumerate_p_plus(ctx):
            closed = fu.fusion_lambda1(mu, ctx)
            kw = fu.fusion_product(lam1, mu, ctx)
            ok &= closed == kw
            rows.append({"mu": format_weight(mu),
                         "fusion": " + ".join(f"{c}*{format_weight(n)}" if c > 1 else format_weight(n)
                                              for n, c in sorted(closed.items(), reverse=True)),
                         "agrees": closed == kw})
        payload["row"] = rows
    elif args.check:
        md = mdm.build_modular_data(ctx)
        N = fu.verlinde_tensor(md, tol=cfg.tol_n)
        bad = 0
        for a, lam in enumerate(md.weights):
            for b, mu in enumerate(md.weights):
                prod_ = fu.fusion_product(lam, mu, ctx)
                for c, nu in enumerate(md.weights):
                    if N[a, b, c] != prod_.get(nu, 0):
                        bad += 1
        ok = bad == 0
        payload.update({"triples": md.n ** 3, "mismatches": bad,
                        "verlinde_deviation": _num(fu.verlinde_deviation(md))})
        rows = [{"triples": md.n ** 3, "mismatches": bad}]
    else:
        raise UsageError("fuse needs one of --triple, --row, --check")
    payload["ok"] = bool(ok)
    emit(cfg, payload, rows)
    return EXIT_OK if ok else EXIT_FAIL


def _build_family(cfg: RunConfig, args) -> inv.InvariantMatrix:
    ctx = cfg.ctx()
    fam = args.family
    if fam == "identity":
        M = inv.build_identity(ctx)
    elif fam == "conjugation":
        M = inv.build_C(ctx)
    elif fam == "simple-current":
        if cfg.divisor is None:
            raise UsageError("simple-current needs -d")
        M = inv.build_simple_current(ctx, cfg.divisor)
    elif fam == "exceptional":
        M = inv.exceptional(ctx)
    elif fam == "projected":
        if (ctx.r, ctx.k) != (15, 2):
            raise inv.UnsupportedContext("the projected exceptional exists only at (15, 2)")
        M = inv.exceptional_catalog(ctx)[1]
    else:
        raise UsageError(f"unknown family {fam}")
    if args.conjugate:
        M = inv.conjugate(M)
    return M


def _load_or_build(cfg, args) -> inv.InvariantMatrix:
    if args.file:
        with open(args.file) as fh:
            data = json.load(fh)
        if cfg.rank is None:
            cfg.rank, cfg.level = int(data["ctx"]["r"]), int(data["ctx"]["k"])
        ctx = cfg.ctx()
        if (data["ctx"]["r"], data["ctx"]["k"]) != (ctx.r, ctx.k):
            raise UsageError("file context differs from -r/-k")
        return inv.from_json(data, ctx)
    if not args.family:
        raise UsageError("give --file or --family")
    return _build_family(cfg, args)


def cmd_invariant(cfg: RunConfig, args) -> int:
    M = _load_or_build(cfg, args)
    if args.action == "build":
        emit(cfg, M.to_json())
        return EXIT_OK
    md = mdm.build_modular_data(M.ctx)
    rep = inv.verify(M, md, tol=cfg.tol_m)
    payload = {"ctx": {"r": M.ctx.r, "k": M.ctx.k}, "name": M.name, "verification": rep.summary()}
    payload["verification"]["s_commutator"] = _num(rep.s_commutator)
    ok = rep.physical
    if args.action == "diag":
        dg = inv.structural_diagnostics(M, md)
        summ = dg.summary()
        payload["diagnostics"] = {k: (_num(v) if isinstance(v, float) else (bool(v) if hasattr(v, "dtype") else v))
                                  for k, v in summ.items()}
        ok = ok and dg.perron_ok and bool(dg.value_law_ok)
    payload["ok"] = bool(ok)
    rows = [{"check": k, "value": v} for k, v in payload["verification"].items()]
    emit(cfg, payload, rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_classify(cfg: RunConfig, args) -> int:
    ctx = cfg.ctx()
    rep = cl.classification_report(ctx, node_cap=cfg.node_cap, dim_cap=cfg.dim_cap)
    payload = rep.to_json()
    rows = [{"name": n, "relation": rep.relations.get(i, "")} for i, n in enumerate(rep.names)]
    if cfg.format != "json":
        emit(cfg, payload, rows)
    else:
        emit(cfg, payload)
    if args.expect and not rep.match:
        return EXIT_FAIL
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _common(p: argparse.ArgumentParser):
    p.add_argument("-r", "--rank", type=int)
    p.add_argument("-k", "--level", type=int)
    p.add_argument("-d", "--divisor", type=int)
    p.add_argument("--tol-s", dest="tol_s", type=float)
    p.add_argument("--tol-m", dest="tol_m", type=float)
    p.add_argument("--tol-n", dest="tol_n", type=float)
    p.add_argument("--cap", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv", "table"])
    p.add_argument("--workers", type=int)
    p.add_argument("--config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wzw", description="Modular invariants of A_r^(1) at level k.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="list level-k weights")
    _common(p)
    p.add_argument("--orbits", action="store_true")
    p.add_argument("--transpose", action="store_true")

    p = sub.add_parser("modular", help="S, T, q-dimensions and self-checks")
    _common(p)
    p.add_argument("--duality", action="store_true")
    p.add_argument("--qdims", action="store_true")
    p.add_argument("--matrices", action="store_true")

    p = sub.add_parser("qdim", help="q-dimensions and the fixed-point screens")
    _common(p)
    p.add_argument("--weight")
    p.add_argument("--screen", action="store_true")
    p.add_argument("--degeneracy", action="store_true")
    p.add_argument("--grid", choices=["screen", "degeneracy"])
    p.add_argument("--r-max", dest="r_max", type=int, default=16)
    p.add_argument("--k-max", dest="k_max", type=int, default=17)

    p = sub.add_parser("fuse", help="fusion coefficients")
    _common(p)
    p.add_argument("--triple")
    p.add_argument("--row")
    p.add_argument("--check", action="store_true")

    p = sub.add_parser("invariant", help="build, verify or diagnose an invariant")
    p.add_argument("action", choices=["build", "verify", "diag"])
    _common(p)
    p.add_argument("--family", choices=["identity", "conjugation", "simple-current", "exceptional", "projected"])
    p.add_argument("--file")
    p.add_argument("--conjugate", action="store_true")

    p = sub.add_parser("classify", help="exhaustive ADE7 search")
    _common(p)
    p.add_argument("--expect", choices=["catalog", "theorem21"],
                   help="exit 1 unless the found set equals the known complete list")
    p.add_argument("--node-cap", dest="node_cap", type=int)
    p.add_argument("--dim-cap", dest="dim_cap", type=int)
    return parser


COMMANDS = {"weights": cmd_weights, "modular": cmd_modular, "qdim": cmd_qdim, "fuse": cmd_fuse,
            "invariant": cmd_invariant, "classify": cmd_classify}


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args, environ)
        need_ctx = not (args.command == "qdim" and args.grid) and not (args.command == "invariant" and args.file)
        cfg.validate(need_ctx)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, CapacityError, inv.UnsupportedContext, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (cl.SearchOverflow, cl.DimensionCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
