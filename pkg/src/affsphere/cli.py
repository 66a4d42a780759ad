"""Command-line front end: ``affsphere {surface|singular|symmetry|roundtrip|selftest}``.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure. Errors are
reported as one JSON object on stderr. Settings resolve as command-line
flag, then ``--config`` JSON file, then built-in default.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import export
from .area import CurvePair, grid_axes, surface_grid
from .curves import PlanarCurve
from .errors import AffSphereError, ConfigError, NumericalError
from .fixtures import FIXTURES, excusp2_published_grid, get_fixture
from .singular import area_evolute, singular_analysis
from .sphere import extract_curves, hessian_det_check, structure_residuals
from .symmetry import aass_solve, aass_tangent_check, local_symmetry_points

FORMATS = ("obj", "svg", "csv", "json")
DEFAULTS = {
    "res": (40, 40),
    "quad_tol": 1e-10,
    "tol": 1e-10,
    "lambda_tol": 1e-4,
    "step": 1e-3,
    "out": "affsphere_out",
    "formats": FORMATS,
}


@dataclass
class JobConfig:
    command: str
    fixture: str | None = None
    alpha: str | None = None
    beta: str | None = None
    grid: str | None = None
    window: tuple | None = None
    res: tuple = DEFAULTS["res"]
    quad_tol: float = DEFAULTS["quad_tol"]
    tol: float = DEFAULTS["tol"]
    lambda_tol: float = DEFAULTS["lambda_tol"]
    step: float = DEFAULTS["step"]
    out: str = DEFAULTS["out"]
    formats: tuple = DEFAULTS["formats"]
    published: bool = False
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.res[0] < 2 or self.res[1] < 2:
            raise ConfigError("resolution must be >= 2 per axis")
        for name in ("quad_tol", "tol", "lambda_tol", "step"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive")
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown formats {sorted(bad)}; choose from {list(FORMATS)}")
        needs_pair = self.command in ("surface", "singular", "symmetry") or (
            self.command == "roundtrip" and not self.grid)
        if needs_pair and not self.fixture and not (self.alpha and self.beta):
            raise ConfigError("give --fixture NAME or both --alpha and --beta")
        if self.fixture and (self.alpha or self.beta):
            raise ConfigError("--fixture and --alpha/--beta are exclusive")
        if self.window is not None:
            (s0, s1), (t0, t1) = self.window
            if s1 < s0 or t1 < t0:
                raise ConfigError("window bounds must be ordered")


# -- parsing helpers -------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_window(text) -> tuple:
    """'s0,s1,t0,t1', '[s0,s1]x[t0,t1]' or '[a,b]^2'."""
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in np.ravel(text)]
        if len(vals) == 2:
            vals = vals * 2
        if len(vals) != 4:
            raise ConfigError(f"window needs 2 or 4 numbers, got {text!r}")
        return (vals[0], vals[1]), (vals[2], vals[3])
    t = str(text).replace(" ", "")
    m = re.fullmatch(rf"\[({_NUM}),({_NUM})\]\^2", t)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        return (a, b), (a, b)
    m = re.fullmatch(rf"\[({_NUM}),({_NUM})\][x\*]\[({_NUM}),({_NUM})\]", t)
    if m:
        v = [float(g) for g in m.groups()]
        return (v[0], v[1]), (v[2], v[3])
    parts = t.strip("[]()").split(",")
    try:
        return parse_window([float(p) for p in parts])
    except ValueError:
        raise ConfigError(f"cannot parse window {text!r}") from None


def parse_res(text) -> tuple:
    if isinstance(text, (list, tuple)):
        vals = list(text)
    else:
        vals = re.split(r"[xX,]", str(text))
    try:
        ns, nt = (int(v) for v in vals)
    except ValueError:
        raise ConfigError(f"resolution must look like NxM, got {text!r}") from None
    return ns, nt


def parse_formats(text) -> tuple:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    return tuple(sorted({i.strip().lower() for i in items if i.strip()}))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="affsphere", description="Improper affine spheres from pairs of planar curves.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("surface", "singular", "symmetry", "roundtrip", "selftest"):
        sp = sub.add_parser(name)
        sp.add_argument("--fixture", choices=sorted(FIXTURES))
        sp.add_argument("--alpha", help="curve JSON file")
        sp.add_argument("--beta", help="curve JSON file")
        sp.add_argument("--window", help="s0,s1,t0,t1 | [s0,s1]x[t0,t1] | [a,b]^2")
        sp.add_argument("--res", help="grid resolution NxM")
        sp.add_argument("--quad-tol", type=float, dest="quad_tol")
        sp.add_argument("--tol", type=float, help="trace / projection tolerance")
        sp.add_argument("--lambda-tol", type=float, dest="lambda_tol")
        sp.add_argument("--step", type=float, help="trace step in (s, t)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--formats", help="comma list from obj,svg,csv,json")
        sp.add_argument("--config", help="JSON file with any of the options above")
        if name == "roundtrip":
            sp.add_argument("--grid", help="CSV written by the surface command")
            sp.add_argument("--published", action="store_true", default=None,
                            help="use the published (u,v) data of excusp2 instead of the forward grid")
    return p


def resolve_config(argv) -> JobConfig:
    args = build_parser().parse_args(argv)
    file_cfg = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    merged = {k.replace("-", "_"): v for k, v in file_cfg.items()}
    merged.update({k: v for k, v in vars(args).items() if v is not None and k not in ("config", "command")})
    known = set(JobConfig.__dataclass_fields__) - {"command", "extra"}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    cfg = JobConfig(args.command)
    for key, val in merged.items():
        if key == "window":
            val = parse_window(val)
        elif key == "res":
            val = parse_res(val)
        elif key == "formats":
            val = parse_formats(val)
        elif key in ("quad_tol", "tol", "lambda_tol", "step"):
            try:
                val = float(val)
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be a number") from None
        setattr(cfg, key, val)
    cfg.validate()
    return cfg


def _load_curve(path) -> PlanarCurve:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read curve {path}: {exc}") from None
    return PlanarCurve.from_dict(data)


def _pair_and_fixture(cfg: JobConfig):
    if cfg.fixture:
        fx = get_fixture(cfg.fixture)
        return fx.pair, fx
    alpha, beta = _load_curve(cfg.alpha), _load_curve(cfg.beta)
    base = (float(np.clip(0.0, *alpha.domain)), float(np.clip(0.0, *beta.domain)))
    return CurvePair(alpha, beta, base, 0.0, "user"), None


def _window(cfg, pair, fx, attr):
    if cfg.window is not None:
        return cfg.window
    if fx is not None:
        w = getattr(fx, attr) or fx.local_window
        return w
    return pair.alpha.domain, pair.beta.domain


def _empty(window) -> bool:
    (s0, s1), (t0, t1) = window
    return s1 <= s0 or t1 <= t0


def _threads() -> int:
    env = os.environ.get("AFFSPHERE_THREADS")
    if env is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(env)
    except ValueError:
        raise ConfigError("AFFSPHERE_THREADS must be an integer") from None
    if n < 1:
        raise ConfigError("AFFSPHERE_THREADS must be >= 1")
    return n


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands --------------------------------------------------------------------

def cmd_surface(cfg: JobConfig) -> dict:
    pair, fx = _pair_and_fixture(cfg)
    window = _window(cfg, pair, fx, "local_window")
    if _empty(window):
        raise ConfigError("surface needs a window with positive extent")
    s, t = grid_axes(*window, cfg.res)
    grid = surface_grid(pair, s, t, cfg.quad_tol)
    validation = structure_residuals(pair, s, t)
    out = _outdir(cfg)
    files = []
    if "obj" in cfg.formats:
        files.append(export.write_obj(out / "surface.obj", grid))
        files.append(export.write_json(out / "surface_singular_vertices.json",
                                       {"vertex_indices": export.singular_vertices(grid),
                                        "index_base": 0, "order": "row-major (s, t)"}))
    if "csv" in cfg.formats:
        files.append(export.write_csv(out / "surface.csv", grid))
    if "json" in cfg.formats:
        files.append(export.write_json(out / "surface.json", {
            "pair": pair.name, "window": window, "res": list(cfg.res), "validation": validation,
            "samples": [smp.to_dict() for smp in grid.samples()]}))
    return {"command": "surface", "vertices": int(grid.g.size), "validation": validation,
            "files": sorted(str(f) for f in files)}


def _singular(cfg, pair, window):
    if _empty(window):
        return []
    return singular_analysis(pair, window, cfg.step, cfg.tol, cfg.lambda_tol, workers=_threads())


def cmd_singular(cfg: JobConfig) -> dict:
    pair, fx = _pair_and_fixture(cfg)
    window = _window(cfg, pair, fx, "local_window")
    branches = _singular(cfg, pair, window)
    evolutes = [area_evolute(pair, b) for b in branches]
    table = {}
    for b in branches:
        for k in b.kinds():
            table[k.value] = table.get(k.value, 0) + 1
    swallowtails = [{"s": p.s, "t": p.t, "lambda_prime": p.lambda_prime, "x": p.x_img}
                    for b in branches for p in b.swallowtails()]
    report = {
        "pair": pair.name, "window": window, "summary": dict(sorted(table.items())),
        "swallowtails": swallowtails,
        "branches": [{"closed": b.closed, "clipped": b.clipped, "r": b.r,
                      "criteria_disagreements": b.diagnostics.get("criteria_disagreements", []),
                      "null_tangency_sign_changes": b.diagnostics.get("null_tangency", {}).get("sign_changes", []),
                      "points": [p.to_dict() for p in b.points]} for b in branches],
        "evolutes": [{"points": e.points, "cusps": e.cusps, "max_tangent_angle": e.max_tangent_angle}
                     for e in evolutes],
    }
    out = _outdir(cfg)
    files = []
    if "json" in cfg.formats:
        files.append(export.write_json(out / "singular.json", report))
    if "svg" in cfg.formats:
        path = out / "evolute.svg"
        path.write_text(export.evolute_svg(evolutes))
        files.append(path)
    return {"command": "singular", "summary": report["summary"], "swallowtails": swallowtails,
            "files": sorted(str(f) for f in files)}


def cmd_symmetry(cfg: JobConfig) -> dict:
    pair, fx = _pair_and_fixture(cfg)
    window = _window(cfg, pair, fx, "symmetry_window")
    if _empty(window):
        aass, aess, branches = [], None, []
    else:
        aass = aass_solve(pair, window, tol=cfg.tol, step=cfg.step, quad_tol=min(cfg.quad_tol, 1e-12))
        aess = local_symmetry_points(pair, window, tol=cfg.tol, step=cfg.step)
        try:
            branches = _singular(cfg, pair, window)
        except NumericalError:
            branches = []
    tangent = []
    for br in aass:
        angles = [aass_tangent_check(pair, a, b) for a, b in zip(br.solutions[:-1], br.solutions[1:])]
        tangent.append(max((a["angle_alpha"] for a in angles), default=float("nan")))
    report = {
        "pair": pair.name, "window": window,
        "aass": [dict(b.to_dict(), max_tangent_angle=a) for b, a in zip(aass, tangent)],
        "aess": aess.to_dict() if aess is not None else {"degenerate_E": False, "branches": [], "diagnostics": {}},
    }
    out = _outdir(cfg)
    files = []
    if "json" in cfg.formats:
        files.append(export.write_json(out / "symmetry.json", report))
    if "svg" in cfg.formats and not _empty(window):
        (s0, s1), (t0, t1) = window
        a_pts = pair.alpha(np.linspace(s0, s1, 200))
        b_pts = pair.beta(np.linspace(t0, t1, 200))
        centers, mls = [], []
        if aess is not None and not aess.degenerate_e:
            for b in aess.branches:
                c = [p.center for p in b if isinstance(p.center, np.ndarray)]
                if c:
                    centers.append(np.array(c))
                for p in b[:: max(1, len(b) // 12)]:
                    if p.midline is not None:
                        mls.append((p.midline.point, p.midline.direction, 0.05))
        path = out / "symmetry.svg"
        path.write_text(export.overlay_svg(a_pts, b_pts, [area_evolute(pair, b) for b in branches],
                                           [b.midpoints for b in aass], centers, mls))
        files.append(path)
    n_aess = 0 if aess is None else len(aess.points)
    return {"command": "symmetry", "aass_branches": len(aass), "aass_points": sum(len(b.solutions) for b in aass),
            "aess_points": n_aess, "degenerate_E": bool(aess is not None and aess.degenerate_e),
            "files": sorted(str(f) for f in files)}


def cmd_roundtrip(cfg: JobConfig) -> dict:
    pair = fx = None
    if cfg.grid:
        grid = export.read_csv(cfg.grid)
        source = cfg.grid
    else:
        pair, fx = _pair_and_fixture(cfg)
        window = _window(cfg, pair, fx, "local_window")
        if _empty(window):
            raise ConfigError("roundtrip needs a window with positive extent")
        s, t = grid_axes(*window, cfg.res)
        if cfg.published:
            if cfg.fixture != "excusp2":
                raise ConfigError("--published is only available for excusp2")
            grid = excusp2_published_grid(s, t)
            source = "excusp2 published (u,v) data"
        else:
            grid = surface_grid(pair, s, t, cfg.quad_tol)
            source = f"forward grid of {pair.name}"
    ext = extract_curves(grid)
    result = {"command": "roundtrip", "source": source, "swapped": ext.swapped,
              "cross_variation": ext.cross_variation,
              "alpha": np.column_stack([grid.s, ext.alpha_samples]),
              "beta": np.column_stack([grid.t, ext.beta_samples])}
    if pair is not None:
        result["max_deviation"] = float(max(np.abs(ext.alpha_samples - pair.alpha(grid.s)).max(),
                                            np.abs(ext.beta_samples - pair.beta(grid.t)).max()))
    out = _outdir(cfg)
    if "json" in cfg.formats:
        export.write_json(out / "roundtrip.json", result)
        result["files"] = [str(out / "roundtrip.json")]
    return {k: v for k, v in result.items() if k not in ("alpha", "beta")}


def selftest_rows(step: float = 1e-3) -> list[tuple[str, bool, str]]:
    """Every machine-checkable fixture expectation as (name, passed, detail)."""
    rows = []

    def add(name, ok, detail):
        rows.append((name, bool(ok), detail))

    for name in sorted(FIXTURES):
        fx = get_fixture(name)
        pair, exp = fx.pair, fx.expected
        branches = singular_analysis(fx.pair, fx.local_window, step)
        res = exp["singular_residual"]
        regular = [p for b in branches for p in b.points if p.kind.value != "Degenerate"]
        worst = max((abs(res(p.s, p.t)) for p in regular), default=0.0)
        add(f"{name}: singular set residual", worst < 1e-6, f"{worst:.2e}")
        sw = [(p.s, p.t) for b in branches for p in b.swallowtails()]
        want = exp["swallowtails_local"]
        ok = len(sw) == len(want) and all(min(np.hypot(a - c, b - d) for c, d in sw) < 1e-4 for a, b in want)
        add(f"{name}: swallowtails", ok, str([(round(a, 6), round(b, 6)) for a, b in sw]))
        lam_err = max((abs(p.lam - exp["lambda"](p.s, p.t)) for p in regular if np.isfinite(p.lam)), default=0.0)
        add(f"{name}: lambda law", lam_err < 1e-5, f"{lam_err:.2e}")
        s = np.linspace(*fx.local_window[0], 20)
        t = np.linspace(*fx.local_window[1], 20)
        st = structure_residuals(pair, s, t)
        add(f"{name}: L = N = 0", max(st["max_abs_L"], st["max_abs_N"]) < 1e-9,
            f"{max(st['max_abs_L'], st['max_abs_N']):.2e}")
        add(f"{name}: affine normal (0,0,1)", st["max_xi_deviation"] < 1e-9, f"{st['max_xi_deviation']:.2e}")
        g = surface_grid(pair, s, t, 1e-12)
        S, T = np.meshgrid(s, t, indexing="ij")
        printed = exp["printed_g"](S, T)
        scaled = exp["printed_g_scale"] * g.g
        dev = float(np.ptp(printed - scaled))
        add(f"{name}: printed g = {exp['printed_g_scale']:g} g + const", dev < 1e-8, f"{dev:.2e}")
        ext = extract_curves(g)
        rt = float(max(np.abs(ext.alpha_samples - pair.alpha(s)).max(), np.abs(ext.beta_samples - pair.beta(t)).max()))
        add(f"{name}: round trip", rt < 1e-8, f"{rt:.2e}")
        try:
            hd = hessian_det_check(pair, s[2:-2:3], t[2:-2:3])
            add(f"{name}: det D2 g = -1", hd["max_deviation"] < 1e-4, f"{hd['max_deviation']:.2e}")
        except NumericalError as exc:
            add(f"{name}: det D2 g = -1", False, type(exc).__name__)
    return rows


def cmd_selftest(cfg: JobConfig) -> dict:
    rows = selftest_rows(cfg.step)
    width = max(len(r[0]) for r in rows)
    for label, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {label:<{width}}  {detail}")
    return {"command": "selftest", "passed": sum(r[1] for r in rows), "total": len(rows),
            "ok": all(r[1] for r in rows)}


COMMANDS = {"surface": cmd_surface, "singular": cmd_singular, "symmetry": cmd_symmetry,
            "roundtrip": cmd_roundtrip, "selftest": cmd_selftest}


def _fail(exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code},
                                sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        summary = COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        return _fail(exc, 2)
    except NumericalError as exc:
        return _fail(exc, 3)
    except AffSphereError as exc:
        return _fail(exc, 3)
    sys.stdout.write(export.dumps(summary))
    if cfg.command == "selftest" and not summary["ok"]:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
