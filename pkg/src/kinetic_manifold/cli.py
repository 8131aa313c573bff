"""``km`` command-line entry point."""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import KineticError, ModelError

SCHEMA = "kinetic-manifold/1"
COMMANDS = ("verify", "decompose", "expand", "profile", "compare", "sweep")
FORMATS = ("csv", "json", "svg")
DEFAULT_EPS_LIST = "0.1,0.05,0.025,0.0125"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="km", description="Center-manifold and shock-profile experiments.")
    p.add_argument("--version", action="version", version=f"km {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--model", required=True, help="registry name or path to a model file")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--kind", choices=("relaxation", "ce2", "burgers"), default="relaxation",
                   help="profile kind for the profile command")
    p.add_argument("--grid-L", type=float, default=None)
    p.add_argument("--grid-m", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--eps-list", default=DEFAULT_EPS_LIST)
    p.add_argument("--out", default=None, help="output directory (stdout JSON only when omitted)")
    p.add_argument("--format", default="json", help="comma-separated subset of csv,json,svg")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    return p


# ---------------------------------------------------------------- output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(_jsonable({"schema": SCHEMA, **payload}), indent=1, sort_keys=True) + "\n"


def write_atomic(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _svg(draw) -> bytes:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "km", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


class Emitter:
    def __init__(self, out, formats):
        self.out = Path(out) if out else None
        self.formats = formats
        self.written = []

    def emit(self, stem: str, fmt: str, data) -> None:
        if self.out is None or fmt not in self.formats:
            return
        path = self.out / f"{stem}.{fmt}"
        write_atomic(path, data)
        self.written.append(str(path))


# ---------------------------------------------------------------- configuration


def _formats(text):
    fm = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fm if f not in FORMATS]
    if bad:
        raise UsageError(f"unknown format(s): {', '.join(bad)}")
    return fm


def _eps_list(text):
    try:
        return [float(e) for e in text.split(",") if e.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --eps-list: {exc}") from exc


def _weights(args, nu):
    from .weighted import WeightParams, default_weights

    given = [args.alpha, args.gamma, args.beta]
    if all(v is None for v in given):
        w = default_weights(nu)
    elif any(v is None for v in given):
        raise UsageError("--alpha, --gamma and --beta must be given together")
    else:
        w = WeightParams(args.alpha, args.gamma, args.beta)
    w.check_rate(nu)
    return w


def _config_block(args, **extra):
    block = {"model": args.model, "command": args.command}
    block.update(extra)
    return block


# ---------------------------------------------------------------- commands


def cmd_verify(args, model, em):
    from .model import verify_hypotheses

    report = verify_hypotheses(model).to_dict()
    payload = {"config": _config_block(args), "report": report}
    em.emit("verify", "json", dumps(payload))
    return payload, 0 if report["pass"] else 1


def cmd_decompose(args, model, em):
    from .linear import build_decomposition
    from .oracles import pencil_trichotomy

    dec = build_decomposition(model)
    w = _weights(args, dec.nu)
    L = args.grid_L or 20.0 / dec.nu
    m = args.grid_m or 2049
    pencil = pencil_trichotomy(model)
    summary = dec.summary()
    summary["pencil_eigenvalues"] = np.sort(pencil.eigenvalues).tolist()
    summary["pencil_center_deviation"] = float(np.abs(dec.P_c - pencil.P_c).max())
    cfg = _config_block(args, grid={"L": L, "m": m},
                        weights={"alpha": w.alpha, "gamma": w.gamma, "beta": w.beta})
    payload = {"config": cfg, "decomposition": summary}
    em.emit("decompose", "json", dumps(payload))
    rows = ["kind, value"] + [f"rate, {r!r}" for r in dec.rates] + \
        [f"pencil, {v!r}" for v in summary["pencil_eigenvalues"]]
    em.emit("decompose", "csv", "\n".join(rows) + "\n")
    return payload, 0


def cmd_expand(args, model, em):
    from .center_manifold import (PicardConfig, build_canonical, graph_Jc, normal_form, picard_solve,
                                  taylor_expand)
    from .chapman_enskog import classify
    from .linear import build_decomposition

    dec = build_decomposition(model)
    w = _weights(args, dec.nu)
    L = args.grid_L or 20.0 / dec.nu
    m = args.grid_m or 2049
    frame = build_canonical(dec)
    exp = taylor_expand(dec, model, k=args.order, frame=frame)
    cls = classify(model)
    out = {"classification": cls.to_dict(), "expansion_residual": exp.residual}
    if cls.case in ("SimpleGNL", "LinearlyDegenerate"):
        nf = normal_form(exp, frame, cls)
        out["normal_form"] = {"kappa": nf["kappa"], "chi": nf["chi"], "kappa_chi": nf["kappa_chi"],
                              "half_lambda": cls.Lambda / 2, "deviation": nf["deviation"]}
    # graph cross-check at one seeded center point
    rng = np.random.default_rng(args.seed)
    wc = 0.01 * rng.uniform(-1, 1, dec.dim_c)
    if dec.r:
        wc[dec.r:2 * dec.r] = 0.0
    w0 = frame.recon_c @ wc
    res = picard_solve(dec, model, w0, PicardConfig(eps0=0.1, eps1=1.0, delta=1.0, weights=w, L=L, m=m))
    xi = frame.recon_h @ exp.graph(wc)
    out["graph_check"] = {
        "w_c": wc, "iterations": res.iterations, "max_ratio": float(res.ratios.max(initial=0.0)),
        "picard_vs_taylor": float(np.linalg.norm(graph_Jc(dec, res) - xi)),
    }
    cfg = _config_block(args, order=args.order, grid={"L": L, "m": m},
                        weights={"alpha": w.alpha, "gamma": w.gamma, "beta": w.beta}, seed=args.seed)
    payload = {"config": cfg, **out}
    em.emit("expand", "json", dumps(payload))
    em.emit("expansion", "json", exp.to_json() + "\n")
    return payload, 0


def _profile_cfg(args):
    from .profiles import ProfileConfig

    return ProfileConfig(order=args.order, m=args.grid_m or 4001, L=args.grid_L)


def _plot_profiles(profiles, cls, eps):
    from .profiles import burgers_exact

    def draw(ax):
        for pr in profiles:
            ax.plot(pr.x, pr.u1, label=pr.kind)
        x = profiles[0].x
        kappa = float(np.atleast_2d(cls.kappa)[0, 0])
        ax.plot(x, burgers_exact(eps, cls.Lambda, kappa, x), "k--", lw=0.8, label="Burgers")
        ax.set_xlabel("x")
        ax.set_ylabel("u1")
        ax.legend()

    return draw


def cmd_profile(args, model, em):
    from .chapman_enskog import classify
    from .profiles import burgers_profile, ce2_profile, relaxation_profile

    cfg = _profile_cfg(args)
    fn = {"relaxation": relaxation_profile, "ce2": ce2_profile, "burgers": burgers_profile}[args.kind]
    pr = fn(model, args.eps, cfg)
    cls = classify(model)
    conf = _config_block(args, eps=args.eps, kind=args.kind, order=cfg.order,
                         grid={"L": pr.grid.L, "m": pr.grid.m})
    payload = {"config": conf, "u_minus": pr.u_minus, "u_plus": pr.u_plus, "q": pr.q, "metrics": pr.metrics}
    em.emit(f"profile-{args.kind}", "json", dumps(payload))
    em.emit(f"profile-{args.kind}", "csv", pr.to_csv())
    em.emit(f"profile-{args.kind}", "svg", _svg(_plot_profiles([pr], cls, args.eps)))
    return payload, 0


def cmd_compare(args, model, em):
    from .chapman_enskog import classify
    from .profiles import ce2_profile, compare_profiles, relaxation_profile

    cfg = _profile_cfg(args)
    cls = classify(model)
    rel = relaxation_profile(model, args.eps, cfg)
    ce = ce2_profile(model, args.eps, cfg)
    metrics = compare_profiles(rel, ce, cls, model)
    conf = _config_block(args, eps=args.eps, order=cfg.order, grid={"L": rel.grid.L, "m": rel.grid.m})
    payload = {"config": conf, "metrics": metrics}
    em.emit("compare", "json", dumps(payload))
    rows = ["x, u1_rel, u1_ce"] + [f"{a!r}, {b!r}, {c!r}" for a, b, c in zip(rel.x, rel.u1, ce.u1)]
    em.emit("compare", "csv", "\n".join(rows) + "\n")
    em.emit("compare", "svg", _svg(_plot_profiles([rel, ce], cls, args.eps)))
    return payload, 0


def cmd_sweep(args, model, em):
    from .profiles import SWEEP_FITS, epsilon_sweep

    cfg = _profile_cfg(args)
    eps_list = _eps_list(args.eps_list)
    table = epsilon_sweep(model, eps_list, cfg, jobs=max(1, args.jobs))
    conf = _config_block(args, eps_list=eps_list, order=cfg.order, grid={"m": cfg.m, "width": cfg.width})
    payload = {"config": conf, **table}
    em.emit("sweep", "json", dumps(payload))
    keys = ["eps", *SWEEP_FITS, "lambda_monotone"]
    rows = [", ".join(keys)] + [", ".join(repr(r[k]) for k in keys) for r in table["rows"]]
    em.emit("sweep", "csv", "\n".join(rows) + "\n")

    def draw(ax):
        for key, label in SWEEP_FITS.items():
            ax.loglog(eps_list, [r[key] for r in table["rows"]], "o-", label=label)
        ax.set_xlabel("eps")
        ax.legend(fontsize=7)

    if table["rows"]:
        em.emit("sweep", "svg", _svg(draw))
    return payload, 0


HANDLERS = {
    "verify": cmd_verify,
    "decompose": cmd_decompose,
    "expand": cmd_expand,
    "profile": cmd_profile,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def _error(kind, message, code, stream):
    stream.write(dumps({"error": {"type": kind, "message": message}, "exit_code": code}))
    return code


def main(argv=None, stdout=None) -> int:
    from .registry import resolve_model

    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        formats = _formats(args.format)
        model = resolve_model(args.model)
        em = Emitter(args.out, formats)
        payload, code = HANDLERS[args.command](args, model, em)
    except UsageError as exc:
        return _error("usage", str(exc), 2, stdout)
    except ModelError as exc:
        return _error(type(exc).__name__, str(exc), 2, stdout)
    except KineticError as exc:
        return _error(type(exc).__name__, str(exc), 1, stdout)
    stdout.write(dumps({**payload, "written": em.written}))
    return code


if __name__ == "__main__":
    sys.exit(main())
