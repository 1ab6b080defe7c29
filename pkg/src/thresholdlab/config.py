"""Experiment configuration files (TOML) and their validation.

A minimal configuration::

    name = "strip-bottom"

    [model]
    kind = "strip"          # strip | oscillator | manufactured
    m = 8

    [potential]
    form = "trig_series"    # trig_series | box_constant | grid_sampled
    a = [1.0, 0.0, 4.0]
    b = [0.5]

    [sweep]
    p = 1
    eps = [0.05, 0.1]       # or start / stop / step

Optional tables: ``[potential2]`` (same keys as ``[potential]``),
``[pipelines]`` (``asymptotics``, ``direct``, ``verify_absence``),
``[solver]`` (``n1``, ``n2``, ``x0``, ``sigma``, ``far_bc``, ``tol``,
``count``, ``transverse``), ``[quadrature] order``, ``[greens] jmax``,
``[output]`` (``dir``, ``svg``) and ``[run] workers``.

Manufactured models read ``model.modes_file`` (path relative to the config
file) and take the transverse eigenvalues from ``model.eigenvalues``.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from .direct_solver import SolverSettings
from .errors import ConfigError, ThresholdLabError
from .perturbation import PerturbationPair, PotentialSpec
from .transverse import (
    build_manufactured_spectrum,
    build_oscillator_spectrum,
    build_strip_spectrum,
    group_containing,
    load_mode_table,
)

MODEL_KINDS = ("strip", "oscillator", "manufactured")
FORMS = ("trig_series", "box_constant", "grid_sampled")
FAR_BC = ("auto", "dirichlet", "neumann")

_TOP_KEYS = {"name", "model", "potential", "potential2", "sweep", "pipelines", "solver",
             "quadrature", "greens", "output", "run"}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: str
    spectrum: object = field(repr=False)
    pair: PerturbationPair = field(repr=False)
    p: int
    eps: tuple
    asymptotics: bool = True
    direct: bool = True
    verify_absence: bool = False
    solver: SolverSettings = SolverSettings()
    order: int = 32
    jmax: int = 64
    out_dir: Path = Path("out")
    svg: bool = True
    workers: int = 1
    source: Optional[Path] = None

    @property
    def group(self):
        return group_containing(self.spectrum, self.p)

    def with_eps(self, eps):
        return _replace(self, eps=_check_eps(list(eps), "eps-override"))

    def with_pipelines(self, asymptotics, direct):
        return _replace(self, asymptotics=asymptotics, direct=direct)

    def with_out_dir(self, path):
        return _replace(self, out_dir=Path(path))


def _replace(cfg, **kw):
    from dataclasses import replace

    return replace(cfg, **kw)


def _table(doc, key, path, required=False):
    val = doc.get(key)
    if val is None:
        if required:
            raise ConfigError(path, "missing table")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(path, "expected a table")
    return val


def _unknown(tbl, allowed, path):
    extra = sorted(set(tbl) - set(allowed))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}", "unknown key")


def _num(tbl, key, path, default=None, kind=float, positive=False, required=False):
    if key not in tbl:
        if required:
            raise ConfigError(f"{path}.{key}", "missing value")
        return default
    v = tbl[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    if kind is int and (not isinstance(v, int)):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {v!r}")
    if not np.isfinite(v):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}", "must be positive")
    return kind(v)


def _bool(tbl, key, path, default):
    v = tbl.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{path}.{key}", "expected true or false")
    return v


def _array(tbl, key, path, default=None, ndim=1):
    if key not in tbl:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing array")
        return np.asarray(default, dtype=float)
    try:
        arr = np.asarray(tbl[key], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", "expected a numeric array") from None
    if arr.ndim != ndim or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{path}.{key}", f"expected a finite {ndim}-D numeric array")
    return arr


def _pair_of(tbl, key, path, default=None):
    arr = _array(tbl, key, path, default)
    if arr.shape != (2,) or not arr[1] > arr[0]:
        raise ConfigError(f"{path}.{key}", "expected [lo, hi] with lo < hi")
    return tuple(float(x) for x in arr)


def _check_eps(values, path):
    try:
        eps = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(path, "epsilon values must be numbers") from None
    if any(not (np.isfinite(e) and e > 0) for e in eps):
        raise ConfigError(path, "epsilon values must be positive")
    if any(b <= a for a, b in zip(eps, eps[1:])):
        raise ConfigError(path, "epsilon values must be strictly increasing")
    return tuple(eps)


def parse_potential(tbl, path, default_x1=(0.0, np.pi)):
    form = tbl.get("form")
    if form not in FORMS:
        raise ConfigError(f"{path}.form", f"expected one of {', '.join(FORMS)}")
    if form == "trig_series":
        _unknown(tbl, {"form", "a", "b", "support_halfwidth"}, path)
        a = _array(tbl, "a", path, default=[])
        b = _array(tbl, "b", path, default=[])
        h = _num(tbl, "support_halfwidth", path, np.pi, positive=True)
        return PotentialSpec.trig_series(a, b, h, default_x1)
    if form == "box_constant":
        _unknown(tbl, {"form", "amplitude", "amplitude_im", "x1_range", "x2_range"}, path)
        amp = _num(tbl, "amplitude", path, required=True) + 1j * _num(tbl, "amplitude_im", path, 0.0)
        return PotentialSpec.box_constant(amp, _pair_of(tbl, "x1_range", path, default_x1),
                                          _pair_of(tbl, "x2_range", path))
    _unknown(tbl, {"form", "x1_grid", "x2_grid", "values_re", "values_im"}, path)
    g1 = _array(tbl, "x1_grid", path)
    g2 = _array(tbl, "x2_grid", path)
    re = _array(tbl, "values_re", path, ndim=2)
    im = _array(tbl, "values_im", path, default=np.zeros_like(re), ndim=2)
    try:
        return PotentialSpec.grid_sampled(g1, g2, re + 1j * im)
    except ThresholdLabError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_model(tbl, base):
    _unknown(tbl, {"kind", "m", "modes_file", "eigenvalues"}, "model")
    kind = tbl.get("kind")
    if kind not in MODEL_KINDS:
        raise ConfigError("model.kind", f"expected one of {', '.join(MODEL_KINDS)}")
    if kind == "manufactured":
        if "modes_file" not in tbl:
            raise ConfigError("model.modes_file", "manufactured models need a mode table")
        path = Path(tbl["modes_file"])
        path = path if path.is_absolute() else base / path
        lam = _array(tbl, "eigenvalues", "model")
        try:
            grid, samples = load_mode_table(path)
        except OSError as exc:
            raise ConfigError("model.modes_file", f"cannot read {path}: {exc.strerror}") from None
        except ThresholdLabError as exc:
            raise ConfigError("model.modes_file", str(exc)) from None
        if samples.shape[0] != len(lam):
            raise ConfigError("model.eigenvalues", f"{len(lam)} values for {samples.shape[0]} mode columns")
        try:
            return kind, build_manufactured_spectrum(lam, grid, samples)
        except ThresholdLabError as exc:
            raise ConfigError("model.modes_file", str(exc)) from None
    m = _num(tbl, "m", "model", 8, kind=int, positive=True)
    build = build_strip_spectrum if kind == "strip" else build_oscillator_spectrum
    return kind, build(m)


def _parse_solver(tbl):
    path = "solver"
    _unknown(tbl, {"n1", "n2", "x0", "sigma", "cap", "far_bc", "tol", "count", "transverse",
                   "h_center", "x0_max"}, path)
    d = SolverSettings()
    n1 = _num(tbl, "n1", path, d.n1, kind=int, positive=True)
    n2 = _num(tbl, "n2", path, None, kind=int, positive=True)
    for key, v in (("n1", n1), ("n2", n2)):
        if v is not None and v < 16:
            raise ConfigError(f"{path}.{key}", "must be at least 16")
    far_bc = tbl.get("far_bc", d.far_bc)
    if far_bc not in FAR_BC:
        raise ConfigError(f"{path}.far_bc", f"expected one of {', '.join(FAR_BC)}")
    transverse = tbl.get("transverse", d.transverse)
    if transverse not in ("spectral", "fd2"):
        raise ConfigError(f"{path}.transverse", "expected spectral or fd2")
    return SolverSettings(
        n1=n1,
        n2=n2,
        x0=_num(tbl, "x0", path, None, positive=True),
        sigma=_num(tbl, "sigma", path, None, positive=True),
        cap=_num(tbl, "cap", path, None, positive=True),
        far_bc=far_bc,
        tol=_num(tbl, "tol", path, d.tol, positive=True),
        transverse=transverse,
        count=_num(tbl, "count", path, d.count, kind=int, positive=True),
        h_center=_num(tbl, "h_center", path, d.h_center, positive=True),
        x0_max=_num(tbl, "x0_max", path, d.x0_max, positive=True),
    )


def _parse_sweep(tbl):
    _unknown(tbl, {"p", "eps", "start", "stop", "step"}, "sweep")
    p = _num(tbl, "p", "sweep", 1, kind=int, positive=True)
    if "eps" in tbl:
        if any(k in tbl for k in ("start", "stop", "step")):
            raise ConfigError("sweep.eps", "give either eps or start/stop/step")
        if not isinstance(tbl["eps"], list):
            raise ConfigError("sweep.eps", "expected an array")
        return p, _check_eps(tbl["eps"], "sweep.eps")
    start = _num(tbl, "start", "sweep", required=True, positive=True)
    stop = _num(tbl, "stop", "sweep", required=True, positive=True)
    step = _num(tbl, "step", "sweep", required=True, positive=True)
    if stop < start:
        raise ConfigError("sweep.stop", "must not be below sweep.start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return p, _check_eps([round(start + k * step, 12) for k in range(count)], "sweep")


def config_from_dict(doc, base=Path("."), source=None):
    """Validate a parsed document; raises :class:`ConfigError` naming the field."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a table")
    _unknown(doc, _TOP_KEYS, "<root>")
    name = doc.get("name", source.stem if source else "experiment")
    if not isinstance(name, str) or not name or any(c in name for c in "/\\"):
        raise ConfigError("name", "expected a plain non-empty string")
    kind, spectrum = _parse_model(_table(doc, "model", "model", required=True), base)
    x1_default = (0.0, np.pi) if kind == "strip" else spectrum.domain()
    V1 = parse_potential(_table(doc, "potential", "potential", required=True), "potential", x1_default)
    V2 = None
    if "potential2" in doc:
        V2 = parse_potential(_table(doc, "potential2", "potential2"), "potential2", x1_default)
    p, eps = _parse_sweep(_table(doc, "sweep", "sweep", required=True))
    try:
        group_containing(spectrum, p)
    except ThresholdLabError as exc:
        raise ConfigError("sweep.p", str(exc)) from None
    pipes = _table(doc, "pipelines", "pipelines")
    _unknown(pipes, {"asymptotics", "direct", "verify_absence"}, "pipelines")
    quad = _table(doc, "quadrature", "quadrature")
    _unknown(quad, {"order"}, "quadrature")
    greens = _table(doc, "greens", "greens")
    _unknown(greens, {"jmax"}, "greens")
    out = _table(doc, "output", "output")
    _unknown(out, {"dir", "svg"}, "output")
    run = _table(doc, "run", "run")
    _unknown(run, {"workers"}, "run")
    out_dir = out.get("dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError("output.dir", "expected a path string")
    out_path = Path(out_dir)
    return ExperimentConfig(
        name=name,
        model=kind,
        spectrum=spectrum,
        pair=PerturbationPair(V1, V2),
        p=p,
        eps=eps,
        asymptotics=_bool(pipes, "asymptotics", "pipelines", True),
        direct=_bool(pipes, "direct", "pipelines", True),
        verify_absence=_bool(pipes, "verify_absence", "pipelines", False),
        solver=_parse_solver(_table(doc, "solver", "solver")),
        order=_num(quad, "order", "quadrature", 32, kind=int, positive=True),
        jmax=_num(greens, "jmax", "greens", 64, kind=int, positive=True),
        out_dir=out_path if out_path.is_absolute() else base / out_path,
        svg=_bool(out, "svg", "output", True),
        workers=_num(run, "workers", "run", 1, kind=int, positive=True),
        source=source,
    )


def load_config(path):
    """Read and validate a TOML experiment file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from None
    return config_from_dict(doc, path.parent, path)
