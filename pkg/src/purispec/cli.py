"""Command-line driver: one INI config in, CSV/JSON artifacts plus a manifest out.

Usage::

    purispec dos --config run.ini --out results/ [--threads N] [--seed-offset K]

Exit codes: 0 success, 2 configuration error, 3 numerical-contract
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .dynamics import (
    TimeGrid,
    evolve_state,
    fock_vector,
    half_chain_entropy,
    loschmidt_G,
    loschmidt_G_A,
    loschmidt_G_sigma,
    loschmidt_G_sigma_all,
    max_time_step,
    probe_interferometer,
    purified_G,
    random_state,
    stochastic_trace_G,
)
from .eigen import diagonalize, eigen_expectations, weights_matrix, write_energies_csv
from .errors import ComputationError, ConfigError, PurispecError, ValidationError
from .eth import EthWindow, choose_Tsc, sigma_exact, sigma_signal
from .mbl import gamma_avg, participation_ratio_M, participation_ratio_R, polar_factor, uhlmann_R
from .model import ModelSpec, FockState, build_hamiltonian, build_observable_zz, neel_like
from .reconstruct import (
    EnergyGrid,
    dos_closed_form,
    dos_from_series,
    fock_distribution,
    fock_distribution_from_series,
    integrated,
    observable_Ac,
    observable_Ar,
    observable_Ar_from_series,
)
from .thermo import canonical_specific_heat, oracle_bounds, signal_bounds, specific_heat

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
MAX_ENTROPY_SITES = 12

ENERGY = "J_z"
TIME = "1/J_z"


class ContractFailure(ComputationError):
    """A verification check exceeded its tolerance."""


# --------------------------------------------------------------------------- config

def _float(raw):
    return float(raw)


def _pos_float(raw):
    value = float(raw)
    if not value > 0 or not math.isfinite(value):
        raise ValueError("must be a positive finite number")
    return value


def _pos_int(raw):
    value = int(raw)
    if value < 1:
        raise ValueError("must be a positive integer")
    return value


def _nonneg_int(raw):
    value = int(raw)
    if value < 0:
        raise ValueError("must be a non-negative integer")
    return value


def _times(raw):
    values = tuple(_pos_float(part) for part in re.split(r"[,\s]+", raw.strip()) if part)
    if not values:
        raise ValueError("needs at least one time")
    return values


def _choice(*options):
    def parse(raw):
        value = raw.strip().lower()
        if value not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return value
    return parse


SCHEMA: dict[str, dict[str, Callable]] = {
    "model": {key: str for key in ("kind", "L", "j_z", "j", "h_x", "h_z", "r_z", "seed")},
    "times": {"T": _times, "dt": _pos_float, "source": _choice("signal", "closed")},
    "grid": {"points_per_width": _pos_float, "margin": _pos_float},
    "thermo": {"beta_min": _float, "beta_max": _float, "n_beta": _pos_int, "bounds": _choice("signal", "oracle")},
    "window": {"e_minus": _float, "e_plus": _float, "t_sc": _pos_float},
    "state": {"sigma": str},
    "entropy": {"t_max": _pos_float, "n_times": _pos_int},
    "ensemble": {"n_realizations": _pos_int, "base_seed": _nonneg_int},
    "verify": {"n_specs": _pos_int, "samples": _pos_int},
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    times: tuple[float, ...] = (20.0,)
    dt: float | None = None
    source: str = "signal"
    points_per_width: float = 8.0
    margin: float = 10.0
    beta_min: float = 0.0
    beta_max: float = 2.0
    n_beta: int = 41
    bounds: str = "signal"
    e_minus: float = -1.0
    e_plus: float = 1.0
    t_sc: float | None = None
    sigma: str = "neel"
    t_max: float = 20.0
    n_times: int = 101
    n_realizations: int = 1
    base_seed: int | None = None
    n_specs: int = 20
    samples: int = 200
    values: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def seed0(self) -> int:
        return self.model.seed if self.base_seed is None else self.base_seed

    def config_hash(self) -> str:
        return _sha256_text(json.dumps(self.values, sort_keys=True))

    def spec_hash(self, spec: ModelSpec | None = None) -> str:
        return _sha256_text(json.dumps((spec or self.model).to_config(), sort_keys=True))

    def fock_state(self, L: int) -> FockState:
        if self.sigma.strip().lower() == "neel":
            return neel_like(L)
        try:
            state = FockState.from_string(self.sigma.strip())
        except ValidationError:
            raise ConfigError(f"[state] sigma: cannot parse {self.sigma!r}") from None
        if state.L != L:
            raise ConfigError(f"[state] sigma has {state.L} sites, model has {L}")
        return state


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    index: dict[tuple[str, str | None], int] = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        header = re.fullmatch(r"\[([^\]]+)\]", stripped)
        if header:
            section = header.group(1).strip()
            index.setdefault((section, None), number)
            continue
        key = re.split(r"[=:]", stripped, maxsplit=1)[0].strip()
        if section is not None:
            index.setdefault((section, key), number)
    return index


def parse_config(text: str) -> ExperimentConfig:
    """Validate an INI document against the schema; raise ConfigError with line numbers."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key before any [section] header", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("unparseable line", line) from None
    lines = _line_index(text)

    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)))
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", lines.get((section, key)))
    if not parser.has_section("model"):
        raise ConfigError("missing required [model] section")

    values = {section: dict(parser[section]) for section in parser.sections()}
    try:
        model = ModelSpec.from_config(values["model"])
    except ValidationError as exc:
        raise ConfigError(f"[model]: {exc}", lines.get(("model", None))) from None

    kwargs = {}
    names = {"T": "times"}
    for section in parser.sections():
        if section == "model":
            continue
        for key, raw in parser[section].items():
            try:
                kwargs[names.get(key, key)] = SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}", lines.get((section, key))) from None
    config = ExperimentConfig(model=model, values=values, **kwargs)
    if not config.e_minus < config.e_plus:
        raise ConfigError("[window] needs e_minus < e_plus", lines.get(("window", "e_minus")))
    if config.beta_max < config.beta_min:
        raise ConfigError("[thermo] needs beta_min <= beta_max", lines.get(("thermo", "beta_max")))
    return config


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    return parse_config(text)


# --------------------------------------------------------------------------- output

def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _tag(T: float) -> str:
    return f"T{T:g}"


def write_table(path: Path, header: str, columns, formats=None) -> None:
    """CSV with full round-trip precision (``%.17g``) unless a column is marked int."""
    columns = [np.asarray(c) for c in columns]
    formats = formats or ["%.17g"] * len(columns)
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in zip(*columns):
            fh.write(",".join(fmt % value for fmt, value in zip(formats, row)) + "\n")


class Emitter:
    """Writes artifacts into ``out``, each with a JSON sidecar, and records them."""

    def __init__(self, out: Path, config: ExperimentConfig):
        self.out = out
        self.config = config
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def record(self, name: str, units: dict[str, str], spec: ModelSpec | None = None, **meta) -> Path:
        path = self.out / name
        sidecar = {
            "file": name,
            "units": units,
            "spec_hash": self.config.spec_hash(spec),
            "model": (spec or self.config.model).to_config(),
            **meta,
        }
        side = path.with_suffix(".json")
        side.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
        self.files += [path, side]
        return path

    def table(self, name, header, columns, units, formats=None, spec=None, **meta) -> Path:
        write_table(self.path(name), header, columns, formats)
        return self.record(name, units, spec, **meta)

    def manifest(self, command: str, wall_time: float, seeds=None) -> Path:
        files = sorted(self.files, key=lambda p: str(p.relative_to(self.out)))
        manifest = {
            "command": command,
            "version": __version__,
            "config_hash": self.config.config_hash(),
            "wall_time_s": wall_time,
            "seeds": seeds,
            "files": {str(p.relative_to(self.out)): _sha256_file(p) for p in files},
        }
        path = self.out / "manifest.json"
        path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        return path


# --------------------------------------------------------------------------- parallel

def parallel_map(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]`` over a thread pool, results in input order.

    The first failure cancels pending work and is re-raised.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, item) for item in items]
        try:
            return [f.result() for f in futures]
        except BaseException:
            for f in futures:
                f.cancel()
            raise


@dataclass(frozen=True)
class EnsembleResult:
    seeds: tuple[int, ...]
    per_seed: tuple[dict, ...]
    mean: dict
    stderr: dict


class RealizationError(ComputationError):
    def __init__(self, seed, cause):
        super().__init__(f"realization with seed {seed} failed: {cause}")
        self.seed = seed


def run_ensemble(config: ExperimentConfig, task: Callable[[ModelSpec], dict], threads: int = 1,
                 seed_offset: int = 0) -> EnsembleResult:
    """Run ``task`` on every disorder realization, seeds ``base_seed + offset + k``.

    Results are reduced in sorted-seed order, so the aggregate does not
    depend on completion order.  Any failing realization aborts the run.
    """
    start = config.seed0 + seed_offset
    seeds = [start + k for k in range(config.n_realizations)]

    def one(seed):
        try:
            return seed, task(config.model.with_seed(seed))
        except PurispecError as exc:
            raise RealizationError(seed, exc) from exc

    results = dict(parallel_map(one, seeds, threads))
    ordered = [results[s] for s in sorted(results)]
    keys = ordered[0].keys()
    n = len(ordered)
    mean, stderr = {}, {}
    for key in keys:
        stack = np.stack([np.asarray(r[key], float) for r in ordered])
        mean[key] = stack.mean(axis=0)
        stderr[key] = stack.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean[key])
    return EnsembleResult(tuple(sorted(results)), tuple(ordered), mean, stderr)


# --------------------------------------------------------------------------- helpers

def _time_grid(config, spectrum, T):
    return TimeGrid.for_spectrum(spectrum, T, config.dt)


def _energy_grid(config, lo, hi, T):
    return EnergyGrid.around(lo, hi, T, config.margin, config.points_per_width)


def _norm_bound(spec: ModelSpec) -> float:
    """Upper bound on ``|E|`` for every disorder draw (sum of term norms)."""
    L = spec.L
    bonds = (L - 1) * (abs(spec.j_z) / 4 + (abs(spec.j) / 2 if spec.kind == "xxz" else 0.0))
    return bonds + L * (abs(spec.h_x) + abs(spec.h_z) + spec.r_z / 2) / 2


def _dos(config, s, T, eg):
    if config.source == "closed":
        return dos_closed_form(s, eg, T)
    return dos_from_series(loschmidt_G(s, _time_grid(config, s, T)), eg)


def _A_r(config, s, A_n, T, eg):
    if config.source == "closed":
        return observable_Ar(s, A_n, eg, T)
    return observable_Ar_from_series(loschmidt_G_A(s, A_n, _time_grid(config, s, T)), eg)


def _needs_pairs(config):
    if config.model.L < 2:
        raise ConfigError("the nearest-neighbour observable needs L >= 2", None)


def _spectrum(spec):
    return diagonalize(build_hamiltonian(spec))


COARSE_UNITS = {"E": ENERGY, "value": "per J_z (rho_c, A_r) or dimensionless (A_c, rho_sigma)",
                "valid_flag": "1 valid, 0 masked"}


# --------------------------------------------------------------------------- commands

def cmd_dos(config, em, threads, seed_offset):
    spec = config.model.with_seed(config.seed0 + seed_offset)
    s = _spectrum(spec)
    write_energies_csv(em.path("spectrum.csv"), s)
    em.record("spectrum.csv", {"n": "index", "E_n": ENERGY}, spec)
    if config.source == "signal":
        G = loschmidt_G(s, _time_grid(config, s, max(config.times)))
        G.to_csv(em.path("G.csv"))
        em.record("G.csv", {"t": TIME, "re": "1", "im": "1"}, spec, dt=G.grid.dt)

    def one(T):
        eg = _energy_grid(config, s.energies[0], s.energies[-1], T)
        return T, _dos(config, s, T, eg)

    for T, rho in parallel_map(one, config.times, threads):
        rho.to_csv(em.path(f"dos_{_tag(T)}.csv"))
        em.record(f"dos_{_tag(T)}.csv", COARSE_UNITS, spec, T=T, kind="dos", source=config.source)
        em.table(f"phi_{_tag(T)}.csv", "E,phi", [rho.energies, integrated(rho)],
                 {"E": ENERGY, "phi": "states"}, spec=spec, T=T, kind="integrated_dos")
    return None


def cmd_thermo(config, em, threads, seed_offset):
    spec = config.model.with_seed(config.seed0 + seed_offset)
    s = _spectrum(spec)
    betas = np.linspace(config.beta_min, config.beta_max, config.n_beta)
    exact = canonical_specific_heat(s, betas)

    def one(T):
        eg = _energy_grid(config, s.energies[0], s.energies[-1], T)
        rho = _dos(config, s, T, eg)
        if config.bounds == "oracle":
            curve = specific_heat(rho, betas, oracle_bounds(s, T), mode="oracle")
        else:
            curve = specific_heat(rho, betas, signal_bounds(rho), mode="signal")
        return T, replace(curve, exact=exact)

    for T, curve in parallel_map(one, config.times, threads):
        name = f"specific_heat_{_tag(T)}.csv"
        curve.to_csv(em.path(name))
        em.record(name, {"beta": "1/J_z", "value": "k_B", "valid_flag": "1 valid", "exact": "k_B"},
                  spec, T=T, kind="specific_heat", bounds=config.bounds, source=config.source)


def cmd_observable(config, em, threads, seed_offset):
    _needs_pairs(config)
    spec = config.model.with_seed(config.seed0 + seed_offset)
    s = _spectrum(spec)
    A_n = eigen_expectations(s, build_observable_zz(spec.L))
    em.table("eigen_An.csv", "n,E_n,A_n", [np.arange(s.dim), s.energies, A_n],
             {"n": "index", "E_n": ENERGY, "A_n": "1"}, ["%d", "%.17g", "%.17g"], spec, observable="zz")

    def one(T):
        eg = _energy_grid(config, s.energies[0], s.energies[-1], T)
        rho = _dos(config, s, T, eg)
        A_r = _A_r(config, s, A_n, T, eg)
        return T, A_r, observable_Ac(A_r, rho)

    for T, A_r, A_c in parallel_map(one, config.times, threads):
        for kind, cg in (("Ar", A_r), ("Ac", A_c)):
            name = f"observable_{kind}_{_tag(T)}.csv"
            cg.to_csv(em.path(name))
            em.record(name, COARSE_UNITS, spec, T=T, kind=cg.kind, observable="zz", source=config.source)


def cmd_eth(config, em, threads, seed_offset):
    _needs_pairs(config)
    spec = config.model.with_seed(config.seed0 + seed_offset)
    s = _spectrum(spec)
    A_n = eigen_expectations(s, build_observable_zz(spec.L))
    window = (config.e_minus, config.e_plus)
    t_sc = config.t_sc if config.t_sc is not None else choose_Tsc(s, window)
    times = [T for T in config.times if T > t_sc]
    if not times:
        raise ConfigError(f"[times] T needs values above t_sc = {t_sc:g}")
    eg = _energy_grid(config, s.energies[0], s.energies[-1], max(times))
    rho_sc = _dos(config, s, t_sc, eg)
    A_c = observable_Ac(_A_r(config, s, A_n, t_sc, eg), rho_sc)
    exact = sigma_exact(s, A_n, A_c, EthWindow(*window, t_sc))

    def one(T):
        rho = _dos(config, s, T, eg)
        A_r = _A_r(config, s, A_n, T, eg)
        w = EthWindow(*window, t_sc, T)
        return sigma_signal(A_r, A_c, rho, rho_sc, w), sigma_signal(A_r, A_c, rho, rho_sc, w, squared=True)

    rows = parallel_map(one, times, threads)
    em.table("eth.csv", "T,sigma_signal,sigma_exact_ref",
             [times, [r[0] for r in rows], [exact] * len(times)],
             {"T": TIME, "sigma_signal": "1", "sigma_exact_ref": "1"}, spec=spec,
             t_sc=t_sc, window=list(window), observable="zz", source=config.source,
             note="sigma_signal is nan where the signed estimate is negative; see sigma_squared")
    em.table("eth_squared.csv", "T,sigma_squared", [times, [r[1] for r in rows]],
             {"T": TIME, "sigma_squared": "1"}, spec=spec, t_sc=t_sc, window=list(window))


def _fock_task(config, state):
    bound = _norm_bound(config.model)

    def task(spec):
        s = _spectrum(spec)
        out = {}
        for T in config.times:
            eg = _energy_grid(config, -bound, bound, T)
            if config.source == "closed":
                rho = fock_distribution(s, weights_matrix(s), state, eg, T)
            else:
                rho = fock_distribution_from_series(loschmidt_G_sigma(s, state, _time_grid(config, s, T)), eg)
            out[_tag(T)] = rho.values
            out[f"peak_{_tag(T)}"] = np.max(rho.values)
            out[f"E_{_tag(T)}"] = eg.energies
        return out

    return task


def cmd_fock(config, em, threads, seed_offset):
    state = config.fock_state(config.model.L)
    result = run_ensemble(config, _fock_task(config, state), threads, seed_offset)
    meta = dict(sigma=str(state), sigma_index=state.index, source=config.source)
    for seed, res in zip(result.seeds, result.per_seed):
        spec = config.model.with_seed(seed)
        for T in config.times:
            name = f"realizations/seed_{seed}/fock_{_tag(T)}.csv"
            E = res[f"E_{_tag(T)}"]
            em.table(name, "E,value,valid_flag", [E, res[_tag(T)], np.ones(E.size, int)],
                     COARSE_UNITS, ["%.17g", "%.17g", "%d"], spec, T=T, kind="fock_sigma", **meta)
    for T in config.times:
        tag = _tag(T)
        em.table(f"fock_{tag}_mean.csv", "E,mean,stderr",
                 [result.mean[f"E_{tag}"], result.mean[tag], result.stderr[tag]],
                 {"E": ENERGY, "mean": "1", "stderr": "1"}, T=T, kind="fock_sigma",
                 seeds=list(result.seeds), **meta)
    seeds = np.repeat(result.seeds, len(config.times))
    Ts = np.tile(config.times, len(result.seeds))
    peaks = [res[f"peak_{_tag(T)}"] for res in result.per_seed for T in config.times]
    em.table("fock_peaks.csv", "seed,T,peak_weight", [seeds, Ts, peaks],
             {"seed": "index", "T": TIME, "peak_weight": "1"}, ["%d", "%.17g", "%.17g"], **meta)
    return list(result.seeds)


def _pr_task(spec):
    s = _spectrum(spec)
    M = weights_matrix(s)
    return {"pr_m": participation_ratio_M(M), "pr_r": participation_ratio_R(uhlmann_R(M, s))}


def cmd_pr(config, em, threads, seed_offset):
    result = run_ensemble(config, _pr_task, threads, seed_offset)
    units = {"sigma_index": "index", "pr_m": "1", "pr_r": "1"}
    for seed, res in zip(result.seeds, result.per_seed):
        index = np.arange(res["pr_m"].size)
        em.table(f"realizations/seed_{seed}/pr.csv", "sigma_index,pr_m,pr_r", [index, res["pr_m"], res["pr_r"]],
                 units, ["%d", "%.17g", "%.17g"], config.model.with_seed(seed), pr_r_convention="normalized")
    index = np.arange(result.mean["pr_m"].size)
    em.table("pr_mean.csv", "sigma_index,pr_m,pr_m_stderr,pr_r,pr_r_stderr",
             [index, result.mean["pr_m"], result.stderr["pr_m"], result.mean["pr_r"], result.stderr["pr_r"]],
             {**units, "pr_m_stderr": "1", "pr_r_stderr": "1"}, ["%d"] + ["%.17g"] * 4,
             seeds=list(result.seeds), pr_r_convention="normalized")
    return list(result.seeds)


def _write_matrix(path: Path, A: np.ndarray) -> None:
    # little-endian float64, column-major
    path.write_bytes(np.asarray(A, "<f8").tobytes(order="F"))


def cmd_uhlmann(config, em, threads, seed_offset):
    spec = config.model.with_seed(config.seed0 + seed_offset)
    s = _spectrum(spec)
    M = weights_matrix(s)
    layout = {"layout": "float64 little-endian, column-major", "shape": [s.dim, s.dim]}
    G = gamma_avg(M, s)
    R = uhlmann_R(M, s)
    for name, A, T in [("gamma_avg_inf.bin", G, None), ("R_inf.bin", R, None)]:
        _write_matrix(em.path(name), A)
        em.record(name, {"entries": "1"}, spec, T="inf", **layout)

    def one(T):
        return T, uhlmann_R(M, s, T)

    for T, R_T in parallel_map(one, config.times, threads):
        _write_matrix(em.path(f"R_{_tag(T)}.bin"), R_T)
        em.record(f"R_{_tag(T)}.bin", {"entries": "1"}, spec, T=T, **layout)
    index = np.arange(s.dim)
    em.table("pr_r.csv", "sigma_index,pr_r_normalized,pr_r_raw",
             [index, participation_ratio_R(R), participation_ratio_R(R, "raw")],
             {"sigma_index": "index", "pr_r_normalized": "1", "pr_r_raw": "1"}, ["%d", "%.17g", "%.17g"], spec)
    summary = {
        "polar_max_abs_diff": float(np.max(np.abs(R - polar_factor(M)))) if not s.has_degeneracies else None,
        "min_eigenvalue_gamma_inf": float(np.linalg.eigvalsh(G)[0]),
        "trace_D_gamma_inf": float(np.trace(s.dim * G)),
        "degenerate": bool(s.has_degeneracies),
    }
    path = em.path("uhlmann_summary.json")
    path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    em.files.append(path)


def cmd_entropy(config, em, threads, seed_offset):
    if config.model.L > MAX_ENTROPY_SITES:
        raise ConfigError(f"entropy runs are limited to L <= {MAX_ENTROPY_SITES}")
    state = config.fock_state(config.model.L)
    times = np.linspace(0.0, config.t_max, config.n_times)

    def task(spec):
        s = _spectrum(spec)
        psi0 = fock_vector(state.index, s.dim)
        return {"S": np.array([half_chain_entropy(evolve_state(s, psi0, t), spec.L) for t in times])}

    result = run_ensemble(config, task, threads, seed_offset)
    for seed, res in zip(result.seeds, result.per_seed):
        em.table(f"realizations/seed_{seed}/entropy.csv", "t,S", [times, res["S"]],
                 {"t": TIME, "S": "nats"}, spec=config.model.with_seed(seed), sigma=str(state))
    em.table("entropy_mean.csv", "t,mean,stderr", [times, result.mean["S"], result.stderr["S"]],
             {"t": TIME, "mean": "nats", "stderr": "nats"}, seeds=list(result.seeds), sigma=str(state))
    return list(result.seeds)


def _verify_checks(config, seed_offset):
    """(name, value, tolerance) for every oracle equivalence."""
    rng = np.random.default_rng(config.seed0 + seed_offset)
    base = config.model
    specs = [base if base.L <= 6 else replace(base, L=6)]
    for _ in range(config.n_specs):
        specs.append(ModelSpec(
            kind=str(rng.choice(["ising", "xxz"])), L=int(rng.integers(1, 7)),
            j_z=float(rng.uniform(0.5, 1.5)), j=float(rng.uniform(-1, 1)),
            h_x=float(rng.uniform(-1, 1)), h_z=float(rng.uniform(-0.5, 0.5)),
            r_z=float(rng.uniform(0, 3)), seed=int(rng.integers(0, 2**63))))
    grid = TimeGrid(0.05, 200)
    worst = {"triangle": 0.0, "interferometer": 0.0, "bistochastic": 0.0, "polar": 0.0}
    for spec in specs:
        H = build_hamiltonian(spec)
        s = diagonalize(H)
        G = loschmidt_G(s, grid).values
        worst["triangle"] = max(worst["triangle"],
                                np.max(np.abs(purified_G(H, grid).values - G)),
                                np.max(np.abs(loschmidt_G_sigma_all(s, grid).mean(axis=0) - G)))
        psi = random_state(s.dim, rng)
        t = float(rng.uniform(0, 50))
        overlap = np.vdot(psi, evolve_state(s, psi, t))
        x, y = probe_interferometer(s, psi, t)
        worst["interferometer"] = max(worst["interferometer"], abs(x - overlap.real), abs(y - overlap.imag))
        M = weights_matrix(s)
        worst["bistochastic"] = max(worst["bistochastic"], np.max(np.abs(M.sum(0) - 1)), np.max(np.abs(M.sum(1) - 1)))
        if not s.has_degeneracies:
            worst["polar"] = max(worst["polar"], np.max(np.abs(uhlmann_R(M, s) - polar_factor(M))))
    checks = [("oracle_triangle", worst["triangle"], 1e-10),
              ("interferometer", worst["interferometer"], 1e-12),
              ("m_bistochastic", worst["bistochastic"], 1e-10),
              ("uhlmann_polar", worst["polar"], 1e-8)]

    s = diagonalize(build_hamiltonian(specs[0]))
    T = 5.0
    eg = EnergyGrid.around(s.energies[0], s.energies[-1], T)
    quad = dos_from_series(loschmidt_G(s, TimeGrid.up_to(T, min(1e-3, max_time_step(s.bandwidth)))), eg)
    checks.append(("signal_vs_closed_form", np.max(np.abs(quad.values - dos_closed_form(s, eg, T).values)),
                   1e-6 * T / math.pi * s.dim))
    est = stochastic_trace_G(s, grid, config.samples, seed=config.seed0 + seed_offset)
    exact = loschmidt_G(s, grid).values
    ratio = np.max(np.abs(est.values - exact)[1:] / np.maximum(est.stderr[1:], 1e-300)) if s.dim > 1 else 0.0
    checks.append(("stochastic_trace_in_stderr", ratio, 5.0))
    return [(name, float(value), tol) for name, value, tol in checks]


def cmd_verify(config, em, threads, seed_offset):
    checks = _verify_checks(config, seed_offset)
    names = [c[0] for c in checks]
    values = [c[1] for c in checks]
    tols = [c[2] for c in checks]
    passed = [int(v <= t) for v, t in zip(values, tols)]
    em.table("verify.csv", "check,value,tolerance,passed", [names, values, tols, passed],
             {"value": "max abs deviation (stderr multiples for stochastic)", "tolerance": "same"},
             ["%s", "%.17g", "%.17g", "%d"])
    failed = [n for n, ok in zip(names, passed) if not ok]
    if failed:
        raise ContractFailure(f"verification failed: {', '.join(failed)}")


COMMANDS = {
    "dos": cmd_dos,
    "thermo": cmd_thermo,
    "observable": cmd_observable,
    "eth": cmd_eth,
    "fock": cmd_fock,
    "pr": cmd_pr,
    "uhlmann": cmd_uhlmann,
    "entropy": cmd_entropy,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="purispec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads over (seed, T) tasks")
        p.add_argument("--seed-offset", type=int, default=0, help="added to the base seed")
    return parser


def run(command: str, config: ExperimentConfig, out, threads: int = 1, seed_offset: int = 0) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    em = Emitter(out, config)
    start = time.perf_counter()
    # one BLAS thread per task keeps every result independent of --threads
    with threadpool_limits(limits=1):
        seeds = COMMANDS[command](config, em, max(1, threads), seed_offset)
    return em.manifest(command, round(time.perf_counter() - start, 3), seeds)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        config = load_config(args.config)
        run(args.command, config, args.out, args.threads, args.seed_offset)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PurispecError as exc:
        print(f"numerical contract failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
