"""Config-driven batch driver: single-point runs, PEC scans, and reports.

Config files are flat "key = value" text with dotted sections; every key can
be overridden by an environment variable MRPSVQE_<KEY> with dots replaced by
underscores (e.g. MRPSVQE_ADAPT_POOL). Artifacts are deterministic for fixed
seeds; timestamps only ever go to run.log.
"""

from __future__ import annotations

import argparse
import glob as globmod
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .adapt import adapt_vqe, build_pool, uccgsd_vqe
from .hea import (
    HeaConfig,
    OptimizerConfig,
    assemble_mrps,
    build_hea,
    fragment_vqe,
)
from .integrals import (
    Fragment,
    IntegralSet,
    Partition,
    ValidationError,
    embed_fragment,
    hf_reference,
    parse_fcidump,
    rotate_orbitals,
)
from .oracle import (
    exact_ground_state,
    fidelity,
    natural_occupations,
    npe,
    one_rdm,
    shannon_entropy,
)
from .pauli import hamiltonian_to_pauli
from .simulator import count_cnots, expectation, prepare_basis

HARTREE_TO_KCAL = 627.509474

METHODS = ("exact", "fragment-vqe", "mrps", "mrps-adapt", "hf-adapt",
           "mrps-uccgsd", "hf-uccgsd", "scan")

ENV_PREFIX = "MRPSVQE_"


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {ln}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.split("#")[0].strip()
    return out


def _env_overrides() -> dict[str, str]:
    out = {}
    for name, value in os.environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower().replace("_", ".")
            out[key] = value
    return out


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


@dataclass(frozen=True)
class RunConfig:
    method: str
    integrals: tuple[str, ...]
    out_dir: str
    rotation: str | None = None
    fragments: str | None = None       # "0 2|1 3" (else sidecar)
    electrons: str | None = None       # "2|2"
    embed_occ: str = "all_occ"
    embed_half: bool = True
    embed_occupied: tuple[int, ...] | None = None
    number_penalty: float = 0.0
    hea: HeaConfig = field(default_factory=HeaConfig)
    opt: OptimizerConfig = field(default_factory=OptimizerConfig)
    pool_kind: str = "qubit_inter"
    grad_threshold: float = 1e-8
    max_depth: int = 200
    scan_method: str = "mrps-adapt"
    compare_exact: bool = True
    jobs: int = 1

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "RunConfig":
        def get(key, default=None):
            return raw.get(key, default)

        def get_float(key, default):
            value = get(key)
            if value is None:
                return default
            try:
                return float(value)
            except ValueError:
                raise ConfigError(f"{key}: not a number: {value!r}") from None

        def get_int(key, default):
            value = get(key)
            if value is None:
                return default
            try:
                return int(value)
            except ValueError:
                raise ConfigError(f"{key}: not an integer: {value!r}") from None

        def get_bool(key, default):
            value = get(key)
            if value is None:
                return default
            try:
                return _BOOL[value.lower()]
            except KeyError:
                raise ConfigError(f"{key}: not a boolean: {value!r}") from None

        method = get("method")
        if method is None:
            raise ConfigError("method: missing")
        if method not in METHODS:
            raise ConfigError(f"method: unknown method {method!r}")

        if method == "scan":
            spec = get("scan.fixtures")
            if not spec:
                raise ConfigError("scan.fixtures: missing for method=scan")
            paths: list[str] = []
            for chunk in spec.split(","):
                chunk = chunk.strip()
                hits = sorted(globmod.glob(chunk)) if any(c in chunk for c in "*?[") \
                    else [chunk]
                if not hits:
                    raise ConfigError(f"scan.fixtures: no match for {chunk!r}")
                paths.extend(hits)
        else:
            single = get("integrals")
            if not single:
                raise ConfigError("integrals: missing")
            paths = [single]
        for p in paths:
            if not Path(p).exists():
                raise ConfigError(f"integrals: no such file {p!r}")

        rotation = get("rotation")
        if rotation and not Path(rotation).exists():
            raise ConfigError(f"rotation: no such file {rotation!r}")

        out_dir = get("out")
        if not out_dir:
            raise ConfigError("out: missing output directory")

        occupied = None
        if get("embed.occupied"):
            occupied = tuple(int(x) for x in get("embed.occupied").replace(",", " ").split())

        embed_occ = get("embed.occ", "all_occ")
        if embed_occ not in ("all_occ", "env_occ"):
            raise ConfigError(f"embed.occ: must be all_occ or env_occ, got {embed_occ!r}")

        gates = tuple(g.strip() for g in get("hea.gates", "ry,rz").split(",") if g.strip())
        try:
            hea = HeaConfig(layers=get_int("hea.layers", 6),
                            entangler=get("hea.entangler", "linear"),
                            gates=gates,
                            final_rotations=get_bool("hea.final_rotations", True))
            opt = OptimizerConfig(gtol=get_float("opt.gtol", 1e-9),
                                  ftol=get_float("opt.ftol", 1e-13),
                                  max_evals=get_int("opt.maxeval", 10000),
                                  restarts=get_int("opt.restarts", 10),
                                  seed=get_int("seed", get_int("opt.seed", 0)))
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None

        pool_kind = get("adapt.pool", "qubit_inter")
        if pool_kind not in ("qubit_inter", "fermionic_gsd_inter", "fermionic_gsd_full"):
            raise ConfigError(f"adapt.pool: unknown pool {pool_kind!r}")

        scan_method = get("scan.method", "mrps-adapt")
        if scan_method not in METHODS or scan_method == "scan":
            raise ConfigError(f"scan.method: invalid {scan_method!r}")

        return cls(method=method, integrals=tuple(paths), out_dir=out_dir,
                   rotation=rotation, fragments=get("partition.fragments"),
                   electrons=get("partition.electrons"), embed_occ=embed_occ,
                   embed_half=get_bool("embed.half", True),
                   embed_occupied=occupied,
                   number_penalty=get_float("fragment.number_penalty", 0.0),
                   hea=hea, opt=opt, pool_kind=pool_kind,
                   grad_threshold=get_float("adapt.grad_threshold", 1e-8),
                   max_depth=get_int("adapt.max_depth", 200),
                   scan_method=scan_method,
                   compare_exact=get_bool("exact.compare", True),
                   jobs=get_int("jobs", 1))


def read_meta(path: str) -> dict[str, str]:
    meta_path = Path(path).with_suffix(".meta")
    if not meta_path.exists():
        return {}
    return parse_config_text(meta_path.read_text())


def load_problem(cfg: RunConfig, path: str) -> tuple[IntegralSet, Partition, dict]:
    ints = parse_fcidump(Path(path).read_text())
    if cfg.rotation:
        U = np.loadtxt(cfg.rotation)
        ints = rotate_orbitals(ints, np.atleast_2d(U))
    meta = read_meta(path)
    fragments = cfg.fragments or meta.get("partition.fragments")
    electrons = cfg.electrons or meta.get("partition.electrons")
    if not fragments or not electrons:
        raise ConfigError("partition.fragments: not in config and no sidecar for "
                          f"{path}")
    orb_groups = [tuple(int(x) for x in blk.split()) for blk in fragments.split("|")]
    elec_groups = [int(x) for x in electrons.split("|")]
    if len(orb_groups) != len(elec_groups):
        raise ConfigError("partition.electrons: group count mismatch")
    part = Partition(tuple(Fragment(o, e) for o, e in zip(orb_groups, elec_groups)))
    part.validate_against(ints)
    return ints, part, meta


@dataclass
class PointResult:
    tag: str
    method: str
    energy: float
    e_exact: float | None
    fidelity_hf: float | None
    fidelity_mrps: float | None
    entropy: float | None
    cnots: int
    converged: bool
    fragment_records: tuple[str, ...] = ()
    trajectory: str | None = None
    restart_energies: tuple[float, ...] = ()

    @property
    def error(self) -> float | None:
        if self.e_exact is None:
            return None
        return self.energy - self.e_exact


def _fragment_record(state, cfg: RunConfig) -> str:
    lines = [f"fragment_id = {state.fragment_id}",
             f"layers = {state.layers}",
             f"entangler = {state.entangler}",
             f"best_energy = {state.energy:.15g}",
             "restart_energies = " + ",".join(f"{e:.15g}" for e in state.restart_energies),
             "params = " + ",".join(f"{p:.17g}" for p in state.params)]
    return "\n".join(lines) + "\n"


def run_point(cfg: RunConfig, path: str, method: str) -> PointResult:
    """Execute one method on one fixture; all heavy lifting lives here."""
    ints, part, meta = load_problem(cfg, path)
    tag = meta.get("tag", Path(path).stem)
    H = hamiltonian_to_pauli(ints, part)

    e_exact = None
    exact_state = None
    entropy = None
    if cfg.compare_exact or method == "exact":
        spectrum = exact_ground_state(H)
        e_exact = spectrum.ground_energy
        exact_state = spectrum.ground_state
        occ = natural_occupations(one_rdm(exact_state, ints.n_orb, part))
        entropy = shannon_entropy(occ)

    fidelity_hf = None
    if exact_state is not None:
        hf_state = prepare_basis(hf_reference(ints, part))
        fidelity_hf = fidelity(exact_state, hf_state)

    if method == "exact":
        return PointResult(tag=tag, method=method, energy=e_exact,
                           e_exact=e_exact, fidelity_hf=fidelity_hf,
                           fidelity_mrps=None, entropy=entropy, cnots=0,
                           converged=True)

    needs_mrps = method in ("fragment-vqe", "mrps", "mrps-adapt", "mrps-uccgsd")
    frag_states = ()
    mrps_state = None
    hea_cnots = 0
    fidelity_mrps = None
    if needs_mrps or method in ("hf-adapt", "hf-uccgsd"):
        # fragment states are always prepared so the scan CSV can report the
        # MRPS fidelity column for any method
        states = []
        for fid in range(part.n_fragments):
            prob = embed_fragment(ints, part, fid, occ_mode=cfg.embed_occ,
                                  half_prefactor=cfg.embed_half,
                                  occupied=cfg.embed_occupied)
            states.append(fragment_vqe(prob, cfg.hea, cfg.opt,
                                       number_penalty=cfg.number_penalty))
            hea_cnots += count_cnots(build_hea(prob.n_qubits, cfg.hea))
        frag_states = tuple(states)
        mrps_state = assemble_mrps(frag_states, part)
        if exact_state is not None:
            fidelity_mrps = fidelity(exact_state, mrps_state)

    records = tuple(_fragment_record(s, cfg) for s in frag_states)

    if method == "fragment-vqe":
        return PointResult(tag=tag, method=method,
                           energy=float(frag_states[0].energy),
                           e_exact=None, fidelity_hf=fidelity_hf,
                           fidelity_mrps=fidelity_mrps, entropy=entropy,
                           cnots=hea_cnots, converged=True,
                           fragment_records=records)

    if method == "mrps":
        energy = expectation(mrps_state, H)
        return PointResult(tag=tag, method=method, energy=energy,
                           e_exact=e_exact, fidelity_hf=fidelity_hf,
                           fidelity_mrps=fidelity_mrps, entropy=entropy,
                           cnots=hea_cnots, converged=True,
                           fragment_records=records)

    reference = mrps_state if method.startswith("mrps") else \
        prepare_basis(hf_reference(ints, part))
    base_cnots = hea_cnots if method.startswith("mrps") else 0

    if method.endswith("adapt"):
        pool = build_pool(part, H.n_qubits, cfg.pool_kind)
        result = adapt_vqe(H, reference, pool, grad_threshold=cfg.grad_threshold,
                           max_depth=cfg.max_depth, opt=cfg.opt)
        converged = result.reason != "optimizer_failure"
    else:
        result = uccgsd_vqe(H, reference, part, cfg.opt)
        converged = True

    return PointResult(tag=tag, method=method, energy=result.final_energy,
                       e_exact=e_exact, fidelity_hf=fidelity_hf,
                       fidelity_mrps=fidelity_mrps, entropy=entropy,
                       cnots=base_cnots + result.cnots, converged=converged,
                       fragment_records=records, trajectory=result.table(),
                       restart_energies=result.restart_energies)


def _fmt(value, digits=12) -> str:
    if value is None:
        return "nan"
    return f"{value:.{digits}e}"


def write_point_artifacts(out: Path, cfg: RunConfig, point: PointResult,
                          wall_time: float):
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        f"tool = mrpsvqe {__version__}",
        f"method = {point.method}",
        f"tag = {point.tag}",
        f"seed = {cfg.opt.seed}",
        f"energy = {_fmt(point.energy)}",
        f"e_exact = {_fmt(point.e_exact)}",
        f"error = {_fmt(point.error)}",
        f"fidelity_hf = {_fmt(point.fidelity_hf)}",
        f"fidelity_mrps = {_fmt(point.fidelity_mrps)}",
        f"entropy = {_fmt(point.entropy)}",
        f"cnots = {point.cnots}",
        f"converged = {str(point.converged).lower()}",
    ]
    if point.restart_energies:
        lines.append("restart_energies = "
                     + ",".join(f"{e:.15g}" for e in point.restart_energies))
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    with open(out / "run.log", "a") as log:
        log.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {point.method} "
                  f"{point.tag} wall={wall_time:.3f}s\n")
    if point.fragment_records:
        frag_dir = out / "fragments"
        frag_dir.mkdir(exist_ok=True)
        for k, record in enumerate(point.fragment_records):
            (frag_dir / f"fragment_{k}.txt").write_text(record)
    if point.trajectory:
        (out / "adapt.txt").write_text(point.trajectory)


CSV_HEADER = ("geometry_tag,E_method,E_exact,error,fidelity_HF,fidelity_MRPS,"
              "entropy,cumulative_cnots")


def _scan_one(args):
    cfg, path = args
    return run_point(cfg, path, cfg.scan_method)


def run_scan(cfg: RunConfig, out: Path) -> tuple[list[PointResult], str]:
    tasks = [(cfg, path) for path in cfg.integrals]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            points = list(pool.map(_scan_one, tasks))
    else:
        points = [_scan_one(t) for t in tasks]
    rows = [CSV_HEADER]
    for p in points:
        rows.append(",".join([p.tag, _fmt(p.energy), _fmt(p.e_exact),
                              _fmt(p.error), _fmt(p.fidelity_hf),
                              _fmt(p.fidelity_mrps), _fmt(p.entropy),
                              str(p.cnots)]))
    errors = [p.error for p in points if p.error is not None]
    if len(errors) >= 2:
        rows.append(f"# npe = {_fmt(npe(errors))}")
    csv_text = "\n".join(rows) + "\n"
    (out / "scan.csv").write_text(csv_text)
    _plot_scan(points, out / "scan.png")
    return points, csv_text


def _plot_scan(points, png_path: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    tags = [p.tag for p in points]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    energies = [p.energy for p in points]
    ax1.plot(range(len(points)), energies, "o-", label="method")
    if all(p.e_exact is not None for p in points):
        ax1.plot(range(len(points)), [p.e_exact for p in points], "k--",
                 label="exact")
    ax1.set_ylabel("energy (Hartree)")
    ax1.legend()
    errs = [abs(p.error) if p.error is not None else np.nan for p in points]
    ax2.semilogy(range(len(points)), errs, "s-", color="firebrick")
    ax2.axhline(1.6e-3, color="gray", linestyle=":", label="chemical accuracy")
    ax2.set_ylabel("|error| (Hartree)")
    ax2.set_xticks(range(len(points)))
    ax2.set_xticklabels(tags, rotation=45, ha="right", fontsize=7)
    ax2.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        if cfg.method == "scan":
            points, _ = run_scan(cfg, out)
            for p in points:
                write_point_artifacts(out / f"point_{p.tag}", cfg, p, 0.0)
            bad = [p.tag for p in points if not p.converged]
            if bad:
                print(f"non-converged points: {', '.join(bad)}", file=sys.stderr)
                return 3
            return 0
        point = run_point(cfg, cfg.integrals[0], cfg.method)
        write_point_artifacts(out, cfg, point, time.perf_counter() - start)
        if not point.converged:
            print("run flagged non-converged; partial artifacts kept",
                  file=sys.stderr)
            return 3
        return 0
    except (ValidationError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _read_summary(path: Path) -> dict[str, str]:
    return parse_config_text(path.read_text())


def report(paths: list[str], out_dir: str) -> str:
    """Comparison table over runs (summary dirs/files or scan.csv files),
    with pairwise barriers in kcal/mol."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            p = p / "summary.txt"
        if not p.exists():
            raise FileNotFoundError(f"no result file at {p}")
        if p.suffix == ".csv":
            for line in p.read_text().splitlines()[1:]:
                if line.startswith("#") or not line.strip():
                    continue
                tag, e, e_exact, err, *_rest, cnots = line.split(",")
                rows.append((tag, float(e), float(e_exact), float(err),
                             int(cnots)))
        else:
            s = _read_summary(p)
            rows.append((s.get("tag", p.parent.name), float(s["energy"]),
                         float(s["e_exact"]), float(s["error"]),
                         int(s["cnots"])))

    lines = [f"# mrpsvqe report; 1 Hartree = {HARTREE_TO_KCAL} kcal/mol",
             f"{'label':24s} {'energy':>18s} {'exact':>18s} {'error':>12s} {'cnots':>7s}"]
    for tag, e, ex, err, cn in rows:
        lines.append(f"{tag:24s} {e:18.9f} {ex:18.9f} {err:12.3e} {cn:7d}")
    if len(rows) >= 2:
        lines.append("")
        lines.append("barriers (row - column, kcal/mol):")
        header = " " * 24 + "".join(f"{tag[:14]:>15s}" for tag, *_ in rows)
        lines.append(header)
        for tag_i, e_i, *_ in rows:
            cells = "".join(f"{(e_i - e_j) * HARTREE_TO_KCAL:15.2f}"
                            for _, e_j, *_ in rows)
            lines.append(f"{tag_i:24s}{cells}")
    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text)
    _plot_report(rows, out / "report.png")
    return text


def _plot_report(rows, png_path: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    tags = [r[0] for r in rows]
    errs = [abs(r[3]) for r in rows]
    ax.bar(range(len(rows)), errs, color="steelblue")
    if any(e > 0 for e in errs):
        ax.set_yscale("log")
    ax.axhline(1.6e-3, color="gray", linestyle=":", label="chemical accuracy")
    ax.set_ylabel("|error| (Hartree)")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(tags, rotation=45, ha="right", fontsize=7)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def build_config(args) -> RunConfig:
    raw: dict[str, str] = {}
    if args.config:
        raw.update(parse_config_text(Path(args.config).read_text()))
    raw.update(_env_overrides())
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    if args.out is not None:
        raw["out"] = args.out
    if args.jobs is not None:
        raw["jobs"] = str(args.jobs)
    if args.command != "run":
        mapping = {"fragment-vqe": "fragment-vqe", "mrps": "mrps",
                   "exact": "exact", "scan": "scan"}
        if args.command in mapping:
            raw["method"] = mapping[args.command]
        elif args.command == "adapt":
            ref = raw.get("reference", "mrps")
            raw["method"] = f"{ref}-adapt"
        elif args.command == "uccgsd":
            ref = raw.get("reference", "mrps")
            raw["method"] = f"{ref}-uccgsd"
    return RunConfig.from_mapping(raw)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mrpsvqe",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"mrpsvqe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run_like = ("fragment-vqe", "mrps", "adapt", "uccgsd", "exact", "scan", "run")
    for name in run_like:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)
    p_report = sub.add_parser("report")
    p_report.add_argument("results", nargs="+")
    p_report.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "report":
        try:
            text = report(args.results, args.out)
        except (FileNotFoundError, KeyError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(text, end="")
        return 0
    try:
        cfg = build_config(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
