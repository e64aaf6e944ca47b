"""Config parsing, run artifacts, scan CSV schema, report tables."""

import os
from pathlib import Path

import numpy as np
import pytest

from mrpsvqe.cli import (
    ConfigError,
    RunConfig,
    build_config,
    main,
    parse_config_text,
    report,
    run,
    run_point,
)
from mrpsvqe.integrals import (
    Fragment,
    IntegralSet,
    Partition,
    parse_fcidump,
    serialize_fcidump,
)
from mrpsvqe.oracle import exact_ground_state
from mrpsvqe.pauli import hamiltonian_to_pauli


def synthetic_ints(seed=0):
    rng = np.random.default_rng(seed)
    h = np.diag([-1.5, 1.0])
    h = h + 0.05 * rng.standard_normal((2, 2))
    h = (h + h.T) / 2
    g = np.zeros((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            g[i, i, j, j] = 0.3 + 0.1 * rng.random()
    from mrpsvqe.integrals import exact_symmetrize
    g = exact_symmetrize(g)
    return IntegralSet(n_orb=2, n_elec=2, ms2=0, core_energy=0.2, h=h, g=g)


def write_fixture(tmp_path: Path, name: str, seed=0) -> Path:
    ints = synthetic_ints(seed)
    path = tmp_path / f"{name}.fcidump"
    path.write_text(serialize_fcidump(ints))
    (tmp_path / f"{name}.meta").write_text(
        f"tag = {name}\npartition.fragments = 0|1\npartition.electrons = 2|0\n")
    return path


def base_config(tmp_path: Path, fixture: Path, method="exact", **extra):
    lines = [f"method = {method}",
             f"integrals = {fixture}",
             f"out = {tmp_path / 'out'}",
             "hea.layers = 2",
             "opt.restarts = 2",
             "opt.maxeval = 2000",
             "seed = 3"]
    for key, value in extra.items():
        lines.append(f"{key.replace('__', '.')} = {value}")
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("\n".join(lines) + "\n")
    return cfg_path


class TestConfigParsing:
    def test_flat_key_values_with_comments(self):
        raw = parse_config_text("# comment\nmethod = exact\nhea.layers = 4 # tail\n")
        assert raw == {"method": "exact", "hea.layers": "4"}

    def test_missing_method_is_field_error(self):
        with pytest.raises(ConfigError, match="method"):
            RunConfig.from_mapping({"integrals": "x", "out": "y"})

    def test_unknown_pool_is_field_error(self, tmp_path):
        fixture = write_fixture(tmp_path, "a")
        with pytest.raises(ConfigError, match="adapt.pool"):
            RunConfig.from_mapping({"method": "exact", "integrals": str(fixture),
                                    "out": "o", "adapt.pool": "bogus"})

    def test_missing_file_is_field_error(self):
        with pytest.raises(ConfigError, match="integrals"):
            RunConfig.from_mapping({"method": "exact", "integrals": "/nope",
                                    "out": "o"})

    def test_env_override(self, tmp_path, monkeypatch):
        fixture = write_fixture(tmp_path, "a")
        cfg_path = base_config(tmp_path, fixture, method="exact")
        monkeypatch.setenv("MRPSVQE_OPT_RESTARTS", "7")

        class Args:
            config = str(cfg_path)
            seed = None
            out = None
            jobs = None
            command = "run"

        cfg = build_config(Args)
        assert cfg.opt.restarts == 7


class TestRunMethods:
    def test_exact_summary_matches_oracle(self, tmp_path):
        fixture = write_fixture(tmp_path, "a")
        cfg_path = base_config(tmp_path, fixture, method="exact")
        assert main(["exact", "--config", str(cfg_path)]) == 0
        summary = parse_config_text((tmp_path / "out" / "summary.txt").read_text())
        ints = synthetic_ints()
        part = Partition((Fragment((0,), 2), Fragment((1,), 0)))
        expected = exact_ground_state(hamiltonian_to_pauli(ints, part)).ground_energy
        assert float(summary["energy"]) == pytest.approx(expected, abs=1e-10)
        assert summary["converged"] == "true"

    def test_mrps_equals_reference_expectation(self, tmp_path):
        fixture = write_fixture(tmp_path, "a")
        cfg = RunConfig.from_mapping(parse_config_text(
            base_config(tmp_path, fixture, method="mrps").read_text()))
        point = run_point(cfg, str(fixture), "mrps")
        # re-derive through the library: fragment VQE + kron + expectation
        from mrpsvqe.hea import HeaConfig, assemble_mrps, fragment_vqe
        from mrpsvqe.integrals import embed_fragment
        from mrpsvqe.simulator import expectation
        ints = synthetic_ints()
        part = Partition((Fragment((0,), 2), Fragment((1,), 0)))
        frags = [fragment_vqe(embed_fragment(ints, part, fid), cfg.hea, cfg.opt)
                 for fid in range(2)]
        state = assemble_mrps(frags, part)
        H = hamiltonian_to_pauli(ints, part)
        assert point.energy == pytest.approx(expectation(state, H), abs=1e-12)
        assert point.fidelity_mrps is not None

    def test_rotation_identity_is_noop(self, tmp_path):
        fixture = write_fixture(tmp_path, "a")
        rot = tmp_path / "identity.txt"
        np.savetxt(rot, np.eye(2))
        plain = base_config(tmp_path, fixture, method="exact")
        cfg_plain = RunConfig.from_mapping(parse_config_text(plain.read_text()))
        e_plain = run_point(cfg_plain, str(fixture), "exact").energy
        import dataclasses
        cfg_rot = dataclasses.replace(cfg_plain, rotation=str(rot))
        e_rot = run_point(cfg_rot, str(fixture), "exact").energy
        assert e_rot == pytest.approx(e_plain, abs=1e-9)

    def test_adapt_subcommand_uses_reference_key(self, tmp_path):
        fixture = write_fixture(tmp_path, "a")
        cfg_path = base_config(tmp_path, fixture, method="exact",
                               reference="hf", adapt__max_depth="3")

        class Args:
            config = str(cfg_path)
            seed = None
            out = None
            jobs = None
            command = "adapt"

        cfg = build_config(Args)
        assert cfg.method == "hf-adapt"

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.cfg"
        cfg_path.write_text("method = bogus\nout = x\n")
        assert main(["run", "--config", str(cfg_path)]) == 2
        assert "method" in capsys.readouterr().err


class TestScan:
    def test_csv_schema_and_npe_footer(self, tmp_path):
        fixtures = [write_fixture(tmp_path, f"p{k}", seed=k) for k in range(3)]
        cfg_path = tmp_path / "scan.cfg"
        cfg_path.write_text("\n".join([
            "method = scan",
            f"scan.fixtures = {tmp_path}/p*.fcidump",
            "scan.method = mrps",
            f"out = {tmp_path / 'scan_out'}",
            "hea.layers = 2",
            "opt.restarts = 2",
            "seed = 5",
        ]) + "\n")
        assert main(["scan", "--config", str(cfg_path)]) == 0
        csv_text = (tmp_path / "scan_out" / "scan.csv").read_text()
        lines = csv_text.strip().splitlines()
        assert lines[0] == ("geometry_tag,E_method,E_exact,error,fidelity_HF,"
                            "fidelity_MRPS,entropy,cumulative_cnots")
        assert len([l for l in lines if not l.startswith("#")]) == 4
        assert lines[-1].startswith("# npe = ")
        assert (tmp_path / "scan_out" / "scan.png").exists()
        assert (tmp_path / "scan_out" / "point_p1" / "summary.txt").exists()

    def test_byte_reproducible(self, tmp_path):
        fixtures = [write_fixture(tmp_path, f"p{k}", seed=k) for k in range(2)]
        texts = []
        for attempt in range(2):
            out = tmp_path / f"rep{attempt}"
            cfg_path = tmp_path / f"scan{attempt}.cfg"
            cfg_path.write_text("\n".join([
                "method = scan",
                f"scan.fixtures = {tmp_path}/p0.fcidump, {tmp_path}/p1.fcidump",
                "scan.method = mrps",
                f"out = {out}",
                "hea.layers = 2",
                "opt.restarts = 2",
                "seed = 11",
            ]) + "\n")
            assert main(["scan", "--config", str(cfg_path)]) == 0
            texts.append((out / "scan.csv").read_bytes()
                         + (out / "point_p0" / "summary.txt").read_bytes())
        assert texts[0] == texts[1]


class TestReport:
    def _summary_dir(self, tmp_path, name, energy, exact):
        d = tmp_path / name
        d.mkdir()
        (d / "summary.txt").write_text(
            f"tag = {name}\nenergy = {energy:.12e}\ne_exact = {exact:.12e}\n"
            f"error = {energy - exact:.12e}\ncnots = 10\n")
        return d

    def test_barrier_in_kcal(self, tmp_path, capsys):
        a = self._summary_dir(tmp_path, "minimum", -153.650047, -153.650047)
        b = self._summary_dir(tmp_path, "transition", -153.642726, -153.642726)
        text = report([str(a), str(b)], str(tmp_path / "rep"))
        assert "627.509474" in text
        # barrier = (E_ts - E_min) * 627.509474 = 4.594 kcal/mol
        assert any("4.59" in line for line in text.splitlines())
        assert (tmp_path / "rep" / "report.png").exists()

    def test_identical_energies_zero_barrier(self, tmp_path):
        a = self._summary_dir(tmp_path, "x", -1.0, -1.0)
        b = self._summary_dir(tmp_path, "y", -1.0, -1.0)
        text = report([str(a), str(b)], str(tmp_path / "rep2"))
        row = [l for l in text.splitlines() if l.startswith("x ")][0]
        assert "0.00" in row

    def test_missing_file_errors(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            report([str(tmp_path / "nope")], str(tmp_path / "rep3"))


class TestParallelJobs:
    def test_jobs_two_matches_serial(self, tmp_path):
        for k in range(2):
            write_fixture(tmp_path, f"p{k}", seed=k)
        outputs = []
        for jobs in (1, 2):
            out = tmp_path / f"jobs{jobs}"
            cfg_path = tmp_path / f"jobs{jobs}.cfg"
            cfg_path.write_text("\n".join([
                "method = scan",
                f"scan.fixtures = {tmp_path}/p*.fcidump",
                "scan.method = mrps",
                f"out = {out}",
                "hea.layers = 2",
                "opt.restarts = 2",
                f"jobs = {jobs}",
                "seed = 4",
            ]) + "\n")
            assert main(["scan", "--config", str(cfg_path)]) == 0
            outputs.append((out / "scan.csv").read_bytes())
        assert outputs[0] == outputs[1]
