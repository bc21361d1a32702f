"""pqsim command line: synthesize | propagate | compare | reflect | dips.

Exit codes: 0 success, 1 comparison thresholds missed, 2 configuration
error, 3 feasibility flags raised (files are still written), 4 numerical
abort.  Outputs are plain CSV/JSON, deterministic byte-for-byte for a given
config.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    RunConfig,
    build_grid,
    build_packet,
    build_potential,
    build_scales,
    parse_config,
    resolve_time_steps,
    sweep_energies,
)
from .evolution import (
    NumericalAbortError,
    dump_snapshots,
    make_optical_spec,
    make_quantum_spec,
    propagate,
)
from .grids import write_json
from .optics import (
    effective_potential,
    energy_of_kappa,
    feasibility_report,
    index_profile,
    kappa_of_energy,
    to_optical,
    write_index_profile,
)
from .potentials import asymptotics, sample_potential
from .spectroscopy import (
    NotFullyScatteredError,
    compare_spectra,
    detect_dips,
    oracle_sweep,
    reflection_spectrum,
    write_dips_csv,
    write_spectrum_csv,
)

EXIT_OK = 0
EXIT_COMPARE_FAILED = 1
EXIT_CONFIG = 2
EXIT_FEASIBILITY = 3
EXIT_NUMERICAL = 4

FIELD_DIFF_THRESHOLD = 1e-8
SPECTRUM_LOG_RATIO_THRESHOLD = 0.02


def _resolve_threads(flag: Optional[int], cfg: RunConfig) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("PQSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"PQSIM_THREADS must be an integer, got {env!r}") from exc
    if cfg.run.threads > 0:
        return cfg.run.threads
    return os.cpu_count() or 1


def _out_dir(cfg: RunConfig, flag: Optional[str]) -> Path:
    out = Path(flag) if flag else Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


class _Problem:
    """Everything derived from a config that the commands share."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.model = build_potential(cfg)
        self.grid = build_grid(cfg)
        self.packet = build_packet(cfg, self.grid)
        self.scales = build_scales(cfg)
        self.v = sample_potential(self.model, self.grid)
        self.support, self.v_left, self.v_right = asymptotics(self.v, self.grid.x)
        self.mass = cfg.packet.mass
        a_coeff = 1.0 / (2.0 * self.mass)
        self.dt, self.n_steps = resolve_time_steps(cfg, a_coeff, self.v, self.grid)
        self.t_max = cfg.time.t_max

    def quantum_spec(self):
        return make_quantum_spec(
            self.mass, self.v, self.dt, self.n_steps, self.cfg.time.snapshot_stride
        )

    def optical_setup(self):
        setup = to_optical(self.grid, self.t_max, self.packet, self.scales)
        profile = index_profile(self.model, self.scales, setup.grid)
        v_eff = effective_potential(profile)
        dz = setup.z_max / self.n_steps
        if self.cfg.time.dz is not None:
            n_opt = round(setup.z_max / self.cfg.time.dz)
            if n_opt != self.n_steps:
                raise ConfigError(
                    f"[time] dz gives {n_opt} beam steps but the run has "
                    f"{self.n_steps}; step counts must match"
                )
            dz = setup.z_max / n_opt
        spec = make_optical_spec(
            self.scales.k_opt, v_eff, dz, self.n_steps, self.cfg.time.snapshot_stride
        )
        return setup, profile, spec

    def quantum_run(self):
        return propagate(self.packet, self.quantum_spec())

    def optical_run(self):
        setup, _, spec = self.optical_setup()
        return setup, propagate(setup.boundary, spec)

    def quantum_spectrum(self, energies, method=None, band=None):
        result = self.quantum_run()
        return self.spectrum_of(result.final, energies, method, band), result

    def spectrum_of(self, final, energies, method=None, band=None):
        return reflection_spectrum(
            final,
            self.packet,
            self.mass,
            energies,
            method=method or self.cfg.methods.reflection,
            support=self.support,
            v_left=self.v_left,
            v_right=self.v_right,
            band_halfwidth_bins=band or self.cfg.methods.band_halfwidth_bins,
        )

    def oracle(self, energies, threads: int = 1):
        lo, hi = self._support_slice()
        v_window = self.v[lo:hi]
        if threads > 1 and len(energies) >= 2 * threads:
            chunks = np.array_split(np.asarray(energies, dtype=float), threads)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(
                    pool.map(lambda e: oracle_sweep(v_window, self.grid.dx, self.mass, e), chunks)
                )
            return np.concatenate(parts)
        return oracle_sweep(v_window, self.grid.dx, self.mass, energies)

    def _support_slice(self):
        if self.support is None:
            return 0, 3
        pad = 2
        lo = int(np.searchsorted(self.grid.x, self.support[0])) - pad
        hi = int(np.searchsorted(self.grid.x, self.support[1], side="right")) + pad
        return max(lo, 0), min(hi, self.grid.n_points)


def cmd_synthesize(cfg: RunConfig, out: Path) -> int:
    problem = _Problem(cfg)
    setup, profile, _ = problem.optical_setup()
    report = feasibility_report(
        profile,
        beam=setup.boundary,
        n_material_max=cfg.feasibility.n_material_max,
        fabrication_resolution_um=cfg.feasibility.fabrication_resolution_um,
    )
    write_index_profile(profile, report, out / "index_profile.csv", out / "index_profile.json")
    print(f"n_max = {profile.n_max:.6f}  feasibility {'pass' if report.passed else 'FLAGGED'}")
    return EXIT_OK if report.passed else EXIT_FEASIBILITY


def cmd_propagate(cfg: RunConfig, side: str, out: Path) -> int:
    problem = _Problem(cfg)
    if side == "quantum":
        result = problem.quantum_run()
    else:
        _, result = problem.optical_run()
    manifest = dump_snapshots(result, out / side)
    drift = float(np.max(np.abs(result.norm_history - result.norm_history[0])))
    print(f"{side}: {problem.n_steps} steps, norm drift {drift:.3e}, wrote {manifest}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out: Path, threads: int) -> int:
    problem = _Problem(cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fut_q = pool.submit(problem.quantum_run)
            fut_o = pool.submit(problem.optical_run)
            result_q = fut_q.result()
            setup, result_o = fut_o.result()
    else:
        result_q = problem.quantum_run()
        setup, result_o = problem.optical_run()

    diff = float(np.max(np.abs(result_o.final.values - result_q.final.values)))

    energies = sweep_energies(cfg)
    spec_q = problem.spectrum_of(result_q.final, energies)
    kappas = np.array([kappa_of_energy(e, problem.scales) for e in energies])
    scale_sq = 2.0 * problem.scales.w * problem.scales.s**2
    spec_o_raw = reflection_spectrum(
        result_o.final,
        setup.boundary,
        problem.scales.k_opt,
        kappas,
        method=cfg.methods.reflection,
        support=None if problem.support is None else (
            problem.scales.s * problem.support[0],
            problem.scales.s * problem.support[1],
        ),
        v_left=problem.v_left / scale_sq,
        v_right=problem.v_right / scale_sq,
        band_halfwidth_bins=cfg.methods.band_halfwidth_bins,
    )
    # report the beam spectrum against the matching energies
    spec_o = type(spec_o_raw)(
        energies=np.array([energy_of_kappa(k, problem.scales) for k in kappas]),
        reflection=spec_o_raw.reflection,
        reliable=spec_o_raw.reliable,
        method=spec_o_raw.method,
    )
    comparison = compare_spectra(spec_q, spec_o)

    passed_field = diff < FIELD_DIFF_THRESHOLD
    passed_spectra = comparison.max_abs_log10_ratio < SPECTRUM_LOG_RATIO_THRESHOLD
    report = {
        "max_abs_field_difference": diff,
        "spectra_max_abs_log10_ratio": comparison.max_abs_log10_ratio,
        "energies_compared": int(len(comparison.energies_compared)),
        "n_steps": problem.n_steps,
        "amplitude_scale": setup.amplitude_scale,
        "passed": {"field": passed_field, "spectra": passed_spectra},
    }
    write_json(out / "compare.json", report)
    print(
        f"max |U - psi| = {diff:.3e}; spectra max |log10 ratio| = "
        f"{comparison.max_abs_log10_ratio:.4f} over {report['energies_compared']} energies"
    )
    return EXIT_OK if (passed_field and passed_spectra) else EXIT_COMPARE_FAILED


def _reflect(cfg: RunConfig, out: Path, with_oracle: bool, threads: int):
    problem = _Problem(cfg)
    energies = sweep_energies(cfg)
    spectrum, _ = problem.quantum_spectrum(energies)
    oracle = problem.oracle(energies, threads) if with_oracle else None
    write_spectrum_csv(spectrum, out / "spectrum.csv", oracle=oracle)
    return problem, spectrum


def cmd_reflect(cfg: RunConfig, out: Path, with_oracle: bool, threads: int) -> int:
    _, spectrum = _reflect(cfg, out, with_oracle, threads)
    n_rel = int(spectrum.reliable.sum())
    print(f"wrote spectrum.csv: {len(spectrum.energies)} energies, {n_rel} reliable")
    return EXIT_OK


def cmd_dips(cfg: RunConfig, out: Path, with_oracle: bool, threads: int) -> int:
    _, spectrum = _reflect(cfg, out, with_oracle, threads)
    dips = detect_dips(spectrum, cfg.sweep.prominence_decades)
    write_dips_csv(dips, out / "dips.csv")
    for d in dips:
        print(f"dip: E = {d.energy:.4f} au, R = {d.reflection:.3e}, "
              f"prominence {d.prominence_decades:.2f} decades")
    print(f"found {len(dips)} dip(s) at {cfg.sweep.prominence_decades:g}-decade prominence")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pqsim",
        description="1D wavepacket scattering and its graded-index beam twin",
    )
    parser.add_argument("--version", action="version", version=f"pqsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synthesize", "synthesize the refractive-index profile and feasibility report"),
        ("propagate", "propagate one side and dump snapshots"),
        ("compare", "run both sides and compare fields and spectra"),
        ("reflect", "compute the reflection spectrum"),
        ("dips", "compute the spectrum and detect reflection dips"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="TOML run configuration")
        cmd.add_argument("--threads", type=int, default=None,
                         help="worker threads (default: PQSIM_THREADS or hardware)")
        cmd.add_argument("--out", default=None, help="output directory override")
        if name == "propagate":
            cmd.add_argument("--side", choices=("quantum", "optical"), default="quantum")
        if name in ("reflect", "dips"):
            cmd.add_argument("--oracle", action="store_true",
                             help="add a stationary transfer-matrix column")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        threads = _resolve_threads(args.threads, cfg)
        out = _out_dir(cfg, args.out)
        if args.command == "synthesize":
            return cmd_synthesize(cfg, out)
        if args.command == "propagate":
            return cmd_propagate(cfg, args.side, out)
        if args.command == "compare":
            return cmd_compare(cfg, out, threads)
        if args.command == "reflect":
            return cmd_reflect(cfg, out, args.oracle, threads)
        return cmd_dips(cfg, out, args.oracle, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbortError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NotFullyScatteredError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
