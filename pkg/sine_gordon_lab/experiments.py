"""Experiment runner: one handler per subcommand, one output directory per run.

Every run writes into a fresh ``<out>/<subcommand>/run-NNNN`` directory through
a single :class:`~sine_gordon_lab.io.ArtifactWriter` and finishes with a
manifest holding the full configuration, the code version and the random stream
root, which is enough to rerun it.

Example:
    ```python
    from sine_gordon_lab.config import load_config
    from sine_gordon_lab.experiments import run_experiment

    out_dir = run_experiment(load_config("renorm.json"))
    ```
"""

import datetime
import logging
import math
import time
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats as sps

from sine_gordon_lab import chaos, measure, parabolic, renorm, wave
from sine_gordon_lab._version import __version__
from sine_gordon_lab.config import ExperimentConfig, validate
from sine_gordon_lab.errors import NumericalError, StatisticalTestFailure
from sine_gordon_lab.fourier import GridSpec, SpectralField, cutoff_symbol, inverse_transform, l2_norm_squared
from sine_gordon_lab.io import ArtifactWriter, fresh_run_directory
from sine_gordon_lab.noise import SeededStream, sample_gff
from sine_gordon_lab.norms import besov_norms, covering_shells
from sine_gordon_lab.parallel import chunk_sizes
from sine_gordon_lab.stats import fit_log_slope
from sine_gordon_lab.trajectory import norm_time_grid

logger = logging.getLogger(__name__)

Outcome = Tuple[dict, Optional[str]]
Handler = Callable[[ExperimentConfig, SeededStream, ArtifactWriter], Outcome]

CHECK_LEVEL = 0.01
CONTROL_GAMMA_FACTOR = 2.0


def experiment_grid(config: ExperimentConfig, N: float) -> GridSpec:
    """Grid from the config, or the smallest power-of-two grid resolving N."""
    if config.grid.n_side is not None:
        return GridSpec(config.grid.L, config.grid.n_side)
    return chaos.scan_grid(config.grid.L, N)


def _renorm_table(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    grid = experiment_grid(config, max(config.scan.N_list))
    table = renorm.renorm_table(grid, config.scan.N_list, config.beta2, config.grid.chi)
    writer.write_csv("renorm.csv", table.to_frame())
    summary = dict(table.metadata())
    if len(table.entries) >= 2:
        fit = table.log_fit()
        summary.update(slope=fit.slope, slope_se=fit.slope_se, intercept=fit.intercept, reference_slope=0.5 / math.pi)
    writer.write_json("renorm.json", summary)
    return summary, None


def _gff_check(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    grid = experiment_grid(config, config.N)
    expected = grid.L**2 / grid.bracket2()
    power_sum = np.zeros(grid.shape)
    power_sq = np.zeros(grid.shape)
    point_values = []
    for index, size in enumerate(chunk_sizes(config.scan.samples, config.scan.batch)):
        u = sample_gff(grid, stream.for_member(index), (size,))
        ratio = np.abs(u.coeffs) ** 2 / expected
        power_sum += ratio.sum(axis=0)
        power_sq += (ratio**2).sum(axis=0)
        u_n = u.with_coeffs(cutoff_symbol(grid, config.N, config.grid.chi) * u.coeffs)
        point_values.append(inverse_transform(u_n)[:, 0, 0])
    count = config.scan.samples
    mean = power_sum / count
    se = np.sqrt(np.maximum(power_sq / count - mean**2, 0.0) / count)
    z = (mean - 1.0) / se
    n1, n2 = grid.wavenumbers()
    frame = pd.DataFrame(
        {"n1": n1.ravel(), "n2": n2.ravel(), "ratio_mean": mean.ravel(), "ratio_se": se.ravel(), "z": z.ravel()}
    )
    writer.write_csv("gff_modes.csv", frame)
    values = np.concatenate(point_values)
    sigma = renorm.sigma_heat(grid, config.N, config.grid.chi)
    variance = float(np.var(values, ddof=1))
    variance_se = sigma * math.sqrt(2.0 / (count - 1))
    point_z = (variance - sigma) / variance_se
    pvalues = np.append(2.0 * sps.norm.sf(np.abs(z.ravel())), 2.0 * sps.norm.sf(abs(point_z)))
    threshold = CHECK_LEVEL / pvalues.size
    summary = {
        "samples": count,
        "sigma_heat": sigma,
        "point_variance": variance,
        "point_z": point_z,
        "max_abs_mode_z": float(np.max(np.abs(z))),
        "min_pvalue": float(np.min(pvalues)),
        "threshold": threshold,
    }
    writer.write_json("gff_check.json", summary)
    failure = None
    if summary["min_pvalue"] < threshold:
        failure = f"free field check rejected: min p-value {summary['min_pvalue']:.3g} < {threshold:.3g}"
    return summary, failure


def _gmc_scan(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    result = chaos.regularity_scan(
        config.beta2,
        config.norms.alpha,
        config.scan.N_list,
        config.scan.samples,
        stream,
        L=config.grid.L,
        n_times=config.scan.n_times,
        T=config.dynamics.T,
        batch=config.scan.batch,
        threads=config.threads,
        chi=config.grid.chi,
    )
    writer.write_csv("gmc_scan.csv", result.to_frame())
    summary = result.as_dict()
    summary.update(alpha=config.norms.alpha, threshold=config.beta2 / (4.0 * math.pi))
    writer.write_json("gmc_scan.json", summary)
    return summary, None


def gaussian_test_function(L: float, width: float = 0.5) -> chaos.PhiFunction:
    """Gaussian bump of the given width centred on the torus."""
    centre = math.pi * L

    def phi(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return np.exp(-((x1 - centre) ** 2 + (x2 - centre) ** 2) / (2.0 * width**2))

    return phi


def _cos_decay(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    grid = experiment_grid(config, max(config.scan.N_list))
    phi = gaussian_test_function(grid.L)
    result = chaos.cos_pairing_decay(
        grid, config.beta2, phi, config.scan.N_list, config.scan.samples, stream, config.scan.batch, config.threads
    )
    oracle = [chaos.cos_pairing_oracle(grid, N, config.beta2, phi, config.grid.chi) for N in config.scan.N_list]
    frame = result.to_frame()
    frame["oracle"] = oracle
    writer.write_csv("cos_decay.csv", frame)
    oracle_fit = fit_log_slope(config.scan.N_list, oracle)
    bound = chaos.cos_decay_bound(config.beta2)
    slope = result.slope if result.slope is not None else math.nan
    slope_se = result.slope_se if result.slope_se is not None else math.nan
    violated = chaos.violates_decay_bound(slope, slope_se, config.beta2)
    summary = result.as_dict()
    summary.update(oracle_slope=oracle_fit.slope, bound_slope=bound, bound_violated=violated)
    writer.write_json("cos_decay.json", summary)
    if violated:
        return summary, f"fitted slope {slope:.4f} (se {slope_se:.2g}) lies above the bound {bound:.4f}"
    return summary, None


def _run_parabolic(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    grid = experiment_grid(config, config.N)
    dynamics = config.dynamics.to_config(config.grid.chi)
    u0 = sample_gff(grid, stream.for_experiment(f"{stream.experiment}/u0"), (config.dynamics.members,))
    record = parabolic.simulate_truncated_sg(
        u0, config.beta2, config.N, config.dynamics.T, dynamics, stream, config.dynamics.record_every
    )
    norms = besov_norms(record.fields, -config.norms.delta)
    energy = l2_norm_squared(record.fields)
    frame = pd.DataFrame(
        {
            "t": record.times,
            "mean_besov": norms.mean(axis=1),
            "max_besov": norms.max(axis=1),
            "mean_l2_squared": energy.mean(axis=1),
        }
    )
    writer.write_csv("trajectory.csv", frame)
    final = record.at(-1)
    for member in range(final.batch_shape[0]):
        writer.write_checkpoint(
            f"checkpoints/member-{member:04d}",
            [final.member(member)],
            float(record.times[-1]),
            record.metadata()["integrator"],
            stream.for_member(member).as_dict(),
        )
    summary = {"times": len(record), "final_mean_besov": float(norms[-1].mean()), **record.metadata()}
    writer.write_json("run_parabolic.json", summary)
    return summary, None


def _run_wave(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    grid = experiment_grid(config, config.N)
    dynamics = config.dynamics.to_config(config.grid.chi, default=parabolic.Placement.NOISE)
    members = config.dynamics.members
    times = np.union1d([0.0], norm_time_grid(config.dynamics.T))
    zero = SpectralField.zeros(grid, (members,))
    run = wave.simulate_wave_remainder(zero, None, config.beta2, config.N, times, stream, dynamics)
    report = wave.wave_energy_monitor(run.v, config.norms.alpha, config.dynamics.T, run.theta, config.beta2)
    if not np.all(np.isfinite(report.energy)):
        raise NumericalError("wave energy became non-finite")
    frame = pd.DataFrame(
        {
            "t": report.times,
            "median_energy": np.median(report.energy, axis=1),
            "max_energy": np.max(report.energy, axis=1),
            "median_forcing_bound": np.median(report.forcing_term, axis=1),
        }
    )
    writer.write_csv("wave_energy.csv", frame)
    final = len(run.v) - 1
    for member in range(members):
        writer.write_checkpoint(
            f"checkpoints/member-{member:04d}",
            [run.v.fields.member((final, member)), run.v.velocities.member((final, member))],
            float(run.v.times[-1]),
            run.v.integrator,
            stream.for_member(member).as_dict(),
        )
    sup = np.asarray(report.sup)
    summary = {
        "alpha": report.alpha,
        "sup_energy": sup.tolist(),
        "max_over_median": float(np.max(sup) / np.median(sup)) if np.median(sup) > 0 else 0.0,
    }
    writer.write_json("run_wave.json", summary)
    return summary, None


def _ensemble(config: ExperimentConfig, stream: SeededStream) -> measure.GibbsEnsemble:
    grid = experiment_grid(config, config.N)
    if config.sampler.method == "dynamics":
        return measure.equilibrate_by_dynamics(
            grid,
            config.N,
            config.beta2,
            config.sampler.members,
            config.dynamics.T,
            config.dynamics.to_config(config.grid.chi),
            stream,
        )
    return measure.pcn_sample_gibbs(grid, config.N, config.beta2, config.sampler.to_config(config.grid.chi), stream)


def _sample_gibbs(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    ensemble = _ensemble(config, stream)
    for index in range(len(ensemble)):
        writer.write_fields(f"members/member-{index:04d}.sgsq", ensemble.member(index))
    frame = pd.DataFrame(
        {
            "O1": measure.observable_cos(ensemble.members, config.beta2, config.N, config.grid.chi),
            "O3": measure.observable_sobolev(ensemble.members, config.norms.delta),
        }
    )
    writer.write_csv("observables.csv", frame)
    summary = ensemble.metadata()
    writer.write_json("ensemble.json", summary)
    return summary, None


def _invariance_test(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    ensemble = _ensemble(config, stream.for_experiment(f"{stream.experiment}/sampler"))
    report = measure.invariance_test(
        ensemble,
        config.dynamics.T,
        config.dynamics.to_config(config.grid.chi),
        stream.for_experiment(f"{stream.experiment}/dynamics"),
        delta=config.norms.delta,
        level=CHECK_LEVEL,
        threads=config.threads,
    )
    frame = pd.DataFrame(
        {
            "observable": list(report.names),
            "pvalue": [report.pvalues[n] for n in report.names],
            "shift": [report.shifts[n] for n in report.names],
            "shift_se": [report.shift_se[n] for n in report.names],
        }
    )
    control = measure.wrong_renormalization_control(
        ensemble,
        config.dynamics.T,
        config.dynamics.to_config(config.grid.chi),
        stream.for_experiment(f"{stream.experiment}/control"),
        gamma_factor=CONTROL_GAMMA_FACTOR,
        delta=config.norms.delta,
        level=CHECK_LEVEL,
        threads=config.threads,
    )
    frame["control_shift_ratio"] = [control.shift_ratio(n) for n in report.names]
    writer.write_csv("invariance.csv", frame)
    detected = control.shift_ratio("O1") > measure.SHIFT_LIMIT
    summary = {
        "report": report.as_dict(),
        "control": {"gamma_factor": CONTROL_GAMMA_FACTOR, "detected": detected, **control.as_dict()},
        "ensemble": ensemble.metadata(),
    }
    writer.write_json("invariance.json", summary)
    return summary, _invariance_failure(report, detected)


def _invariance_failure(report: measure.InvarianceReport, control_detected: bool) -> Optional[str]:
    if not report.passed:
        return f"invariance rejected at level {report.threshold:.3g}"
    if not control_detected:
        return f"the {CONTROL_GAMMA_FACTOR:g}γ control did not move O1 by more than {measure.SHIFT_LIMIT:g} SE"
    return None


def _tightness_scan(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    chain = config.sampler.to_config(config.grid.chi)
    norms = config.norms
    if norms.weighted:
        parabolic.check_para2(config.dynamics.T, norms.lam, norms.M)
        result = measure.weighted_tightness_scan(
            config.scan.L_list,
            config.N,
            norms.delta,
            norms.p,
            norms.lam,
            norms.M,
            config.scan.samples,
            chain,
            stream,
            config.beta2,
            config.scan.points_per_unit,
        )
    else:
        result = measure.tightness_scan(
            config.scan.N_list, norms.delta, norms.p, config.scan.samples, chain, stream, config.beta2, config.grid.L
        )
    writer.write_csv("tightness.csv", result.to_frame())
    summary = result.as_dict()
    summary["top_octave_variation"] = result.top_octave_variation()
    writer.write_json("tightness.json", summary)
    return summary, None


def _volume_scan(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    result = measure.volume_scan(
        config.scan.L_list,
        config.N,
        config.norms.delta,
        config.norms.p,
        config.scan.samples,
        stream,
        window=config.scan.window,
        field_kind=config.scan.kind,
        beta2=config.beta2,
        points_per_unit=config.scan.points_per_unit,
        batch=config.scan.batch,
        threads=config.threads,
    )
    writer.write_csv("volume_global.csv", result.global_stats.to_frame())
    writer.write_csv("volume_window.csv", result.window_stats.to_frame())
    summary = result.as_dict()
    writer.write_json("volume.json", summary)
    return summary, None


def _margins_frame(lhs, a, b, margins) -> pd.DataFrame:
    return pd.DataFrame({"lhs": lhs, "v0_norm": a, "theta_norm": b, "margin": margins})


def _apriori_fit(config: ExperimentConfig, stream: SeededStream, writer: ArtifactWriter) -> Outcome:
    grid = experiment_grid(config, config.N)
    dynamics = config.dynamics.to_config(config.grid.chi)
    settings = config.apriori
    T = config.dynamics.T

    def runs(label: str, members: int):
        return parabolic.remainder_runs(
            grid, config.beta2, config.N, T, members, stream.for_experiment(f"{stream.experiment}/{label}"),
            dynamics, settings.batch,
        )

    norms = config.norms
    validation = runs("validation", settings.validation) if settings.validation > 0 else None
    if norms.weighted:
        ell_max = norms.ell_max if norms.ell_max is not None else covering_shells(grid, norms.M)
        report = parabolic.apriori_monitor_weighted(
            runs("train", settings.train), norms.delta, T, norms.lam, norms.M, ell_max, validation,
            headroom=settings.headroom,
        )
    else:
        report = parabolic.apriori_monitor(
            runs("train", settings.train), norms.delta, T, validation, headroom=settings.headroom
        )
    writer.write_csv("apriori_train.csv", _margins_frame(report.lhs, report.v0_norms, report.theta_norms, report.margins))
    if report.validation_margins is not None:
        writer.write_csv("apriori_validation.csv", pd.DataFrame({"margin": report.validation_margins}))
    summary = report.as_dict()
    writer.write_json("apriori.json", summary)
    return summary, None


HANDLERS: Dict[str, Handler] = {
    "renorm-table": _renorm_table,
    "gff-check": _gff_check,
    "gmc-scan": _gmc_scan,
    "cos-decay": _cos_decay,
    "run-parabolic": _run_parabolic,
    "run-wave": _run_wave,
    "sample-gibbs": _sample_gibbs,
    "invariance-test": _invariance_test,
    "tightness-scan": _tightness_scan,
    "volume-scan": _volume_scan,
    "apriori-fit": _apriori_fit,
}


def run_experiment(config: ExperimentConfig):
    """Validate, execute and record one experiment.

    Returns:
        Path of the new output directory.

    Raises:
        ConfigError: For an invalid configuration (nothing is written).
        NumericalError: Propagated unchanged from the library.
        StatisticalTestFailure: When a check rejects; the artifacts are still written.
    """
    validate(config)
    stream = SeededStream(config.seed, experiment=config.subcommand)
    directory = fresh_run_directory(config.out, config.subcommand)
    writer = ArtifactWriter(directory)
    logger.info(f"running {config.subcommand} into {directory}")
    started = time.perf_counter()
    summary, failure = HANDLERS[config.subcommand](config, stream, writer)
    manifest = {
        "subcommand": config.subcommand,
        "version": __version__,
        "config": config.as_dict(),
        "stream": stream.as_dict(),
        "passed": failure is None,
        "started_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    writer.finalize(manifest, wall_time=time.perf_counter() - started)
    if failure is not None:
        raise StatisticalTestFailure(failure)
    logger.info(f"{config.subcommand} finished")
    return directory
