"""Typicality experiments: autocorrelators, spatial profiles and scattering sums.

Every realization prepares a scrambled background with the probe polarized
along the measured axis, evolves it, and records expectation values after
each Floquet step. The ``single`` estimator is ``<psi| sigma_a^p(t) |psi>``
(no 1/2 prefactor), which equals ``Tr[sigma_a^p(t) sigma_a^p] / 2^n`` up to
``O(2^{-n/2})``. The ``paired`` estimator also evolves the probe-flipped
state on the same background and takes half the difference; it has the same
expectation and is exactly zero for any observable the probe cannot reach.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .engine import (
    RandomizationConfig,
    expect_pauli,
    flip_probe,
    prepare_probe_random_state,
    run_program,
    z_profile,
)
from .lattice import LatticeSpec, Region
from .model import AXES, TrotterProgram


ESTIMATORS = ("single", "paired")


@dataclass(frozen=True)
class Protocol:
    axis: str = "Z"
    cycles: int = 9
    realizations: int = 30
    seed: int = 0
    threads: int = 1
    estimator: str = "single"

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.axis.upper() not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.realizations < 1:
            raise ValueError("at least one realization is required")
        if self.cycles < 0:
            raise ValueError(f"cycles must be >= 0, got {self.cycles}")


@dataclass
class CorrelationSeries:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    realizations: int
    axis: str = "Z"
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "time", "mean", "stderr", "realizations"])
        for k, (t, m, s) in enumerate(zip(self.times, self.mean, self.stderr)):
            w.writerow([k, repr(float(t)), repr(float(m)), repr(float(s)), self.realizations])
        return buf.getvalue()


@dataclass
class SpatialProfile:
    """Realization-averaged ``<sigma_z^i(t)>``; ``values[step, site]``."""

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    realizations: int
    per_realization_sums: np.ndarray  # shape (M, steps+1): sum over sites
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "site", "value", "stderr"])
        for k in range(self.values.shape[0]):
            for i in range(self.values.shape[1]):
                w.writerow([k, i, repr(float(self.values[k, i])), repr(float(self.stderr[k, i]))])
        return buf.getvalue()


@dataclass
class ScatteringSeries:
    times: np.ndarray
    reflection: np.ndarray
    t_same: np.ndarray
    t_cross: np.ndarray
    rung: np.ndarray  # |profile| on the rung site, kept out of the three sums
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "time", "R", "T_same", "T_cross", "rung"])
        for k, row in enumerate(zip(self.times, self.reflection, self.t_same, self.t_cross, self.rung)):
            w.writerow([k] + [repr(float(v)) for v in row])
        return buf.getvalue()


def _mean_stderr(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = samples.shape[0]
    mean = samples.mean(axis=0)
    if m < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(m)


def _map_realizations(fn: Callable[[int], np.ndarray], count: int, threads: int) -> list:
    # results always come back in realization order
    if threads <= 1 or count == 1:
        return [fn(m) for m in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _check_shared_lattice(programs: Sequence[TrotterProgram]) -> LatticeSpec:
    if not programs:
        raise ValueError("no programs given")
    lattice = programs[0].lattice
    for p in programs[1:]:
        if p.lattice != lattice or p.steps != programs[0].steps:
            raise ValueError("programs must share lattice and step count")
    return lattice


def _metadata(prog: TrotterProgram, protocol: Protocol) -> dict:
    meta = prog.metadata()
    meta.update(axis=protocol.axis.upper(), cycles=protocol.cycles, seed=protocol.seed,
                realizations=protocol.realizations, estimator=protocol.estimator)
    return meta


def _realization_states(lattice: LatticeSpec, protocol: Protocol, m: int):
    """Initial states of realization ``m`` with their estimator weights."""
    axis = protocol.axis.upper()
    rc = RandomizationConfig(protocol.cycles, protocol.seed, m)
    base = prepare_probe_random_state(lattice, axis, rc)
    if protocol.estimator == "single":
        return [(base, 1.0)]
    flipped = flip_probe(base.copy(), lattice.probe, axis)
    return [(base, 0.5), (flipped, -0.5)]


def _evolve_and_record(programs, states, observe, shape) -> np.ndarray:
    """Weighted sum over initial states of ``observe(state)`` after every step."""
    out = np.zeros((len(programs), *shape))
    last = len(programs) - 1
    for j, prog in enumerate(programs):
        for state, weight in states:
            state = state.copy() if j < last else state

            def record(step, s, j=j, weight=weight):
                out[j, step] += weight * observe(s)

            run_program(state, prog, record)
    return out


def run_autocorrelations(
    programs: Sequence[TrotterProgram], protocol: Protocol = Protocol()
) -> list[CorrelationSeries]:
    """Probe autocorrelators for several programs on one lattice.

    Each realization's random state is prepared once and reused for every
    program, so all series share their random backgrounds.
    """
    lattice = _check_shared_lattice(programs)
    axis = protocol.axis.upper()
    probe = lattice.probe

    def one(m: int) -> np.ndarray:
        states = _realization_states(lattice, protocol, m)
        return _evolve_and_record(
            programs, states, lambda s: expect_pauli(s, probe, axis), (programs[0].steps + 1,)
        )

    samples = np.stack(_map_realizations(one, protocol.realizations, protocol.threads))
    series = []
    for j, prog in enumerate(programs):
        mean, err = _mean_stderr(samples[:, j, :])
        series.append(CorrelationSeries(
            times=prog.schedule.times, mean=mean, stderr=err,
            realizations=protocol.realizations, axis=axis, metadata=_metadata(prog, protocol),
        ))
    return series


def run_autocorrelation(prog: TrotterProgram, protocol: Protocol = Protocol()) -> CorrelationSeries:
    return run_autocorrelations([prog], protocol)[0]


def run_spatial_profile(prog: TrotterProgram, protocol: Protocol = Protocol()) -> SpatialProfile:
    """Realization-averaged ``<sigma_z>`` on every site after each step.

    The probe is prepared along ``protocol.axis`` as usual; the recorded
    observable is always sigma_z.
    """
    def one(m: int) -> np.ndarray:
        states = _realization_states(prog.lattice, protocol, m)
        return _evolve_and_record([prog], states, z_profile, (prog.steps + 1, prog.n))[0]

    samples = np.stack(_map_realizations(one, protocol.realizations, protocol.threads))
    mean, err = _mean_stderr(samples)
    return SpatialProfile(
        times=prog.schedule.times, values=mean, stderr=err,
        realizations=protocol.realizations, per_realization_sums=samples.sum(axis=2),
        metadata=_metadata(prog, protocol),
    )


def scattering_coefficients(
    profile: SpatialProfile,
    spec: LatticeSpec,
    rung_region: Region = Region.RUNG_SITE,
) -> ScatteringSeries:
    """Absolute partition sums of the profile: reflection and the two transmissions.

    ``rung_region`` re-assigns the rung site's weight to another region for
    sensitivity checks; by default it is reported on its own.
    """
    if spec.partition is None:
        raise ValueError("scattering coefficients need a lattice with a site partition")
    groups = {r: [] for r in Region}
    for site, region in sorted(spec.partition.items()):
        groups[rung_region if region == Region.RUNG_SITE else region].append(site)

    def total(region):
        sites = groups[region]
        if not sites:
            return np.zeros(profile.values.shape[0])
        return np.abs(profile.values[:, sites].sum(axis=1))

    return ScatteringSeries(
        times=profile.times,
        reflection=total(Region.BEFORE_RUNG),
        t_same=total(Region.AFTER_RUNG_SAME_CHAIN),
        t_cross=total(Region.OTHER_CHAIN),
        rung=total(Region.RUNG_SITE),
        metadata=dict(profile.metadata),
    )


def reconstruct_directional(
    cxx: CorrelationSeries,
    cyy: CorrelationSeries,
    czz: CorrelationSeries,
    n_hat: Sequence[float],
) -> CorrelationSeries:
    """Correlator along ``n_hat`` from the three axis correlators."""
    n_hat = np.asarray(n_hat, dtype=float)
    if n_hat.shape != (3,) or abs(np.linalg.norm(n_hat) - 1) > 1e-12:
        raise ValueError(f"n_hat must be a unit 3-vector, got {n_hat}")
    for s in (cxx, cyy):
        if s.times.shape != czz.times.shape or not np.array_equal(s.times, czz.times):
            raise ValueError("correlation series must share their time grid")
    w = n_hat ** 2
    mean = w[0] * cxx.mean + w[1] * cyy.mean + w[2] * czz.mean
    err = np.sqrt(w[0] ** 2 * cxx.stderr ** 2 + w[1] ** 2 * cyy.stderr ** 2 + w[2] ** 2 * czz.stderr ** 2)
    meta = dict(czz.metadata)
    meta["n_hat"] = n_hat.tolist()
    return replace(czz, mean=mean, stderr=err, axis="n", metadata=meta,
                   realizations=min(cxx.realizations, cyy.realizations, czz.realizations))
