"""Time integration of the isospectral flow dX/dt = [X^2, N].

The right-hand side maps Sym(n) to itself, the spectrum of X is preserved,
and every parametric trace coefficient from :mod:`symflow.invariants` plus
every Lie-Poisson Casimir is a constant of motion.  Integration is plain
RK4 with per-step symmetric projection; conservation is monitored rather
than enforced, so drift doubles as an accuracy diagnostic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .matrix_core import as_square, commutator, eig_sym, max_abs, symmetrize
from .invariants import admissible_indices, invariant_table
from .lie_structure import BlockDecomp
from .poisson import SkewCanonicalForm, canonical_form, lie_poisson_casimirs

logger = logging.getLogger(__name__)

#: Symmetric projections larger than this per step get logged.
RESYM_WARN = 1e-10

#: Reference values below this switch the drift monitor from relative to
#: absolute differences.
DRIFT_FLOOR = 1e-12


class FlowDivergenceError(RuntimeError):
    """Integration produced a non-finite state; carries the offending time."""

    def __init__(self, time: float):
        super().__init__(f"non-finite state at t = {time:.6g}")
        self.time = time


def vector_field(x: np.ndarray, n_skew: np.ndarray) -> np.ndarray:
    """Right-hand side [x^2, n] = x^2 n - n x^2; symmetric for symmetric x."""
    x = as_square(x)
    if x.shape != n_skew.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {n_skew.shape}")
    x2 = x @ x
    return x2 @ n_skew - n_skew @ x2


def lax_residual(x: np.ndarray, n_skew: np.ndarray, lam: float) -> float:
    """Defect of the parametric commutator representation of the flow.

    Compares [x^2, n] with [x + lam n, n x + x n + lam n^2]; the two agree
    identically in lam because the first-order coefficient cancels.
    """
    lax_matrix = x + lam * n_skew
    companion = n_skew @ x + x @ n_skew + lam * (n_skew @ n_skew)
    return max_abs(vector_field(x, n_skew) - commutator(lax_matrix, companion))


def block_vector_field(b: BlockDecomp, core_skew: np.ndarray) -> BlockDecomp:
    """Flow in block coordinates adapted to im(N) + ker(N).

    The image block obeys its own flow driven by S^2 + A A^T, the coupling
    block is transported by -Nb (S A + A B), and the kernel block is frozen.
    """
    s, a, bk = b.image_block, b.coupling, b.kernel_block
    if core_skew.shape != s.shape:
        raise ValueError("core block size does not match the image block")
    ds = commutator(s @ s + a @ a.T, core_skew)
    da = -core_skew @ (s @ a + a @ bk)
    return BlockDecomp(image_block=ds, coupling=da, kernel_block=np.zeros_like(bk))


@dataclass(frozen=True)
class IntegratorConfig:
    step: float
    t_end: float
    scheme: str = "rk4"
    monitor_stride: int = 10

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.t_end > 0 and self.step > self.t_end:
            raise ValueError("step exceeds t_end")
        if self.scheme != "rk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if self.monitor_stride < 1:
            raise ValueError("monitor_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(0, int(round(self.t_end / self.step)))


@dataclass
class Trajectory:
    """Computed states plus conserved-quantity monitors on a time subgrid."""

    times: np.ndarray
    states: np.ndarray  # (len(times), n, n)
    monitor_times: np.ndarray
    invariant_labels: list  # (k, 2r) per invariant column
    invariant_values: np.ndarray  # (len(monitor_times), n_invariants)
    casimir_values: np.ndarray  # (len(monitor_times), n_casimirs)
    spectra: np.ndarray  # (len(monitor_times), n), ascending eigenvalues
    resym_max: float = 0.0
    form: SkewCanonicalForm | None = None

    @staticmethod
    def _drift(values: np.ndarray) -> np.ndarray:
        ref = values[0]
        scale = np.where(np.abs(ref) < DRIFT_FLOOR, 1.0, np.abs(ref))
        return np.abs(values - ref) / scale

    def invariant_drift(self) -> np.ndarray:
        return self._drift(self.invariant_values)

    def casimir_drift(self) -> np.ndarray:
        return self._drift(self.casimir_values)

    def spectrum_drift(self) -> np.ndarray:
        return self._drift(self.spectra)

    def max_drift(self) -> float:
        worst = 0.0
        for block in (self.invariant_drift(), self.casimir_drift(), self.spectrum_drift()):
            if block.size:
                worst = max(worst, float(block.max()))
        return worst


def _rk4_step(x: np.ndarray, n_skew: np.ndarray, h: float) -> np.ndarray:
    k1 = vector_field(x, n_skew)
    k2 = vector_field(x + 0.5 * h * k1, n_skew)
    k3 = vector_field(x + 0.5 * h * k2, n_skew)
    k4 = vector_field(x + h * k3, n_skew)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    x0: np.ndarray,
    n_skew: np.ndarray,
    config: IntegratorConfig,
    rank_tol: float = 1e-9,
) -> Trajectory:
    """Integrate the flow from x0 with conserved-quantity monitoring.

    Parameters
    ----------
    x0, n_skew : initial symmetric state and the fixed skew structure matrix.
    config : step size, horizon, scheme, and monitor stride.
    rank_tol : passed to :func:`symflow.poisson.canonical_form`, which
        supplies the Casimir monitors.

    Returns
    -------
    Trajectory with states at every step and monitors every
    ``config.monitor_stride`` steps (first and last step always included).

    Raises
    ------
    FlowDivergenceError if the state leaves the representable range, with
    the offending time attached.
    """
    x = symmetrize(as_square(x0))
    if x.shape != n_skew.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {n_skew.shape}")
    n = x.shape[0]
    form = canonical_form(n_skew, rank_tol)
    labels = admissible_indices(n)

    times = [0.0]
    states = [x.copy()]
    monitor_times, inv_rows, cas_rows, spec_rows = [], [], [], []

    def record(t: float, state: np.ndarray) -> None:
        monitor_times.append(t)
        table = invariant_table(state, n_skew)
        inv_rows.append([table.values[key] for key in labels])
        cas_rows.append(lie_poisson_casimirs(form, form.to_canonical(state)))
        spec_rows.append(eig_sym(state)[0])

    record(0.0, x)
    resym_max = 0.0
    warned = False
    h = config.step
    for step_index in range(1, config.n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            x = _rk4_step(x, n_skew, h)
        t = step_index * h
        if not np.isfinite(x).all():
            raise FlowDivergenceError(t)
        correction = max_abs(x - x.T) / 2.0
        resym_max = max(resym_max, correction)
        if correction > RESYM_WARN and not warned:
            logger.warning("symmetric projection of %.3e at t = %.6g", correction, t)
            warned = True
        x = symmetrize(x)
        times.append(t)
        states.append(x.copy())
        if step_index % config.monitor_stride == 0 or step_index == config.n_steps:
            record(t, x)

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        monitor_times=np.asarray(monitor_times),
        invariant_labels=labels,
        invariant_values=np.asarray(inv_rows),
        casimir_values=np.asarray(cas_rows),
        spectra=np.asarray(spec_rows),
        resym_max=resym_max,
        form=form,
    )


def integrate_blocks(
    b0: BlockDecomp,
    core_skew: np.ndarray,
    config: IntegratorConfig,
) -> tuple[np.ndarray, list[BlockDecomp]]:
    """RK4 on the block-coordinate flow; the kernel block stays put.

    Returns the time grid and the block states.  Matches conjugating the
    full flow for the assembled matrices, which the tests pin down through
    :func:`symflow.lie_structure.from_blocks`.
    """
    h = config.step
    times = [0.0]
    blocks = [b0]
    cur = b0
    for step_index in range(1, config.n_steps + 1):
        s, a, bk = cur.image_block, cur.coupling, cur.kernel_block

        def f(si, ai):
            d = block_vector_field(BlockDecomp(si, ai, bk), core_skew)
            return d.image_block, d.coupling

        ks1, ka1 = f(s, a)
        ks2, ka2 = f(s + 0.5 * h * ks1, a + 0.5 * h * ka1)
        ks3, ka3 = f(s + 0.5 * h * ks2, a + 0.5 * h * ka2)
        ks4, ka4 = f(s + h * ks3, a + h * ka3)
        s_new = symmetrize(s + (h / 6.0) * (ks1 + 2 * ks2 + 2 * ks3 + ks4))
        a_new = a + (h / 6.0) * (ka1 + 2 * ka2 + 2 * ka3 + ka4)
        if not (np.isfinite(s_new).all() and np.isfinite(a_new).all()):
            raise FlowDivergenceError(step_index * h)
        cur = BlockDecomp(image_block=s_new, coupling=a_new, kernel_block=bk)
        times.append(step_index * h)
        blocks.append(cur)
    return np.asarray(times), blocks
