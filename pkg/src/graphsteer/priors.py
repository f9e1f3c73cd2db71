"""Closed-form score models standing in for a trained score network.

Both priors expose the same contract: `score` (gradient of the log marginal
at noise level t), `denoise` (posterior-mean denoiser (g + sigma_t^2 *
score) / a_t), and `denoiser_vjp` (transpose-Jacobian products of the
denoiser, needed to chain reward gradients back to the noisy state). Scores
and cotangents live in the symmetric / zero-diagonal subspace and pair with
perturbations through the full Frobenius inner product.

EmpiricalMixturePrior is exact for the mixture-of-Gaussians marginal induced
by diffusing a finite reference set, so guidance errors in experiments are
attributable to the controller, not to score approximation.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalDomainError
from .schedule import NoiseSchedule
from .state import GraphState

MIN_MARGINAL_SCALE = 1e-8


class ScoreModel:
    """Shared plumbing for closed-form score models."""

    def __init__(self, schedule: NoiseSchedule, n_nodes: int, n_features: int):
        self.schedule = schedule
        self.n_nodes = int(n_nodes)
        self.n_features = int(n_features)

    @property
    def dim_free(self) -> int:
        n = self.n_nodes
        return n * self.n_features + n * (n - 1) // 2

    def _coeffs(self, t: int) -> tuple[float, float]:
        t = int(t)
        if not 0 <= t < self.schedule.steps:
            raise ValueError(f"time index {t} out of range [0, {self.schedule.steps})")
        return (
            float(self.schedule.marginal_scale[t]),
            float(self.schedule.marginal_std[t]),
        )

    def _check_state(self, g: GraphState) -> GraphState:
        if g.shape != (self.n_nodes, self.n_features):
            raise ValueError(f"state shape {g.shape} != model shape "
                             f"{(self.n_nodes, self.n_features)}")
        if not g.is_finite():
            raise NumericalDomainError("state contains non-finite entries")
        return g

    def score(self, g: GraphState, t: int) -> GraphState:
        raise NotImplementedError

    def log_marginal(self, g: GraphState, t: int) -> float:
        """Log density of the diffused marginal, up to a t-dependent constant."""
        raise NotImplementedError

    def denoise(self, g: GraphState, t: int) -> GraphState:
        """Tweedie posterior mean: (g + sigma_t^2 * score(g, t)) / a_t."""
        a_t, sigma_t = self._coeffs(t)
        if a_t < MIN_MARGINAL_SCALE:
            raise NumericalDomainError(
                f"marginal scale {a_t:.3e} at t={t} too small for denoising"
            )
        return (1.0 / a_t) * (g + (sigma_t**2) * self.score(g, t))

    def denoiser_vjp(self, g: GraphState, t: int, cotangent: GraphState) -> GraphState:
        raise NotImplementedError


class GaussianPrior(ScoreModel):
    """Isotropic Gaussian prior over clean states; fully analytic oracle.

    The diffused marginal at step t is Gaussian with mean a_t * mean and
    per-coordinate variance a_t^2 s^2 + sigma_t^2, so the score, denoiser and
    denoiser Jacobian are all linear.
    """

    def __init__(
        self,
        schedule: NoiseSchedule,
        n_nodes: int,
        n_features: int,
        mean: GraphState | None = None,
        std: float = 1.0,
    ):
        super().__init__(schedule, n_nodes, n_features)
        if std <= 0:
            raise ValueError(f"std must be positive, got {std}")
        self.mean = mean if mean is not None else GraphState.zeros(n_nodes, n_features)
        if self.mean.shape != (n_nodes, n_features):
            raise ValueError("mean shape does not match model shape")
        self.std = float(std)

    def _marginal_var(self, t: int) -> float:
        a_t, sigma_t = self._coeffs(t)
        return (a_t * self.std) ** 2 + sigma_t**2

    def score(self, g: GraphState, t: int) -> GraphState:
        self._check_state(g)
        a_t, _ = self._coeffs(t)
        return (-1.0 / self._marginal_var(t)) * (g - a_t * self.mean)

    def log_marginal(self, g: GraphState, t: int) -> float:
        self._check_state(g)
        a_t, _ = self._coeffs(t)
        diff = g - a_t * self.mean
        return -0.5 * (diff.to_full_vector() ** 2).sum() / self._marginal_var(t)

    def denoiser_slope(self, t: int) -> float:
        """d denoise / d g, a scalar: a_t s^2 / (a_t^2 s^2 + sigma_t^2)."""
        a_t, _ = self._coeffs(t)
        return a_t * self.std**2 / self._marginal_var(t)

    def denoiser_vjp(self, g: GraphState, t: int, cotangent: GraphState) -> GraphState:
        self._check_state(g)
        return self.denoiser_slope(t) * cotangent


class EmpiricalMixturePrior(ScoreModel):
    """Exact score of the diffused empirical distribution of reference graphs.

    p_t(g) = (1/M) sum_i N(g; a_t * G0_i, sigma_t^2 I). Responsibilities use
    log-sum-exp with max subtraction; sigma_t^2 is tiny near t = 0 and the
    naive softmax underflows there.
    """

    def __init__(self, schedule: NoiseSchedule, atoms: list[GraphState]):
        if len(atoms) < 1:
            raise ValueError("mixture prior needs at least one atom")
        first = atoms[0]
        for atom in atoms:
            if atom.shape != first.shape:
                raise ValueError("all atoms must share node/feature counts")
        super().__init__(schedule, first.n_nodes, first.n_features)
        self.atoms = list(atoms)
        self._atom_mat = np.stack([a.to_full_vector() for a in atoms])  # (M, D)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def _log_weights(self, g_vec: np.ndarray, t: int) -> np.ndarray:
        a_t, sigma_t = self._coeffs(t)
        diffs = g_vec[None, :] - a_t * self._atom_mat
        logits = -0.5 * np.einsum("md,md->m", diffs, diffs) / sigma_t**2
        return logits

    def responsibilities(self, g: GraphState, t: int) -> np.ndarray:
        self._check_state(g)
        logits = self._log_weights(g.to_full_vector(), t)
        logits = logits - logits.max()
        w = np.exp(logits)
        return w / w.sum()

    def score(self, g: GraphState, t: int) -> GraphState:
        self._check_state(g)
        a_t, sigma_t = self._coeffs(t)
        g_vec = g.to_full_vector()
        w = self.responsibilities(g, t)
        score_vec = (a_t * (w @ self._atom_mat) - g_vec) / sigma_t**2
        return GraphState.from_full_vector(score_vec, self.n_nodes, self.n_features)

    def log_marginal(self, g: GraphState, t: int) -> float:
        self._check_state(g)
        logits = self._log_weights(g.to_full_vector(), t)
        m = logits.max()
        return float(m + np.log(np.exp(logits - m).sum()) - np.log(self.n_atoms))

    def denoise(self, g: GraphState, t: int) -> GraphState:
        # Posterior mean over atoms: responsibilities @ atoms. Equivalent to
        # the generic Tweedie formula but avoids the 1/a_t amplification.
        self._check_state(g)
        a_t, _ = self._coeffs(t)
        if a_t < MIN_MARGINAL_SCALE:
            raise NumericalDomainError(
                f"marginal scale {a_t:.3e} at t={t} too small for denoising"
            )
        w = self.responsibilities(g, t)
        return GraphState.from_full_vector(
            w @ self._atom_mat, self.n_nodes, self.n_features
        )

    def denoiser_vjp(self, g: GraphState, t: int, cotangent: GraphState) -> GraphState:
        # J = (a_t / sigma_t^2) (sum_i w_i v_i v_i^T - vbar vbar^T); applied as
        # two weighted passes over the atom matrix, never materializing J.
        self._check_state(g)
        a_t, sigma_t = self._coeffs(t)
        w = self.responsibilities(g, t)
        c_vec = cotangent.to_full_vector()
        atom_dot_c = self._atom_mat @ c_vec
        vbar = w @ self._atom_mat
        out = (a_t / sigma_t**2) * (
            (w * atom_dot_c) @ self._atom_mat - (vbar @ c_vec) * vbar
        )
        return GraphState.from_full_vector(out, self.n_nodes, self.n_features)
