"""Feature-space perturbations applied to fused message embeddings during
training, plus the probabilistic mixer that decides per sample whether the
perturbed or original row is used.

Five methods:

* ``gp``   -- additive Gaussian noise with fixed standard deviation.
* ``pgp``  -- noise scaled elementwise by the feature values themselves.
* ``idgp`` -- noise scaled by the per-dimension standard deviation of the
  training set, so low-variance dimensions receive little noise.
* ``cgp``  -- Gaussian noise clamped to [-clip_c, clip_c]. Clamping censors
  the distribution (probability mass collects at the bounds rather than
  being redistributed inside them).
* ``fdp``  -- transform each embedding to the frequency domain, keep a
  subset of frequency bins, add complex noise there, transform back.

All functions accept a single row vector or a 2-D batch (rows perturbed
independently) and are pure given (input, parameters, rng).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import EmbeddingMatrix

METHODS = ("GP", "PGP", "IDGP", "CGP", "FDP")
FDP_MODES = ("high", "low", "band")


@dataclass(frozen=True)
class PerturbationConfig:
    """All implicit-augmentation hyperparameters.

    ``alpha`` is the per-row mixing probability; ``alpha_var`` controls the
    IDGP noise variance (the two roles are deliberately separate fields).
    Zero values for the noise parameters are allowed and give the identity
    perturbation.
    """

    method: str = "GP"
    alpha: float = 0.3
    sigma: float = 0.01
    clip_c: float = 0.005
    alpha_var: float = 0.01
    keep_ratio: float = 0.98
    noise_level: float = 0.02
    fdp_mode: str = "high"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.fdp_mode not in FDP_MODES:
            raise ValueError(f"fdp_mode must be one of {FDP_MODES}, got {self.fdp_mode!r}")
        checks = [
            ("alpha", self.alpha, 0.0, 1.0),
            ("sigma", self.sigma, 0.0, math.inf),
            ("clip_c", self.clip_c, 0.0, math.inf),
            ("alpha_var", self.alpha_var, 0.0, math.inf),
            ("noise_level", self.noise_level, 0.0, math.inf),
        ]
        for name, value, lo, hi in checks:
            if not math.isfinite(value) or value < lo or value > hi:
                raise ValueError(f"{name} must be finite in [{lo}, {hi}], got {value}")
        if not (0.0 < self.keep_ratio <= 1.0) or not math.isfinite(self.keep_ratio):
            raise ValueError(f"keep_ratio must be in (0, 1], got {self.keep_ratio}")

    def with_overrides(self, **kwargs) -> "PerturbationConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class DatasetStats:
    """Per-dimension population standard deviation of the training embeddings."""

    std: np.ndarray
    count: int

    @property
    def dim(self) -> int:
        return self.std.shape[0]


def dataset_std(matrix) -> DatasetStats:
    """Population standard deviation per dimension (divide by n).

    Computed once over the training-split fused embeddings, never per batch.
    """
    values = matrix.values if isinstance(matrix, EmbeddingMatrix) else np.asarray(matrix)
    if values.ndim != 2 or values.shape[0] < 1:
        raise ValueError("need a non-empty 2-D matrix")
    return DatasetStats(std=values.astype(np.float64).std(axis=0, ddof=0),
                        count=values.shape[0])


def gp(g, sigma: float, rng: np.random.Generator):
    """Additive noise: out = g + n with n ~ Normal(0, sigma^2) elementwise."""
    g = np.asarray(g, dtype=np.float64)
    return g + rng.normal(0.0, sigma, size=g.shape)


def pgp(g, sigma: float, rng: np.random.Generator):
    """Proportional noise: out_j = g_j + eps_j * g_j, eps ~ Normal(0, sigma^2).

    The perturbation magnitude scales with each feature value, so zero
    features stay zero and large features receive proportionally more noise.
    """
    g = np.asarray(g, dtype=np.float64)
    eps = rng.normal(0.0, sigma, size=g.shape)
    return g + eps * g


def idgp(g, stats: DatasetStats, alpha_var: float, rng: np.random.Generator):
    """In-distribution noise: n_j ~ Normal(0, alpha_var * std_j^2).

    ``std_j`` comes from :func:`dataset_std` over the training set, adapting
    the noise magnitude to each dimension's natural variability.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.shape[-1] != stats.dim:
        raise ValueError(f"vector dim {g.shape[-1]} != stats dim {stats.dim}")
    scale = math.sqrt(alpha_var) * stats.std
    return g + rng.normal(0.0, 1.0, size=g.shape) * scale


def cgp(g, sigma: float, clip_c: float, rng: np.random.Generator):
    """Clamped noise: n ~ Normal(0, sigma^2) clipped to [-clip_c, clip_c]."""
    g = np.asarray(g, dtype=np.float64)
    if clip_c < 0:
        raise ValueError(f"clip_c must be >= 0, got {clip_c}")
    noise = np.clip(rng.normal(0.0, sigma, size=g.shape), -clip_c, clip_c)
    return g + noise


def frequency_mask(dim: int, keep_ratio: float, mode: str) -> np.ndarray:
    """Boolean keep-mask over the two-sided frequency spectrum of length dim.

    Bins are grouped into conjugate classes by |frequency|: {0}, {k, dim-k}
    for 0 < k < dim/2, and {dim/2} when dim is even. Whole classes are kept
    or dropped so the mask is always conjugate-symmetric and a real input
    stays real after filtering.

    * ``low``  keeps classes of smallest |frequency|,
    * ``high`` keeps classes of largest |frequency|,
    * ``band`` drops classes from both ends (low end first when the drop
      budget is odd),

    in each case covering at least floor(keep_ratio * dim) bins with the
    fewest whole classes. keep_ratio = 1 keeps every bin.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if mode not in FDP_MODES:
        raise ValueError(f"mode must be one of {FDP_MODES}, got {mode!r}")
    target = int(math.floor(keep_ratio * dim + 1e-9))

    classes = [[0]]
    for k in range(1, (dim + 1) // 2):
        classes.append([k, dim - k])
    if dim % 2 == 0:
        classes.append([dim // 2])

    mask = np.zeros(dim, dtype=bool)
    if mode in ("low", "high"):
        ordered = classes if mode == "low" else classes[::-1]
        kept = 0
        for cls in ordered:
            if kept >= target:
                break
            mask[cls] = True
            kept += len(cls)
    else:
        drop_budget = dim - target
        drop_low = (drop_budget + 1) // 2
        drop_high = drop_budget - drop_low
        lo, hi = 0, len(classes) - 1
        dropped = 0
        while lo <= hi and dropped + len(classes[lo]) <= drop_low:
            dropped += len(classes[lo])
            lo += 1
        dropped = 0
        while hi >= lo and dropped + len(classes[hi]) <= drop_high:
            dropped += len(classes[hi])
            hi -= 1
        for cls in classes[lo:hi + 1]:
            mask[cls] = True
    return mask


def fdp_spectrum(g, keep_ratio: float, eta: float, mode: str, sigma: float,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Filtered and noised frequency-domain representation of g.

    Kept bins receive complex noise (Normal(0, sigma^2) + i Normal(0, sigma^2))
    * eta, mirrored conjugate-symmetrically; self-conjugate bins (0 and the
    Nyquist bin for even lengths) receive real noise only. Dropped bins are
    zero-filled so the output length is preserved.
    """
    g = np.asarray(g, dtype=np.float64)
    dim = g.shape[-1]
    if dim < 2:
        raise ValueError(f"vector length must be >= 2, got {dim}")
    mask = frequency_mask(dim, keep_ratio, mode)
    spectrum = np.fft.fft(g, axis=-1)
    spectrum = np.where(mask, spectrum, 0.0)

    if eta != 0.0 and sigma != 0.0:
        if rng is None:
            raise ValueError("rng required when eta and sigma are nonzero")
        canonical = [j for j in range(dim // 2 + 1) if mask[j]]
        shape = g.shape[:-1] + (len(canonical),)
        real = rng.normal(0.0, sigma, size=shape)
        imag = rng.normal(0.0, sigma, size=shape)
        noise = np.zeros(g.shape[:-1] + (dim,), dtype=np.complex128)
        for pos, j in enumerate(canonical):
            if j == 0 or 2 * j == dim:
                noise[..., j] = real[..., pos] * eta
            else:
                n = (real[..., pos] + 1j * imag[..., pos]) * eta
                noise[..., j] = n
                noise[..., dim - j] = np.conj(n)
        spectrum = spectrum + noise
    return spectrum


def fdp(g, keep_ratio: float, eta: float, mode: str, sigma: float,
        rng: np.random.Generator | None = None):
    """Frequency-domain perturbation: filter the spectrum of each embedding,
    add complex noise to the kept bins, and transform back to a real vector
    of the original length."""
    spectrum = fdp_spectrum(g, keep_ratio, eta, mode, sigma, rng)
    return np.fft.ifft(spectrum, axis=-1).real


def perturb(g, config: PerturbationConfig, stats: DatasetStats | None,
            rng: np.random.Generator):
    """Apply the configured perturbation method to all rows of g."""
    method = config.method
    if method == "GP":
        return gp(g, config.sigma, rng)
    if method == "PGP":
        return pgp(g, config.sigma, rng)
    if method == "IDGP":
        if stats is None:
            raise ValueError("IDGP requires dataset statistics")
        return idgp(g, stats, config.alpha_var, rng)
    if method == "CGP":
        return cgp(g, config.sigma, config.clip_c, rng)
    if method == "FDP":
        return fdp(g, config.keep_ratio, config.noise_level, config.fdp_mode,
                   config.sigma, rng)
    raise ValueError(f"unknown method {method!r}")


def mix_rows(x: np.ndarray, config: PerturbationConfig,
             stats: DatasetStats | None, rng: np.random.Generator,
             method: str | None = None) -> np.ndarray:
    """Per row, draw p ~ Uniform(0,1); rows with p < alpha are replaced by
    their perturbed version, the rest pass through bit-identically.

    Draw order is fixed: all p first, then the perturbation noise, so the
    output is fully determined by (x, config, rng).
    """
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError("mix operates on a 2-D batch")
    if method is not None:
        config = config.with_overrides(method=method)
    p = rng.uniform(0.0, 1.0, size=x.shape[0])
    chosen = p < config.alpha
    if not chosen.any():
        return x.copy()
    out = x.astype(np.float64, copy=True)
    out[chosen] = perturb(x[chosen], config, stats, rng)
    return out.astype(x.dtype, copy=False) if x.dtype != np.float64 else out


def mix(batch: EmbeddingMatrix, method: str | None,
        config: PerturbationConfig, stats: DatasetStats | None,
        rng: np.random.Generator) -> EmbeddingMatrix:
    """Mixer over an embedding matrix; see :func:`mix_rows`."""
    mixed = mix_rows(batch.values, config, stats, rng, method=method)
    return EmbeddingMatrix(batch.ids, mixed)
