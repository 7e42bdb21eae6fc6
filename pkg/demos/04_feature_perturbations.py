"""The five feature-space perturbations and the probabilistic mixer.

GP adds fixed-scale noise, PGP scales noise with the feature values, IDGP
adapts it to the per-dimension spread of the dataset, CGP clamps the noise,
and FDP filters and noises the frequency spectrum of each embedding.
"""
import numpy as np

from eventaug import (PerturbationConfig, cgp, dataset_std, fdp,
                      frequency_mask, gp, idgp, mix_rows, pgp)

rng = np.random.default_rng(11)
data = rng.normal(size=(5000, 64)) * rng.uniform(0.2, 2.0, size=64)
stats = dataset_std(data)
row = data[0]

print(f"dataset: {data.shape}, per-dim std range "
      f"[{stats.std.min():.2f}, {stats.std.max():.2f}]")

out_gp = gp(row, 0.1, np.random.default_rng(1))
out_pgp = pgp(row, 0.1, np.random.default_rng(2))
out_idgp = idgp(row, stats, 0.01, np.random.default_rng(3))
out_cgp = cgp(row, 0.1, 0.05, np.random.default_rng(4))
out_fdp = fdp(row, 0.98, 0.02, "high", 0.1, np.random.default_rng(5))
for name, out in (("GP", out_gp), ("PGP", out_pgp), ("IDGP", out_idgp),
                  ("CGP", out_cgp), ("FDP", out_fdp)):
    delta = out - row
    print(f"  {name:4s} max|delta|={np.abs(delta).max():.4f} "
          f"rms={np.sqrt((delta ** 2).mean()):.4f}")

print("\nCGP deltas never exceed the clip bound:",
      np.abs(cgp(np.zeros(100_000), 0.1, 0.05, np.random.default_rng(6))).max())

mask = frequency_mask(16, 0.5, "low")
print("FDP low-pass mask for dim 16, r=0.5:", np.flatnonzero(mask).tolist())

# the mixer replaces each row with its perturbed version with probability
# alpha and leaves it untouched otherwise
config = PerturbationConfig(method="GP", alpha=0.3, sigma=0.1)
mixed = mix_rows(data, config, stats, np.random.default_rng(7))
touched = (mixed != data).any(axis=1).mean()
print(f"\nmixer with alpha=0.3 perturbed {touched:.1%} of rows")
