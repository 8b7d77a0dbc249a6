"""
Resolution-adaptive PSNR across sampling densities
==================================================

The precision peak only knows the coordinate range, so the same absolute
noise yields the same score no matter how densely the surface is sampled.
The resolution-adaptive form rescales by the cloud's own spacing and
separates the two cases.
"""

import numpy as np

from pcqa import (
    ErrorKind,
    PointCloud,
    ResolutionEstimator,
    ann,
    density_coefficient,
    psnr,
    ra_psnr,
    PeakSpec,
)

rng = np.random.default_rng(5)
BITS = 10
CENTER = (2**BITS - 1) / 2.0


def voxel_sphere(n, radius=300.0):
    i = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / n)
    theta = np.pi * (1.0 + 5.0**0.5) * i
    pts = radius * np.column_stack(
        [np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)]
    )
    return PointCloud(np.unique(np.round(pts + CENTER), axis=0), bit_depth=BITS)


dense = voxel_sphere(4000)
sparse = voxel_sphere(500)
sigma = 2.0
dense_deg = PointCloud(dense.points + rng.normal(0.0, sigma, dense.points.shape))
sparse_deg = PointCloud(sparse.points + rng.normal(0.0, sigma, sparse.points.shape))

print(f"dense:  {len(dense)} points, spacing (ann) {ann(dense):.2f}")
print(f"sparse: {len(sparse)} points, spacing (ann) {ann(sparse):.2f}")
print(f"both degraded with sigma = {sigma}\n")

for name, ref, deg in (("dense", dense, dense_deg), ("sparse", sparse, sparse_deg)):
    fixed = psnr(ref, deg, ErrorKind.PO2PO, PeakSpec.precision()).psnr_pooled
    adaptive = ra_psnr(ref, deg, ErrorKind.PO2PO, ResolutionEstimator.ANN).psnr_pooled
    mu = density_coefficient(BITS, ann(ref))
    print(f"{name:<7} precision PSNR {fixed:7.3f} dB | RA-PSNR (ann) "
          f"{adaptive:7.3f} dB | density coefficient {mu:7.1f}")

print("""
The precision-peak scores are nearly identical -- by that metric the two
degradations look equally severe.  RA-PSNR credits the sparse cloud, whose
spacing dwarfs the jitter, and penalizes the dense one, where the same
jitter is large relative to the spacing a viewer would resolve.
""")

# The adaptive peak defaults to the rendering resolution (tangent-plane
# spacing, apd_k) rather than plain ann, and works for po2pl as well:
best = ra_psnr(dense, dense_deg, ErrorKind.PO2PL)
print(f"dense po2pl RA-PSNR (apd_k, k=10): {best.psnr_pooled:.3f} dB "
      f"[peak spec {best.peak.label}, r = {best.peak_value:.3f}]")

# Two equivalent evaluations: scale the numerator by the resolution
# directly, or divide the precision numerator by the density coefficient.
# Algebraically identical; both are exposed, and they agree to rounding.
a = ra_psnr(dense, dense_deg, ErrorKind.PO2PO, ResolutionEstimator.ANN)
b = ra_psnr(dense, dense_deg, ErrorKind.PO2PO, ResolutionEstimator.ANN,
            via_density_coefficient=True)
print(f"direct vs density-coefficient route: {a.psnr_pooled:.12f} vs "
      f"{b.psnr_pooled:.12f} (|diff| = {abs(a.psnr_pooled - b.psnr_pooled):.2g} dB)")
