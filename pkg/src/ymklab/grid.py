"""Flat periodic grids and exact spectral calculus for scalar components.

All fields in this package are sampled on uniform tensor grids over a flat
torus [0, L_1) x ... x [0, L_n).  Partial derivatives are Fourier multipliers
(exact on band-limited data), integration is the trapezoid rule (exact on
band-limited data), and pointwise products are pushed back under a sharp
spectral cutoff so aliasing never contaminates quadratic quantities.
"""

import numpy as np

_ALLOWED_DIMS = (1, 2, 3, 4)


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


class TorusGrid:
    """A uniform periodic grid on a flat torus.

    Parameters
    ----------
    sizes : sequence of int
        Points per axis N_a.  Each must be a power of two, at least 8.
    lengths : sequence of float, optional
        Circumferences L_a.  Defaults to 1.0 per axis.
    band_limit : int or sequence of int, optional
        Largest retained absolute integer mode per axis.  Defaults to
        floor(N_a / 3) (the classical two-thirds dealiasing rule) and may
        not exceed N_a / 2 - 1.
    """

    def __init__(self, sizes, lengths=None, band_limit=None):
        sizes = tuple(int(s) for s in np.atleast_1d(sizes))
        if len(sizes) not in _ALLOWED_DIMS:
            raise ValueError(f"grid dimension must be 1..4, got {len(sizes)}")
        for s in sizes:
            if s < 8 or not _is_power_of_two(s):
                raise ValueError(f"grid sizes must be powers of two >= 8, got {s}")
        if lengths is None:
            lengths = (1.0,) * len(sizes)
        lengths = tuple(float(l) for l in np.atleast_1d(lengths))
        if len(lengths) != len(sizes):
            raise ValueError("lengths and sizes must have matching dimension")
        if any(l <= 0 for l in lengths):
            raise ValueError("torus circumferences must be positive")

        if band_limit is None:
            band = tuple(s // 3 for s in sizes)
        else:
            b = np.atleast_1d(band_limit)
            if b.size == 1:
                band = (int(b[0]),) * len(sizes)
            else:
                band = tuple(int(x) for x in b)
        for bb, s in zip(band, sizes):
            if not (1 <= bb <= s // 2 - 1):
                raise ValueError(
                    f"band_limit must lie in [1, N/2-1]; got {bb} for N={s}")

        self.sizes = sizes
        self.lengths = lengths
        self.band_limit = band
        self.dim = len(sizes)
        self.spacing = tuple(L / N for L, N in zip(lengths, sizes))
        self.cell_volume = float(np.prod(self.spacing))
        self.volume = float(np.prod(lengths))

        # integer modes and angular wavenumbers per axis, fftfreq order
        self._modes = [np.rint(np.fft.fftfreq(N) * N).astype(int) for N in sizes]
        self._kappa = [2.0 * np.pi * m / L for m, L in zip(self._modes, lengths)]

        mask = np.ones(sizes, dtype=bool)
        for a, (m, bb) in enumerate(zip(self._modes, band)):
            keep = np.abs(m) <= bb
            mask &= self._expand(keep, a, 0)
        self._mask = mask

    # -- layout helpers ----------------------------------------------------

    def _expand(self, arr1d, axis, fiber_ndim):
        """Reshape a per-axis 1d array so it broadcasts over a field whose
        spatial axes are the last `dim` axes before `fiber_ndim` trailing ones."""
        shape = [1] * (self.dim + fiber_ndim)
        shape[axis] = self.sizes[axis]
        return arr1d.reshape(shape)

    def spatial_axes(self, fiber_ndim):
        start = -self.dim - fiber_ndim
        return tuple(range(start, start + self.dim))

    def modes(self, axis):
        return self._modes[axis]

    def kappa(self, axis):
        return self._kappa[axis]

    def axis_points(self, axis):
        N, L = self.sizes[axis], self.lengths[axis]
        return np.arange(N) * (L / N)

    def meshes(self):
        return np.meshgrid(*(self.axis_points(a) for a in range(self.dim)),
                           indexing="ij")

    def same_layout(self, other):
        return (self.sizes == other.sizes and self.lengths == other.lengths
                and self.band_limit == other.band_limit)

    def __repr__(self):
        return (f"TorusGrid(sizes={self.sizes}, lengths={self.lengths}, "
                f"band_limit={self.band_limit})")

    def describe(self):
        return {"sizes": list(self.sizes), "lengths": list(self.lengths),
                "band_limit": list(self.band_limit)}

    # -- spectral primitives ------------------------------------------------

    def dealias(self, values, fiber_ndim=2):
        """Project samples onto the retained band (sharp Fourier cutoff)."""
        axes = self.spatial_axes(fiber_ndim)
        hat = np.fft.fftn(values, axes=axes)
        hat *= self._mask.reshape(self._mask.shape + (1,) * fiber_ndim)
        return np.fft.ifftn(hat, axes=axes)


def spectral_partial(grid, values, axis, fiber_ndim=2, order=1):
    """Exact partial derivative along a torus axis via the FFT.

    `values` must carry the grid's spatial axes as its last `dim` axes
    before `fiber_ndim` trailing fiber axes.  Band-limited inputs are
    differentiated exactly (to round-off).
    """
    axes = grid.spatial_axes(fiber_ndim)
    hat = np.fft.fftn(values, axes=axes)
    mult = (1j * grid.kappa(axis)) ** order
    hat *= grid._expand(mult, axis, fiber_ndim)
    return np.fft.ifftn(hat, axes=axes)


def integrate(grid, density):
    """Trapezoid quadrature of a scalar density sampled on the grid.

    On a periodic uniform grid this is the plain Riemann sum times the cell
    volume, and it is exact for densities whose total bandwidth is below the
    grid's Nyquist mode.
    """
    density = np.asarray(density)
    if density.shape[-grid.dim:] != grid.sizes:
        raise ValueError("density shape does not match grid sizes")
    return density.sum(axis=tuple(range(-grid.dim, 0))) * grid.cell_volume


def ball_mask(grid, center, radius):
    """Boolean mask of grid points within `radius` of `center`, with distance
    measured by the minimum image (torus) metric."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.shape != (grid.dim,):
        raise ValueError("center must have one coordinate per axis")
    d2 = np.zeros(grid.sizes)
    for a in range(grid.dim):
        delta = np.abs(grid.axis_points(a) - center[a])
        delta = np.minimum(delta, grid.lengths[a] - delta)
        d2 = d2 + grid._expand(delta, a, 0) ** 2
    return d2 <= radius ** 2
