"""2D half-spectrum transforms and the dealiased Poisson bracket.

Conventions
-----------
A spectrum is a complex array indexed ``[ky][kx]`` (leading batch axes
allowed).  Rows hold the nonnegative toroidal modes ky = 0 .. n_ky-1; the
negative-ky half plane is implied by conjugate symmetry, which is what a
complex-to-real transform pair encodes.  Columns hold the full signed
radial range in FFT wrap order::

    kx = 0, 1, ..., ceil(n_kx/2) - 1, -floor(n_kx/2), ..., -1

A real field is a real array indexed ``[y][x]``.

Synthesis (:func:`to_real`) is the plain mode sum

    field(x, y) = sum_k c(k) exp(i k . x)

evaluated on the target grid, so a unit coefficient yields a
unit-amplitude wave no matter how far the grid is padded.  Analysis
(:func:`to_spectrum`) divides the unscaled forward transform by the grid
point count, making it the exact inverse of synthesis on retained modes.

The direct-summation oracle pair (:func:`dft_oracle_2d`,
:func:`idft_oracle_2d`) uses the bare DFT convention instead: forward
unscaled, inverse divided by n_x*n_y.  The two conventions differ only by
the grid point count; tests pin the relation down.

The unpaired Nyquist column
---------------------------
For even n_kx the column kx = -n_kx/2 has no +n_kx/2 partner inside the
retained window, so complex content there cannot describe a real-valued
field.  Whenever a spectrum is embedded into a larger grid or truncated
out of one, that column is therefore zeroed; a same-size transform keeps
it (there it is self-paired).  Derivatives zero it unconditionally, which
is also what keeps the bracket's antisymmetry exact.
"""

from __future__ import annotations

import numpy as np

from .padding import PaddedPlan, dealias_minimum, plan_padded_size, DEFAULT_PRIMES, DEFAULT_RULE


def kx_values(n_kx: int) -> np.ndarray:
    """Signed radial wavenumbers in FFT wrap order."""
    k = np.arange(n_kx)
    return np.where(k < (n_kx + 1) // 2, k, k - n_kx)


def kx_derivative_values(n_kx: int) -> np.ndarray:
    """Derivative wavenumbers: as kx_values but with the Nyquist entry zeroed."""
    k = kx_values(n_kx).astype(float)
    if n_kx % 2 == 0:
        k[n_kx // 2] = 0.0
    return k


def _nyquist_column(n_kx: int):
    """Wrap-order index of the unpaired kx Nyquist column, or None."""
    return n_kx // 2 if n_kx % 2 == 0 else None


def dft_oracle_2d(field: np.ndarray) -> np.ndarray:
    """Forward transform of a real field by direct summation.

    Returns the unscaled half spectrum: rows ky = 0 .. n_y//2, columns the
    full kx range in wrap order.  O(N^2) per output point by construction
    (dense exponential matrices, no FFT anywhere), so it serves as an
    independent oracle for the production transforms.
    """
    field = np.asarray(field, dtype=float)
    n_y, n_x = field.shape
    y = np.arange(n_y)
    x = np.arange(n_x)
    ky = np.arange(n_y // 2 + 1)
    wy = np.exp(-2j * np.pi * np.outer(ky, y) / n_y)
    wx = np.exp(-2j * np.pi * np.outer(np.arange(n_x), x) / n_x)
    return wy @ field.astype(complex) @ wx.T


def idft_oracle_2d(spec: np.ndarray, n_y: int) -> np.ndarray:
    """Inverse of :func:`dft_oracle_2d` by direct summation, divided by n_x*n_y.

    Rows beyond the stored half are reconstructed from conjugate symmetry
    before the sum; rows whose mirror is also missing stay zero, so a
    spectrum already embedded in a larger half grid inverts correctly.
    """
    spec = np.asarray(spec, dtype=complex)
    m, n_x = spec.shape
    if m > n_y // 2 + 1:
        raise ValueError(f"{m} spectral rows do not fit a grid of {n_y} points")
    neg = (-np.arange(n_x)) % n_x
    full = np.zeros((n_y, n_x), dtype=complex)
    full[:m] = spec
    for row in range(m, n_y):
        mirror = n_y - row
        if 1 <= mirror < m:
            full[row] = np.conj(spec[mirror][neg])
    y = np.arange(n_y)
    x = np.arange(n_x)
    ey = np.exp(2j * np.pi * np.outer(y, np.arange(n_y)) / n_y)
    ex = np.exp(2j * np.pi * np.outer(x, np.arange(n_x)) / n_x)
    out = ey @ full @ ex.T / (n_x * n_y)
    return out.real


def _check_sizes(n_kx, n_ky, n_x, n_y):
    if n_kx > n_x:
        raise ValueError(f"{n_kx} radial modes do not fit a grid of {n_x} points")
    if n_ky > n_y // 2 + 1:
        raise ValueError(f"{n_ky} toroidal modes do not fit a grid of {n_y} points")


def to_real(spec: np.ndarray, n_x: int, n_y: int) -> np.ndarray:
    """Synthesize a real field of shape (..., n_y, n_x) from retained modes.

    Zero-embeds the spectrum into the padded half grid and applies the
    inverse complex-to-real transform, rescaled so coefficients keep their
    amplitude (padding must not rescale modes).  Given Hermitian input the
    output is real to machine precision; anti-Hermitian content in the
    ky = 0 row is not representable and is projected out.

    Raises:
        ValueError: target grid smaller than the spectrum.
    """
    spec = np.asarray(spec, dtype=complex)
    n_ky, n_kx = spec.shape[-2:]
    _check_sizes(n_kx, n_ky, n_x, n_y)
    half = np.zeros(spec.shape[:-2] + (n_y // 2 + 1, n_x), dtype=complex)
    cols = kx_values(n_kx) % n_x
    half[..., :n_ky, cols] = spec
    if n_kx % 2 == 0 and n_x > n_kx:
        half[..., :n_ky, (-(n_kx // 2)) % n_x] = 0.0
    tmp = np.fft.ifft(half, axis=-1)
    field = np.fft.irfft(tmp, n=n_y, axis=-2)
    return field * (n_x * n_y)


def to_spectrum(field: np.ndarray, n_kx: int, n_ky: int) -> np.ndarray:
    """Retained modes of a real field, shape (..., n_ky, n_kx).

    Forward transform divided by the grid point count, then truncated, so
    that to_spectrum(to_real(S, nx, ny), n_kx, n_ky) == S on retained
    modes.  Truncation out of a strictly larger grid zeroes the unpaired
    Nyquist column (see module docstring).

    Raises:
        ValueError: more modes requested than the field resolves.
    """
    field = np.asarray(field, dtype=float)
    n_y, n_x = field.shape[-2:]
    _check_sizes(n_kx, n_ky, n_x, n_y)
    half = np.fft.fft(np.fft.rfft(field, axis=-2), axis=-1)
    cols = kx_values(n_kx) % n_x
    out = half[..., :n_ky, cols] / (n_x * n_y)
    nyq = _nyquist_column(n_kx)
    if nyq is not None and n_x > n_kx:
        out[..., nyq] = 0.0
    return out


def hermitian_ky0(spec: np.ndarray) -> np.ndarray:
    """Project the ky = 0 row onto its Hermitian part (in place semantics: returns a copy).

    The complex-to-real convention cannot carry anti-Hermitian ky = 0
    content; this makes that projection explicit for oracle comparisons.
    """
    spec = np.array(spec, dtype=complex)
    n_kx = spec.shape[-1]
    rev = (-np.arange(n_kx)) % n_kx
    row = spec[..., 0, :]
    spec[..., 0, :] = 0.5 * (row + np.conj(row[..., rev]))
    return spec


def is_hermitian(spec: np.ndarray, tol: float = 1e-12) -> bool:
    """True when the ky = 0 row is Hermitian in kx within an absolute tolerance."""
    spec = np.asarray(spec)
    n_kx = spec.shape[-1]
    rev = (-np.arange(n_kx)) % n_kx
    row = spec[..., 0, :]
    return bool(np.max(np.abs(row - np.conj(row[..., rev]))) <= tol)


def random_spectrum(n_kx: int, n_ky: int, gen: np.random.Generator) -> np.ndarray:
    """Random spectrum describing a real field.

    Components uniform in [-1, 1]; the ky = 0 row is Hermitianized and,
    for even n_kx, the unpaired Nyquist column is zeroed, so the result
    survives a synthesis round trip exactly.
    """
    re = gen.uniform(-1.0, 1.0, (n_ky, n_kx))
    im = gen.uniform(-1.0, 1.0, (n_ky, n_kx))
    spec = hermitian_ky0(re + 1j * im)
    nyq = _nyquist_column(n_kx)
    if nyq is not None:
        spec[..., nyq] = 0.0
    return spec


def min_padded_x(n_kx: int) -> int:
    """Alias-free transform size for the radial dimension (3/2 rule)."""
    return dealias_minimum(n_kx, DEFAULT_RULE)


def min_padded_y(n_ky: int) -> int:
    """Alias-free transform size for the toroidal dimension.

    The half spectrum spans 2*n_ky - 1 signed modes, so quadratic products
    reach |ky| = 2(n_ky - 1) and the grid must exceed 3(n_ky - 1) points.
    """
    return 3 * n_ky - 2


def bracket_plans(n_kx: int, n_ky: int, rule=DEFAULT_RULE, allowed_primes=DEFAULT_PRIMES):
    """Padded-size plans (plan_x, plan_y) for bracket on an n_kx x n_ky spectrum.

    The y plan is built from the full signed toroidal extent 2*n_ky - 1,
    which is what the dealias rule applies to for a half spectrum.
    """
    plan_x = plan_padded_size(n_kx, rule, allowed_primes)
    plan_y = plan_padded_size(2 * n_ky - 1, rule, allowed_primes)
    return plan_x, plan_y


def _plan_size(plan) -> int:
    return plan.n_padded if isinstance(plan, PaddedPlan) else int(plan)


def bracket(f: np.ndarray, g: np.ndarray, plan_x, plan_y) -> np.ndarray:
    """Dealiased Poisson bracket {f, g} = (dx f)(dy g) - (dy f)(dx g).

    Computed pseudo-spectrally: spectral derivatives (multiply by i*k with
    the radial Nyquist coefficient zeroed), synthesis on the padded grid,
    pointwise products, truncation back to retained modes.  With plans
    satisfying the dealias bounds the result equals the true quadratic
    convolution truncated to retained modes, with no aliased terms.

    Args:
        f, g: spectra of identical logical shape; leading batch dimensions
            broadcast against each other.
        plan_x: PaddedPlan (or plain size) with n_padded >= ceil(3*n_kx/2).
        plan_y: PaddedPlan (or plain size) with n_padded >= 3*n_ky - 2.

    Raises:
        ValueError: shape mismatch or plan below its dealias bound.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if f.shape[-2:] != g.shape[-2:]:
        raise ValueError(f"logical shapes differ: {f.shape[-2:]} vs {g.shape[-2:]}")
    n_ky, n_kx = f.shape[-2:]
    n_x = _plan_size(plan_x)
    n_y = _plan_size(plan_y)
    if n_x < min_padded_x(n_kx):
        raise ValueError(f"plan_x size {n_x} below dealias bound {min_padded_x(n_kx)}")
    if n_y < min_padded_y(n_ky):
        raise ValueError(f"plan_y size {n_y} below dealias bound {min_padded_y(n_ky)}")

    ikx = 1j * kx_derivative_values(n_kx)
    iky = 1j * np.arange(n_ky, dtype=float)[:, None]
    fx = to_real(f * ikx, n_x, n_y)
    fy = to_real(f * iky, n_x, n_y)
    gx = to_real(g * ikx, n_x, n_y)
    gy = to_real(g * iky, n_x, n_y)
    return to_spectrum(fx * gy - fy * gx, n_kx, n_ky)
