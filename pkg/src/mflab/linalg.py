"""Dense complex linear algebra kernel.

All operators are plain ``numpy.ndarray`` matrices in row-major layout with a
big-endian flattening convention for tensor factors: the composite index of a
multi-index (i_1, ..., i_m) is sum_j i_j * prod_{j'>j} d_{j'}, i.e. the first
factor is the slowest.  This matches ``numpy.reshape`` in C order and
``numpy.kron``, so one global convention covers every tensor operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadFactorIndex,
    ConvergenceFailure,
    InvalidDensityMatrix,
    NonHermitianInput,
    NotPSD,
    ShapeMismatch,
    SizeBudgetExceeded,
)

# Desk-scale budgets: N-body operators stay below dim 20000, lifted state
# vectors below dim 200000.
NBODY_DIM_BUDGET = 20000
LIFTED_DIM_BUDGET = 200000

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A*)/2; used to strip roundoff-level asymmetry."""
    return (a + a.conj().T) / 2


def as_complex_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ShapeMismatch("matrix contains NaN or Inf entries")
    return m


@dataclass(frozen=True)
class TensorShape:
    """Ordered local dimensions of a tensor-factored space."""

    factors: tuple[int, ...]

    def __post_init__(self):
        if not self.factors or any(int(d) < 1 for d in self.factors):
            raise ShapeMismatch(f"invalid tensor factors {self.factors}")
        object.__setattr__(self, "factors", tuple(int(d) for d in self.factors))

    @property
    def dim(self) -> int:
        return math.prod(self.factors)

    def __len__(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class PureState:
    """Normalized state vector together with its tensor factorization."""

    amplitudes: np.ndarray
    shape: TensorShape

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if amps.size != self.shape.dim:
            raise ShapeMismatch(
                f"amplitude length {amps.size} != shape dim {self.shape.dim}"
            )
        nrm = float(np.linalg.norm(amps))
        if abs(nrm - 1.0) > NORM_TOL:
            raise ShapeMismatch(f"state norm {nrm} deviates from 1 beyond {NORM_TOL}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.shape.factors)


def pure_state(amplitudes, shape: TensorShape | tuple, normalize: bool = False) -> PureState:
    if not isinstance(shape, TensorShape):
        shape = TensorShape(tuple(shape))
    amps = np.asarray(amplitudes, dtype=np.complex128).ravel()
    if normalize:
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ShapeMismatch("cannot normalize the zero vector")
        amps = amps / nrm
    return PureState(amps, shape)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian PSD unit-trace matrix with its validation defects recorded."""

    matrix: np.ndarray
    shape: TensorShape
    hermiticity_defect: float
    min_eigenvalue: float
    trace_defect: float

    @property
    def dim(self) -> int:
        return self.shape.dim


def density_matrix(mat, shape: TensorShape | tuple | None = None) -> DensityMatrix:
    """Validate and wrap a density matrix; raises InvalidDensityMatrix on defects."""
    m = as_complex_matrix(mat)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"density matrix must be square, got {m.shape}")
    if shape is None:
        shape = TensorShape((m.shape[0],))
    elif not isinstance(shape, TensorShape):
        shape = TensorShape(tuple(shape))
    if shape.dim != m.shape[0]:
        raise ShapeMismatch(f"shape dim {shape.dim} != matrix dim {m.shape[0]}")
    herm_defect = op_norm(m - dagger(m))
    if herm_defect > HERMITICITY_TOL:
        raise InvalidDensityMatrix(f"hermiticity defect {herm_defect:.3e}")
    h = hermitize(m)
    eigs = np.linalg.eigvalsh(h)
    if eigs[0] < -PSD_TOL:
        raise InvalidDensityMatrix(f"min eigenvalue {eigs[0]:.3e}")
    tr_defect = abs(float(np.trace(h).real) - 1.0)
    if tr_defect > TRACE_TOL:
        raise InvalidDensityMatrix(f"trace defect {tr_defect:.3e}")
    h.setflags(write=False)
    return DensityMatrix(h, shape, float(herm_defect), float(eigs[0]), tr_defect)


def _matrix_of(a) -> np.ndarray:
    if isinstance(a, DensityMatrix):
        return a.matrix
    return as_complex_matrix(a)


def herm_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input must satisfy ||A - A*||_op <= 1e-9; the returned basis U is
    unitary and U diag(w) U* reconstructs A to 1e-10 * max(1, ||A||_op).
    """
    m = _matrix_of(a)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected square matrix, got {m.shape}")
    asym = m - dagger(m)
    # Frobenius bounds the operator norm from above; only compute the exact
    # norm when the cheap bound is inconclusive.
    defect = np.linalg.norm(asym)
    if defect > 1e-9:
        defect = op_norm(asym)
        if defect > 1e-9:
            raise NonHermitianInput(f"||A - A*||_op = {defect:.3e} > 1e-9")
    try:
        w, u = np.linalg.eigh(hermitize(m))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK stall
        raise ConvergenceFailure(str(exc)) from exc
    return w, u


def matrix_sqrt_psd(a) -> np.ndarray:
    """Hermitian PSD square root; eigenvalues in [-1e-10, 0) are clamped to 0.

    Eigenvalues below the eigensolver's own resolution (dim * eps * w_max)
    are also set to 0: the square root would otherwise amplify O(eps)
    eigenvalue noise to O(sqrt(eps)) in the result.
    """
    m = _matrix_of(a)
    w, u = herm_eig(m)
    if w.size and w[0] < -PSD_TOL:
        raise NotPSD(f"min eigenvalue {w[0]:.3e} < -{PSD_TOL}")
    floor = w.size * np.finfo(np.float64).eps * max(float(w[-1]), 0.0) if w.size else 0.0
    w = np.where(w > floor, w, 0.0)
    return hermitize((u * np.sqrt(w)) @ dagger(u))


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition A = P diag(sigma) Q*, sigma descending."""
    m = _matrix_of(a)
    try:
        p, s, qh = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK stall
        raise ConvergenceFailure(str(exc)) from exc
    return p, s, dagger(qh)


def singular_values(a) -> np.ndarray:
    m = _matrix_of(a)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceFailure(str(exc)) from exc


def schatten_norms(a) -> tuple[float, float, float]:
    """(trace norm, operator norm, Hilbert-Schmidt norm) from singular values."""
    s = singular_values(a)
    if s.size == 0:
        return 0.0, 0.0, 0.0
    return float(s.sum()), float(s[0]), float(np.sqrt((s * s).sum()))


def trace_norm(a, hermitian: bool = False) -> float:
    m = _matrix_of(a)
    if hermitian:
        return float(np.abs(np.linalg.eigvalsh(hermitize(m))).sum())
    return float(singular_values(m).sum())


def op_norm(a) -> float:
    m = _matrix_of(a)
    if m.size == 0:
        return 0.0
    return float(singular_values(m)[0])


def kron(a, b) -> np.ndarray:
    return np.kron(_matrix_of(a), _matrix_of(b))


def kron_power(a, n: int) -> np.ndarray:
    if n < 1:
        raise ShapeMismatch("kron power requires n >= 1")
    out = _matrix_of(a)
    for _ in range(n - 1):
        out = np.kron(out, a)
    return out


def _resolve_keep(keep, nfactors: int) -> list[int]:
    kept = sorted(set(int(k) for k in keep))
    if not kept:
        raise BadFactorIndex("keep set must be nonempty")
    if kept[0] < 0 or kept[-1] >= nfactors:
        raise BadFactorIndex(f"factor indices {kept} invalid for {nfactors} factors")
    return kept


def partial_trace_matrix(mat: np.ndarray, dims, keep) -> np.ndarray:
    """Partial trace of a raw square matrix over the factors not in ``keep``.

    ``keep`` uses 0-based factor indices; the result keeps factors in their
    original order.
    """
    dims = [int(d) for d in dims]
    kept = _resolve_keep(keep, len(dims))
    traced = [j for j in range(len(dims)) if j not in kept]
    t = mat.reshape(dims + dims)
    cur = list(dims)
    for j in reversed(traced):
        t = np.trace(t, axis1=j, axis2=len(cur) + j)
        cur.pop(j)
    d_keep = math.prod(cur) if cur else 1
    return t.reshape(d_keep, d_keep)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Partial trace over the factors of ``rho`` not listed in ``keep``.

    Satisfies tr(B . result) = tr((B tensor 1_traced) . rho) for every test
    operator B on the kept factors.
    """
    kept = _resolve_keep(keep, len(rho.shape))
    reduced = partial_trace_matrix(rho.matrix, rho.shape.factors, kept)
    new_shape = TensorShape(tuple(rho.shape.factors[j] for j in kept))
    return density_matrix(hermitize(reduced), new_shape)


def reduced_density(psi: PureState, keep) -> DensityMatrix:
    """Reduced density matrix of a pure state on the kept factors.

    Contracts the state with itself directly, never materializing the full
    projector |psi><psi|.
    """
    kept = _resolve_keep(keep, len(psi.shape))
    rest = [j for j in range(len(psi.shape)) if j not in kept]
    t = psi.tensor().transpose(kept + rest)
    dk = math.prod(psi.shape.factors[j] for j in kept)
    m = t.reshape(dk, -1)
    rho = m @ dagger(m)
    new_shape = TensorShape(tuple(psi.shape.factors[j] for j in kept))
    return density_matrix(hermitize(rho), new_shape)


def compose_permutations(pi, sigma) -> tuple[int, ...]:
    """(pi o sigma)(i) = pi(sigma(i))."""
    return tuple(pi[s] for s in sigma)


def permutation_operator(perm, d: int) -> np.ndarray:
    """Unitary permuting tensor slots of N factors of local dimension d.

    ``perm`` is a 0-based one-line permutation: slot i is sent to slot
    perm[i].  Satisfies U_pi U_sigma = U_{pi o sigma}.
    """
    perm = tuple(int(p) for p in perm)
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ShapeMismatch(f"{perm} is not a permutation of 0..{n - 1}")
    dim = d**n
    if dim > NBODY_DIM_BUDGET:
        raise SizeBudgetExceeded(f"permutation operator dim {dim} > {NBODY_DIM_BUDGET}")
    src = np.arange(dim)
    digits = np.array(np.unravel_index(src, (d,) * n))
    tgt_digits = np.empty_like(digits)
    for i, p in enumerate(perm):
        tgt_digits[p] = digits[i]
    tgt = np.ravel_multi_index(tuple(tgt_digits), (d,) * n)
    u = np.zeros((dim, dim), dtype=np.complex128)
    u[tgt, src] = 1.0
    return u


def _inverse_permutation(perm) -> list[int]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return inv


def permute_state_tensor(t: np.ndarray, perm) -> np.ndarray:
    """Apply U_perm to a state given as an N-axis tensor.

    Matches ``permutation_operator``: the flattened result equals
    permutation_operator(perm, d) @ t.ravel().  (numpy's transpose takes the
    inverse axis order.)
    """
    return t.transpose(_inverse_permutation(perm))


def permute_lifted_state_tensor(t: np.ndarray, perm) -> np.ndarray:
    """Simultaneous permutation of (physical, auxiliary) axis pairs.

    The tensor has 2N axes ordered (x_1, m_1, ..., x_N, m_N); each particle
    moves with its auxiliary axis attached, matching ``permutation_operator``
    on the coarse (d_phys * d_aux) slots.
    """
    inv = _inverse_permutation(perm)
    axes = []
    for i in inv:
        axes += [2 * i, 2 * i + 1]
    return t.transpose(axes)


def conjugate_by_permutation(mat: np.ndarray, d: int, n: int, perm) -> np.ndarray:
    """U_perm @ mat @ U_perm* without building the permutation matrix."""
    t = mat.reshape((d,) * (2 * n))
    inv = _inverse_permutation(perm)
    axes = inv + [n + j for j in inv]
    return t.transpose(axes).reshape(d**n, d**n)


def apply_permutation(x: np.ndarray, perm, d: int) -> np.ndarray:
    """U_perm @ x for a vector or for each column of a matrix."""
    n = len(perm)
    if x.shape[0] != d**n:
        raise ShapeMismatch(f"leading dim {x.shape[0]} != {d}^{n}")
    t = x.reshape((d,) * n + x.shape[1:])
    axes = _inverse_permutation(perm) + list(range(n, t.ndim))
    return t.transpose(axes).reshape(x.shape)


def covariance_check(u: np.ndarray, t: DensityMatrix) -> float:
    """Trace-norm defect of partial-trace covariance under a factor-1 unitary.

    Returns ||tr_2((U x 1) T (U* x 1)) - U (tr_2 T) U*||_1, which is zero for
    every unitary acting only on the first factor.
    """
    if len(t.shape) != 2:
        raise ShapeMismatch("covariance_check expects a 2-factor density matrix")
    d1, d2 = t.shape.factors
    u = as_complex_matrix(u)
    if u.shape != (d1, d1):
        raise ShapeMismatch(f"unitary shape {u.shape} incompatible with factor dim {d1}")
    big = kron(u, np.eye(d2))
    rotated = big @ t.matrix @ dagger(big)
    lhs = partial_trace_matrix(rotated, (d1, d2), [0])
    rhs = u @ partial_trace_matrix(t.matrix, (d1, d2), [0]) @ dagger(u)
    return trace_norm(lhs - rhs, hermitian=True)
