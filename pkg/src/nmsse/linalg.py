"""Dense linear algebra for small open quantum systems.

States are complex numpy kets (shape ``(d,)``, batched ``(..., d)``),
operators are ``(d, d)`` complex matrices, density matrices are Hermitian
positive-semidefinite with unit trace.  Qubit convention: basis index 0 is
the excited state |e>, index 1 the ground state |g>, so ``sigma_z = diag(1, -1)``
and the lowering operator ``sigma = |g><e|`` has its single 1 at [1, 0].
All functions are pure; nothing mutates its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DegenerateStateError, DimensionMismatchError

MAX_SYSTEM_DIM = 64
MAX_COMPOSITE_DIM = 4096

SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def excited_ket() -> np.ndarray:
    return np.array([1.0, 0.0], dtype=complex)


def ground_ket() -> np.ndarray:
    return np.array([0.0, 1.0], dtype=complex)


def dag(op: np.ndarray) -> np.ndarray:
    """Adjoint (conjugate transpose of the last two axes)."""
    return np.conj(np.swapaxes(op, -1, -2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def normalize(ket: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    nrm = float(np.linalg.norm(ket))
    if nrm < tol:
        raise DegenerateStateError(f"ket norm {nrm:.3e} below {tol:.1e}")
    return ket / nrm


def expectation(op: np.ndarray, ket: np.ndarray, normalized: bool = True) -> complex:
    """<psi|op|psi>, divided by <psi|psi> unless ``normalized=False``."""
    if op.shape[-1] != ket.shape[-1]:
        raise DimensionMismatchError(
            f"operator dim {op.shape[-1]} vs ket dim {ket.shape[-1]}"
        )
    val = np.vdot(ket, op @ ket)
    if normalized:
        n2 = np.vdot(ket, ket).real
        if n2 < 1e-24:
            raise DegenerateStateError("expectation of a zero-norm ket")
        val = val / n2
    return complex(val)


def projector(ket: np.ndarray) -> np.ndarray:
    """|psi><psi| of the ket as given (not renormalized)."""
    return np.outer(ket, np.conj(ket))


def density_from_ket(ket: np.ndarray) -> np.ndarray:
    return projector(normalize(ket))


def kron(a: np.ndarray, b: np.ndarray, cap: int = MAX_COMPOSITE_DIM) -> np.ndarray:
    """Kronecker product with a-index major; refuses results larger than ``cap``."""
    dim = a.shape[-1] * b.shape[-1]
    if dim > cap:
        raise CapacityError(f"composite dimension {dim} exceeds cap {cap}")
    return np.kron(a, b)


def partial_trace_second(rho: np.ndarray, d_first: int, d_second: int) -> np.ndarray:
    """Trace out the second factor of a (d_first * d_second) bipartite density matrix."""
    if rho.shape != (d_first * d_second, d_first * d_second):
        raise DimensionMismatchError(
            f"matrix shape {rho.shape} does not factor as {d_first}x{d_second}"
        )
    return np.einsum("imjm->ij", rho.reshape(d_first, d_second, d_first, d_second))


def bloch_from_density(rho: np.ndarray, imag_tol: float = 1e-10) -> np.ndarray:
    """Bloch vector (x, y, z) of a qubit density matrix.

    The trace Tr[rho sigma_i] of a Hermitian rho is real; any imaginary
    residue beyond ``imag_tol`` signals a corrupted state and raises.
    """
    if rho.shape != (2, 2):
        raise DimensionMismatchError("Bloch vector is defined for qubits only")
    comps = np.array([np.trace(rho @ p) for p in PAULI])
    if np.max(np.abs(comps.imag)) > imag_tol:
        raise ValueError(f"non-Hermitian density: imaginary Bloch residue {comps.imag}")
    return comps.real.copy()


def bloch_series(rhos: np.ndarray, imag_tol: float = 1e-10) -> np.ndarray:
    """Bloch vectors of a stack of qubit density matrices (..., 2, 2) -> (..., 3)."""
    if rhos.shape[-2:] != (2, 2):
        raise DimensionMismatchError("Bloch vector is defined for qubits only")
    x = rhos[..., 0, 1] + rhos[..., 1, 0]
    y = 1j * (rhos[..., 0, 1] - rhos[..., 1, 0])
    z = rhos[..., 0, 0] - rhos[..., 1, 1]
    out = np.stack([x, y, z], axis=-1)
    if np.max(np.abs(out.imag)) > imag_tol:
        raise ValueError("non-Hermitian density stack: imaginary Bloch residue")
    return out.real


def density_from_bloch(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return 0.5 * (np.eye(2, dtype=complex) + v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z)


def is_hermitian(op: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(op - dag(op))) <= tol)


def validate_density(rho: np.ndarray, herm_tol: float = 1e-10,
                     trace_tol: float = 1e-9, eig_tol: float = 1e-8) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and PSD.

    Small dimensions (d <= 4) get an eigenvalue check; larger ones a shifted
    Cholesky attempt (rho + eig_tol*I must factor), which is cheaper and
    tolerance-equivalent for our purposes.
    """
    d = rho.shape[0]
    if rho.shape != (d, d):
        raise DimensionMismatchError("density matrix must be square")
    if not is_hermitian(rho, herm_tol):
        raise ValueError("density matrix is not Hermitian within tolerance")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density trace {tr} deviates from 1 beyond {trace_tol:.1e}")
    if d <= 4:
        w = np.linalg.eigvalsh(0.5 * (rho + dag(rho)))
        if w.min() < -eig_tol:
            raise ValueError(f"density has negative eigenvalue {w.min():.3e}")
    else:
        try:
            np.linalg.cholesky(0.5 * (rho + dag(rho)) + eig_tol * np.eye(d))
        except np.linalg.LinAlgError as exc:
            raise ValueError("density matrix is not PSD within tolerance") from exc


@dataclass(frozen=True)
class SystemModel:
    """System operators in the interaction frame.

    ``coupling`` is the operator L that enters the bath coupling; ``h_int``
    the residual system Hamiltonian (hbar = 1 throughout, rates in units of
    the decay-rate scale).
    """

    coupling: np.ndarray
    h_int: np.ndarray
    herm_tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        L = np.asarray(self.coupling, dtype=complex)
        H = np.asarray(self.h_int, dtype=complex)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise DimensionMismatchError("coupling operator must be square")
        if H.shape != L.shape:
            raise DimensionMismatchError("h_int and coupling dimensions differ")
        if L.shape[0] > MAX_SYSTEM_DIM:
            raise CapacityError(f"system dimension {L.shape[0]} exceeds {MAX_SYSTEM_DIM}")
        if np.max(np.abs(H - dag(H))) > self.herm_tol:
            raise ValueError("h_int must be Hermitian")
        object.__setattr__(self, "coupling", L)
        object.__setattr__(self, "h_int", H)

    @property
    def dim(self) -> int:
        return self.coupling.shape[0]

    @property
    def coupling_dag(self) -> np.ndarray:
        return dag(self.coupling)

    @property
    def coupling_x(self) -> np.ndarray:
        """Quadrature coupling L + L^dagger."""
        return self.coupling + dag(self.coupling)


def driven_tla(delta: float, chi: float) -> SystemModel:
    """Driven two-level atom: L = sigma_-, H = (delta/2) sigma_z + (chi/2) sigma_x."""
    h = 0.5 * delta * SIGMA_Z + 0.5 * chi * SIGMA_X
    return SystemModel(coupling=SIGMA_MINUS.copy(), h_int=h)
