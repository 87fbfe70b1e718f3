"""Measurement models and Heisenberg-picture error and disturbance operators.

A model couples a system (first tensor factor) to an apparatus prepared in a
ready state ``alpha`` through a unitary ``U``. For any product-space operator
``O`` its final Heisenberg form is ``U^dagger (O) U``. The error operator is
``pointer_f - x_i`` and the disturbance operator ``p_f - p_i``.

Every expectation in a product state ``rho (x) alpha`` only needs the
system-side *reduction* ``Tr_a[O (I (x) alpha)]``, so models cache the images
``O_f (I (x) |a_k>)`` of the ready-state eigenvectors and contract against
those. This keeps two-mode oscillator models at ``dim**2`` size cheap.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .config import TOL
from .errors import ShapeError, ValidationError
from .hilbert import (
    CompositeSpace,
    density,
    expm_i,
    hermitian,
    hermitian_eig,
    random_density,
    random_unitary,
    tensor_product,
    unitary,
)
from .distributions import merge_support
from . import oscillator as osc

__all__ = [
    "MeasurementModel",
    "JointMeasurementModel",
    "SharpMeasurement",
    "DoubleMeasurement",
    "PAULI",
    "heisenberg_initial",
    "heisenberg_final",
    "error_operator",
    "disturbance_operator",
    "rotation_model",
    "decoupled_model",
    "idle_joint_model",
    "spin_model",
    "von_neumann_model",
    "korzekwa_model",
    "double_measurement_model",
    "sharp_povm_model",
    "random_quadratic_model",
    "random_sequential_joint_model",
    "random_spin_model",
]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_WHICH = ("x", "p", "pointer")


def _apply_on_factor(op, Y, dims, k):
    """Apply ``op`` on tensor factor ``k`` to the columns of ``Y``."""
    dims = tuple(dims)
    cols = Y.shape[1]
    T = Y.reshape(dims + (cols,))
    T = np.moveaxis(np.tensordot(op, T, axes=([1], [k])), 0, k)
    return T.reshape(-1, cols)


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """System-apparatus measurement model.

    Parameters
    ----------
    system_dims, apparatus_dims : tuple of int
        Tensor factors of the system and apparatus. The product space orders
        system factors first.
    ready : ndarray
        Apparatus ready state ``alpha``.
    unitary : ndarray
        Interaction unitary on the product space.
    pointer : ndarray
        Pointer observable on the apparatus.
    x, p : ndarray
        Measured and conjugate (disturbed) observables on the system.
    hbar : float
        Scale of the canonical commutator, used by the relation verifiers.
    canonical : bool
        True when ``x`` and ``p`` represent a canonical pair, which is the
        domain of the uncertainty relations in :mod:`qerrdist.suprema`.
    interior : ndarray of bool, optional
        Product-basis mask of levels unaffected by truncation. Defaults to
        every level.
    name, builder, params
        Provenance used by reports and serialisation.
    """

    system_dims: tuple
    apparatus_dims: tuple
    ready: np.ndarray
    unitary: np.ndarray
    pointer: np.ndarray
    x: np.ndarray
    p: np.ndarray
    hbar: float = 1.0
    canonical: bool = False
    interior: np.ndarray = None
    name: str = "model"
    builder: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        S = CompositeSpace(self.system_dims)
        A = CompositeSpace(self.apparatus_dims)
        object.__setattr__(self, "system_dims", S.dims)
        object.__setattr__(self, "apparatus_dims", A.dims)
        ds, da = S.dim, A.dim
        x = hermitian(self.x, "x")
        p = hermitian(self.p, "p")
        mu = hermitian(self.pointer, "pointer")
        if x.shape != (ds, ds) or p.shape != (ds, ds):
            raise ShapeError("x and p must act on the system space")
        if mu.shape != (da, da):
            raise ShapeError("pointer must act on the apparatus space")
        alpha = density(self.ready)
        if alpha.shape != (da, da):
            raise ShapeError("ready state must live on the apparatus space")
        U = unitary(self.unitary)
        if U.shape != (ds * da, ds * da):
            raise ShapeError("unitary must act on the product space")
        mask = self.interior
        mask = np.ones(ds * da, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if mask.shape != (ds * da,):
            raise ShapeError("interior mask must cover the product basis")
        for name, val in (("x", x), ("p", p), ("pointer", mu), ("ready", alpha), ("unitary", U), ("interior", mask)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    # -- shapes -------------------------------------------------------------

    @property
    def system_dim(self):
        return int(np.prod(self.system_dims))

    @property
    def apparatus_dim(self):
        return int(np.prod(self.apparatus_dims))

    @property
    def dims(self):
        return (self.system_dim, self.apparatus_dim)

    @property
    def total_dim(self):
        return self.system_dim * self.apparatus_dim

    # -- Heisenberg operators -----------------------------------------------

    def initial(self, which):
        ds, da = self.dims
        if which == "x":
            return np.kron(self.x, np.eye(da))
        if which == "p":
            return np.kron(self.p, np.eye(da))
        if which == "pointer":
            return np.kron(np.eye(ds), self.pointer)
        raise ValueError(f"which must be one of {_WHICH}, got {which!r}")

    def final(self, which):
        return self._finals[which]

    @cached_property
    def _finals(self):
        U = self.unitary
        out = {}
        for w in _WHICH:
            F = U.conj().T @ self.initial(w) @ U
            out[w] = 0.5 * (F + F.conj().T)
        return out

    # -- reductions ---------------------------------------------------------

    @cached_property
    def _ready_eig(self):
        w, V = hermitian_eig(self.ready, check=False)
        keep = w > 1e-15
        return w[keep], V[:, keep]

    @cached_property
    def _embeddings(self):
        """Isometries ``I (x) |a_k>`` weighted by the ready-state spectrum."""
        ds = self.system_dim
        w, V = self._ready_eig
        return [(wk, np.kron(np.eye(ds), V[:, [k]])) for k, wk in enumerate(w)]

    @cached_property
    def _evolved(self):
        return [(wk, self.unitary @ E) for wk, E in self._embeddings]

    def _apply_initial(self, which, Y):
        dims = (self.system_dim, self.apparatus_dim)
        if which == "x":
            return _apply_on_factor(self.x, Y, dims, 0)
        if which == "p":
            return _apply_on_factor(self.p, Y, dims, 0)
        if which == "pointer":
            return _apply_on_factor(self.pointer, Y, dims, 1)
        raise ValueError(f"which must be one of {_WHICH}, got {which!r}")

    def final_columns(self, which):
        """Weighted images ``(w_k, O_f E_k)`` of the ready-state embeddings."""
        return self._final_columns[which]

    @cached_property
    def _final_columns(self):
        Ud = self.unitary.conj().T
        return {
            w: [(wk, Ud @ self._apply_initial(w, UE)) for wk, UE in self._evolved]
            for w in _WHICH
        }

    def reduce(self, A):
        """System-side reduction ``Tr_a[A (I (x) alpha)]`` of a product operator."""
        A = np.asarray(A)
        return sum(wk * (E.conj().T @ (A @ E)) for wk, E in self._embeddings)

    def reduced(self, which):
        """First and second moment reductions of the final observable ``which``.

        Returns
        -------
        F1, F2 : ndarray
            ``Tr_a[O_f (I (x) alpha)]`` and ``Tr_a[O_f^2 (I (x) alpha)]``,
            both Hermitian on the system space.
        """
        return self._reduced[which]

    @cached_property
    def _reduced(self):
        out = {}
        for w in _WHICH:
            F1 = sum(wk * (E.conj().T @ Y) for (wk, E), (_, Y) in zip(self._embeddings, self._final_columns[w]))
            F2 = sum(wk * (Y.conj().T @ Y) for wk, Y in self._final_columns[w])
            out[w] = (0.5 * (F1 + F1.conj().T), 0.5 * (F2 + F2.conj().T))
        return out

    def o_moment(self, which):
        """Reduction of ``(O_f - R_i)^2``, accumulated as a Gram matrix to avoid cancellation."""
        cache = self.__dict__.setdefault("_o_moment_cache", {})
        if which not in cache:
            R = self.reference(which)
            dims = (self.system_dim, self.apparatus_dim)
            M = 0
            for (wk, E), (_, Y) in zip(self._embeddings, self._final_columns[which]):
                Z = Y - _apply_on_factor(R, E, dims, 0)
                M = M + wk * (Z.conj().T @ Z)
            cache[which] = 0.5 * (M + M.conj().T)
        return cache[which]

    def reduce_product(self, a, b):
        """Reduction of ``A_f B_f`` for final observables named ``a`` and ``b``."""
        return sum(
            wk * (Ya.conj().T @ Yb)
            for (wk, Ya), (_, Yb) in zip(self._final_columns[a], self._final_columns[b])
        )

    def reference(self, which):
        """System observable the final observable ``which`` is compared with."""
        return {"pointer": self.x, "p": self.p, "x": self.x}[which]

    # -- distributions ------------------------------------------------------

    def povm(self, which="pointer", gap=TOL.degeneracy_gap):
        """Spectral values and system-side effects of a final observable.

        Returns
        -------
        values : ndarray
            Distinct eigenvalues, merged within ``gap``.
        effects : list of ndarray
            ``Tr_a[U^dagger (Pi_v) U (I (x) alpha)]`` for each value.
        """
        key = (which, gap)
        cache = self.__dict__.setdefault("_povm_cache", {})
        if key not in cache:
            if which == "pointer":
                op, factor = self.pointer, 1
            elif which in ("x", "p"):
                op, factor = self.reference(which), 0
            else:
                raise ValueError(f"unknown observable {which!r}")
            vals, groups = _spectral_groups(op, gap)
            dims = (self.system_dim, self.apparatus_dim)
            effects = []
            for V in groups:
                Pi = V @ V.conj().T
                Ef = sum(
                    wk * (UE.conj().T @ _apply_on_factor(Pi, UE, dims, factor))
                    for wk, UE in self._evolved
                )
                effects.append(0.5 * (Ef + Ef.conj().T))
            cache[key] = (vals, effects)
        return cache[key]

    # -- truncation diagnostics ---------------------------------------------

    @cached_property
    def _interior_final(self):
        m = self.interior.astype(float)[:, None]
        return sum(wk * (UE.conj().T @ (m * UE)) for wk, UE in self._evolved)

    def interior_mass(self, rho):
        """Interior weight of ``rho (x) alpha`` before and after the interaction."""
        rho = np.asarray(rho)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        before = float(np.real(np.kron(np.diag(rho), np.diag(self.ready))) @ self.interior)
        after = float(np.real(np.einsum("ij,ji->", self._interior_final, rho)))
        return before, after

    def with_unitary(self, U, **changes):
        kw = dict(
            system_dims=self.system_dims, apparatus_dims=self.apparatus_dims, ready=self.ready,
            unitary=U, pointer=self.pointer, x=self.x, p=self.p, hbar=self.hbar,
            canonical=self.canonical, interior=self.interior, name=self.name,
            builder="custom", params={},
        )
        kw.update(changes)
        return MeasurementModel(**kw)


def _spectral_groups(op, gap):
    evals, evecs = hermitian_eig(op, check=False)
    vals, _ = merge_support(evals, np.ones_like(evals), gap)
    groups = []
    for v in vals:
        idx = np.flatnonzero(np.abs(evals - v) <= gap * max(1.0, len(evals)))
        groups.append(evecs[:, idx])
    return vals, groups


def heisenberg_initial(model, which):
    return model.initial(which)


def heisenberg_final(model, which):
    return model.final(which)


def error_operator(model):
    """``pointer_f - x_i`` on the product space."""
    if isinstance(model, SharpMeasurement):
        return model.error_operator_system()
    return model.final("pointer") - model.initial("x")


def disturbance_operator(model):
    """``p_f - p_i`` on the product space (exactly zero for ``U = I``)."""
    if isinstance(model, SharpMeasurement):
        raise TypeError("a sharp POVM has no product-space disturbance operator; use its dilation")
    return model.final("p") - model.initial("p")


# -- joint measurements -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointMeasurementModel:
    """Joint position and momentum measurement.

    A position stage (``position``, acting on system and position pointer) is
    followed by a coupling of the system to a momentum pointer. With
    ``coupling=None`` the momentum pointer never interacts.
    """

    position: MeasurementModel
    momentum_ready: np.ndarray
    momentum_pointer: np.ndarray
    coupling: np.ndarray = None
    momentum_dims: tuple = None
    name: str = "joint"
    builder: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        mu = hermitian(self.momentum_pointer, "momentum pointer")
        alpha = density(self.momentum_ready)
        if mu.shape != alpha.shape:
            raise ShapeError("momentum pointer and ready state differ in shape")
        dims = self.momentum_dims or (mu.shape[0],)
        object.__setattr__(self, "momentum_dims", tuple(dims))
        object.__setattr__(self, "momentum_pointer", mu)
        object.__setattr__(self, "momentum_ready", alpha)
        if self.coupling is not None:
            n = self.position.system_dim * mu.shape[0]
            U2 = unitary(self.coupling)
            if U2.shape != (n, n):
                raise ShapeError("coupling must act on system (x) momentum pointer")
            object.__setattr__(self, "coupling", U2)

    @property
    def hbar(self):
        return self.position.hbar

    @property
    def canonical(self):
        return self.position.canonical

    @property
    def x(self):
        return self.position.x

    @property
    def p(self):
        return self.position.p

    @cached_property
    def momentum_view(self):
        """Model whose pointer is the momentum pointer and whose measured observable is ``p``.

        Its O error is the momentum error of the joint measurement.
        """
        pos = self.position
        ds, dP = pos.system_dim, self.momentum_pointer.shape[0]
        if self.coupling is None:
            m_s = pos.interior.reshape(ds, pos.apparatus_dim)[:, 0]
            m_p = m_s if dP == ds else np.ones(dP, dtype=bool)
            return MeasurementModel(
                system_dims=pos.system_dims, apparatus_dims=self.momentum_dims,
                ready=self.momentum_ready, unitary=np.eye(ds * dP), pointer=self.momentum_pointer,
                x=pos.p, p=pos.x, hbar=pos.hbar, canonical=pos.canonical,
                interior=np.kron(m_s, m_p), name=self.name + ":momentum",
            )
        dX = pos.apparatus_dim
        # reorder S (x) A_P (x) A_X to S (x) A_X (x) A_P for the coupling
        U2 = self.coupling.reshape(ds, dP, ds, dP)
        U2 = np.einsum("iajb,xy->ixajyb", U2, np.eye(dX)).reshape(ds * dX * dP, ds * dX * dP)
        U1 = np.kron(pos.unitary, np.eye(dP))
        return MeasurementModel(
            system_dims=pos.system_dims, apparatus_dims=pos.apparatus_dims + self.momentum_dims,
            ready=np.kron(pos.ready, self.momentum_ready), unitary=U2 @ U1,
            pointer=np.kron(np.eye(dX), self.momentum_pointer), x=pos.p, p=pos.x,
            hbar=pos.hbar, canonical=pos.canonical,
            interior=np.kron(pos.interior, np.ones(dP, dtype=bool)), name=self.name + ":momentum",
        )


# -- sharp POVM surrogate ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class SharpMeasurement:
    """Measurement whose outcome statistics are the spectral measure of ``A``.

    Handled on the system side: the error operator is ``A - x``, the pointer
    effects are the spectral projectors of ``A``. Disturbance quantities use
    the projective (Lueders) dilation, under which a final observable ``O``
    reduces to ``sum_j Pi_j O Pi_j``; reports flag this choice.
    """

    observable: np.ndarray
    x: np.ndarray
    p: np.ndarray
    hbar: float = 1.0
    canonical: bool = False
    interior: np.ndarray = None
    name: str = "sharp"
    builder: str = "sharp_povm_model"
    params: dict = field(default_factory=dict)
    dilation_note: str = "Lueders (projective) dilation"

    def __post_init__(self):
        A = hermitian(self.observable, "observable")
        x, p = hermitian(self.x, "x"), hermitian(self.p, "p")
        if A.shape != x.shape or p.shape != x.shape:
            raise ShapeError("observable, x and p must share the system space")
        mask = np.ones(A.shape[0], dtype=bool) if self.interior is None else np.asarray(self.interior, bool)
        for name, val in (("observable", A), ("x", x), ("p", p), ("interior", mask)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def system_dim(self):
        return self.x.shape[0]

    @property
    def system_dims(self):
        return (self.system_dim,)

    @cached_property
    def _spectrum(self):
        return _spectral_groups(self.observable, TOL.degeneracy_gap)

    def error_operator_system(self):
        return self.observable - self.x

    def reference(self, which):
        return {"pointer": self.x, "p": self.p, "x": self.x}[which]

    def _dephase(self, O):
        _, groups = self._spectrum
        return sum(V @ (V.conj().T @ O @ V) @ V.conj().T for V in groups)

    def reduced(self, which):
        if which == "pointer":
            A = self.observable
            return A, A @ A
        O = self.reference(which)
        return self._dephase(O), self._dephase(O @ O)

    def o_moment(self, which):
        if which == "pointer":
            E = self.observable - self.x
            return E.conj().T @ E
        F1, F2 = self.reduced(which)
        R = self.reference(which)
        return F2 - F1 @ R - R @ F1 + R @ R

    def povm(self, which="pointer", gap=TOL.degeneracy_gap):
        if which != "pointer":
            vals, groups = _spectral_groups(self.reference(which), gap)
            return vals, [self._dephase(V @ V.conj().T) for V in groups]
        vals, groups = self._spectrum
        return vals, [V @ V.conj().T for V in groups]

    def interior_mass(self, rho):
        rho = np.asarray(rho)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        m = float(np.real(np.diag(rho)) @ self.interior)
        return m, m

    def dilation(self):
        """Explicit von Neumann dilation (product dimension ``d * r``)."""
        return von_neumann_model(self.observable, len(self._spectrum[0]), x=self.x, p=self.p,
                                 hbar=self.hbar, name=self.name + ":dilation")


# -- builders ---------------------------------------------------------------


def _two_mode_interior_total(rep):
    n = np.arange(rep.dim)
    tot = n[:, None] + n[None, :]
    return (tot < rep.interior_dim).reshape(-1)


def _two_mode_interior_product(rep):
    m = np.arange(rep.dim) < rep.interior_dim
    return np.kron(m, m).astype(bool)


def rotation_model(rep):
    """Quarter-turn rotation of system and pointer phase planes.

    ``H = x (x) pi - p (x) mu`` equals ``i hbar (a b^dagger - a^dagger b)`` and
    conserves total excitation number, so ``exp(-i pi H / 2 hbar)`` is built
    block by block. Afterwards the pointer carries the initial system
    position exactly, while the system momentum is replaced by minus the
    initial pointer momentum.
    """
    X, P = osc.position_op(rep), osc.momentum_op(rep)
    H = np.kron(X, P) - np.kron(P, X)
    n = np.arange(rep.dim)
    labels = (n[:, None] + n[None, :]).reshape(-1)
    U = expm_i(H, -math.pi / (2 * rep.hbar), blocks=labels)
    ready = osc.fock_state(rep, 0)
    return MeasurementModel(
        system_dims=(rep.dim,), apparatus_dims=(rep.dim,), ready=np.outer(ready, ready.conj()),
        unitary=U, pointer=X, x=X, p=P, hbar=rep.hbar, canonical=True,
        interior=_two_mode_interior_total(rep), name="rotation", builder="rotation_model",
        params=_rep_params(rep),
    )


def decoupled_model(rep, ready=None):
    """Oscillator pointer that never interacts (``U = I``)."""
    X, P = osc.position_op(rep), osc.momentum_op(rep)
    alpha = osc.fock_state(rep, 0) if ready is None else ready
    return MeasurementModel(
        system_dims=(rep.dim,), apparatus_dims=(rep.dim,), ready=density(alpha),
        unitary=np.eye(rep.dim**2), pointer=X, x=X, p=P, hbar=rep.hbar, canonical=True,
        interior=_two_mode_interior_product(rep), name="decoupled", builder="decoupled_model",
        params=_rep_params(rep),
    )


def idle_joint_model(rep):
    """Rotation position measurement plus a momentum pointer that never interacts."""
    pos = rotation_model(rep)
    g = osc.fock_state(rep, 0)
    return JointMeasurementModel(
        position=pos, momentum_ready=np.outer(g, g.conj()), momentum_pointer=osc.position_op(rep),
        coupling=None, momentum_dims=(rep.dim,), name="idle_joint", builder="idle_joint_model",
        params=_rep_params(rep),
    )


def _rep_params(rep):
    return {"dim": rep.dim, "hbar": rep.hbar, "mass": rep.mass, "omega": rep.omega}


def spin_model(kind, state=None, unitary=None):
    """Spin-1/2 system read out by a spin-1/2 pointer.

    Parameters
    ----------
    kind : {"identity_coupling", "sigma_y_evolution"}
        ``identity_coupling``: ``U = I`` and the pointer is prepared in the
        system's own state, pointer ``sigma_z``, measured ``sigma_z``,
        conjugate ``sigma_x``. ``sigma_y_evolution``: ``U = sigma_y (x) I``,
        ready state ``I/2``, measured ``sigma_z``, disturbed ``sigma_x``.
    state : array_like, optional
        System state (vector or density matrix) copied into the pointer for
        ``identity_coupling``. Defaults to ``|+x>``.
    unitary : ndarray, optional
        Override of the interaction unitary.
    """
    Z, X = PAULI["z"], PAULI["x"]
    if kind == "identity_coupling":
        psi = np.array([1, 1], dtype=complex) / math.sqrt(2) if state is None else state
        alpha = density(psi)
        U = np.eye(4) if unitary is None else unitary
    elif kind == "sigma_y_evolution":
        alpha = np.eye(2) / 2 if state is None else density(state)
        U = np.kron(PAULI["y"], PAULI["I"]) if unitary is None else unitary
    else:
        raise ValueError(f"unknown spin model kind {kind!r}")
    params = {"kind": kind}
    if state is not None:
        params["state"] = np.asarray(state)
    return MeasurementModel(
        system_dims=(2,), apparatus_dims=(2,), ready=alpha, unitary=U, pointer=Z,
        x=Z, p=X, canonical=False, name=f"spin:{kind}", builder="spin_model", params=params,
    )


def von_neumann_model(observable, pointer_dim, conjugate=None, x=None, p=None, hbar=1.0, name="von_neumann"):
    """Projective readout of ``observable`` into a pointer register.

    With distinct eigenvalues ``v_0 < v_1 < ...`` and projectors ``Pi_j`` the
    unitary is ``sum_j Pi_j (x) S^j`` where ``S`` cycles the register. The
    register starts in level 0 and level ``k`` reads ``v_(k mod r)``.

    ``x`` defaults to ``observable`` and ``p`` to ``conjugate`` (itself
    defaulting to ``observable``).
    """
    A = hermitian(observable, "observable")
    vals, groups = _spectral_groups(A, TOL.degeneracy_gap)
    r = len(vals)
    if pointer_dim < r:
        raise ValueError(f"pointer_dim {pointer_dim} below the {r} distinct eigenvalues")
    S = np.roll(np.eye(pointer_dim), 1, axis=0)
    U = sum(np.kron(V @ V.conj().T, np.linalg.matrix_power(S, j)) for j, V in enumerate(groups))
    mu = np.diag([vals[k % r] for k in range(pointer_dim)]).astype(complex)
    ready = np.zeros((pointer_dim, pointer_dim), dtype=complex)
    ready[0, 0] = 1.0
    xo = A if x is None else x
    po = (A if conjugate is None else conjugate) if p is None else p
    d = A.shape[0]
    return MeasurementModel(
        system_dims=(d,), apparatus_dims=(pointer_dim,), ready=ready, unitary=U, pointer=mu,
        x=xo, p=po, hbar=hbar, canonical=False, name=name, builder="von_neumann_model",
        params={"pointer_dim": pointer_dim},
    )


def korzekwa_model():
    """Von Neumann readout of ``sigma_z`` with ``sigma_x`` as the disturbed observable."""
    return von_neumann_model(PAULI["z"], 2, conjugate=PAULI["x"], name="korzekwa")


@dataclass(frozen=True, eq=False)
class DoubleMeasurement:
    """Identity-coupled spin readout followed by a projective ``sigma_z`` readout.

    Factors are ordered system, first pointer, second pointer register.
    """

    state: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    unitary: np.ndarray

    def rms_difference(self):
        D = self.mu2 - self.mu1
        return float(np.sqrt(max(np.real(np.vdot(self.state, D @ D @ self.state)), 0.0)))


def double_measurement_model(base):
    """Chain a second, projective ``sigma_z`` readout after ``base``.

    ``base`` must be a pure-state ``identity_coupling`` spin model; its ready
    state doubles as the system state.
    """
    if base.builder != "spin_model" or base.params.get("kind") != "identity_coupling":
        raise ValueError("double measurement requires an identity-coupling spin model")
    w, V = hermitian_eig(base.ready, check=False)
    if w[-1] < 1 - 1e-10:
        raise ValueError("double measurement requires a pure system state")
    psi = V[:, -1]
    vn = von_neumann_model(PAULI["z"], 2)
    # second stage couples system (factor 0) to register (factor 2)
    U2 = vn.unitary.reshape(2, 2, 2, 2)
    U2 = np.einsum("iajb,xy->ixajyb", U2, np.eye(2)).reshape(8, 8)
    U1 = np.kron(base.unitary, np.eye(2))
    U = U2 @ U1
    reg0 = np.array([1, 0], dtype=complex)
    Psi = U @ tensor_product(psi, psi, reg0)
    mu1 = tensor_product(np.eye(2), base.pointer, np.eye(2))
    mu2 = tensor_product(np.eye(4), vn.pointer)
    return DoubleMeasurement(state=Psi, mu1=mu1, mu2=mu2, unitary=U)


def sharp_povm_model(A, x, p=None, hbar=1.0, interior=None, name="sharp"):
    """Measurement with the spectral measure of ``A`` as its outcome statistics."""
    return SharpMeasurement(observable=A, x=x, p=x if p is None else p, hbar=hbar,
                            canonical=p is not None, interior=interior, name=name)


# -- random populations -----------------------------------------------------


def _quadratic_generator(quads, M, v):
    """``1/2 sum_ij M_ij {r_i, r_j}/2 + sum_i v_i r_i`` for Hermitian quadratures ``r``."""
    n = len(quads)
    H = np.zeros_like(quads[0])
    for i in range(n):
        H = H + v[i] * quads[i]
        for j in range(n):
            if M[i, j] != 0:
                H = H + 0.25 * M[i, j] * (quads[i] @ quads[j] + quads[j] @ quads[i])
    return 0.5 * (H + H.conj().T)


def random_quadratic_model(rep, seed, coeff=0.3, t_max=math.pi, linear=0.2):
    """Two-mode model generated by a random quadratic form in ``(x, p, mu, pi)``.

    ``U = exp(-i t H / hbar)`` with ``t`` uniform in ``[0, t_max]``, quadratic
    coefficients uniform in ``[-coeff, coeff]`` and linear ones in
    ``[-linear, linear]``. Quadratures are measured in units of the rep
    length and momentum scales.
    """
    rng = np.random.default_rng(seed)
    X, P = osc.position_op(rep), osc.momentum_op(rep)
    s, q = rep.length_scale, rep.momentum_scale
    I = np.eye(rep.dim)
    quads = [np.kron(X / s, I), np.kron(P / q, I), np.kron(I, X / s), np.kron(I, P / q)]
    M = rng.uniform(-coeff, coeff, size=(4, 4))
    M = 0.5 * (M + M.T)
    v = rng.uniform(-linear, linear, size=4)
    t = rng.uniform(0.0, t_max)
    H = rep.hbar * rep.omega * _quadratic_generator(quads, M, v)
    U = expm_i(H, -t / rep.hbar)
    g = osc.fock_state(rep, 0)
    return MeasurementModel(
        system_dims=(rep.dim,), apparatus_dims=(rep.dim,), ready=np.outer(g, g.conj()),
        unitary=U, pointer=X, x=X, p=P, hbar=rep.hbar, canonical=True,
        interior=_two_mode_interior_product(rep), name=f"random_quadratic[{seed}]",
        builder="random_quadratic_model", params={**_rep_params(rep), "seed": int(seed)},
    )


def random_sequential_joint_model(rep, seed, coeff=0.3, t_max=math.pi, linear=0.2):
    """Joint model: random quadratic position stage, then random quadratic momentum coupling."""
    ss = np.random.SeedSequence(seed)
    s1, s2 = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    pos = random_quadratic_model(rep, s1, coeff, t_max, linear)
    mom = random_quadratic_model(rep, s2, coeff, t_max, linear)
    g = osc.fock_state(rep, 0)
    return JointMeasurementModel(
        position=pos, momentum_ready=np.outer(g, g.conj()), momentum_pointer=osc.position_op(rep),
        coupling=mom.unitary, momentum_dims=(rep.dim,), name=f"random_joint[{seed}]",
        builder="random_sequential_joint_model", params={**_rep_params(rep), "seed": int(seed)},
    )


def random_spin_model(seed):
    """Haar-random coupling of a spin-1/2 system to a spin-1/2 pointer.

    The ready state is a random mixed state, the pointer ``sigma_z``, the
    measured observable ``sigma_z`` and the disturbed one ``sigma_x``.
    """
    rng = np.random.default_rng(seed)
    U = random_unitary(4, rng)
    alpha = random_density(2, seed=rng)
    return MeasurementModel(
        system_dims=(2,), apparatus_dims=(2,), ready=alpha, unitary=U, pointer=PAULI["z"],
        x=PAULI["z"], p=PAULI["x"], name=f"random_spin[{seed}]", builder="random_spin_model",
        params={"seed": int(seed)},
    )
