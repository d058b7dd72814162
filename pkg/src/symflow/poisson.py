"""The two compatible Poisson structures on Sym(n).

Sym(n) is identified with its dual through trace(XY).  The Lie-Poisson
tensor at X sends a gradient Y to ``X Y N - N Y X``; the frozen
(constant-coefficient) tensor sends Y to ``Y N - N Y``.  Their sum is again
Poisson, which is what makes the flow bi-Hamiltonian.

This module also builds the orthogonal canonical form of the structure
matrix N (2-plane frequencies, kernel, block pseudo-inverse) and derives
both Casimir families and symplectic-leaf dimensions from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix_core import (
    _check_same_square,
    as_square,
    eig_sym,
    frob_norm,
    frobenius_inner,
    max_abs,
    numerical_rank,
    symmetrize,
)

#: Frequencies closer than this are treated as one group when splitting the
#: image of N into invariant 2-planes, and when classifying the multiplicity
#: pattern (distinct vs equal) for the frozen Casimir basis.
FREQUENCY_GROUP_TOL = 1e-8

#: Tolerance on the structural invariants of a canonical form.
CANONICAL_TOL = 1e-10


class RankInstabilityError(RuntimeError):
    """Numerical rank changed between two tolerances a decade apart."""


def lie_poisson_tensor(x: np.ndarray, y: np.ndarray, n_skew: np.ndarray) -> np.ndarray:
    """Value of the Lie-Poisson tensor at x applied to a gradient y: x y N - N y x."""
    _check_same_square(x, y)
    _check_same_square(x, n_skew)
    return x @ y @ n_skew - n_skew @ y @ x


def frozen_tensor(y: np.ndarray, n_skew: np.ndarray) -> np.ndarray:
    """Constant Poisson tensor applied to a gradient y: y N - N y."""
    _check_same_square(y, n_skew)
    return y @ n_skew - n_skew @ y


def lie_poisson_bracket(grad_f: np.ndarray, grad_g: np.ndarray, x: np.ndarray, n_skew: np.ndarray) -> float:
    """Bracket value from two gradients: trace(grad_f (x grad_g N - N grad_g x))."""
    return frobenius_inner(grad_f, lie_poisson_tensor(x, grad_g, n_skew))


def frozen_bracket(grad_f: np.ndarray, grad_g: np.ndarray, n_skew: np.ndarray) -> float:
    """Frozen-bracket value from two gradients: trace(grad_f (grad_g N - N grad_g))."""
    return frobenius_inner(grad_f, frozen_tensor(grad_g, n_skew))


@dataclass(frozen=True)
class SkewCanonicalForm:
    """Orthogonal canonical form of a skew-symmetric matrix.

    ``basis @ skew @ basis.T`` equals, to within :data:`CANONICAL_TOL`, the
    block matrix ``[[0, V, 0], [-V, 0, 0], [0, 0, 0]]`` with
    ``V = diag(frequencies)``.  ``core`` is the invertible 2p x 2p corner of
    that form and ``pseudo_inverse`` the n x n block inverse vanishing on the
    kernel, so ``pseudo_inverse @ canonical_skew`` is the projection onto the
    image coordinates.
    """

    n: int
    p: int
    d: int
    skew: np.ndarray
    basis: np.ndarray
    frequencies: np.ndarray
    core: np.ndarray
    pseudo_inverse: np.ndarray

    @property
    def canonical_skew(self) -> np.ndarray:
        """The exact block form [[0, V, 0], [-V, 0, 0], [0, 0, 0]]."""
        n, p = self.n, self.p
        out = np.zeros((n, n))
        out[:2 * p, :2 * p] = self.core
        return out

    def to_canonical(self, x: np.ndarray) -> np.ndarray:
        """Conjugate a matrix from the original into the canonical basis."""
        return self.basis @ x @ self.basis.T

    def from_canonical(self, x: np.ndarray) -> np.ndarray:
        return self.basis.T @ x @ self.basis

    def mode(self, tol: float = FREQUENCY_GROUP_TOL) -> str:
        """Multiplicity pattern of the frequencies: distinct, equal, or mixed."""
        v = self.frequencies
        if self.p <= 1:
            return "distinct"
        gaps = np.abs(np.subtract.outer(v, v))[np.triu_indices(self.p, 1)]
        if np.all(gaps > tol):
            return "distinct"
        if np.all(gaps <= tol):
            return "equal"
        return "mixed"


def _core_block(frequencies: np.ndarray) -> np.ndarray:
    p = len(frequencies)
    v = np.diag(frequencies)
    out = np.zeros((2 * p, 2 * p))
    out[:p, p:] = v
    out[p:, :p] = -v
    return out


def canonical_skew_matrix(frequencies, nullity: int = 0) -> np.ndarray:
    """Skew matrix [[0, V, 0], [-V, 0, 0], [0, 0, 0]] with V = diag(frequencies)."""
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.ndim != 1:
        raise ValueError("frequencies must be a flat list")
    if np.any(freqs <= 0):
        raise ValueError("frequencies must be positive")
    if nullity < 0:
        raise ValueError("nullity must be non-negative")
    p = len(freqs)
    n = 2 * p + nullity
    out = np.zeros((n, n))
    out[:2 * p, :2 * p] = _core_block(freqs)
    return out


def canonical_form(n_skew: np.ndarray, rank_tol: float = 1e-9) -> SkewCanonicalForm:
    """Orthogonal canonical form of a skew-symmetric matrix.

    Eigendecomposes the positive-semidefinite matrix -N^2, whose eigenvalues
    come in pairs v_i^2 identifying invariant 2-planes plus a kernel.  Each
    near-equal frequency group is sharpened by one inverse-iteration step,
    then split into planes: a unit vector u is completed with the image -Nu
    projected back into the group span and orthogonalized, so the plane
    carries the block [[0, v], [-v, 0]] with v = u . N w > 0.  Kernel
    membership is decided by |N u| <= rank_tol * v_max.  Frequencies are
    returned in descending order.

    Raises ``ValueError`` if the constructed form misses its structural
    invariants at :data:`CANONICAL_TOL`.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    n_skew = as_square(n_skew)
    if max_abs(n_skew + n_skew.T) > 1e-8:
        raise ValueError("matrix is not skew-symmetric")
    n = n_skew.shape[0]
    gram = symmetrize(-n_skew @ n_skew)
    _, vecs = eig_sym(gram, tol=1e-14)
    # |N u| measures the frequency of each eigendirection to first order;
    # the eigenvalues of -N^2 would only resolve it to sqrt(eps).
    freqs_all = np.array([np.linalg.norm(n_skew @ vecs[:, i]) for i in range(n)])
    v_max = float(freqs_all.max(initial=0.0))

    kernel_cols = [i for i in range(n) if freqs_all[i] <= rank_tol * v_max or v_max == 0.0]
    image_cols = [i for i in range(n) if i not in kernel_cols]
    if len(image_cols) % 2 != 0:
        raise ValueError(
            "odd-dimensional image of the skew matrix; rank tolerance "
            f"{rank_tol:.1e} splits an eigenvalue pair"
        )
    p = len(image_cols) // 2
    d = n - 2 * p

    # Group image columns by near-equal frequency (descending).
    image_cols.sort(key=lambda i: -freqs_all[i])
    groups: list[list[int]] = []
    for i in image_cols:
        if groups and abs(freqs_all[groups[-1][-1]] - freqs_all[i]) <= FREQUENCY_GROUP_TOL:
            groups[-1].append(i)
        else:
            groups.append([i])

    def refine_eigenspace(basis: np.ndarray, mu: float) -> np.ndarray:
        # One inverse-iteration step against the Gram matrix.  The squared
        # spectrum resolves small frequencies only to sqrt(eps); this
        # sharpens the invariant subspace back to machine accuracy, which
        # the pseudo-inverse invariant needs when a frequency is small.
        try:
            sol = np.linalg.solve(gram - mu * np.eye(n), basis)
        except np.linalg.LinAlgError:
            return basis
        if not np.isfinite(sol).all():
            return basis
        q_ref, _ = np.linalg.qr(sol)
        return q_ref

    u_vecs, w_vecs, freqs = [], [], []
    for group in groups:
        if len(group) % 2 != 0:
            raise ValueError("invariant 2-planes of the skew matrix did not pair up; "
                             "adjust rank or grouping tolerances")
        mu_group = float(np.mean([freqs_all[i] ** 2 for i in group]))
        basis = refine_eigenspace(vecs[:, group].copy(), mu_group)
        while basis.shape[1] > 0:
            u = basis[:, 0]
            u = u / np.linalg.norm(u)
            # The raw image N u leaves the invariant plane by eps/|v|
            # (cancellation of order-one terms down to size v), which the
            # pseudo-inverse invariant amplifies for small frequencies, so
            # the partner is projected back into the refined group span and
            # orthogonalized against u before normalizing.
            w = basis @ (basis.T @ (-(n_skew @ u)))
            w = w - (u @ w) * u
            w_norm = float(np.linalg.norm(w))
            if w_norm == 0.0:
                raise ValueError("failed to complete an invariant 2-plane of the skew matrix")
            w = w / w_norm
            v = float(u @ (n_skew @ w))
            if v <= 0.0:
                raise ValueError("invariant 2-plane of the skew matrix lost its orientation")
            u_vecs.append(u)
            w_vecs.append(w)
            freqs.append(v)
            # Deflate the extracted plane out of the group, then rebuild an
            # orthonormal basis of the remainder by pivoted Gram-Schmidt.
            # One column of the remainder is linearly dependent (w lived in
            # the group span), so exactly two dimensions disappear.
            rest = basis[:, 1:].copy()
            for qv in (u, w):
                rest -= np.outer(qv, qv @ rest)
            target = basis.shape[1] - 2
            cols = [rest[:, j] for j in range(rest.shape[1])]
            kept: list[np.ndarray] = []
            while len(kept) < target:
                norms = [float(np.linalg.norm(c)) for c in cols]
                j_best = int(np.argmax(norms))
                if norms[j_best] < 1e-6:
                    raise ValueError("lost orthogonality while splitting a frequency group")
                col = cols.pop(j_best) / norms[j_best]
                kept.append(col)
                cols = [c - (col @ c) * col for c in cols]
            basis = np.column_stack(kept) if kept else np.zeros((n, 0))

    order = np.argsort(-np.asarray(freqs), kind="stable")
    freqs = np.asarray(freqs)[order]
    rows = [u_vecs[i] for i in order] + [w_vecs[i] for i in order]
    if kernel_cols:
        kernel_basis = refine_eigenspace(vecs[:, kernel_cols].copy(), 0.0)
        rows += [kernel_basis[:, j] for j in range(kernel_basis.shape[1])]
    q = np.vstack(rows) if rows else np.zeros((0, n))

    core = _core_block(freqs)
    pseudo = np.zeros((n, n))
    if p > 0:
        inv_v = np.diag(1.0 / freqs)
        pseudo[:p, p:2 * p] = -inv_v
        pseudo[p:2 * p, :p] = inv_v

    form = SkewCanonicalForm(
        n=n, p=p, d=d, skew=n_skew, basis=q,
        frequencies=freqs, core=core, pseudo_inverse=pseudo,
    )
    _validate_form(form)
    return form


def _validate_form(form: SkewCanonicalForm) -> None:
    q, n = form.basis, form.n
    ortho = max_abs(q @ q.T - np.eye(n))
    block = max_abs(q @ form.skew @ q.T - form.canonical_skew)
    proj = np.zeros((n, n))
    proj[:2 * form.p, :2 * form.p] = np.eye(2 * form.p)
    rotated = q @ form.skew @ q.T
    inv_left = max_abs(form.pseudo_inverse @ rotated - proj)
    inv_right = max_abs(rotated @ form.pseudo_inverse - proj)
    worst = max(ortho, block, inv_left, inv_right)
    if worst > CANONICAL_TOL:
        raise ValueError(
            f"canonical form failed its invariants (defect {worst:.3e} > {CANONICAL_TOL:.1e})"
        )


def _sym_unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n))
    if i == j:
        e[i, i] = 1.0
    else:
        e[i, j] = e[j, i] = 1.0
    return e


def frozen_casimir_gradients(form: SkewCanonicalForm, mode: str) -> list[np.ndarray]:
    """Gradient matrices of the frozen-bracket Casimirs, in the canonical basis.

    ``mode='distinct'`` (all frequencies different) yields p paired diagonal
    units plus the d(d+1)/2 kernel-block units.  ``mode='equal'`` (all
    frequencies coincide) enlarges the first family to p^2 matrices: paired
    symmetric units and paired skew units.  The multiplicity pattern of the
    form must match the requested mode.
    """
    actual = form.mode()
    if mode not in ("distinct", "equal"):
        raise ValueError(f"mode must be 'distinct' or 'equal', got {mode!r}")
    if actual == "mixed" or (actual != mode and form.p > 1):
        raise ValueError(f"frequency pattern is {actual!r}, not {mode!r}")
    n, p, d = form.n, form.p, form.d
    out: list[np.ndarray] = []
    if mode == "distinct":
        for k in range(p):
            e = np.zeros((n, n))
            e[k, k] = 1.0
            e[p + k, p + k] = 1.0
            out.append(e)
    else:
        for k in range(p):
            for l in range(k, p):
                e = np.zeros((n, n))
                e[k, l] = e[l, k] = 1.0
                e[p + k, p + l] = e[p + l, p + k] = 1.0
                out.append(e)
        for k in range(p):
            for l in range(k + 1, p):
                e = np.zeros((n, n))
                e[k, p + l] = e[p + l, k] = 1.0
                e[l, p + k] = e[p + k, l] = -1.0
                out.append(e)
    for a in range(d):
        for b in range(a, d):
            e = np.zeros((n, n))
            e[2 * p + a, 2 * p + b] = e[2 * p + b, 2 * p + a] = 1.0
            out.append(e)
    return out


def _reduced_state(form: SkewCanonicalForm, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Image-block state with the kernel coupling eliminated.

    Returns (z, a, b_inv) where z is the Schur complement of the kernel
    block, S - A B^{-1} A^T, the object whose trace powers are annihilated
    by the Lie-Poisson tensor.  For d = 0 this is just x itself.
    """
    m = 2 * form.p
    s = x[:m, :m]
    if form.d == 0:
        return s, x[:m, m:], None
    a = x[:m, m:]
    b = x[m:, m:]
    try:
        b_inv = np.linalg.inv(b)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "kernel block of the state is singular; the trace-power Casimirs "
            "are only defined where it is invertible"
        ) from exc
    return s - a @ b_inv @ a.T, a, b_inv


def lie_poisson_casimirs(form: SkewCanonicalForm, x_canonical: np.ndarray) -> np.ndarray:
    """Casimir values of the Lie-Poisson bracket at a state in the canonical basis.

    The first p values are trace((z core^{-1})^{2k}) / 2k for k = 1..p,
    where z is the Schur complement of the kernel block of the state (for
    invertible N this is plain trace((x n^{-1})^{2k}) / 2k).  The remaining
    d(d+1)/2 values are the linear kernel-block functions trace(x e).
    """
    x = as_square(x_canonical)
    if x.shape[0] != form.n:
        raise ValueError(f"state size {x.shape[0]} does not match form size {form.n}")
    vals = []
    if form.p > 0:
        core_inv = form.pseudo_inverse[:2 * form.p, :2 * form.p]
        z, _, _ = _reduced_state(form, x)
        w = z @ core_inv
        w2 = w @ w
        power = w2
        for k in range(1, form.p + 1):
            vals.append(float(np.trace(power)) / (2 * k))
            if k < form.p:
                power = power @ w2
    off = 2 * form.p
    for a in range(form.d):
        for b in range(a, form.d):
            if a == b:
                vals.append(float(x[off + a, off + a]))
            else:
                vals.append(float(x[off + a, off + b] + x[off + b, off + a]))
    return np.asarray(vals)


def lie_poisson_casimir_gradients(form: SkewCanonicalForm, x_canonical: np.ndarray) -> list[np.ndarray]:
    """Gradients of the Lie-Poisson Casimirs at a state in the canonical basis.

    The trace-power family has image-block gradient
    g = core^{-1} (z core^{-1})^{2k-1} with z the kernel-block Schur
    complement; the coupling and kernel blocks -g A B^{-1} and
    B^{-1} A^T g A B^{-1} make the full gradient land in the tensor kernel.
    The linear family keeps its constant kernel-block unit gradients.
    """
    x = as_square(x_canonical)
    if x.shape[0] != form.n:
        raise ValueError(f"state size {x.shape[0]} does not match form size {form.n}")
    n, p, d = form.n, form.p, form.d
    grads: list[np.ndarray] = []
    if p > 0:
        core_inv = form.pseudo_inverse[:2 * p, :2 * p]
        z, a, b_inv = _reduced_state(form, x)
        w = z @ core_inv
        power = w  # (z core^{-1})^(2k-1), starting at k = 1
        for k in range(1, p + 1):
            g = symmetrize(core_inv @ power)
            full = np.zeros((n, n))
            full[:2 * p, :2 * p] = g
            if d > 0:
                coupling = -g @ a @ b_inv
                full[:2 * p, 2 * p:] = coupling
                full[2 * p:, :2 * p] = coupling.T
                full[2 * p:, 2 * p:] = b_inv @ a.T @ g @ a @ b_inv
            grads.append(full)
            if k < p:
                power = power @ w @ w
    off = 2 * p
    for a_i in range(d):
        for b_i in range(a_i, d):
            grads.append(_sym_unit(n, off + a_i, off + b_i))
    return grads


def sym_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of Sym(n) for the trace inner product."""
    basis = [_sym_unit(n, i, i) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            basis.append(_sym_unit(n, i, j) / np.sqrt(2.0))
    return basis


def tensor_as_matrix(x: np.ndarray, n_skew: np.ndarray, which: str) -> np.ndarray:
    """Matrix of a Poisson tensor in the orthonormal Sym(n) basis.

    ``which`` selects ``'lie_poisson'`` or ``'frozen'``.  The result is an
    antisymmetric m x m matrix, m = n(n+1)/2, whose numerical rank is the
    symplectic leaf dimension through the chosen structure.
    """
    if which not in ("lie_poisson", "frozen"):
        raise ValueError(f"unknown tensor {which!r}")
    basis = sym_basis(x.shape[0])
    m = len(basis)
    out = np.empty((m, m))
    images = []
    for e in basis:
        if which == "lie_poisson":
            images.append(lie_poisson_tensor(x, e, n_skew))
        else:
            images.append(frozen_tensor(e, n_skew))
    for i, e in enumerate(basis):
        for j in range(m):
            out[i, j] = frobenius_inner(e, images[j])
    return out


def rank_certified(vectors, tol: float) -> int:
    """Numerical rank, re-checked one tolerance decade higher.

    Raises :class:`RankInstabilityError` when the two tolerances disagree,
    which flags a spectrum straddling the threshold instead of silently
    returning either answer.
    """
    r = numerical_rank(vectors, tol)
    r_loose = numerical_rank(vectors, 10.0 * tol)
    if r != r_loose:
        raise RankInstabilityError(
            f"rank {r} at tol {tol:.1e} but {r_loose} at {10 * tol:.1e}"
        )
    return r


def leaf_dimensions(form: SkewCanonicalForm, x: np.ndarray, rank_tol: float = 1e-9) -> tuple[int, int]:
    """Symplectic leaf dimensions (Lie-Poisson, frozen) at a state x.

    Both are numerical ranks of the tensor matrices; the caller is expected
    to pass a generic x (resample if a rank instability is flagged).
    """
    b_mat = tensor_as_matrix(x, form.skew, "lie_poisson")
    c_mat = tensor_as_matrix(x, form.skew, "frozen")
    dim_lp = rank_certified([b_mat[:, j] for j in range(b_mat.shape[1])], rank_tol)
    dim_frozen = rank_certified([c_mat[:, j] for j in range(c_mat.shape[1])], rank_tol)
    return dim_lp, dim_frozen


def poisson_jacobi_defect(
    x: np.ndarray,
    n_skew: np.ndarray,
    f,
    g,
    h,
    weights: tuple[float, float] = (1.0, 1.0),
) -> float:
    """Jacobi-identity residual of w_B * LiePoisson + w_C * frozen at x.

    Test functions are pairs (P, a) encoding f(X) = trace(X P X P)/2 +
    trace(a X), whose gradient P X P + a is affine in X, so every derivative
    in the cyclic sum {{f,g},h} + {{g,h},f} + {{h,f},g} is evaluated in
    closed form.  Vanishes identically for each structure alone and for
    their sum (compatibility).
    """
    w_b, w_c = weights

    def tensor(y):
        out = np.zeros_like(y)
        if w_b:
            out = out + w_b * (x @ y @ n_skew - n_skew @ y @ x)
        if w_c:
            out = out + w_c * (y @ n_skew - n_skew @ y)
        return out

    def grad(tf):
        pm, am = tf
        return pm @ x @ pm + am

    def hess(tf, k):
        pm, _ = tf
        return pm @ k @ pm

    def d_bracket(tf1, tf2, k):
        # directional derivative of {f1, f2} at x along the symmetric k
        g1, g2 = grad(tf1), grad(tf2)
        total = frobenius_inner(hess(tf1, k), tensor(g2))
        if w_b:
            total += w_b * frobenius_inner(g1, k @ g2 @ n_skew - n_skew @ g2 @ k)
        total += frobenius_inner(g1, tensor(hess(tf2, k)))
        return total

    acc = 0.0
    for (t1, t2, t3) in ((f, g, h), (g, h, f), (h, f, g)):
        acc += d_bracket(t1, t2, tensor(grad(t3)))
    return abs(acc)
