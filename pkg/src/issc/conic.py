"""
Small dense conic layer: affine LMIs over real decision vectors, complex
realification, the trace-of-inverse epigraph and a primal-dual
interior-point solver.

Problems are written as ::

    minimize    c^T x + x^T Q x + const
    subject to  A_eq x = b_eq
                G x <= h
                F0_k + sum_i x_i F_ik  >= 0   (PSD, every block k)

Equalities are eliminated through a null-space basis, the quadratic term is
moved into an epigraph LMI, and the remaining pure LMI problem is solved as
the dual of a standard-form SDP with the HKM search direction and a
Mehrotra predictor-corrector.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .errors import InvalidLmi

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"
    NUMERICAL_TROUBLE = "NumericalTrouble"


# ---------------------------------------------------------------------------
# Problem construction
# ---------------------------------------------------------------------------


class AffineMatrix:
    """Symmetric matrix ``F0 + sum_i x_i F_i`` keyed by decision index."""

    def __init__(self, const, terms=None):
        self.const = np.array(const, dtype=float)
        self.terms = {} if terms is None else {int(k): np.array(v, dtype=float) for k, v in terms.items()}

    @property
    def shape(self):
        return self.const.shape

    def __add__(self, other):
        if not isinstance(other, AffineMatrix):
            return AffineMatrix(self.const + np.asarray(other, dtype=float), self.terms)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms[k] + v if k in terms else v
        return AffineMatrix(self.const + other.const, terms)

    __radd__ = __add__

    def __neg__(self):
        return AffineMatrix(-self.const, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, s):
        return AffineMatrix(self.const * s, {k: v * s for k, v in self.terms.items()})

    __rmul__ = __mul__

    def evaluate(self, x):
        out = self.const.copy()
        for k, v in self.terms.items():
            out += x[k] * v
        return out

    @staticmethod
    def block(rows):
        """Assemble a block matrix from a nested list of AffineMatrix / arrays."""
        rows = [[r if isinstance(r, AffineMatrix) else AffineMatrix(np.atleast_2d(r)) for r in row] for row in rows]
        heights = [row[0].shape[0] for row in rows]
        widths = [b.shape[1] for b in rows[0]]
        m, n = sum(heights), sum(widths)
        const = np.zeros((m, n))
        terms = {}
        r0 = 0
        for row, hgt in zip(rows, heights):
            c0 = 0
            for b, wid in zip(row, widths):
                const[r0:r0 + hgt, c0:c0 + wid] = b.const
                for k, v in b.terms.items():
                    if k not in terms:
                        terms[k] = np.zeros((m, n))
                    terms[k][r0:r0 + hgt, c0:c0 + wid] += v
                c0 += wid
            r0 += hgt
        return AffineMatrix(const, terms)


@dataclass
class SymVar:
    """Symmetric n x n decision matrix stored by its upper triangle."""

    n: int
    index: np.ndarray  # decision indices, row-major upper triangle

    def affine(self):
        const = np.zeros((self.n, self.n))
        terms = {}
        k = 0
        for i in range(self.n):
            for j in range(i, self.n):
                E = np.zeros((self.n, self.n))
                E[i, j] = E[j, i] = 1.0
                terms[int(self.index[k])] = E
                k += 1
        return AffineMatrix(const, terms)

    def value(self, x):
        return self.affine().evaluate(x)

    def trace_row(self):
        row = {}
        k = 0
        for i in range(self.n):
            for j in range(i, self.n):
                if i == j:
                    row[int(self.index[k])] = 1.0
                k += 1
        return row


@dataclass
class ConicProblem:
    """Mutable builder; treat as immutable once handed to :func:`solve`."""

    names: dict = field(default_factory=dict)
    n: int = 0
    c: dict = field(default_factory=dict)
    Q_terms: list = field(default_factory=list)  # (indices, R) with x^T Q x = ||R x[indices]||^2
    const: float = 0.0
    eq_rows: list = field(default_factory=list)
    ineq_rows: list = field(default_factory=list)
    lmis: list = field(default_factory=list)

    # -- variables -------------------------------------------------------
    def add_real(self, name, size=1):
        idx = np.arange(self.n, self.n + size)
        self.n += size
        self.names[name] = ("real", idx)
        return idx

    def add_complex(self, name, size=1):
        """Complex vector realified as ``[Re; Im]``; returns (re_idx, im_idx)."""
        re = np.arange(self.n, self.n + size)
        im = np.arange(self.n + size, self.n + 2 * size)
        self.n += 2 * size
        self.names[name] = ("complex", np.concatenate([re, im]))
        return re, im

    def add_symmetric(self, name, n):
        size = n * (n + 1) // 2
        idx = np.arange(self.n, self.n + size)
        self.n += size
        self.names[name] = ("sym", idx, n)
        return SymVar(n, idx)

    # -- objective and constraints --------------------------------------
    def add_linear_objective(self, coeffs):
        for k, v in coeffs.items():
            self.c[int(k)] = self.c.get(int(k), 0.0) + float(v)

    def add_quadratic_objective(self, indices, R, offset=None):
        """Adds ``||R x[indices] - offset||^2`` to the objective."""
        R = np.atleast_2d(np.asarray(R, dtype=float))
        indices = np.asarray(indices, dtype=int)
        offset = np.zeros(R.shape[0]) if offset is None else np.asarray(offset, dtype=float)
        self.Q_terms.append((indices, R, offset))

    def add_eq(self, coeffs, rhs):
        self.eq_rows.append((dict(coeffs), float(rhs)))

    def add_ineq(self, coeffs, rhs):
        """``sum coeffs[k] x_k <= rhs``."""
        self.ineq_rows.append((dict(coeffs), float(rhs)))

    def add_lmi(self, M):
        M = M if isinstance(M, AffineMatrix) else AffineMatrix(M)
        _check_symmetric(M)
        self.lmis.append(M)

    def unpack(self, x):
        out = {}
        for name, entry in self.names.items():
            if entry[0] == "real":
                out[name] = x[entry[1]].copy()
            elif entry[0] == "complex":
                idx = entry[1]
                h = idx.size // 2
                out[name] = x[idx[:h]] + 1j * x[idx[h:]]
            else:
                out[name] = SymVar(entry[2], entry[1]).value(x)
        return out

    # -- dense views -----------------------------------------------------
    def objective_value(self, x):
        val = self.const + sum(v * x[k] for k, v in self.c.items())
        for idx, R, off in self.Q_terms:
            r = R @ x[idx] - off
            val += float(r @ r)
        return float(val)

    def _dense(self):
        n = self.n
        c = np.zeros(n)
        for k, v in self.c.items():
            c[k] += v
        A = np.zeros((len(self.eq_rows), n))
        b = np.zeros(len(self.eq_rows))
        for r, (coef, rhs) in enumerate(self.eq_rows):
            for k, v in coef.items():
                A[r, k] += v
            b[r] = rhs
        G = np.zeros((len(self.ineq_rows), n))
        h = np.zeros(len(self.ineq_rows))
        for r, (coef, rhs) in enumerate(self.ineq_rows):
            for k, v in coef.items():
                G[r, k] += v
            h[r] = rhs
        lmis = []
        for M in self.lmis:
            m = M.shape[0]
            F = np.zeros((n, m, m))
            for k, v in M.terms.items():
                F[k] += v
            lmis.append((M.const.copy(), F))
        return c, A, b, G, h, lmis


def _check_symmetric(M, tol=1e-12):
    mats = [M.const] + list(M.terms.values())
    for F in mats:
        if F.shape[0] != F.shape[1]:
            raise InvalidLmi("LMI blocks must be square")
        if np.max(np.abs(F - F.T), initial=0.0) > tol * max(1.0, np.max(np.abs(F), initial=0.0)):
            raise InvalidLmi("LMI block is not symmetric")


def realify_lmi(M):
    """Real symmetric embedding ``[[Re M, -Im M], [Im M, Re M]]``.

    Accepts a complex Hermitian array or a dict with ``const`` and ``terms``
    (decision index -> complex Hermitian coefficient) and returns an array or
    :class:`AffineMatrix` respectively. The embedding is PSD iff ``M`` is.
    """

    def emb(A):
        A = np.asarray(A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidLmi("LMI block must be square")
        if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(A), initial=0.0)):
            raise InvalidLmi("complex LMI block is not Hermitian")
        return np.block([[A.real, -A.imag], [A.imag, A.real]])

    if isinstance(M, dict):
        return AffineMatrix(emb(M["const"]), {k: emb(v) for k, v in M.get("terms", {}).items()})
    return emb(M)


def trace_inverse_epigraph(problem, Omega, Pi, weight=None):
    """Constrain ``Tr(W Omega^-1) <= Pi`` for an affine symmetric ``Omega``.

    Adds an auxiliary symmetric ``U`` with ``Tr(W U) <= Pi`` and the Schur-form
    LMI ``[[U, I], [I, Omega]] >= 0`` (which forces ``U >= Omega^-1``).
    ``W`` defaults to the identity. Returns the auxiliary variable.
    """
    if not Pi > 0:
        raise ValueError("threshold must be positive")
    Omega = Omega if isinstance(Omega, AffineMatrix) else AffineMatrix(Omega)
    n = Omega.shape[0]
    U = problem.add_symmetric(f"_U{len(problem.names)}", n)
    if weight is None:
        problem.add_ineq(U.trace_row(), Pi)
    else:
        W = np.asarray(weight, dtype=float)
        row, k = {}, 0
        for i in range(n):
            for j in range(i, n):
                row[int(U.index[k])] = W[i, i] if i == j else W[i, j] + W[j, i]
                k += 1
        problem.add_ineq(row, Pi)
    I = np.eye(n)
    problem.add_lmi(AffineMatrix.block([[U.affine(), I], [I, Omega]]))
    return U


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


@dataclass
class ConicSolution:
    x: np.ndarray
    values: dict
    objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    status: Status
    iterations: int

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


def solve(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    c, A, b, G, h, lmis = problem._dense()
    n = problem.n

    # eliminate equalities: x = x0 + N z
    if A.shape[0]:
        x0, *_ = np.linalg.lstsq(A, b, rcond=None)
        res = np.linalg.norm(A @ x0 - b)
        if res > 1e3 * tol * (1 + np.linalg.norm(b)):
            return _failed(problem, Status.INFEASIBLE, x0, res)
        N = null_space(A)
    else:
        x0 = np.zeros(n)
        N = np.eye(n)
    nz = N.shape[1]

    # quadratic terms -> epigraph variable t with ||R x - off||^2 <= t
    blocks = []  # (F0, F) over z (and t appended later)
    quad = []
    for idx, R, off in problem.Q_terms:
        Rz = R @ N[idx, :]
        r0 = R @ x0[idx] - off
        quad.append((Rz, r0))
    use_t = bool(quad)
    nv = nz + (1 if use_t else 0)

    cz = N.T @ c
    obj_const = problem.const + float(c @ x0)
    cv = np.concatenate([cz, [1.0]]) if use_t else cz

    def pad(F):
        return np.concatenate([F, np.zeros((1,) + F.shape[1:])]) if use_t else F

    if G.shape[0]:
        F0 = np.diag(h - G @ x0)
        F = np.zeros((nz, G.shape[0], G.shape[0]))
        Gz = G @ N
        for i in range(nz):
            F[i] = np.diag(-Gz[:, i])
        blocks.append((F0, pad(F), True))
    for F0, Fx in lmis:
        F0z = F0 + np.tensordot(x0, Fx, axes=1)
        Fz = np.tensordot(N.T, Fx, axes=1)
        blocks.append((F0z, pad(Fz), False))
    if use_t:
        Rz = np.vstack([q[0] for q in quad])
        r0 = np.concatenate([q[1] for q in quad])
        p = Rz.shape[0]
        # [[I, Rz z + r0], [(.)^T, t]] >= 0
        m = p + 1
        F0 = np.zeros((m, m))
        F0[:p, :p] = np.eye(p)
        F0[:p, p] = F0[p, :p] = r0
        F = np.zeros((nv, m, m))
        for i in range(nz):
            F[i, :p, p] = F[i, p, :p] = Rz[:, i]
        F[nz, p, p] = 1.0
        blocks.append((F0, F, False))

    if not blocks:
        if np.any(np.abs(cv) > 0):
            return _failed(problem, Status.NUMERICAL_TROUBLE, x0, 0.0)
        return _finish(problem, x0, Status.OPTIMAL, 0.0, 0.0, 0.0, 0, problem.objective_value(x0))

    v, status, info, it = _sdp_ipm(cv, blocks, tol, max_iter)
    z = v[:nz]
    x = x0 + N @ z
    obj = problem.objective_value(x)
    dobj = info["dobj"] + obj_const
    return _finish(problem, x, status, info["pres"], info["dres"], info["gap"], it, obj, dobj)


def _failed(problem, status, x, res):
    return _finish(problem, x, status, res, np.inf, np.inf, 0, problem.objective_value(x), -np.inf)


def _finish(problem, x, status, pres, dres, gap, it, obj, dobj=None):
    return ConicSolution(
        x=x, values=problem.unpack(x), objective=obj,
        dual_objective=obj if dobj is None else dobj,
        primal_residual=float(pres), dual_residual=float(dres), gap=float(gap),
        status=status, iterations=it,
    )


def _max_step(X, dX):
    """Largest alpha with X + alpha dX PSD."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    Li = np.linalg.inv(L)
    ev = np.linalg.eigvalsh(Li @ dX @ Li.T)
    lo = ev.min()
    return np.inf if lo >= 0 else -1.0 / lo


def _sdp_ipm(c, blocks, tol, max_iter):
    """Solve min c^T v s.t. S_k(v) = F0_k + sum v_i F_ik >= 0.

    This is the dual of ``min sum <F0_k, X_k>`` s.t. ``sum <F_ik, X_k> = -c_i``,
    ``X_k >= 0``; both are iterated jointly.
    """
    nv = c.size
    # column scaling of the decision vector
    colnorm = np.sqrt(sum(np.einsum("ijk,ijk->i", F, F) for _, F, _ in blocks))
    scale = np.where(colnorm > 0, 1.0 / np.where(colnorm > 0, colnorm, 1.0), 1.0)
    Fs = [(F0, F * scale[:, None, None], diag) for F0, F, diag in blocks]
    cs = c * scale
    bvec = cs  # primal equality rhs

    def Aop(Xs):
        return sum(np.einsum("ijk,jk->i", F, X) for (_, F, _), X in zip(Fs, Xs))

    def Atop(y):
        return [np.tensordot(y, F, axes=1) for _, F, _ in Fs]

    dims = [F0.shape[0] for F0, _, _ in Fs]
    ntot = sum(dims)
    normb = 1 + np.linalg.norm(bvec)
    normC = 1 + np.sqrt(sum(np.sum(F0 * F0) for F0, _, _ in Fs))
    xi = max(10.0, np.sqrt(ntot), normC)
    eta = max(10.0, np.sqrt(ntot), max(1.0, np.max(np.abs(bvec), initial=0.0)))
    Xs = [eta * np.eye(d) for d in dims]
    Zs = [xi * np.eye(d) for d in dims]
    # our decision v relates to the dual multipliers by y = -v
    y = np.zeros(nv)

    info = {"pres": np.inf, "dres": np.inf, "gap": np.inf, "dobj": -np.inf}
    status = Status.MAX_ITER
    best = None
    for it in range(1, max_iter + 1):
        S_of_y = [F0 - Ay for (F0, _, _), Ay in zip(Fs, Atop(y))]  # C - A^T y
        Rp = bvec - Aop(Xs)
        Rd = [S - Z for S, Z in zip(S_of_y, Zs)]
        mu = sum(np.sum(X * Z) for X, Z in zip(Xs, Zs)) / ntot
        pobj = sum(np.sum(F0 * X) for (F0, _, _), X in zip(Fs, Xs))
        dobj = float(bvec @ y)
        pres = np.linalg.norm(Rp) / normb
        dres = np.sqrt(sum(np.sum(R * R) for R in Rd)) / normC
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        info = {"pres": pres, "dres": dres, "gap": gap, "dobj": -pobj}
        cur = (max(pres, dres, gap), -y * scale, dict(info))
        if best is None or cur[0] < best[0]:
            best = cur
        if pres <= tol and dres <= tol and gap <= tol:
            status = Status.OPTIMAL
            break
        # infeasibility certificate for the LMI problem: X >= 0, A(X) = 0, <C, X> < 0
        trX = sum(np.trace(X) for X in Xs)
        if pobj < 0 and np.linalg.norm(Aop(Xs)) <= 1e-8 * abs(pobj) and abs(pobj) / trX > 1e-8 and trX > 1e8:
            status = Status.INFEASIBLE
            break

        try:
            Zinv = [np.linalg.inv(Z) for Z in Zs]
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_TROUBLE
            break
        # Schur matrix M_ij = sum_k Tr(F_ik X_k F_jk Z_k^-1)
        M = np.zeros((nv, nv))
        for (_, F, _), X, Zi in zip(Fs, Xs, Zinv):
            FX = np.einsum("iab,bc->iac", F, X)
            FZ = np.einsum("iab,bc->iac", F, Zi)
            M += np.einsum("iac,jca->ij", FX, FZ)
        M = 0.5 * (M + M.T)
        try:
            Mc = np.linalg.cholesky(M + 1e-14 * np.trace(M) / nv * np.eye(nv))
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_TROUBLE
            break

        def direction(Rc):
            # Rc: list of complementarity right-hand sides (target - XZ - corr)
            # dX = Rc Z^-1 - X dZ Z^-1,  dZ = Rd - A^T dy,  A(dX) = Rp
            base = [Rc_k @ Zi - X @ R @ Zi for Rc_k, X, R, Zi in zip(Rc, Xs, Rd, Zinv)]
            rhs = Rp - Aop([0.5 * (B + B.T) for B in base])
            dy = np.linalg.solve(Mc.T, np.linalg.solve(Mc, rhs))
            dZ = [R - Ad for R, Ad in zip(Rd, Atop(dy))]
            dX = [Rc_k @ Zi - X @ dz @ Zi for Rc_k, X, dz, Zi in zip(Rc, Xs, dZ, Zinv)]
            dX = [0.5 * (D + D.T) for D in dX]
            return dX, dy, dZ

        # predictor
        Rc_aff = [-(X @ Z) for X, Z in zip(Xs, Zs)]
        dXa, dya, dZa = direction(Rc_aff)
        ap = min(1.0, min(_max_step(X, D) for X, D in zip(Xs, dXa)))
        ad = min(1.0, min(_max_step(Z, D) for Z, D in zip(Zs, dZa)))
        mu_aff = sum(np.sum((X + ap * dx) * (Z + ad * dz)) for X, dx, Z, dz in zip(Xs, dXa, Zs, dZa)) / ntot
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector
        Rc = [sigma * mu * np.eye(d) - X @ Z - dx @ dz for d, X, Z, dx, dz in zip(dims, Xs, Zs, dXa, dZa)]
        dX, dy, dZ = direction(Rc)
        ap = min(1.0, 0.98 * min(_max_step(X, D) for X, D in zip(Xs, dX)))
        ad = min(1.0, 0.98 * min(_max_step(Z, D) for Z, D in zip(Zs, dZ)))
        if ap <= 1e-12 and ad <= 1e-12:
            status = Status.NUMERICAL_TROUBLE
            break
        Xs = [X + ap * D for X, D in zip(Xs, dX)]
        Zs = [Z + ad * D for Z, D in zip(Zs, dZ)]
        y = y + ad * dy
        Xs = [0.5 * (X + X.T) for X in Xs]
        Zs = [0.5 * (Z + Z.T) for Z in Zs]

    if status is Status.OPTIMAL:
        v = -y * scale
    else:
        v = best[1]
        info = best[2]
        if status is Status.MAX_ITER and best[0] <= 10 * tol:
            status = Status.OPTIMAL
    return v, status, info, it


# ---------------------------------------------------------------------------
# Interchange listing
# ---------------------------------------------------------------------------


def dump_sdpa(problem, path):
    """Write the equality-free LMI form in SDPA sparse format.

    Only problems without quadratic terms or equalities are exported; SDPA
    reads ``min c^T x  s.t.  sum_i x_i F_i - F0 >= 0``.
    """
    if problem.Q_terms or problem.eq_rows:
        raise ValueError("export supports linear objectives with inequality/LMI constraints only")
    c, _, _, G, h, lmis = problem._dense()
    blocks = []
    if G.shape[0]:
        m = G.shape[0]
        F = np.zeros((problem.n, m, m))
        for i in range(problem.n):
            F[i] = np.diag(-G[:, i])
        blocks.append((-np.diag(h), F, -m))
    for F0, F in lmis:
        blocks.append((-F0, F, F0.shape[0]))
    lines = [f'"exported by issc.conic"', str(problem.n), str(len(blocks))]
    lines.append(" ".join(str(b[2]) for b in blocks))
    lines.append(" ".join(repr(float(v)) for v in c))
    for bi, (F0, F, size) in enumerate(blocks, start=1):
        mats = [F0] + list(F)
        for mi, Fm in enumerate(mats):
            m = Fm.shape[0]
            for i in range(m):
                for j in range(i, m):
                    if Fm[i, j] != 0:
                        lines.append(f"{mi} {bi} {i + 1} {j + 1} {Fm[i, j]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
