"""Decide whether block data of a hyperbolic affine sphere comes from a Calabi composition.

The input is a :class:`DecompositionData`: the Blaschke metric and the cubic
form ``A`` sampled on a product chart ``R^q x M_1 x ... x M_s``, with the
Euclidean block first.  ``A[i, j, k] = g(A(e_i, e_j), e_k)``, so the block
``A^c_{ab}`` (vector part in factor ``c``) is ``A[a-block, b-block, c-block]``.

All residuals are evaluated in orthonormal frames of the block metrics.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDecomposition,
    PartitionMismatch,
    RankContradiction,
)
from .geometry import block_curvature, check_S_membership, gauss_sphere_defect, pick_invariant, point_invariants
from .immersion import ImmersionSpec

DEFAULT_TOL = 1e-6
RANK_RTOL = 1e-8

#: identity families whose violation is planted by :func:`plant_violation`
FAMILIES = ("condition2", "condition3", "isotropy", "mixed_block", "center_transversal")


@dataclass
class BlockSample:
    g: np.ndarray  # full n x n metric
    A: np.ndarray  # full n x n x n cubic form
    R: list  # per-factor curvature endomorphisms curv[x, y, z, m]
    reference_metrics: list | None = None  # per-factor metrics fixing the factor gauge
    point: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = {"g": self.g.tolist(), "A": self.A.tolist(), "R": [r.tolist() for r in self.R]}
        if self.reference_metrics is not None:
            d["reference_metrics"] = [m.tolist() for m in self.reference_metrics]
        if self.point is not None:
            d["point"] = self.point.tolist()
        return d


@dataclass
class DecompositionData:
    q: int
    s: int
    dims: tuple
    L1: float
    samples: list
    flat_factor_warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.q = int(self.q)
        self.s = int(self.s)
        self.dims = tuple(int(d) for d in self.dims)
        self.L1 = float(self.L1)
        self.validate()

    @property
    def n(self) -> int:
        return self.q + sum(self.dims)

    @property
    def blocks(self) -> list:
        """Slices of the Euclidean block followed by the factor blocks."""
        out = [slice(0, self.q)]
        k = self.q
        for d in self.dims:
            out.append(slice(k, k + d))
            k += d
        return out

    def validate(self):
        if self.q < 0 or self.s < 0:
            raise InvalidDecomposition("q and s must be nonnegative")
        if len(self.dims) != self.s or any(d < 1 for d in self.dims):
            raise InvalidDecomposition(f"need s = {self.s} positive factor dimensions, got {self.dims}")
        if self.q + self.s < 2:
            raise InvalidDecomposition(f"a reducible decomposition needs q + s >= 2, got q={self.q}, s={self.s}")
        if not (np.isfinite(self.L1) and self.L1 < 0):
            raise InvalidDecomposition(f"L1 must be negative, got {self.L1}")
        if not self.samples:
            raise InvalidDecomposition("no samples")
        n = self.n
        blocks = self.blocks
        self.flat_factor_warnings = []
        for idx, smp in enumerate(self.samples):
            smp.g = np.asarray(smp.g, dtype=float)
            smp.A = np.asarray(smp.A, dtype=float)
            smp.R = [np.asarray(r, dtype=float) for r in smp.R]
            if smp.g.shape != (n, n) or smp.A.shape != (n, n, n):
                raise PartitionMismatch(
                    f"sample {idx}: expected g {(n, n)} and A {(n, n, n)}, got {smp.g.shape} and {smp.A.shape}")
            if len(smp.R) != self.s or any(r.shape != (d,) * 4 for r, d in zip(smp.R, self.dims)):
                raise PartitionMismatch(f"sample {idx}: factor curvature shapes do not match dims {self.dims}")
            if smp.reference_metrics is not None:
                smp.reference_metrics = [np.asarray(m, dtype=float) for m in smp.reference_metrics]
                if len(smp.reference_metrics) != self.s or any(
                        m.shape != (d, d) for m, d in zip(smp.reference_metrics, self.dims)):
                    raise PartitionMismatch(f"sample {idx}: reference metric shapes do not match dims")
            if not np.all(np.isfinite(smp.g)) or not np.all(np.isfinite(smp.A)):
                raise InvalidDecomposition(f"sample {idx}: non-finite entries")
            lim = 1e-8 * (1.0 + np.max(np.abs(smp.g)))
            if np.max(np.abs(smp.g - smp.g.T)) > lim:
                raise InvalidDecomposition(f"sample {idx}: metric is not symmetric")
            for a, b in itertools.permutations(range(self.s + 1), 2):
                blk = smp.g[blocks[a], blocks[b]]
                if blk.size and np.max(np.abs(blk)) > lim:
                    raise PartitionMismatch(
                        f"sample {idx}: metric has a nonzero cross block between parts {a} and {b}")
            for b in blocks:
                blk = smp.g[b, b]
                if blk.size and np.min(np.linalg.eigvalsh(blk)) <= 0:
                    raise InvalidDecomposition(f"sample {idx}: block metric is not positive definite")
        for a, d in enumerate(self.dims):
            if d >= 2 and all(np.max(np.abs(smp.R[a])) < 1e-10 for smp in self.samples):
                self.flat_factor_warnings.append(
                    f"factor {a + 1} (dim {d}) has vanishing curvature; it cannot be irreducible")

    # ------------------------------------------------------------------ I/O

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "s": self.s,
            "dims": list(self.dims),
            "L1": self.L1,
            "samples": [smp.to_dict() for smp in self.samples],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecompositionData":
        try:
            samples = [
                BlockSample(
                    g=np.asarray(smp["g"], dtype=float),
                    A=np.asarray(smp["A"], dtype=float),
                    R=[np.asarray(r, dtype=float) for r in smp.get("R", [])],
                    reference_metrics=(None if smp.get("reference_metrics") is None
                                       else [np.asarray(m, dtype=float) for m in smp["reference_metrics"]]),
                    point=None if smp.get("point") is None else np.asarray(smp["point"], dtype=float),
                )
                for smp in d["samples"]
            ]
            return cls(q=d["q"], s=d["s"], dims=tuple(d["dims"]), L1=d["L1"], samples=samples)
        except (KeyError, TypeError) as exc:
            raise PartitionMismatch(f"malformed block dataset: {exc}") from None
        except ValueError as exc:
            if isinstance(exc, (InvalidDecomposition, PartitionMismatch)):
                raise
            raise PartitionMismatch(f"malformed block dataset: {exc}") from None

    @classmethod
    def load(cls, path) -> "DecompositionData":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise PartitionMismatch(f"{path} is not valid JSON: {exc}") from None
        return cls.from_dict(obj)

    def copy(self) -> "DecompositionData":
        return DecompositionData.from_dict(self.to_dict())


# ---------------------------------------------------------------------------
# sampling


def _sample_points(spec: ImmersionSpec, count: int, seed: int, box) -> np.ndarray:
    lo, hi = (-float(box), float(box)) if np.isscalar(box) else (float(box[0]), float(box[1]))
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(count, spec.dim))


def sample_blocks(source, points=None, *, count: int = 5, seed: int = 0, box=1.0) -> DecompositionData:
    """Block data of a spec at explicit or seeded random chart points.

    For a composition the Euclidean block is the ``t``-chart (``q = K - 1``)
    and each factor block is a factor chart.  Any other spec is treated as a
    single factor (``q = 0, s = 1``), which fails validation.  Mappings and
    paths are loaded as external datasets.
    """
    from .calabi import CompositionSpec, factor_point_data

    if isinstance(source, DecompositionData):
        return source
    if isinstance(source, dict):
        return DecompositionData.from_dict(source)
    if isinstance(source, str):
        return DecompositionData.load(source)
    if not isinstance(source, ImmersionSpec):
        raise PartitionMismatch(f"cannot build block data from {type(source).__name__}")
    spec = source
    pts = _sample_points(spec, count, seed, box) if points is None else np.atleast_2d(np.asarray(points, float))
    if pts.shape[1] != spec.dim:
        raise DimensionMismatch(f"points must have {spec.dim} coordinates")
    if isinstance(spec, CompositionSpec):
        q, dims = spec.q, spec.factor_dims
    else:
        q, dims = 0, (spec.dim,)
    s = len(dims)
    samples, L1s = [], []
    for p in pts:
        inv = point_invariants(spec, p)
        L1s.append(inv.L1)
        blocks = []
        k = q
        for d in dims:
            blocks.append(slice(k, k + d))
            k += d
        R = [block_curvature(spec, p, b) for b in blocks]
        refs = None
        if isinstance(spec, CompositionSpec):
            _, parts = spec.split(p)
            refs = [factor_point_data(fac, part)[0] for fac, part in zip(spec.factors, parts)]
        samples.append(BlockSample(g=inv.g, A=inv.A, R=R, reference_metrics=refs, point=np.array(p)))
    return DecompositionData(q=q, s=s, dims=dims, L1=float(np.mean(L1s)), samples=samples)


# ---------------------------------------------------------------------------
# orthonormal frames


@dataclass
class _Frame:
    E: np.ndarray  # columns: orthonormal basis in chart coordinates
    Einv: np.ndarray
    A: np.ndarray  # cubic form in the orthonormal frame
    R: list  # factor curvatures in orthonormal frames


def _frame(data: DecompositionData, smp: BlockSample) -> _Frame:
    n = data.n
    E = np.zeros((n, n))
    for b in data.blocks:
        if b.stop > b.start:
            L = np.linalg.cholesky(smp.g[b, b])
            E[b, b] = np.linalg.inv(L).T
    Einv = np.linalg.inv(E)
    A = np.einsum("abc,ai,bj,ck->ijk", smp.A, E, E, E)
    R = []
    for b, r in zip(data.blocks[1:], smp.R):
        Eb, Eib = E[b, b], Einv[b, b]
        R.append(np.einsum("xyzm,xi,yj,zk,lm->ijkl", r, Eb, Eb, Eb, Eib))
    return _Frame(E=E, Einv=Einv, A=A, R=R)


def _frames(data):
    return [_frame(data, smp) for smp in data.samples]


def _max(values) -> float:
    vals = [float(v) for v in values]
    return max(vals) if vals else 0.0


# ---------------------------------------------------------------------------
# structural conditions


def _forbidden(a: int, b: int, c: int) -> bool:
    ms = sorted((a, b, c))
    if ms == [0, 0, 0]:
        return False
    if ms[0] == 0 and ms[1] == ms[2]:  # {alpha, alpha, 0}
        return False
    if ms[0] == ms[1] == ms[2]:  # {alpha, alpha, alpha}
        return False
    return True


def check_condition1(data: DecompositionData, frames=None) -> dict:
    """Constancy of the Euclidean block metric and total symmetry of ``A``."""
    b0 = data.blocks[0]
    g0 = data.samples[0].g[b0, b0]
    const = _max(np.max(np.abs(smp.g[b0, b0] - g0)) if g0.size else 0.0 for smp in data.samples)
    frames = frames or _frames(data)
    sym = _max(np.max(np.abs(f.A - np.transpose(f.A, p))) for f in frames for p in itertools.permutations(range(3)))
    return {"euclidean_constancy": const, "symmetry": sym}


def check_condition2(data: DecompositionData, frames=None) -> float:
    """Largest entry of ``A`` in blocks other than ``000``, permutations of ``aa0``, and ``aaa``."""
    frames = frames or _frames(data)
    blocks = data.blocks
    out = 0.0
    for a, b, c in itertools.product(range(data.s + 1), repeat=3):
        if not _forbidden(a, b, c):
            continue
        for f in frames:
            blk = f.A[blocks[a], blocks[b], blocks[c]]
            if blk.size:
                out = max(out, float(np.max(np.abs(blk))))
    return out


def check_condition3(data: DecompositionData, frames=None) -> float:
    """Failure of factor curvature to act skew-symmetrically on ``A^0_{aa}``.

    Evaluates ``A^0_aa(R(X,Y)Z, W) + A^0_aa(Z, R(X,Y)W)`` over orthonormal
    basis vectors of each factor.
    """
    frames = frames or _frames(data)
    b0 = data.blocks[0]
    out = 0.0
    for f in frames:
        for a, b in enumerate(data.blocks[1:]):
            A0 = f.A[b, b, b0]
            if A0.size == 0:
                continue
            R = f.R[a]
            res = np.einsum("xyzm,mwl->xyzwl", R, A0) + np.einsum("xywm,zml->xyzwl", R, A0)
            out = max(out, float(np.max(np.abs(res))))
    return out


# ---------------------------------------------------------------------------
# mean transversals


@dataclass
class Transversals:
    H: np.ndarray  # (s, q) chart components of H_alpha (first sample)
    H_on: np.ndarray  # (s, q) orthonormal components
    cbar: np.ndarray
    gram: np.ndarray
    dimH: int
    r_hat: int
    constancy: float
    singular_values: np.ndarray


def _H_on(data: DecompositionData, f: _Frame) -> np.ndarray:
    b0 = data.blocks[0]
    out = np.zeros((data.s, data.q))
    for a, (b, d) in enumerate(zip(data.blocks[1:], data.dims)):
        out[a] = np.einsum("xxl->l", f.A[b, b, b0]) / d
    return out


def mean_transversals(data: DecompositionData, frames=None, rank_rtol: float = RANK_RTOL) -> Transversals:
    """``H_a = (1/n_a) tr_{g_a} A^0_{aa}``, their Gram matrix, its rank and the point count."""
    if data.s < 1:
        raise InvalidDecomposition("mean transversals need at least one factor")
    frames = frames or _frames(data)
    Hs = [_H_on(data, f) for f in frames]
    H_on = Hs[0]
    constancy = _max(np.max(np.abs(h - H_on)) if h.size else 0.0 for h in Hs)
    gram = H_on @ H_on.T
    sv = np.linalg.svd(gram, compute_uv=False)
    dimH = int(np.sum(sv > rank_rtol * sv[0])) if sv.size and sv[0] > 0 else 0
    q, s = data.q, data.s
    if dimH < s - 1:
        raise RankContradiction(f"span of mean transversals has dimension {dimH} < s - 1 = {s - 1}")
    if dimH == s - 1:
        if q >= s:
            raise RankContradiction(f"q = {q} >= s = {s} requires span dimension s, found {dimH}")
        r_hat = 0
    else:
        r_hat = q - s + 1
    H = H_on @ frames[0].E[data.blocks[0], data.blocks[0]].T
    return Transversals(H=H, H_on=H_on, cbar=np.sqrt(np.diag(gram)), gram=gram, dimH=dimH,
                        r_hat=r_hat, constancy=constancy, singular_values=sv)


def gram_minor(gram: np.ndarray) -> float:
    """Determinant of the Gram matrix with the last row and the second-to-last column removed."""
    s = gram.shape[0]
    if s < 2:
        raise InvalidDecomposition("the minor needs s >= 2")
    cols = [c for c in range(s) if c != s - 2]
    return float(np.linalg.det(gram[: s - 1][:, cols]))


def lemma_identities(data: DecompositionData, tv: Transversals, frames=None) -> dict:
    """Residuals of the transversal identities that every composition satisfies.

    ``isotropy``: ``A^0_aa(X,Y) = g(X,Y) H_a``; ``gram``: ``g0(H_a, H_b) = L1``
    for ``a != b``; ``mixed_block``: ``A^a_{a0}(X,Z) = A^a_{0a}(Z,X) = g0(Z,H_a) X``;
    ``center_transversal``: ``A^0_00(Z, H_a) = g0(Z,H_a) H_a + L1 Z``;
    ``transversal_norm``: ``|H_a|^2 = ((n - n_a)/(n_a + 1))(-L1)``.
    """
    frames = frames or _frames(data)
    b0 = data.blocks[0]
    L1, n, q = data.L1, data.n, data.q
    iso = mixed = center = center_gauss = 0.0
    for f in frames:
        H = _H_on(data, f)
        A00 = f.A[b0, b0, b0]
        for a, b in enumerate(data.blocks[1:]):
            d = data.dims[a]
            I = np.eye(d)
            iso = max(iso, float(np.max(np.abs(f.A[b, b, b0] - np.einsum("xy,l->xyl", I, H[a])))) if q else 0.0)
            if q:
                target = np.einsum("xw,l->xlw", I, H[a])
                mixed = max(mixed, float(np.max(np.abs(f.A[b, b0, b] - target))),
                            float(np.max(np.abs(f.A[b0, b, b] - np.transpose(target, (1, 0, 2))))))
                lhs = np.einsum("lmv,m->lv", A00, H[a])
                rhs = np.outer(H[a], H[a]) + L1 * np.eye(q)
                center = max(center, float(np.max(np.abs(lhs - rhs))))
        if q:
            center_gauss = max(center_gauss, float(np.max(np.abs(
                gauss_sphere_defect(np.eye(q), A00, np.zeros((q,) * 4), L1)))))
    off = tv.gram - np.diag(np.diag(tv.gram))
    mask = ~np.eye(data.s, dtype=bool)
    gram_res = float(np.max(np.abs(off[mask] - L1))) if data.s >= 2 else 0.0
    pred = np.array([(n - d) / (d + 1) * (-L1) for d in data.dims])
    norm_res = float(np.max(np.abs(tv.cbar ** 2 - pred)))
    return {
        "isotropy": iso,
        "gram": gram_res,
        "mixed_block": mixed,
        "center_transversal": center,
        "center_gauss": center_gauss,
        "transversal_norm": norm_res,
        "transversal_constancy": tv.constancy,
    }


def gram_identities(data: DecompositionData, tv: Transversals) -> dict:
    """Minor sign, the contraction identity and the orthogonality of ``H_0``."""
    L1, s = data.L1, data.s
    out = {}
    if s >= 2:
        m = gram_minor(tv.gram)
        pred = L1 * np.prod(tv.cbar[: s - 2] ** 2 - L1)
        out["gram_minor_value"] = m
        out["gram_minor_predicted"] = float(pred)
        out["gram_minor"] = abs(m - pred) / abs(pred)
        out["gram_minor_negative"] = bool(m < 0)
    if tv.r_hat >= 1:
        w = np.array([d + 1 for d in data.dims], dtype=float)
        contraction = -(w @ tv.gram) / (tv.r_hat * L1)
        out["gram_contraction"] = float(np.max(np.abs(contraction - 1.0)))
        H0 = -(w @ tv.H_on) / tv.r_hat
        out["h0_orthogonality"] = float(np.max(np.abs(tv.H_on @ H0 - L1)))
    return out


# ---------------------------------------------------------------------------
# centre block


def split_center_block(data: DecompositionData, tv: Transversals, frames=None, tol: float = DEFAULT_TOL) -> dict:
    """Split ``A^0_00`` along ``span(H)`` and its orthogonal complement.

    Returns ``{"applicable": False, ...}`` when the complement is trivial.
    """
    r = tv.r_hat
    L1, n, q = data.L1, data.n, data.q
    w = np.array([d + 1 for d in data.dims], dtype=float)
    out = {"applicable": False, "r_hat": r}
    if r >= 1:
        H0 = -(w @ tv.H_on) / r
        out["H0_predicted"] = H0.tolist()
    if r <= 1:
        return out
    frames = frames or _frames(data)
    u, sv, vt = np.linalg.svd(tv.H_on, full_matrices=True)
    rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size else 0
    U = vt[:rank].T  # orthonormal basis of span(H)
    P = vt[rank:].T  # orthonormal basis of the complement
    if P.shape[1] != r - 1:
        raise RankContradiction(f"complement of span(H) has dimension {P.shape[1]}, expected {r - 1}")
    hinv = np.linalg.inv(tv.gram)
    b0 = data.blocks[0]
    res = dict.fromkeys(("h_component", "h_component_gram", "gram_inverse_sums", "trace_perp", "h0_trace"), 0.0)
    perps, H0s = [], []
    for f in frames:
        M = np.einsum("abc,ai,bj->ijc", f.A[b0, b0, b0], P, P)
        M_H = np.einsum("ijc,cu,du->ijd", M, U, U)
        M_perp = np.einsum("ijc,ck->ijk", M, P)
        I = np.eye(r - 1)
        res["h_component"] = max(res["h_component"],
                                 float(np.max(np.abs(M_H - np.einsum("ij,c->ijc", I, H0)))))
        via_gram = L1 * (hinv.sum(axis=1) @ tv.H_on)
        res["h_component_gram"] = max(res["h_component_gram"],
                                      float(np.max(np.abs(M_H - np.einsum("ij,c->ijc", I, via_gram)))))
        res["trace_perp"] = max(res["trace_perp"], float(np.max(np.abs(np.einsum("iik->k", M_perp)))))
        H0_tr = np.einsum("iic->c", M_H) / (r - 1)
        res["h0_trace"] = max(res["h0_trace"], float(np.max(np.abs(H0_tr - H0))))
        perps.append(M_perp)
        H0s.append(H0_tr)
    res["gram_inverse_sums"] = float(np.max(np.abs(hinv.sum(axis=1) + w / (r * L1))))
    c = (n + 1) * L1 / r
    k = r - 1
    mem = check_S_membership([np.eye(k)] * len(perps), perps, [np.zeros((k,) * 4)] * len(perps), c, tol=tol)
    out.update(res)
    out["applicable"] = True
    out["membership"] = mem.to_dict()
    out["membership_constant"] = c
    out["H0"] = H0s[0].tolist()
    out["cbar0"] = float(np.linalg.norm(H0s[0]))
    if r >= 3:
        J = _max(pick_invariant(m, np.eye(k)) for m in perps)
        out["pick_invariant"] = J
        out["pick_residual"] = abs(J + c)
    return out


# ---------------------------------------------------------------------------
# reconstruction


def reconstruct_factors(data: DecompositionData, tv: Transversals, tol: float = DEFAULT_TOL) -> dict:
    """Recover factor mean curvatures, metric scales and the composition constants.

    The factor gauge ``g_check = kappa * g_a`` is fixed by reference metrics
    carried in the samples when present, and by ``kappa = 1`` otherwise.
    """
    L1, n = data.L1, data.n
    factors = []
    kappas = []
    for a, (b, d) in enumerate(zip(data.blocks[1:], data.dims)):
        cb2 = float(tv.cbar[a] ** 2)
        c = L1 - cb2
        gs = [smp.g[b, b] for smp in data.samples]
        As = [smp.A[b, b, b] for smp in data.samples]
        Rs = [smp.R[a] for smp in data.samples]
        mem = check_S_membership(gs, As, Rs, c, tol=tol)
        refs = [smp.reference_metrics[a] for smp in data.samples if smp.reference_metrics is not None]
        if len(refs) == len(data.samples):
            ks = [np.trace(np.linalg.solve(g, m)) / d for g, m in zip(gs, refs)]
            kappa = float(ks[0])
            gauge_res = _max(np.max(np.abs(m - k * g)) / (1.0 + np.max(np.abs(m)))
                             for g, m, k in zip(gs, refs, ks))
            gauge_res = max(gauge_res, _max(abs(k - kappa) for k in ks))
            gauge = "reference"
        else:
            kappa, gauge_res, gauge = 1.0, 0.0, "canonical"
        Lf = (n + 1) * L1 / ((d + 1) * kappa)
        ratio = (d + 1) * c / ((n + 1) * L1)
        scaled = check_S_membership([kappa * g for g in gs], [kappa * A for A in As], Rs, ratio * Lf, tol=tol)
        kappas.append(kappa)
        factors.append({
            "dim": d,
            "L1": Lf,
            "metric_scale": kappa,
            "gauge": gauge,
            "gauge_residual": gauge_res,
            "membership": mem.to_dict(),
            "scaled_membership": scaled.to_dict(),
            "claim_ratio": ratio,
        })
    C = -1.0 / ((n + 1) * L1)
    r = tv.r_hat
    prod = 1.0 / (n + 1)
    for f in factors:
        d = f["dim"]
        prod *= 1.0 / ((d + 1) ** (d + 1) * (-f["L1"]) ** (d + 2))
    last = factors[-1]["dim"]
    c_last = (C ** (n + 2) / prod) ** (1.0 / (2 * (last + 1)))
    constants = [1.0] * (r + data.s - 1) + [float(c_last)]
    return {"factors": factors, "points": r, "C": C, "constants": constants}


# ---------------------------------------------------------------------------
# orchestration


@dataclass
class CharacterizationReport:
    verdict: str
    reasons: list
    residuals: dict
    tol: float
    condition2_residual: float | None = None
    condition3_residual: float | None = None
    H: list | None = None
    cbar: list | None = None
    gram: list | None = None
    dimH: int | None = None
    r_hat: int | None = None
    H0: list | None = None
    cbar0: float | None = None
    lemma_residuals: dict = field(default_factory=dict)
    gram_checks: dict = field(default_factory=dict)
    center_block: dict = field(default_factory=dict)
    reconstructed: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.verdict == "ACCEPT"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reasons": list(self.reasons),
            "tol": self.tol,
            "residuals": dict(self.residuals),
            "condition2_residual": self.condition2_residual,
            "condition3_residual": self.condition3_residual,
            "H": self.H,
            "cbar": self.cbar,
            "gram": self.gram,
            "dimH": self.dimH,
            "r_hat": self.r_hat,
            "H0": self.H0,
            "cbar0": self.cbar0,
            "lemma_residuals": dict(self.lemma_residuals),
            "gram_checks": dict(self.gram_checks),
            "center_block": dict(self.center_block),
            "reconstructed": dict(self.reconstructed),
            "warnings": list(self.warnings),
        }


def characterize(data: DecompositionData, tol: float = DEFAULT_TOL) -> CharacterizationReport:
    """Run every check and return the verdict with all residuals.

    A residual above ``tol`` (or a failed membership or sign test) adds its
    name to ``reasons``; the verdict is ACCEPT iff ``reasons`` is empty.
    """
    tol = float(tol)
    residuals: dict = {}
    reasons: list = []
    warn = list(data.flat_factor_warnings)

    def flag(name, value, limit=tol):
        residuals[name] = float(value)
        if not value <= limit:
            reasons.append(name)

    frames = _frames(data)
    c1 = check_condition1(data, frames)
    flag("condition1", c1["euclidean_constancy"])
    flag("symmetry", c1["symmetry"])
    c2 = check_condition2(data, frames)
    flag("condition2", c2)
    c3 = check_condition3(data, frames)
    flag("condition3", c3)
    report = CharacterizationReport(verdict="REJECT", reasons=reasons, residuals=residuals, tol=tol,
                                    condition2_residual=c2, condition3_residual=c3, warnings=warn)
    if data.s == 0:
        reasons.append("no_factors")
        return report
    try:
        tv = mean_transversals(data, frames)
    except RankContradiction as exc:
        reasons.append("rank")
        warn.append(str(exc))
        return report
    report.H = tv.H.tolist()
    report.cbar = tv.cbar.tolist()
    report.gram = tv.gram.tolist()
    report.dimH = tv.dimH
    report.r_hat = tv.r_hat

    lem = lemma_identities(data, tv, frames)
    report.lemma_residuals = lem
    for name in ("isotropy", "gram", "mixed_block", "center_transversal", "center_gauss",
                 "transversal_norm", "transversal_constancy"):
        flag(name, lem[name])

    gi = gram_identities(data, tv)
    report.gram_checks = gi
    if "gram_minor" in gi:
        flag("gram_minor", gi["gram_minor"])
        if not gi["gram_minor_negative"]:
            reasons.append("gram_minor_sign")
    for name in ("gram_contraction", "h0_orthogonality"):
        if name in gi:
            flag(name, gi[name])

    try:
        cb = split_center_block(data, tv, frames, tol=tol)
    except RankContradiction as exc:
        reasons.append("rank")
        warn.append(str(exc))
        cb = {"applicable": False}
    report.center_block = cb
    if cb.get("applicable"):
        for name in ("h_component", "h_component_gram", "gram_inverse_sums", "trace_perp", "h0_trace"):
            flag("center_" + name, cb[name])
        if not cb["membership"]["member"]:
            reasons.append("center_membership")
        if "pick_residual" in cb:
            flag("center_pick", cb["pick_residual"])
        report.H0 = cb["H0"]
        report.cbar0 = cb["cbar0"]

    rec = reconstruct_factors(data, tv, tol=tol)
    report.reconstructed = rec
    rec_bad = []
    for f in rec["factors"]:
        if not (f["membership"]["member"] and f["scaled_membership"]["member"]):
            rec_bad.append(f)
        if abs(f["claim_ratio"] - 1.0) > tol or f["gauge_residual"] > tol:
            rec_bad.append(f)
    residuals["reconstruction"] = _max(
        max(f["membership"]["gauss"], f["membership"]["apolarity"] or 0.0,
            abs(f["claim_ratio"] - 1.0), f["gauge_residual"]) for f in rec["factors"])
    if rec_bad:
        reasons.append("reconstruction")

    if not reasons:
        report.verdict = "ACCEPT"
    return report


# ---------------------------------------------------------------------------
# planted violations


def plant_violation(data: DecompositionData, family: str, eps: float, factor: int = 0) -> DecompositionData:
    """Copy of ``data`` with a size-``eps`` violation of one identity family.

    The perturbation is placed in orthonormal-frame components and mapped back
    to chart coordinates, so that the named residual is of order ``eps``.

    ``condition2``: symmetric entry in a forbidden block.
    ``condition3``: non-skew part added to the factor curvature (needs ``n_a >= 2``).
    ``isotropy``: trace-free part in the ``A^0_aa`` slot only (needs ``n_a >= 2``).
    ``mixed_block``: entry in the ``A^a_{a0}`` and ``A^a_{0a}`` slots only.
    ``center_transversal``: ``eps * h x h x h`` in ``A^0_00`` with ``h = H_a/|H_a|``.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    out = data.copy()
    blocks = out.blocks
    b0 = blocks[0]
    fb = blocks[1 + factor]
    d = out.dims[factor]
    for smp in out.samples:
        f = _frame(out, smp)
        dA = np.zeros_like(smp.A)
        if family == "condition2":
            if out.q >= 1:
                idx = (fb.start, b0.start, b0.start)
            elif out.s >= 2:
                other = blocks[2] if factor == 0 else blocks[1]
                idx = (fb.start, other.start, other.start)
            else:
                raise InvalidDecomposition("no forbidden block exists for this partition")
            for perm in set(itertools.permutations(idx)):
                dA[perm] = eps
        elif family == "condition3":
            if d < 2:
                raise InvalidDecomposition("a non-skew curvature plant needs a factor of dimension >= 2")
            dR = np.zeros((d,) * 4)
            dR[0, 1, 0, 0] = eps
            dR[1, 0, 0, 0] = -eps
            Eb, Eib = f.E[fb, fb], f.Einv[fb, fb]
            smp.R[factor] = smp.R[factor] + np.einsum("ijkl,ix,jy,kz,ml->xyzm", dR, Eib, Eib, Eib, Eb)
            continue
        elif family == "isotropy":
            if d < 2:
                raise InvalidDecomposition("a trace-free plant needs a factor of dimension >= 2")
            if out.q < 1:
                raise InvalidDecomposition("isotropy plant needs q >= 1")
            dA[fb.start, fb.start, b0.start] = eps
            dA[fb.start + 1, fb.start + 1, b0.start] = -eps
        elif family == "mixed_block":
            if out.q < 1:
                raise InvalidDecomposition("mixed-block plant needs q >= 1")
            dA[fb.start, b0.start, fb.start] = eps
            dA[b0.start, fb.start, fb.start] = eps
        elif family == "center_transversal":
            H = _H_on(out, f)[factor]
            h = H / np.linalg.norm(H)
            dA[b0, b0, b0] = eps * np.einsum("a,b,c->abc", h, h, h)
        # dA is in orthonormal components; pull back with Einv on every slot
        smp.A = smp.A + np.einsum("ijk,ia,jb,kc->abc", dA, f.Einv, f.Einv, f.Einv)
    return out
