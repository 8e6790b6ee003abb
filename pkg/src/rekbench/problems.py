"""Least-squares problem construction and serialization.

Generators mirror a standard experimental protocol: Gaussian matrices,
right-hand sides with a controlled component orthogonal to the range of A
(built by a projection process), and a simplified parallel-beam tomography
operator over the Shepp-Logan phantom.  Matrix Market files are the on-disk
matrix format; problem bundles are directories of .mtx + flat vectors +
JSON metadata.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .linalg import DenseMatrix, DualSparseMatrix, build_norm_cache, direct_least_squares


@dataclass
class LsProblem:
    """A least-squares instance min ||b - Ax||, with optional ground truth.

    x_star is the minimum-norm solution A^+ b; r is the component of b
    orthogonal to the range of A, so b = A x_star + r when both are set.
    """

    A: object
    b: np.ndarray
    x_star: np.ndarray | None = None
    r: np.ndarray | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.A.shape

    def validate(self):
        """Assert the ground-truth decomposition invariants."""
        if self.x_star is None or self.r is None:
            return
        cache = build_norm_cache(self.A)
        frob = np.sqrt(cache.frob_sq)
        resid = self.b - self.A.matvec(self.x_star) - self.r
        if np.linalg.norm(resid) > 1e-10 * max(np.linalg.norm(self.b), 1e-300):
            raise ValueError("b != A x_star + r beyond tolerance")
        r_norm = np.linalg.norm(self.r)
        if r_norm > 0 and np.linalg.norm(self.A.rmatvec(self.r)) > 1e-8 * frob * r_norm:
            raise ValueError("r is not orthogonal to range(A) beyond tolerance")


@dataclass(frozen=True)
class RangeSplit:
    b_range: np.ndarray
    b_perp: np.ndarray


def gen_gaussian(m, n, seed):
    """Seeded i.i.d. standard-normal m x n matrix (bitwise reproducible)."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    g = rngmod.stream(seed, rngmod.method_tag("gen_gaussian"))
    return DenseMatrix(g.standard_normal((m, n)))


def range_split(A, b):
    """Orthogonal split of b into its range(A) and range(A)-perp parts."""
    b = np.asarray(b, dtype=np.float64)
    b_range = A.matvec(direct_least_squares(A, b))
    return RangeSplit(b_range, b - b_range)


def make_inconsistent_problem(A, seed, label=""):
    """Build b = A x_star + r with r orthogonal to range(A).

    r comes from projecting a Gaussian draw onto range(A)-perp
    (r = r_tilde - A A^+ r_tilde), with a second projection pass if the
    first leaves measurable overlap (ill-conditioned A).  x_star stored is
    the oracle minimum-norm solution for the resulting b, which is what
    relative-error metrics compare against.
    """
    m, n = A.shape
    g = rngmod.stream(seed, rngmod.method_tag("make_inconsistent"))
    x_raw = g.standard_normal(n)
    r_tilde = g.standard_normal(m)
    r = r_tilde - A.matvec(direct_least_squares(A, r_tilde))
    cache = build_norm_cache(A)
    frob = np.sqrt(cache.frob_sq)
    r_norm = np.linalg.norm(r)
    if r_norm > 0 and np.linalg.norm(A.rmatvec(r)) > 1e-10 * frob * r_norm:
        r = r - A.matvec(direct_least_squares(A, r))
    b = A.matvec(x_raw) + r
    x_star = direct_least_squares(A, b)
    return LsProblem(
        A=A,
        b=b,
        x_star=x_star,
        r=b - A.matvec(x_star),
        label=label or f"inconsistent-{m}x{n}-seed{seed}",
        meta={"seed": int(seed), "generator": "make_inconsistent_problem"},
    )


# ---------------------------------------------------------------------------
# Matrix Market I/O


class MatrixMarketError(ValueError):
    """Parse failure, carrying the 1-based line number."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def read_matrix_market(path):
    """Read a real general/symmetric Matrix Market file.

    Coordinate files become DualSparseMatrix, array files DenseMatrix.
    Symmetric storage is expanded to full; indices convert to 0-based.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise MatrixMarketError("malformed Matrix Market header", 1)
    fmt, fld, sym = (w.lower() for w in header[2:])
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported format {fmt!r}", 1)
    if fld != "real":
        raise MatrixMarketError(f"unsupported field {fld!r} (real only)", 1)
    if sym not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {sym!r}", 1)

    no = 1
    for no, line in enumerate(lines[1:], start=2):
        if line.strip() and not line.lstrip().startswith("%"):
            break
    else:
        raise MatrixMarketError("missing size line", no)
    size_line_no = no
    parts = lines[size_line_no - 1].split()

    def _entries():
        for ln in range(size_line_no + 1, len(lines) + 1):
            text = lines[ln - 1].strip()
            if text and not text.startswith("%"):
                yield ln, text.split()

    if fmt == "coordinate":
        if len(parts) != 3:
            raise MatrixMarketError("coordinate size line needs 'rows cols nnz'", size_line_no)
        try:
            m, n, nnz = (int(p) for p in parts)
        except ValueError:
            raise MatrixMarketError("non-integer size line", size_line_no) from None
        ii, jj, vv = [], [], []
        count = 0
        for ln, words in _entries():
            if len(words) != 3:
                raise MatrixMarketError("coordinate entry needs 'i j value'", ln)
            try:
                i, j, v = int(words[0]), int(words[1]), float(words[2])
            except ValueError:
                raise MatrixMarketError("malformed coordinate entry", ln) from None
            if not (1 <= i <= m and 1 <= j <= n):
                raise MatrixMarketError(f"index ({i}, {j}) out of range for {m}x{n}", ln)
            if sym == "symmetric" and j > i:
                raise MatrixMarketError("symmetric entry above the diagonal", ln)
            ii.append(i - 1)
            jj.append(j - 1)
            vv.append(v)
            if sym == "symmetric" and i != j:
                ii.append(j - 1)
                jj.append(i - 1)
                vv.append(v)
            count += 1
        if count != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {count}", len(lines))
        return DualSparseMatrix(m, n, ii, jj, vv)

    if len(parts) != 2:
        raise MatrixMarketError("array size line needs 'rows cols'", size_line_no)
    try:
        m, n = (int(p) for p in parts)
    except ValueError:
        raise MatrixMarketError("non-integer size line", size_line_no) from None
    expected = m * n if sym == "general" else m * (m + 1) // 2
    vals = []
    for ln, words in _entries():
        for w in words:
            try:
                vals.append(float(w))
            except ValueError:
                raise MatrixMarketError(f"malformed value {w!r}", ln) from None
    if len(vals) != expected:
        raise MatrixMarketError(f"expected {expected} values, found {len(vals)}", len(lines))
    out = np.empty((m, n))
    if sym == "general":
        # Array format lists values column by column.
        out[:] = np.asarray(vals).reshape((n, m)).T
    else:
        if m != n:
            raise MatrixMarketError("symmetric array matrix must be square", size_line_no)
        pos = 0
        for j in range(n):
            col = vals[pos : pos + (m - j)]
            pos += m - j
            out[j:, j] = col
            out[j, j:] = col
    return DenseMatrix(out)


def write_matrix_market(A, path):
    """Write A with 17 significant digits (lossless binary64 round trip).

    Sparse matrices use coordinate format, dense matrices array format, so
    reading the file back reproduces both the type and the exact entries.
    """
    with open(path, "w", encoding="ascii") as fh:
        if A.is_sparse:
            i, j, v = A.triples()
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            fh.write(f"{A.rows} {A.cols} {v.size}\n")
            for ri, rj, rv in zip(i, j, v):
                fh.write(f"{ri + 1} {rj + 1} {rv:.17g}\n")
        else:
            fh.write("%%MatrixMarket matrix array real general\n")
            fh.write(f"{A.rows} {A.cols}\n")
            for j in range(A.cols):
                for i in range(A.rows):
                    fh.write(f"{A.values[i, j]:.17g}\n")


# ---------------------------------------------------------------------------
# Tomography

# Modified Shepp-Logan ellipses: (intensity, semi_x, semi_y, x0, y0, angle_deg)
_SHEPP_LOGAN = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
]


def shepp_logan_value(x, y):
    """Phantom intensity at a point of the [-1, 1]^2 unit square."""
    total = 0.0
    for inten, a, bsemi, x0, y0, phi in _SHEPP_LOGAN:
        c, s = np.cos(np.radians(phi)), np.sin(np.radians(phi))
        dx, dy = x - x0, y - y0
        if ((dx * c + dy * s) / a) ** 2 + ((-dx * s + dy * c) / bsemi) ** 2 <= 1.0:
            total += inten
    return total


def shepp_logan(side):
    """Ten-ellipse phantom, flattened with index iy * side + ix.

    Pixel (ix, iy) covers [ix, ix+1] x [iy, iy+1] of a side x side grid
    mapped onto [-1, 1]^2; iy increases upward.  Values lie in [0, 1].
    """
    if side < 4:
        raise ValueError("side must be at least 4")
    centers = (np.arange(side) + 0.5) * 2.0 / side - 1.0
    img = np.zeros(side * side)
    for iy, y in enumerate(centers):
        for ix, x in enumerate(centers):
            img[iy * side + ix] = shepp_logan_value(x, y)
    return np.clip(img, 0.0, 1.0)


def ray_pixel_lengths(side, theta, offset):
    """Intersection lengths of one ray with a side x side unit-pixel grid.

    The grid spans [-side/2, side/2]^2.  The ray has direction
    (cos theta, sin theta) and passes through offset * (-sin theta, cos theta).
    Returns (pixel_indices, lengths) with pixel index iy * side + ix.
    """
    half = side / 2.0
    d = np.array([np.cos(theta), np.sin(theta)])
    o = offset * np.array([-np.sin(theta), np.cos(theta)])
    tiny = 1e-12
    umin, umax = -np.inf, np.inf
    for ax in range(2):
        if abs(d[ax]) > tiny:
            u1 = (-half - o[ax]) / d[ax]
            u2 = (half - o[ax]) / d[ax]
            umin = max(umin, min(u1, u2))
            umax = min(umax, max(u1, u2))
        elif not -half <= o[ax] <= half:
            return np.empty(0, dtype=np.int64), np.empty(0)
    if umax <= umin + tiny:
        return np.empty(0, dtype=np.int64), np.empty(0)
    crossings = [umin, umax]
    planes = np.arange(side + 1) - half
    for ax in range(2):
        if abs(d[ax]) > tiny:
            u = (planes - o[ax]) / d[ax]
            crossings.extend(u[(u > umin + tiny) & (u < umax - tiny)])
    us = np.unique(np.asarray(crossings))
    lengths = np.diff(us)
    mids = o[:, None] + d[:, None] * (us[:-1] + us[1:]) / 2.0
    ix = np.clip(np.floor(mids[0] + half).astype(np.int64), 0, side - 1)
    iy = np.clip(np.floor(mids[1] + half).astype(np.int64), 0, side - 1)
    keep = lengths > tiny
    return (iy * side + ix)[keep], lengths[keep]


def parallel_beam_matrix(image_side, n_angles, n_detectors):
    """Sparse ray-intersection matrix, one row per (angle, detector)."""
    spacing = image_side / n_detectors
    ii, jj, vv = [], [], []
    for a in range(n_angles):
        theta = a * np.pi / n_angles
        for det in range(n_detectors):
            offset = (det - (n_detectors - 1) / 2.0) * spacing
            pix, lens = ray_pixel_lengths(image_side, theta, offset)
            row = a * n_detectors + det
            ii.extend([row] * pix.size)
            jj.extend(pix.tolist())
            vv.extend(lens.tolist())
    return DualSparseMatrix(n_angles * n_detectors, image_side**2, ii, jj, vv)


def gen_parallel_beam(image_side, n_angles, n_detectors, seed):
    """Parallel-beam tomography problem over the Shepp-Logan phantom."""
    if image_side < 4:
        raise ValueError("image_side must be at least 4")
    A = parallel_beam_matrix(image_side, n_angles, n_detectors)
    phantom = shepp_logan(image_side)
    g = rngmod.stream(seed, rngmod.method_tag("gen_parallel_beam"))
    r_tilde = g.standard_normal(A.rows)
    r = r_tilde - A.matvec(direct_least_squares(A, r_tilde))
    r = r - A.matvec(direct_least_squares(A, r))
    b = A.matvec(phantom) + r
    x_star = direct_least_squares(A, b)
    return LsProblem(
        A=A,
        b=b,
        x_star=x_star,
        r=b - A.matvec(x_star),
        label=f"tomo-{image_side}x{image_side}-a{n_angles}-d{n_detectors}-seed{seed}",
        meta={
            "seed": int(seed),
            "generator": "gen_parallel_beam",
            "image_side": image_side,
            "n_angles": n_angles,
            "n_detectors": n_detectors,
        },
    )


# ---------------------------------------------------------------------------
# Problem bundles (directory of .mtx + flat vectors + metadata)


def save_problem(problem, directory):
    os.makedirs(directory, exist_ok=True)
    write_matrix_market(problem.A, os.path.join(directory, "A.mtx"))
    np.savetxt(os.path.join(directory, "b.txt"), problem.b, fmt="%.17g")
    if problem.x_star is not None:
        np.savetxt(os.path.join(directory, "x_star.txt"), problem.x_star, fmt="%.17g")
    if problem.r is not None:
        np.savetxt(os.path.join(directory, "r.txt"), problem.r, fmt="%.17g")
    meta = {"label": problem.label, "m": problem.A.rows, "n": problem.A.cols}
    meta.update(problem.meta)
    meta["rng"] = rngmod.GENERATOR_NAME
    with open(os.path.join(directory, "meta.json"), "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2)


def load_problem(directory):
    A = read_matrix_market(os.path.join(directory, "A.mtx"))
    b = np.atleast_1d(np.loadtxt(os.path.join(directory, "b.txt")))
    x_star = r = None
    xs_path = os.path.join(directory, "x_star.txt")
    if os.path.exists(xs_path):
        x_star = np.atleast_1d(np.loadtxt(xs_path))
    r_path = os.path.join(directory, "r.txt")
    if os.path.exists(r_path):
        r = np.atleast_1d(np.loadtxt(r_path))
    meta = {}
    meta_path = os.path.join(directory, "meta.json")
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="ascii") as fh:
            meta = json.load(fh)
    return LsProblem(A=A, b=b, x_star=x_star, r=r, label=meta.get("label", ""), meta=meta)
