"""Synthetic scenarios, centering, and CSV / expression-matrix ingestion.

Text formats
------------
Data CSV
    Comma separated, optional header row, one observation per row. The first
    p columns are predictors, the LAST column is the response.
Truth sidecar (``*.truth``)
    ``key=value`` lines: ``scenario``, ``likelihood``, ``nu``, ``n``, ``p``,
    ``seed``, ``n_components``, ``component_variances`` (comma list),
    ``variance_labels`` (comma list of ints, one per observation) and
    ``beta0`` (comma list). Floats use shortest round-trip ``repr``.
Expression matrix
    Tab or comma separated with a header row of gene names. By default each
    column is a gene and each row a sample (the DREAM layout);
    ``genes_as_rows=True`` reads the transposed layout where each row starts
    with the gene name.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import RngStream, sample_student_t

S2_VARIANCES = (0.5, 1.0, 1.5, 2.0, 2.5)
OUTLIER_VARIANCE = 10.0
CLUSTER_PATTERN = np.array([1.0, 4.0, 9.0, 16.0, 9.0, 4.0, 1.0])


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


@dataclass
class Truth:
    beta0: np.ndarray
    variance_labels: np.ndarray
    component_variances: list

    @property
    def n_components(self) -> int:
        return len(self.component_variances)

    @property
    def support(self) -> set:
        return set(np.flatnonzero(self.beta0).tolist())


@dataclass
class Dataset:
    y: np.ndarray
    X: np.ndarray
    truth: Truth | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError(f"inconsistent shapes y{self.y.shape} X{self.X.shape}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def centered(self) -> "Dataset":
        return Dataset(center(self.y), center(self.X), self.truth, dict(self.meta))


def center(a: np.ndarray) -> np.ndarray:
    """Subtract the column means (or the mean of a vector)."""
    a = np.asarray(a, dtype=float)
    out = a - a.mean(axis=0)
    # a second pass removes the rounding residue of the first
    return out - out.mean(axis=0)


def n_outliers(n: int) -> int:
    if n < 50:
        return 0
    return min(4, int(math.floor(n / 50 + 0.5)))


def gen_beta0(p: int) -> np.ndarray:
    """Sparse coefficients in equally spaced clusters of 7 with values 1,4,9,16,9,4,1.

    The number of nonzeros is ceil(0.28 p) rounded to the nearest multiple of 7
    (at least one cluster): 14, 28 and 56 for p = 50, 100, 200.
    """
    if p < 8:
        raise ValueError(f"p={p} is too small to host a cluster of 7 coefficients (need p >= 8)")
    n_clusters = max(1, int(math.floor(math.ceil(0.28 * p) / 7 + 0.5)))
    beta = np.zeros(p)
    width = p / n_clusters
    for c in range(n_clusters):
        centre = int(math.floor((c + 0.5) * width))
        centre = min(max(centre, 3), p - 4)
        beta[centre - 3 : centre + 4] = CLUSTER_PATTERN
    return beta


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str = "S2"
    likelihood: str = "gaussian"
    n: int = 200
    p: int = 50
    seed: int = 0
    nu: float = 2.0

    def __post_init__(self):
        if self.scenario not in ("S1", "S2"):
            raise ValueError(f"scenario must be S1 or S2, got {self.scenario!r}")
        if self.likelihood not in ("gaussian", "student_t"):
            raise ValueError(f"likelihood must be gaussian or student_t, got {self.likelihood!r}")
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be >= 1")
        if self.nu <= 0:
            raise ValueError("nu must be positive")


def scenario_components(scenario: str, n: int):
    """Per-observation component labels and the component variances."""
    if scenario == "S1":
        return np.zeros(n, dtype=np.int64), [1.0]
    labels = np.arange(n, dtype=np.int64) % len(S2_VARIANCES)
    variances = list(S2_VARIANCES)
    for j in range(n_outliers(n)):
        labels[n - 1 - j] = len(variances)
        variances.append(OUTLIER_VARIANCE)
    return labels, variances


def gen_scenario(spec: ScenarioSpec) -> Dataset:
    rng = RngStream(spec.seed, 0)
    beta0 = gen_beta0(spec.p)
    X = rng.generator.standard_normal((spec.n, spec.p))
    labels, variances = scenario_components(spec.scenario, spec.n)
    scale2 = np.asarray(variances)[labels]
    if spec.likelihood == "gaussian":
        eps = rng.generator.standard_normal(spec.n) * np.sqrt(scale2)
    else:
        eps = sample_student_t(0.0, scale2, spec.nu, rng)
    y = X @ beta0 + eps
    truth = Truth(beta0=beta0, variance_labels=labels, component_variances=variances)
    meta = {
        "scenario": spec.scenario,
        "likelihood": spec.likelihood,
        "nu": spec.nu,
        "n": spec.n,
        "p": spec.p,
        "seed": spec.seed,
    }
    return Dataset(center(y), center(X), truth, meta)


# --- text I/O -------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_float(cell: str, path, line: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", path, line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r}", path, line)
    return value


def _read_table(path, delimiter=",", has_header=False):
    path = Path(path)
    header = None
    rows = []
    width = None
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh, delimiter=delimiter), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if has_header and header is None:
                header = [c.strip() for c in row]
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} cells, found {len(row)}", path, line_no)
            rows.append([_parse_float(c.strip(), path, line_no) for c in row])
    if not rows:
        raise ParseError("no data rows", path)
    return header, np.array(rows, dtype=float)


def write_csv(path, X: np.ndarray, y: np.ndarray, header: bool = True) -> None:
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{j + 1}" for j in range(X.shape[1])] + ["y"])
        for xi, yi in zip(X, y):
            w.writerow([_fmt(v) for v in xi] + [_fmt(yi)])


def read_csv_raw(path, has_header: bool = True):
    """Uncentered ``(X, y)`` from a data CSV."""
    _, table = _read_table(path, ",", has_header)
    if table.shape[1] < 2:
        raise ParseError("need at least one predictor column and a response column", path)
    return table[:, :-1], table[:, -1]


def load_csv(path, has_header: bool = True) -> Dataset:
    X, y = read_csv_raw(path, has_header)
    return Dataset(center(y), center(X), meta={"source": str(path)})


def write_truth(path, truth: Truth, meta: dict | None = None) -> None:
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"{key}={value}")
    lines.append(f"n_components={truth.n_components}")
    lines.append("component_variances=" + ",".join(_fmt(v) for v in truth.component_variances))
    lines.append("variance_labels=" + ",".join(str(int(v)) for v in truth.variance_labels))
    lines.append("beta0=" + ",".join(_fmt(v) for v in truth.beta0))
    Path(path).write_text("\n".join(lines) + "\n")


def read_truth(path) -> Truth:
    values = read_key_values(path)
    try:
        return Truth(
            beta0=np.array([float(v) for v in values["beta0"].split(",")]),
            variance_labels=np.array([int(v) for v in values["variance_labels"].split(",")]),
            component_variances=[float(v) for v in values["component_variances"].split(",")],
        )
    except KeyError as exc:
        raise ParseError(f"missing key {exc.args[0]!r}", path) from None


def read_key_values(path) -> dict:
    out = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected key=value", path, line_no)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _sniff_delimiter(path) -> str:
    with open(path) as fh:
        first = fh.readline()
    return "\t" if "\t" in first else ","


def load_expression_matrix(path, genes_as_rows: bool = False):
    """Return ``(matrix, names)`` with ``matrix`` shaped genes x samples."""
    path = Path(path)
    delim = _sniff_delimiter(path)
    if not genes_as_rows:
        header, table = _read_table(path, delim, has_header=True)
        if header is None or len(header) != table.shape[1]:
            raise ParseError("header must name every column", path, 1)
        names = header
        matrix = table.T
    else:
        names = []
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh, delimiter=delim)
            for line_no, row in enumerate(reader, start=1):
                if not row:
                    continue
                if line_no == 1 and not _is_number(row[1] if len(row) > 1 else ""):
                    continue  # sample header
                names.append(row[0].strip())
                rows.append([_parse_float(c.strip(), path, line_no) for c in row[1:]])
        if not rows:
            raise ParseError("no data rows", path)
        if len({len(r) for r in rows}) != 1:
            raise ParseError("ragged rows", path)
        matrix = np.array(rows)
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ParseError(f"duplicate gene names: {dupes}", path)
    return matrix, list(names)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_gold_standard(path, names: list) -> np.ndarray:
    """DREAM edge list ``regulator<TAB>target<TAB>0/1`` as a 0/1 matrix.

    Entry ``[i, j]`` is 1 when gene ``j`` regulates gene ``i``.
    """
    index = {name: k for k, name in enumerate(names)}
    gold = np.zeros((len(names), len(names)), dtype=np.int64)
    delim = _sniff_delimiter(path)
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh, delimiter=delim), start=1):
            if not row or not row[0].strip():
                continue
            if len(row) < 2:
                raise ParseError("expected regulator, target[, value]", path, line_no)
            src, dst = row[0].strip(), row[1].strip()
            if src not in index or dst not in index:
                raise ParseError(f"unknown gene in edge {src}->{dst}", path, line_no)
            value = int(float(row[2])) if len(row) > 2 else 1
            gold[index[dst], index[src]] = value
    return gold
