"""File formats: dataset CSVs, draw archives, grid tables and configs.

Every emitted file carries its provenance: CSV files start with
``# key: value`` comment lines holding the resolved run configuration,
JSON-lines draw archives put the same mapping in their header line, and
JSON summaries embed it under ``"config"``. Values are JSON-encoded with
sorted keys, so re-running a command with the same inputs reproduces
every artifact byte for byte.

Dataset CSVs have header ``id,C,delta_I,delta_S,x1,...,xp`` (bivariate)
or ``id,C,delta`` (univariate). Status columns must be 0/1, monitoring
times must lie strictly inside the configured window, and no field may
be empty; violations are reported with their data row number.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .bivariate import BivDraws, Observation
from .distributions import CensWindow
from .errors import ValidationError
from .univariate import UniDraws

__all__ = [
    "LoadedDataset",
    "load_dataset",
    "read_config",
    "read_draws",
    "read_grid_csv",
    "read_meta",
    "write_dataset",
    "write_draws",
    "write_grid_csv",
    "write_json",
    "write_truth",
]


@dataclass(frozen=True)
class LoadedDataset:
    """A validated dataset file in memory.

    Bivariate files fill `delta_I`, `delta_S` and `X`; univariate files
    fill `delta` instead. `arrays()` returns the tuple the matching fit
    function expects.
    """

    ids: tuple
    C: np.ndarray
    delta_I: np.ndarray | None
    delta_S: np.ndarray | None
    delta: np.ndarray | None
    X: np.ndarray | None
    covariate_names: tuple

    def __len__(self):
        return len(self.C)

    @property
    def is_univariate(self):
        return self.delta is not None

    def arrays(self):
        if self.is_univariate:
            return self.C, self.delta
        return self.C, self.delta_I, self.delta_S, self.X

    def observations(self):
        if self.is_univariate:
            raise ValidationError("univariate datasets have no observations()")
        return tuple(
            Observation(C=float(c), delta_I=int(di), delta_S=int(ds_),
                        x=tuple(row))
            for c, di, ds_, row in zip(self.C, self.delta_I, self.delta_S,
                                       self.X)
        )


def _fmt(v):
    """Shortest round-trip decimal for floats, plain str otherwise."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _meta_lines(meta):
    return [
        f"# {k}: {json.dumps(v, sort_keys=True)}"
        for k, v in sorted((meta or {}).items())
    ]


def read_meta(path):
    """Provenance mapping from a CSV's leading comment lines."""
    meta = {}
    with open(path, newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, raw = line[1:].partition(":")
            meta[key.strip()] = json.loads(raw.strip())
    return meta


def _write_table(path, meta, header, columns):
    rows = zip(*columns)
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_dataset(path, ds, meta=None):
    """Write observable columns of a simulated or loaded dataset."""
    n = len(ds.C)
    ids = getattr(ds, "ids", None) or range(1, n + 1)
    if getattr(ds, "delta", None) is not None:
        _write_table(path, meta, ("id", "C", "delta"),
                     (list(ids), ds.C, ds.delta.astype(int)))
        return
    X = np.atleast_2d(np.asarray(ds.X, dtype=float))
    names = getattr(ds, "covariate_names", ())
    if not names:
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    header = ("id", "C", "delta_I", "delta_S") + tuple(names)
    cols = [list(ids), ds.C, ds.delta_I.astype(int), ds.delta_S.astype(int)]
    cols.extend(X[:, j] for j in range(X.shape[1]))
    _write_table(path, meta, header, cols)


def write_truth(path, ds, meta=None):
    """Write the latent event times of a simulated dataset."""
    n = len(ds.C)
    _write_table(
        path, meta,
        ("id", "I", "S", "other_cause"),
        (range(1, n + 1), ds.I, ds.S, ds.rW.astype(int)),
    )


def _parse_float(raw, row, col):
    raw = raw.strip()
    if raw == "":
        raise ValidationError(f"row {row}: missing value in column {col!r}")
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(
            f"row {row}: cannot parse {col!r} value {raw!r}"
        ) from None


def _parse_status(raw, row, col):
    v = _parse_float(raw, row, col)
    if v not in (0.0, 1.0):
        raise ValidationError(f"row {row}: {col} must be 0 or 1, got {raw}")
    return int(v)


def load_dataset(path, window=None):
    """Read and validate a dataset CSV.

    Parameters
    ----------
    path : str or Path
    window : CensWindow or (A, B) pair, optional
        When given, every monitoring time must lie strictly inside it.

    Returns
    -------
    LoadedDataset

    Raises
    ------
    ValidationError
        Naming the offending data row (1-based, header excluded).
    """
    if window is not None and not isinstance(window, CensWindow):
        window = CensWindow(*window)
    with open(path, newline="") as fh:
        reader = csv.reader(
            line for line in fh if not line.startswith("#")
        )
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:3] == ["id", "C", "delta"] and len(header) == 3:
            univariate = True
            names = ()
        elif header[:4] == ["id", "C", "delta_I", "delta_S"]:
            univariate = False
            names = tuple(header[4:])
        else:
            raise ValidationError(
                f"{path}: header must be id,C,delta or "
                f"id,C,delta_I,delta_S,x1,...  (got {','.join(header)})"
            )
        ids, c, d1, d2, xs = [], [], [], [], []
        for i, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ValidationError(
                    f"row {i}: expected {len(header)} fields, got {len(row)}"
                )
            ids.append(row[0].strip())
            c.append(_parse_float(row[1], i, "C"))
            if univariate:
                d1.append(_parse_status(row[2], i, "delta"))
            else:
                d1.append(_parse_status(row[2], i, "delta_I"))
                d2.append(_parse_status(row[3], i, "delta_S"))
                xs.append([
                    _parse_float(row[4 + j], i, names[j])
                    for j in range(len(names))
                ])
            if window is not None and not window.A < c[-1] < window.B:
                raise ValidationError(
                    f"row {i}: C={_fmt(c[-1])} is outside the window "
                    f"({_fmt(window.A)}, {_fmt(window.B)})"
                )
    if not ids:
        raise ValidationError(f"{path}: no data rows")
    c = np.asarray(c, dtype=float)
    if univariate:
        return LoadedDataset(
            ids=tuple(ids), C=c, delta_I=None, delta_S=None,
            delta=np.asarray(d1, dtype=np.int64), X=None, covariate_names=(),
        )
    return LoadedDataset(
        ids=tuple(ids), C=c,
        delta_I=np.asarray(d1, dtype=np.int64),
        delta_S=np.asarray(d2, dtype=np.int64),
        delta=None,
        X=np.asarray(xs, dtype=float).reshape(len(ids), -1),
        covariate_names=names,
    )


# ---------------------------------------------------------------------------
# draw archives (JSON lines: one header object, then one object per draw)

_BIV_SCALARS = ("lam", "lambdaL", "w", "M_I", "M_S")
_BIV_ARRAYS = ("weights_I", "weights_S", "m_I", "m_S", "sigma2_I",
               "sigma2_S", "m0_I", "m0_S")
_UNI_SCALARS = ("lam", "M", "mu0", "kappa0", "b_sigma")
_UNI_ARRAYS = ("weights", "mu", "sigma2")


def write_draws(path, draws, meta=None):
    """Archive retained draws as JSON lines with a provenance header."""
    if isinstance(draws, BivDraws):
        kind, scalars, arrays = "bivariate", _BIV_SCALARS, _BIV_ARRAYS
        latents = {"latents_I": draws.latents_I,
                   "latents_S": draws.latents_S,
                   "latents_rW": draws.latents_rW}
    elif isinstance(draws, UniDraws):
        kind, scalars, arrays = "univariate", _UNI_SCALARS, _UNI_ARRAYS
        latents = {"latents": draws.latents}
    else:
        raise ValidationError(f"cannot archive {type(draws).__name__}")
    latents = {k: v for k, v in latents.items() if v is not None}
    header = {
        "kind": kind,
        "n": int(draws.n),
        "n_draws": int(draws.n_draws),
        "window": [draws.window.A, draws.window.B],
        "accept_rate": float(draws.accept_rate),
        "step_final": float(draws.step_final),
        "config": meta or {},
    }
    if kind == "bivariate":
        header["coef_names"] = list(draws.coef_names)
        header["center"] = draws.center.tolist()
        header["scale"] = draws.scale.tolist()
        header["kept"] = draws.kept.tolist()
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for j in range(draws.n_draws):
            rec = {k: float(getattr(draws, k)[j]) for k in scalars}
            for k in arrays:
                rec[k] = getattr(draws, k)[j].tolist()
            for k, v in latents.items():
                rec[k] = v[j].tolist()
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_draws(path):
    """Load a draw archive; returns (draws, header dict)."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        recs = [json.loads(line) for line in fh if line.strip()]
    if len(recs) != header.get("n_draws", len(recs)):
        raise ValidationError(
            f"{path}: header promises {header['n_draws']} draws, "
            f"found {len(recs)}"
        )
    kind = header.get("kind")
    if kind == "bivariate":
        scalars, arrays = _BIV_SCALARS, _BIV_ARRAYS
    elif kind == "univariate":
        scalars, arrays = _UNI_SCALARS, _UNI_ARRAYS
    else:
        raise ValidationError(f"{path}: unknown draw archive kind {kind!r}")
    fields = {k: np.array([r[k] for r in recs]) for k in scalars}
    fields.update(
        {k: np.array([r[k] for r in recs], dtype=float) for k in arrays}
    )
    window = CensWindow(*header["window"])
    common = dict(
        accept_rate=header["accept_rate"], step_final=header["step_final"],
        window=window, n=header["n"],
    )
    if kind == "univariate":
        if "latents" in recs[0]:
            fields["latents"] = np.array(
                [r["latents"] for r in recs], dtype=float
            )
        return UniDraws(**fields, **common), header
    for k, dt in (("latents_I", float), ("latents_S", float),
                  ("latents_rW", np.int64)):
        if recs and k in recs[0]:
            fields[k] = np.array([r[k] for r in recs], dtype=dt)
    return BivDraws(
        **fields, **common,
        coef_names=tuple(header["coef_names"]),
        center=np.asarray(header["center"], dtype=float),
        scale=np.asarray(header["scale"], dtype=float),
        kept=np.asarray(header["kept"], dtype=np.int64),
    ), header


# ---------------------------------------------------------------------------
# grid tables and summaries


def write_grid_csv(path, columns, meta=None):
    """Long-format grid table: one row per grid point.

    `columns` maps column name to a 1-d array; all must share a length.
    """
    cols = {k: np.asarray(v).ravel() for k, v in columns.items()}
    lengths = {len(v) for v in cols.values()}
    if len(lengths) != 1:
        raise ValidationError("grid columns have unequal lengths")
    _write_table(path, meta, tuple(cols), tuple(cols.values()))


def read_grid_csv(path):
    """Read a grid table back; returns (columns dict, meta dict)."""
    meta = read_meta(path)
    with open(path, newline="") as fh:
        reader = csv.reader(
            line for line in fh if not line.startswith("#")
        )
        header = next(reader)
        data = [[float(v) for v in row] for row in reader if row]
    if not data:
        raise ValidationError(f"{path}: no data rows")
    arr = np.asarray(data, dtype=float)
    return {name: arr[:, j] for j, name in enumerate(header)}, meta


def write_json(path, payload):
    """Deterministic JSON summary (sorted keys, trailing newline)."""
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_config(path):
    """Parse a key=value config file; values decode as JSON when they can.

    Blank lines and '#' comments are skipped; everything after the first
    '=' is the value, so strings need no quoting.
    """
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path}:{lineno}: expected key=value, got {line!r}"
                )
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            try:
                out[key] = json.loads(raw)
            except json.JSONDecodeError:
                out[key] = raw
    return out
