"""Reading, standardizing and simulating datasets."""

import math

import numpy as np

from .errors import NonPositiveResponse, ParseError, ZeroVariance
from .estimation import Dataset, Scaling


def _split(line, delim):
    if delim is None:
        return line.split()
    return [c.strip() for c in line.split(delim)]


def read_table(source):
    """Parse a comma- or whitespace-delimited table with a header row.

    The delimiter is a comma if the header line contains one, otherwise runs
    of whitespace.  ``source`` is a path or a file-like object.

    Returns
    -------
    header : list of str
    values : ndarray, shape (rows, columns)
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise ParseError("empty input")
    _, head = lines[0]
    delim = "," if "," in head else None
    header = [h.strip().strip('"') for h in _split(head, delim)]
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names in header", row=1)
    rows = []
    for lineno, ln in lines[1:]:
        cells = _split(ln, delim)
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(cells)}", row=lineno)
        row = []
        for name, cell in zip(header, cells):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r}", row=lineno, column=name) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {cell!r}", row=lineno, column=name)
            row.append(v)
        rows.append(row)
    if not rows:
        raise ParseError("no data rows")
    return header, np.array(rows)


def ingest(source, response=None, model="truncnorm"):
    """Load a :class:`Dataset` from a delimited file.

    ``response`` names the response column (default: the last column); all
    other columns are covariates.  For the truncated-normal model every
    response must be positive.
    """
    header, values = read_table(source)
    if response is None:
        response = header[-1]
    if response not in header:
        raise ParseError(f"response column {response!r} not found in header", row=1)
    k = header.index(response)
    y = values[:, k]
    X = np.delete(values, k, axis=1)
    names = [h for h in header if h != response]
    if model == "truncnorm":
        bad = np.flatnonzero(y <= 0.0)
        if bad.size:
            # report 1-based data rows
            raise NonPositiveResponse((bad + 1).tolist())
    return Dataset(y=y, X=X, names=names, response_name=response)


def standardize(dataset, center_response=False):
    """Center and scale covariates to unit sd; scale (optionally center) the response.

    Standard deviations use divisor ``n - 1``.  The returned dataset records
    the composite transformation from the original raw data, so
    standardizing an already standardized dataset is a no-op up to rounding.
    """
    X, y = dataset.X, dataset.y
    x_center = X.mean(axis=0)
    x_scale = X.std(axis=0, ddof=1)
    for j, s in enumerate(x_scale):
        if not s > 0.0:
            raise ZeroVariance(dataset.names[j])
    y_center = float(y.mean()) if center_response else 0.0
    y_scale = float(np.sqrt(np.sum((y - y.mean()) ** 2) / (y.size - 1)))
    if not y_scale > 0.0:
        raise ZeroVariance(dataset.response_name)

    prev = dataset.scaling or Scaling(np.zeros(dataset.d), np.ones(dataset.d))
    scaling = Scaling(
        x_center=prev.x_center + prev.x_scale * x_center,
        x_scale=prev.x_scale * x_scale,
        y_center=prev.y_center + prev.y_scale * y_center,
        y_scale=prev.y_scale * y_scale,
    )
    return Dataset(
        y=(y - y_center) / y_scale,
        X=(X - x_center) / x_scale,
        names=list(dataset.names),
        response_name=dataset.response_name,
        scaling=scaling,
    )


def theta_to_raw(theta, scaling):
    """Express a standardized-scale theta in the raw data's units.

    If ``x' = (x - c) / s`` and ``y' = (y - m) / sy``, the exponent
    ``theta0' y' + sum_j theta_j' x_j' y' + theta_last' y'^2`` equals the raw
    exponent up to terms free of ``y``.
    """
    theta = np.asarray(theta, dtype=float)
    d = theta.size - 2
    c, s = scaling.x_center, scaling.x_scale
    m, sy = scaling.y_center, scaling.y_scale
    cov = theta[1 : d + 1]
    last = theta[d + 1]
    out = np.empty_like(theta)
    out[1 : d + 1] = cov / (s * sy)
    out[0] = (theta[0] - np.sum(cov * c / s)) / sy - 2.0 * m * last / sy**2
    out[d + 1] = last / sy**2
    return out


def simulate(n=1000, d=3, seed=0, correlated=False, noise_sd=1.0):
    """Draw a dataset with truncated-normal response.

    Covariates are iid uniform on [0, 1].  In the correlated variant the
    second column is replaced by ``X1 + eps`` with ``eps`` normal with
    sd 1/4, giving a population correlation of about 0.76.  The response
    is normal with mean ``X.sum(1)`` and sd ``noise_sd``, truncated to
    ``y > 0`` by rejection.
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, d))
    if correlated:
        if d < 2:
            raise ValueError("correlated variant needs d >= 2")
        X[:, 1] = X[:, 0] + rng.normal(0.0, 0.25, size=n)
    mean = X.sum(axis=1)
    y = np.empty(n)
    todo = np.arange(n)
    while todo.size:
        draw = rng.normal(mean[todo], noise_sd)
        ok = draw > 0.0
        y[todo[ok]] = draw[ok]
        todo = todo[~ok]
    return Dataset(y=y, X=X, names=[f"X{j + 1}" for j in range(d)], response_name="y")


def write_table(dataset, path):
    header = list(dataset.names) + [dataset.response_name]
    data = np.column_stack([dataset.X, dataset.y])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
