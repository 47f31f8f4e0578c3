"""ARIMA(p, d, q) with optional drift: conditional-sum-of-squares fitting,
Gaussian prediction intervals from psi-weights, and AICc order selection."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import NoFeasibleModel, NonStationary, SingularDesign, TooShort, TradecastError

Z80 = 1.281552
Z95 = 1.959964

MAX_ITER = 500
REL_TOL = 1e-10
ROOT_TOL = 1e-6


@dataclass(frozen=True)
class ArimaSpec:
    p: int = 0
    d: int = 1
    q: int = 0
    drift: bool | None = None  # None: on whenever d >= 1

    def __post_init__(self):
        if self.drift is None:
            object.__setattr__(self, "drift", self.d >= 1)
        if not (0 <= self.p <= 5 and 0 <= self.d <= 2 and 0 <= self.q <= 5):
            raise ValueError(f"orders out of range: {self}")
        if self.drift and self.d < 1:
            raise ValueError("drift requires d >= 1")

    @property
    def n_params(self) -> int:
        return self.p + self.q + int(self.drift)

    @property
    def min_length(self) -> int:
        # pure (0,d,0) models only need one spare residual for the variance
        extra = 8 if self.p + self.q > 0 else 1
        return self.d + max(self.p, self.q) + int(self.drift) + extra

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q}){'+drift' if self.drift else ''}"

    @classmethod
    def parse(cls, text: str) -> "ArimaSpec":
        """Parse ``p,d,q`` or ``p,d,q,drift`` / ``p,d,q,nodrift``."""
        parts = [s.strip() for s in text.split(",")]
        if len(parts) not in (3, 4):
            raise ValueError(f"bad ARIMA order {text!r}")
        p, d, q = (int(s) for s in parts[:3])
        drift = d >= 1 if len(parts) == 3 else parts[3].lower() in ("drift", "1", "true", "yes")
        return cls(p, d, q, drift)


def difference(series, d: int) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    if d not in (0, 1, 2):
        raise ValueError("d must be 0, 1 or 2")
    if len(x) <= d:
        raise TooShort(f"series of length {len(x)} cannot be differenced {d} times")
    return np.diff(x, n=d) if d else x.copy()


def undifference(diffs, initial: Sequence[float]) -> np.ndarray:
    """Invert ``difference``: ``initial`` holds the first value of each lower
    differencing level (level 0 first)."""
    out = np.asarray(diffs, dtype=np.float64)
    for start in reversed(list(initial)):
        out = np.concatenate([[start], start + np.cumsum(out)])
    return out


def _min_root_modulus(coefs, sign: float) -> float:
    """Smallest root modulus of 1 + sign * sum(c_i z^i)."""
    c = np.trim_zeros(np.asarray(coefs, dtype=np.float64), "b")
    if len(c) == 0:
        return math.inf
    poly = np.concatenate([[1.0], sign * c])
    roots = np.roots(poly[::-1])
    return float(np.abs(roots).min())


def _stationary(phi) -> bool:
    return _min_root_modulus(phi, -1.0) > 1.0 + ROOT_TOL


def _invertible(theta) -> bool:
    return _min_root_modulus(theta, 1.0) > 1.0 + ROOT_TOL


def _ma_filter(s: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """x_t = s_t - sum_j theta_j x_{t-j}, with zero pre-sample values."""
    if len(theta) == 0:
        return s
    x = np.zeros_like(s)
    q = len(theta)
    for t in range(len(s)):
        acc = s[t]
        for j in range(1, min(q, t) + 1):
            acc -= theta[j - 1] * x[t - j]
        x[t] = acc
    return x


def _lagged(z: np.ndarray, lags: int, start: int) -> np.ndarray:
    """Columns z_{t-1}, ..., z_{t-lags} for t = start .. n-1."""
    n = len(z)
    return np.column_stack([z[start - i:n - i] for i in range(1, lags + 1)]) if lags else (
        np.zeros((n - start, 0)))


def _css_residuals(w, phi, theta, mu, p):
    z = w - mu
    u = z[p:] - (_lagged(z, p, p) @ phi if p else 0.0)
    return _ma_filter(np.asarray(u, dtype=np.float64), theta)


def _css_jacobian(w, phi, theta, mu, p, q, drift, e):
    z = w - mu
    n = len(w) - p
    cols = []
    if p:
        lag = _lagged(z, p, p)
        cols += [_ma_filter(-lag[:, i].copy(), theta) for i in range(p)]
    for j in range(1, q + 1):
        prev = np.concatenate([np.zeros(j), e[:-j]])[:n]
        cols.append(_ma_filter(-prev, theta))
    if drift:
        cols.append(_ma_filter(np.full(n, -(1.0 - phi.sum())), theta))
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def _lstsq(X, y):
    if X.shape[0] < X.shape[1] or np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularDesign(f"design matrix of shape {X.shape} is rank deficient")
    return np.linalg.lstsq(X, y, rcond=None)[0]


def _hannan_rissanen(w, p, q, drift):
    n = len(w)
    if q == 0:
        X = _lagged(w, p, p)
        if drift:
            X = np.column_stack([np.ones(n - p), X])
        if X.shape[1] == 0:
            return np.zeros(0), np.zeros(0), 0.0
        beta = _lstsq(X, w[p:])
        c, phi = (beta[0], beta[1:]) if drift else (0.0, beta)
        denom = 1.0 - phi.sum()
        mu = c / denom if drift and abs(denom) > 1e-8 else (float(w.mean()) if drift else 0.0)
        return phi, np.zeros(0), mu
    # long autoregression gives residual proxies for the MA lags
    m = max(p + q, int(round(10 * math.log10(n))))
    m = min(m, (n - 1) // 3)
    if m < max(p, q) or m < 1:
        raise SingularDesign("series too short for the long autoregression")
    XL = _lagged(w, m, m)
    if drift:
        XL = np.column_stack([np.ones(n - m), XL])
    ehat = np.zeros(n)
    ehat[m:] = w[m:] - XL @ _lstsq(XL, w[m:])
    start = m + max(p, q)
    X = np.column_stack([_lagged(w, p, start), _lagged(ehat, q, start)])
    if drift:
        X = np.column_stack([np.ones(n - start), X])
    beta = _lstsq(X, w[start:])
    c = beta[0] if drift else 0.0
    phi = beta[int(drift):int(drift) + p]
    theta = beta[int(drift) + p:]
    denom = 1.0 - phi.sum()
    mu = c / denom if drift and abs(denom) > 1e-8 else (float(w.mean()) if drift else 0.0)
    return phi, theta, mu


def _pull_inside(coefs, ok):
    coefs = np.asarray(coefs, dtype=np.float64)
    while not ok(coefs):
        coefs = coefs * 0.9
    return coefs


@dataclass(frozen=True)
class ArimaFit:
    spec: ArimaSpec
    phi: tuple[float, ...]
    theta: tuple[float, ...]
    mu: float
    sigma2: float
    tail_obs: tuple[float, ...]    # last p + d observations (undifferenced)
    tail_resid: tuple[float, ...]  # last q residuals
    n_obs: int
    n_eff: int = 0
    sse: float = 0.0
    iterations: int = 0

    @classmethod
    def random_walk(cls, mu: float, sigma: float, last: float) -> "ArimaFit":
        """A (0,1,0)+drift fit built directly from its drift, innovation sd and last value."""
        return cls(ArimaSpec(0, 1, 0, True), (), (), float(mu), float(sigma) ** 2,
                   (float(last),), (), n_obs=0)

    def psi_weights(self, n: int) -> np.ndarray:
        """First ``n`` psi-weights of the integrated process."""
        ar = np.concatenate([[1.0], -np.asarray(self.phi, dtype=np.float64)])
        for _ in range(self.spec.d):
            ar = np.convolve(ar, [1.0, -1.0])
        phistar = -ar[1:]
        psi = np.zeros(n)
        if n:
            psi[0] = 1.0
        for j in range(1, n):
            acc = self.theta[j - 1] if j <= len(self.theta) else 0.0
            for i in range(1, min(j, len(phistar)) + 1):
                acc += phistar[i - 1] * psi[j - i]
            psi[j] = acc
        return psi

    def point_forecast(self, horizon: int) -> np.ndarray:
        p, d, q = self.spec.p, self.spec.d, self.spec.q
        obs = np.asarray(self.tail_obs, dtype=np.float64)
        z_hist = list(np.diff(obs, n=d)[-p:] - self.mu) if p else []
        e_hist = list(self.tail_resid)
        phi, theta = self.phi, self.theta
        wf = np.zeros(horizon)
        for h in range(horizon):
            zf = sum(phi[i] * z_hist[-1 - i] for i in range(p))
            zf += sum(theta[j] * e_hist[-1 - j] for j in range(q) if j < len(e_hist))
            z_hist.append(zf)
            e_hist.append(0.0)
            wf[h] = zf + self.mu
        lasts = [np.diff(obs, n=k)[-1] for k in range(d)]
        out = wf
        for k in reversed(range(d)):
            out = lasts[k] + np.cumsum(out)
        return out


def arima_fit(series, spec: ArimaSpec) -> ArimaFit:
    """Conditional-sum-of-squares fit on the differenced series.

    Starts from a Hannan-Rissanen regression and refines all parameters with
    damped Gauss-Newton steps that keep the AR part stationary and the MA part
    invertible.
    """
    y = np.asarray(series, dtype=np.float64)
    if len(y) < spec.min_length:
        raise TooShort(f"{spec} needs at least {spec.min_length} observations, got {len(y)}")
    p, d, q, drift = spec.p, spec.d, spec.q, spec.drift
    w = difference(y, d)

    phi, theta, mu = _hannan_rissanen(w, p, q, drift)
    phi = _pull_inside(phi, _stationary)
    theta = _pull_inside(theta, _invertible)

    def unpack(v):
        return v[:p], v[p:p + q], (v[p + q] if drift else 0.0)

    params = np.concatenate([phi, theta, [mu] if drift else []])
    e = _css_residuals(w, phi, theta, mu, p)
    sse = float(e @ e)
    it = 0
    for it in range(1, MAX_ITER + 1):
        if params.size == 0 or sse == 0.0:
            break
        J = _css_jacobian(w, *unpack(params), p, q, drift, e)
        step = np.linalg.lstsq(J, -e, rcond=None)[0]
        lam, improved = 1.0, False
        while lam > 1e-10:
            cand = params + lam * step
            cphi, ctheta, cmu = unpack(cand)
            if _stationary(cphi) and _invertible(ctheta):
                ce = _css_residuals(w, cphi, ctheta, cmu, p)
                csse = float(ce @ ce)
                if csse <= sse:
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            break
        rel = (sse - csse) / sse
        params, e, sse = cand, ce, csse
        if rel < REL_TOL:
            break

    phi, theta, mu = unpack(params)
    if not _stationary(phi):
        raise NonStationary(f"AR roots of {spec} fit lie on or inside the unit circle")
    n_eff = len(e)
    dof = n_eff - spec.n_params
    if dof <= 0:
        raise TooShort(f"{spec} leaves no residual degrees of freedom")
    sigma2 = sse / dof
    return ArimaFit(
        spec=spec,
        phi=tuple(float(v) for v in phi),
        theta=tuple(float(v) for v in theta),
        mu=float(mu),
        sigma2=float(sigma2),
        tail_obs=tuple(float(v) for v in y[len(y) - (p + d):]) if p + d else (),
        tail_resid=tuple(float(v) for v in e[len(e) - q:]) if q else (),
        n_obs=len(y),
        n_eff=n_eff,
        sse=sse,
        iterations=it,
    )


@dataclass(frozen=True)
class ForecastRow:
    year: int
    actual: float | None
    forecast: float
    lo80: float
    hi80: float
    lo95: float
    hi95: float


@dataclass(frozen=True)
class ForecastTable:
    rows: tuple[ForecastRow, ...]

    HEADER = ("year", "actual", "forecast", "lo80", "hi80", "lo95", "hi95")

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.HEADER)
            for r in self.rows:
                w.writerow([r.year, "" if r.actual is None else _num(r.actual),
                            *(_num(getattr(r, c)) for c in self.HEADER[2:])])

    def to_console(self) -> str:
        """Plain-text table; absent actuals print as ``X``."""
        head = ["Year", "Actual", "Forecast", "Low 80", "High 80", "Low 95", "High 95"]
        body = [[str(r.year), "X" if r.actual is None else _short(r.actual),
                 *(_short(getattr(r, c)) for c in self.HEADER[2:])] for r in self.rows]
        widths = [max(len(row[i]) for row in [head, *body]) for i in range(len(head))]
        lines = ["  ".join(c.rjust(wd) for c, wd in zip(row, widths)) for row in [head, *body]]
        return "\n".join(lines)


def _num(v: float) -> str:
    return format(float(v), ".10g")


def _short(v: float) -> str:
    return f"{v:.0f}" if abs(v) >= 1000 else f"{v:.4g}"


def forecast_intervals(fit: ArimaFit, horizon: int, start_year: int,
                       actuals: Sequence[float | None] | None = None) -> ForecastTable:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    point = fit.point_forecast(horizon)
    var = fit.sigma2 * np.cumsum(fit.psi_weights(horizon) ** 2)
    sd = np.sqrt(var)
    actuals = list(actuals or [])
    rows = []
    for h in range(horizon):
        f = float(point[h])
        a = actuals[h] if h < len(actuals) else None
        rows.append(ForecastRow(
            start_year + h, None if a is None else float(a), f,
            f - Z80 * sd[h], f + Z80 * sd[h], f - Z95 * sd[h], f + Z95 * sd[h]))
    return ForecastTable(tuple(rows))


def aicc(n: int, sigma2: float, k: int) -> float:
    """n ln(sigma2) + 2kn/(n-k-1); minus infinity for a perfect fit."""
    if n - k - 1 <= 0:
        return math.inf
    loglik = -math.inf if sigma2 <= 0 else n * math.log(sigma2)
    return loglik + 2.0 * k * n / (n - k - 1)


def candidate_specs(max_p: int, max_q: int, d_candidates: Iterable[int]) -> list[ArimaSpec]:
    return [ArimaSpec(p, d, q, d >= 1)
            for d in sorted(set(d_candidates))
            for p in range(max_p + 1)
            for q in range(max_q + 1)]


def order_table(series, specs: Sequence[ArimaSpec]) -> list[tuple[ArimaSpec, float | None]]:
    """AICc per candidate, None for candidates that are too short or fail to fit."""
    out = []
    for spec in specs:
        try:
            fit = arima_fit(series, spec)
        except TradecastError:
            out.append((spec, None))
            continue
        out.append((spec, aicc(fit.n_eff, fit.sigma2, spec.n_params + 1)))
    return out


def select_order(series, max_p: int = 2, max_q: int = 2,
                 d_candidates: Iterable[int] = (0, 1)) -> ArimaSpec:
    """Grid search for the minimal-AICc order.

    Ties go to fewer parameters, then lower p, then lower d and q.
    """
    scored = [(s, a) for s, a in order_table(series, candidate_specs(max_p, max_q, d_candidates))
              if a is not None and a != math.inf]
    if not scored:
        raise NoFeasibleModel("no candidate order could be fitted")
    spec, _ = min(scored, key=lambda sa: (sa[1], sa[0].n_params, sa[0].p, sa[0].d, sa[0].q))
    return spec
