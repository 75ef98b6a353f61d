"""Monte-Carlo checks of the risk identities, the minimal penalty, chi-square and Wishart deviations, the FPE
trend and circulant positivity.

Every suite returns a `VerificationReport` made of cells. A cell that is outside the regime where a claim holds is
reported with `asserted=False` and never fails the suite.
"""
import logging
import math
from typing import Callable, Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import linalg

from ..base.collection import OrderedCollection
from ..base.exceptions import BadDimension, DimensionTooLarge
from ..base.penalty import MinimalPenalty, pen_heuristic
from ..base.regression import bias, nested_coefficients, nested_empirical_losses, population_loss
from ..base.selector import argmin_position, select
from ..base.types import GroundTruth, Model
from .design import SeedSpec, exp_circulant, poly_circulant, sample_dataset, sample_design

logger = logging.getLogger(__name__)

STANDARD_ERRORS = 4.0
CHUNK = 2048
ConcentrationKind = Literal["chi2_lower", "chi2_upper", "chi2_refined", "wishart_inv", "wishart_max"]
CONCENTRATION_KINDS: Tuple[str, ...] = ("chi2_lower", "chi2_upper", "chi2_refined", "wishart_inv", "wishart_max")


class Cell(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    observed: float
    expected: float
    tolerance: float
    passed: bool
    asserted: bool = True
    note: str = ""


class VerificationReport(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    suite: str
    cells: List[Cell]

    @property
    def passed(self) -> bool:
        return all(cell.passed for cell in self.cells if cell.asserted)

    @property
    def failures(self) -> List[Cell]:
        return [cell for cell in self.cells if cell.asserted and not cell.passed]


def _chunks(reps: int, size: int = CHUNK) -> Iterator[Tuple[int, int]]:
    """(chunk index, chunk length) pairs covering `reps` draws."""
    for index, start in enumerate(range(0, reps, size)):
        yield index, min(size, reps - start)


def _mean_cell(name: str, samples: np.ndarray, expected: float) -> Cell:
    mean = math.fsum(samples) / len(samples)
    standard_error = float(np.std(samples, ddof=1)) / math.sqrt(len(samples)) if len(samples) > 1 else 0.0
    tolerance = STANDARD_ERRORS * standard_error + 1e-12 * max(1.0, abs(expected))
    return Cell(
        name=name, observed=mean, expected=expected, tolerance=tolerance, passed=abs(mean - expected) <= tolerance
    )


def _batched_fit(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Least squares on a stack: x (B, n, d), y (B, n). Returns coefficients (B, d) and gamma_n (B,)."""
    n = x.shape[-2]
    if x.shape[-1] == 0:
        return np.zeros(x.shape[:-2] + (0,)), np.einsum("bn,bn->b", y, y) / n
    q, r = np.linalg.qr(x)
    projection = np.einsum("bnd,bn->bd", q, y)
    residual = y - np.einsum("bnd,bd->bn", q, projection)
    beta = np.linalg.solve(r, projection[..., None])[..., 0]
    return beta, np.einsum("bn,bn->b", residual, residual) / n


def verify_risk_identities(truth: GroundTruth, m: Model, n: int, reps: int, seed: SeedSpec) -> VerificationReport:
    """Monte-Carlo means of gamma(theta_hat_m) and gamma_n(theta_hat_m) against their closed forms.

    Also checks that gamma_n(theta_hat_m) [1 + pen_heuristic] estimates gamma(theta_hat_m) without bias.
    """
    m.check_within(truth.p)
    d = m.dim
    if n - d - 1 < 1:
        raise DimensionTooLarge(f"Need n - d_m - 1 >= 1, got n={n}, d_m={d}.", model=m)

    columns = m.columns
    gamma = np.empty(reps)
    gamma_n = np.empty(reps)
    start = 0
    for index, size in _chunks(reps):
        rng = seed.generator(index)
        x = sample_design(truth, n, rng, batch=(size,))
        y = x @ truth.theta + math.sqrt(truth.noise_var) * rng.standard_normal((size, n))
        beta, losses = _batched_fit(x[..., columns], y)
        diff = -np.broadcast_to(truth.theta, (size, truth.p)).copy()
        diff[:, columns] += beta
        gamma[start : start + size] = truth.noise_var + np.einsum("bi,ij,bj->b", diff, truth.sigma, diff)
        gamma_n[start : start + size] = losses
        start += size

    level = bias(truth, m) + truth.noise_var
    cells = [
        _mean_cell("gamma", gamma, level * (1.0 + d / (n - d - 1))),
        _mean_cell("gamma_n", gamma_n, level * (1.0 - d / n)),
        _mean_cell("heuristic_criterion", gamma_n * (1.0 + pen_heuristic(d, n)), level * (1.0 + d / (n - d - 1))),
    ]
    return VerificationReport(suite="risk-identities", cells=cells)


def verify_minimal_penalty(
    n: int,
    p: int,
    nu: float,
    reps: int,
    seed: SeedSpec,
    theta: Optional[np.ndarray] = None,
    control: bool = False,
) -> VerificationReport:
    """Frequency of d_m_hat >= n/4 when selecting over Ordered(n/2) with pen = (1 - nu) d / (n - d).

    The control run uses K=2 instead and expects the opposite. Claims are asserted only for n >= 60.
    """
    if p < n / 2:
        raise BadDimension(f"The ordered collection up to n/2 needs p >= n/2, got n={n}, p={p}.")
    if not 0 < nu < 1:
        raise ValueError(f"nu must lie in (0, 1), got {nu}.")

    theta = np.zeros(p) if theta is None else np.asarray(theta, dtype=float)
    truth = GroundTruth(theta=theta, sigma=np.eye(p), noise_var=1.0)
    c = OrderedCollection(p=p, dmax=n // 2)
    spec = MinimalPenalty(K=2.0 if control else 1.0 - nu)

    large = 0
    for rep in range(reps):
        if select(sample_dataset(truth, n, seed, rep), c, spec).chosen.dim >= n / 4:
            large += 1
    frequency = large / reps

    asserted = n >= 60
    if control:
        cell = Cell(name="control_K2", observed=frequency, expected=0.1, tolerance=0.0, passed=frequency <= 0.1)
    else:
        cell = Cell(name=f"nu={nu}", observed=frequency, expected=0.9, tolerance=0.0, passed=frequency >= 0.9)
    cell = cell.model_copy(update={"asserted": asserted, "note": "" if asserted else "n below 60, report only"})
    return VerificationReport(suite="minimal-penalty", cells=[cell])


def chi2_refined_delta(d: int) -> float:
    return math.sqrt(math.pi / (2.0 * d)) + math.exp(-d / 16.0)


def concentration_event(kind: str, d: int, x: float, n: Optional[int] = None) -> Tuple[Callable, float]:
    """Event indicator over samples and its probability bound.

    chi2 kinds act on chi-square(d) draws; wishart kinds act on the eigenvalues of Z'Z for a standard n x d Z.
    """
    if kind == "chi2_lower":
        threshold = d - 2.0 * math.sqrt(d * x)
        return (lambda s: s <= threshold), math.exp(-x)
    if kind == "chi2_upper":
        threshold = d + 2.0 * math.sqrt(d * x) + 2.0 * x
        return (lambda s: s >= threshold), math.exp(-x)
    if kind == "chi2_refined":
        threshold = d * max(1.0 - chi2_refined_delta(d) - math.sqrt(2.0 * x / d), 0.0) ** 2
        return (lambda s: s <= threshold), math.exp(-x)

    if n is None or n <= d:
        raise BadDimension(f"Wishart bounds need n > d, got n={n}, d={d}.")
    bound = math.exp(-n * x**2 / 2.0)
    if kind == "wishart_inv":
        # phi_max of the inverse above 1 / [n (1 - sqrt(d/n) - x)^2] is phi_min of Z'Z below the bracket.
        base = 1.0 - math.sqrt(d / n) - x
        if base <= 0:
            return (lambda eigenvalues: np.zeros(len(eigenvalues), dtype=bool)), bound
        threshold = n * base**2
        return (lambda eigenvalues: eigenvalues[:, 0] <= threshold), bound
    if kind == "wishart_max":
        threshold = n * (1.0 + math.sqrt(d / n) + x) ** 2
        return (lambda eigenvalues: eigenvalues[:, -1] >= threshold), bound
    raise ValueError(f"Unknown concentration kind {kind!r}.")


def _sample(kind: str, d: int, n: Optional[int], size: int, rng: np.random.Generator) -> np.ndarray:
    if kind.startswith("chi2"):
        return rng.chisquare(d, size)
    z = rng.standard_normal((size, n, d))
    return np.linalg.eigvalsh(np.einsum("bni,bnj->bij", z, z))


def verify_concentration(
    kind: ConcentrationKind, d: int, x: float, reps: int, seed: SeedSpec, n: Optional[int] = None
) -> VerificationReport:
    """Empirical tail frequency against the deviation bound plus three binomial standard errors.

    Cells whose bound is below 20 / reps are skipped: the tail would not be observable.
    """
    if kind.startswith("wishart") and n is None:
        n = 4 * d
    event, bound = concentration_event(kind, d, x, n)
    name = f"{kind}(d={d}, x={x}" + (f", n={n})" if kind.startswith("wishart") else ")")
    if bound < 20.0 / reps:
        cell = Cell(name=name, observed=math.nan, expected=bound, tolerance=0.0, passed=True, asserted=False)
        return VerificationReport(suite="concentration", cells=[cell.model_copy(update={"note": "skipped"})])

    hits = 0
    literal = 0
    for index, size in _chunks(reps):
        samples = _sample(kind, d, n, size, seed.generator(index))
        hits += int(np.count_nonzero(event(samples)))
        if kind == "wishart_max":
            literal += int(np.count_nonzero(~event(samples)))

    frequency = hits / reps
    tolerance = 3.0 * math.sqrt(bound * (1.0 - bound) / reps)
    cells = [
        Cell(name=name, observed=frequency, expected=bound, tolerance=tolerance, passed=frequency <= bound + tolerance)
    ]
    if kind == "wishart_max":
        cells.append(
            Cell(
                name=name + " below threshold",
                observed=literal / reps,
                expected=bound,
                tolerance=tolerance,
                passed=literal / reps <= bound + tolerance,
                asserted=False,
                note="literal reading, report only",
            )
        )
    return VerificationReport(suite="concentration", cells=cells)


def verify_concentration_grid(
    reps: int,
    seed: SeedSpec,
    kinds: Sequence[str] = CONCENTRATION_KINDS,
    dims: Sequence[int] = (5, 20, 100),
    xs: Sequence[float] = (0.5, 1.0, 2.0),
) -> VerificationReport:
    cells = []
    for kind in kinds:
        for d in dims:
            for x in xs:
                cells.extend(verify_concentration(kind, d, x, reps, seed).cells)
    return VerificationReport(suite="concentration", cells=cells)


def polynomial_theta(p: int, s: float) -> np.ndarray:
    """theta_i proportional to i^(-(1 + s)/2), so the bias decrement of the i-th covariate decays as i^(-(1 + s))."""
    return np.arange(1, p + 1, dtype=float) ** (-(1.0 + s) / 2.0)


def _oracle_ratios(truth: GroundTruth, n: int, reps: int, seed: SeedSpec, ks: Sequence[float]) -> np.ndarray:
    """l(theta_tilde, theta) / min_m l(theta_hat_m, theta) over Ordered(n/2), shape (reps, len(ks))."""
    dmax = n // 2
    c = OrderedCollection(p=truth.p, dmax=dmax)
    penalty_tables = [MinimalPenalty(K=K).values(c, n) for K in ks]
    ratios = np.empty((reps, len(ks)))
    for rep in range(reps):
        data = sample_dataset(truth, n, seed, rep)
        losses = nested_empirical_losses(data, dmax)
        coefficients = nested_coefficients(data, dmax)
        risks = np.array([population_loss(truth, row, truth.theta) for row in coefficients])
        best = risks.min()
        for k, penalties in enumerate(penalty_tables):
            chosen = argmin_position(losses * (1.0 + penalties))
            ratios[rep, k] = risks[chosen] / best if best > 0 else 1.0
    return ratios


def verify_fpe_trend(
    n_grid: Sequence[int],
    reps: int,
    seed: SeedSpec,
    s: float = 1.0,
    theta: Optional[np.ndarray] = None,
    noise_var: float = 1.0,
) -> VerificationReport:
    """Median oracle ratio of FPE (K=2) over the ordered collection, per n.

    Asserted: nonincreasing medians along `n_grid` and a last median at most 1.5, plus K=3 doing at least as well
    as K=2 in half of the paired replications at n=15. A theta vanishing among the first max(n_grid)/2 coordinates
    lies outside the polynomially decaying class; its cells are reported only.
    """
    p = max(n_grid)
    theta = polynomial_theta(p, s) if theta is None else np.asarray(theta, dtype=float)
    truth = GroundTruth(theta=theta, sigma=np.eye(len(theta)), noise_var=noise_var)
    decaying = bool(np.all(theta[: p // 2] != 0))
    note = "" if decaying else "theta is exactly sparse, report only"

    cells = []
    medians = []
    for n in n_grid:
        median = float(np.median(_oracle_ratios(truth, n, reps, seed, ks=(2.0,))[:, 0]))
        medians.append(median)
        cells.append(
            Cell(name=f"median n={n}", observed=median, expected=1.0, tolerance=0.5, passed=True, asserted=False)
        )

    nonincreasing = all(b <= a for a, b in zip(medians, medians[1:]))
    cells.append(
        Cell(
            name="nonincreasing medians",
            observed=float(nonincreasing),
            expected=1.0,
            tolerance=0.0,
            passed=nonincreasing,
            asserted=decaying,
            note=note,
        )
    )
    cells.append(
        Cell(
            name=f"median at n={n_grid[-1]}",
            observed=medians[-1],
            expected=1.5,
            tolerance=0.0,
            passed=medians[-1] <= 1.5,
            asserted=decaying,
            note=note,
        )
    )

    small = _oracle_ratios(truth, 15, reps, seed, ks=(2.0, 3.0))
    share = float(np.mean(small[:, 1] <= small[:, 0]))
    cells.append(
        Cell(
            name="K=3 vs K=2 at n=15",
            observed=share,
            expected=0.5,
            tolerance=0.0,
            passed=share >= 0.5,
            asserted=decaying,
        )
    )
    return VerificationReport(suite="fpe-trend", cells=cells)


def verify_circulant_psd(
    ps: Sequence[int] = (11, 21, 51),
    omegas: Sequence[float] = (0.1, 0.5, 1.0, 2.0),
    ts: Sequence[float] = (0.5, 1.0, 2.0),
) -> VerificationReport:
    """Minimum DFT eigenvalue of every circulant correlation, and agreement with a dense eigendecomposition."""
    cells = []
    for p in ps:
        builders = [(f"exp(omega={omega})", exp_circulant, omega) for omega in omegas]
        builders += [(f"poly(t={t})", poly_circulant, t) for t in ts]
        for label, build, parameter in builders:
            circulant = build(p, parameter)
            dense = linalg.eigh(circulant.matrix, eigvals_only=True)
            gap = float(np.max(np.abs(np.sort(circulant.eigenvalues) - dense)))
            smallest = circulant.min_eigenvalue
            cells.append(
                Cell(
                    name=f"{label} p={p} min", observed=smallest, expected=0.0, tolerance=1e-9, passed=smallest >= -1e-9
                )
            )
            cells.append(
                Cell(name=f"{label} p={p} dft", observed=gap, expected=0.0, tolerance=1e-8, passed=gap <= 1e-8)
            )
    return VerificationReport(suite="circulant-psd", cells=cells)
