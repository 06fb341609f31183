"""
Report module for the spectral toolkit.

This module runs the mode sweeps behind the command line and the HTTP
service, assembles their results into SpectrumReport records and writes or
reads them as CSV and schema-validated JSON.
"""

import csv
import io
import json
import math
import os
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import jsonschema
from pydantic import BaseModel, Field

from . import __version__
from .asymptotics import (
    AsymptoticPrediction,
    admissible_indices,
    find_perturbed_root,
    mc_expansion,
    mc_roots,
    predict_hyperbolic,
    predict_parabolic,
    predict_perturbed,
)
from .config import Settings
from .exceptions import CertificationError, NoBracketError, UsageError
from .integrator import CROSS_VALIDATE_DELAYS, DEFAULT_BOX, HistorySpec, estimate_growth, simulate_mode
from .rootfinder import (
    Circle,
    Rectangle,
    Root,
    RootMethod,
    certification_disk,
    certify_unstable,
    find_roots,
    lemma_center,
    lemma_family,
    lemma_root,
    spectral_abscissa_window,
    winding_number,
)
from .symbols import FamilyKind, Mode, SymbolFamily, relative_residual

logger = logging.getLogger(__name__)

TOOL_NAME = "quasiroots"
CSV_COLUMNS = ["family", "n", "k", "re", "im", "residual", "method", "certified"]
STABLE_WINDOW = (0.5, 40.0, -200.0, 200.0)

REPORT_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["meta", "roots", "predictions"],
    "properties": {
        "meta": {
            "type": "object",
            "required": ["tool", "version", "command", "family", "parameters", "settings"],
            "properties": {
                "tool": {"const": TOOL_NAME},
                "version": {"type": "string"},
                "command": {"enum": ["spectrum", "certify", "asymptote", "simulate", "stablecheck"]},
                "family": {"type": "string"},
                "parameters": {
                    "type": "object",
                    "required": ["h", "theta"],
                    "properties": {"h": {"type": "number"}, "theta": {"type": "number"}},
                },
                "settings": {"type": "object"},
            },
        },
        "roots": {
            "type": "array",
            "items": {
                "type": "object",
                "required": CSV_COLUMNS,
                "properties": {
                    "family": {"type": "string"},
                    "n": {"type": "integer", "minimum": 1},
                    "k": {"type": ["integer", "null"]},
                    "re": {"type": "number"},
                    "im": {"type": "number"},
                    "residual": {"type": "number", "minimum": 0},
                    "method": {"enum": [m.value for m in RootMethod]},
                    "certified": {"type": "boolean"},
                    "rouche_margin": {"type": ["number", "null"]},
                },
            },
        },
        "predictions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["family", "n", "x_pred", "y_pred", "order_note"],
            },
        },
        "table": {"type": "array", "items": {"type": "object"}},
    },
}


class SpectrumReport(BaseModel):
    """Roots, predictions and per-mode table rows of one command run."""

    command: str = Field(..., description="Command that produced the report")
    family: SymbolFamily = Field(..., description="The symbol family")
    roots: List[Root] = Field(default_factory=list)
    predictions: List[AsymptoticPrediction] = Field(default_factory=list)
    table: List[Dict[str, Any]] = Field(default_factory=list, description="Command-specific rows")
    meta: Dict[str, Any] = Field(default_factory=dict, description="Command-specific metadata")
    settings: Settings = Field(default_factory=Settings)

    def sorted_roots(self) -> List[Root]:
        return sorted(self.roots, key=lambda r: (r.n, r.re, r.im))


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".16e")
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _root_record(root: Root) -> Dict[str, Any]:
    return {
        "family": root.family.token,
        "n": root.n,
        "k": root.k,
        "re": root.re,
        "im": root.im,
        "residual": root.residual,
        "method": root.method.value,
        "certified": root.certified,
        "rouche_margin": root.rouche_margin,
    }


def _prediction_record(prediction: AsymptoticPrediction) -> Dict[str, Any]:
    record = prediction.model_dump(exclude={"family"})
    record["family"] = prediction.family.token
    return record


class ReportManager:
    """
    Serializer for SpectrumReport records.
    """

    def __init__(self, output_dir: Optional[str] = None):
        """
        Initialize the report manager.

        Args:
            output_dir: Directory for relative output paths (default: current directory)
        """
        self.output_dir = output_dir or os.getcwd()

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.output_dir, path)

    def to_dict(self, report: SpectrumReport) -> Dict[str, Any]:
        meta = {
            "tool": TOOL_NAME,
            "version": __version__,
            "command": report.command,
            "family": report.family.token,
            "parameters": {"h": report.family.h, "theta": report.family.theta},
            "settings": report.settings.model_dump(),
        }
        meta.update(report.meta)
        return {
            "meta": meta,
            "roots": [_root_record(r) for r in report.sorted_roots()],
            "predictions": [_prediction_record(p) for p in report.predictions],
            "table": report.table,
        }

    def validate_report(self, document: Dict[str, Any]) -> Dict[str, Any]:
        """
        Validate a report document against REPORT_SCHEMA.

        Returns:
            {"valid": bool, "errors": [messages]}
        """
        try:
            jsonschema.validate(instance=document, schema=REPORT_SCHEMA)
            return {"valid": True, "errors": []}
        except jsonschema.exceptions.ValidationError as e:
            return {"valid": False, "errors": [e.message]}

    def to_json(self, report: SpectrumReport) -> str:
        document = self.to_dict(report)
        result = self.validate_report(document)
        if not result["valid"]:
            raise UsageError(f"Report failed schema validation: {result['errors']}")
        return json.dumps(document, indent=2, sort_keys=False)

    def to_csv(self, report: SpectrumReport) -> str:
        """Root rows with fixed 17-significant-digit floats."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in (_root_record(r) for r in report.sorted_roots()):
            writer.writerow([_format_value(record[c]) for c in CSV_COLUMNS])
        return buffer.getvalue()

    def table_to_csv(self, report: SpectrumReport) -> str:
        if not report.table:
            return ""
        columns = list(report.table[0].keys())
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in report.table:
            writer.writerow([_format_value(row.get(c)) for c in columns])
        return buffer.getvalue()

    def write(self, report: SpectrumReport, path: str, fmt: str = "csv") -> List[str]:
        """
        Write a report as CSV, JSON or both.

        Args:
            report: The report
            path: Output path; its extension is replaced per format
            fmt: "csv", "json" or "both"

        Returns:
            The written paths
        """
        stem, _ = os.path.splitext(self.resolve(path))
        written = []
        if fmt in ("csv", "both"):
            text = self.to_csv(report) if report.command == "spectrum" else self.table_to_csv(report)
            written.append(self._write_text(stem + ".csv", text))
        if fmt in ("json", "both"):
            written.append(self._write_text(stem + ".json", self.to_json(report)))
        return written

    def _write_text(self, path: str, text: str) -> str:
        directory = os.path.dirname(path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(path, "w", newline="") as f:
            f.write(text)
        logger.info(f"Wrote {path}")
        return path

    def load_json(self, path: str) -> Dict[str, Any]:
        with open(self.resolve(path), "r") as f:
            document = json.load(f)
        result = self.validate_report(document)
        if not result["valid"]:
            raise UsageError(f"Report {path} failed schema validation: {result['errors']}")
        return document

    def parse_csv(self, text: str) -> List[Dict[str, Any]]:
        """Parse root rows back into typed records."""
        rows = []
        for raw in csv.DictReader(io.StringIO(text)):
            rows.append({
                "family": raw["family"],
                "n": int(raw["n"]),
                "k": int(raw["k"]) if raw["k"] else None,
                "re": float(raw["re"]),
                "im": float(raw["im"]),
                "residual": float(raw["residual"]),
                "method": raw["method"],
                "certified": raw["certified"] == "true",
            })
        return rows


# Sweeps

def _sweep(func: Callable[[int], Any], ns: Iterable[int], settings: Settings) -> List[Any]:
    """Map func over ns, in order, on settings.workers threads."""
    ns = list(ns)
    if settings.workers <= 1 or len(ns) <= 1:
        return [func(n) for n in ns]
    with ThreadPoolExecutor(max_workers=settings.workers) as executor:
        return list(executor.map(func, ns))


def _root_options(settings: Settings) -> Dict[str, Any]:
    return {
        "tol": settings.newton_tol,
        "max_depth": settings.max_depth,
        "guard_eps": settings.guard_eps,
        "perturbation_budget": settings.perturbation_budget,
    }


def _sized(box: Rectangle, settings: Settings) -> Rectangle:
    return box.model_copy(update={"boundary_samples": settings.boundary_samples})


def _closed_form_roots(family: SymbolFamily, n: int) -> List[Root]:
    mode = family.mode(n)
    if family.theta == 2.0:
        pair = mc_roots(n)
    else:
        # mu = n^theta >= 1, so the pair is always complex
        half_im = math.sqrt(4.0 * mode.mu - 1.0) / 2.0
        pair = (complex(-0.5, half_im), complex(-0.5, -half_im))
    return [
        Root(
            family=family, n=n, re=z.real, im=z.imag,
            residual=relative_residual(family, mode, z), method=RootMethod.CLOSED_FORM,
        )
        for z in pair
    ]


def _default_prediction(family: SymbolFamily, n: int) -> Optional[AsymptoticPrediction]:
    kind = family.kind
    if kind is FamilyKind.PARABOLIC_DELAY and n >= 2:
        return predict_parabolic(n)
    if kind is FamilyKind.HYPERBOLIC_DELAY and n >= 6:
        return predict_hyperbolic(n)
    if kind is FamilyKind.PERTURBED_HYPERBOLIC and n >= 3:
        return predict_perturbed(n)
    if kind is FamilyKind.MAXWELL_CATTANEO:
        return mc_expansion(n)
    return None


def run_spectrum(
    family: SymbolFamily,
    ns: List[int],
    settings: Settings,
    box: Optional[Rectangle] = None,
) -> SpectrumReport:
    """
    Roots of each mode inside a box. Without a box maxwell-cattaneo uses its
    closed form and the other families the default window.
    """
    closed_form = box is None and family.kind is FamilyKind.MAXWELL_CATTANEO
    window = _sized(box or Rectangle.from_bounds(DEFAULT_BOX), settings)

    def one(n: int) -> List[Root]:
        if closed_form:
            return _closed_form_roots(family, n)
        return find_roots(family, family.mode(n), window, **_root_options(settings))

    roots = [root for batch in _sweep(one, ns, settings) for root in batch]
    predictions = [p for p in (_default_prediction(family, n) for n in ns) if p is not None]
    meta = {"box": None if closed_form else [window.x_min, window.x_max, window.y_min, window.y_max]}
    logger.info(f"spectrum {family.token}: {len(roots)} roots over {len(ns)} mode(s)")
    return SpectrumReport(
        command="spectrum", family=family, roots=roots, predictions=predictions,
        meta=meta, settings=settings,
    )


def _certify_or_failure(b: int, family: SymbolFamily, n: int, settings: Settings) -> Tuple[Optional[Root], Dict[str, Any]]:
    try:
        root = certify_unstable(
            b, family.mode(n), samples=settings.rouche_samples,
            tol=settings.newton_tol, guard_eps=settings.guard_eps,
        )
    except CertificationError as e:
        logger.warning(f"Certification failed for b={b}, n={n}: {e}")
        return None, {"n": n, "error": type(e).__name__, "message": str(e), "detail": e.detail}
    return root, {}


def run_certify(b: int, ns: List[int], settings: Settings, theta: float = 2.0) -> SpectrumReport:
    """
    Certify the unstable root for each n. Failed n are listed in
    meta["failures"] instead of raising.
    """
    if b not in (1, 2):
        raise UsageError(f"--b must be 1 or 2, got {b}")
    family = lemma_family(b, theta)

    results = _sweep(lambda n: _certify_or_failure(b, family, n, settings), ns, settings)
    roots, table, failures = [], [], []
    for n, (root, failure) in zip(ns, results):
        if root is None:
            failures.append(failure)
            continue
        roots.append(root)
        table.append({
            "n": n, "x_n": root.re, "y_n": root.im,
            "margin": root.rouche_margin, "residual": root.residual,
        })

    certified = [row["n"] for row in table]
    meta = {
        "b": b,
        "failures": failures,
        "smallest_certified_n": min(certified) if certified else None,
    }
    return SpectrumReport(command="certify", family=family, roots=roots, table=table, meta=meta, settings=settings)


def _lemma_row(b: int, family: SymbolFamily, prediction: AsymptoticPrediction, settings: Settings) -> Tuple[Root, Dict[str, Any]]:
    root, _ = _certify_or_failure(b, family, prediction.n, settings)
    if root is None:
        root = lemma_root(b, family.mode(prediction.n), tol=settings.newton_tol)
    row = {
        "n": prediction.n,
        "x_pred": prediction.x_pred,
        "x_lambert": prediction.x_lambert,
        "x_found": root.re,
        "ratio": root.re / prediction.x_pred,
        "abs_gap": abs(root.re - prediction.x_pred),
        "certified": root.certified,
    }
    return root, row


def run_asymptote(family: SymbolFamily, ns: List[int], settings: Settings) -> SpectrumReport:
    """
    Compare predicted and found real parts per n. perturbed-hyperbolic runs
    over the admissible indices inside [min(ns), max(ns)].
    """
    kind = family.kind
    meta: Dict[str, Any] = {}

    if kind in (FamilyKind.PARABOLIC_DELAY, FamilyKind.HYPERBOLIC_DELAY):
        b = 1 if kind is FamilyKind.PARABOLIC_DELAY else 2
        predict = predict_parabolic if b == 1 else predict_hyperbolic
        predictions = [predict(n) for n in ns]
        results = _sweep(lambda i: _lemma_row(b, family, predictions[i], settings), range(len(ns)), settings)
        roots = [r for r, _ in results]
        table = [row for _, row in results]
        certified = [row["n"] for row in table if row["certified"]]
        meta = {"b": b, "smallest_certified_n": min(certified) if certified else None}

    elif kind is FamilyKind.PERTURBED_HYPERBOLIC:
        indices = admissible_indices(max(ns), start=min(ns))
        roots, table, predictions, skipped = [], [], [], []
        for index in indices:
            try:
                root = find_perturbed_root(index, tol=settings.newton_tol)
            except NoBracketError as e:
                logger.warning(f"Skipping n={index.n}: {e}")
                skipped.append(index.n)
                continue
            prediction = predict_perturbed(index.n)
            roots.append(root)
            predictions.append(prediction)
            table.append({
                "n": index.n,
                "x_pred": prediction.x_pred,
                "x_found": root.re,
                "ratio": root.re / prediction.x_pred,
                "abs_gap": abs(root.re - prediction.x_pred),
                "y_found": root.im,
                "y_in_bracket": index.n < root.im < index.n + 1,
            })
        meta = {"admissible": [i.n for i in indices], "skipped": skipped}

    elif kind is FamilyKind.MAXWELL_CATTANEO:
        predictions = [mc_expansion(n) for n in ns]
        roots = [r for n in ns for r in _closed_form_roots(family, n)]
        table = []
        for prediction in predictions:
            y_found = mc_roots(prediction.n)[0].imag
            table.append({
                "n": prediction.n,
                "x_pred": prediction.x_pred,
                "x_found": -0.5,
                "y_pred": prediction.y_pred,
                "y_found": y_found,
                "abs_gap": abs(y_found - prediction.y_pred),
            })

    else:
        raise UsageError(f"No asymptotic prediction for {family.token}")

    return SpectrumReport(
        command="asymptote", family=family, roots=roots, predictions=predictions,
        table=table, meta=meta, settings=settings,
    )


def _mode_disk(family: SymbolFamily, mode: Mode, settings: Settings) -> Circle:
    b = family.kind.order
    try:
        disk, _ = certification_disk(b, mode, settings.rouche_samples, settings.guard_eps)
    except CertificationError as e:
        logger.debug(f"n={mode.n}: no certification disk ({e}), counting in the Lemma disk")
        w = lemma_center(mode)
        disk = Circle.around(w, abs(w) / 2.0)
    return disk.model_copy(update={"boundary_samples": settings.boundary_samples})


def run_stablecheck(
    family: SymbolFamily,
    ns: List[int],
    settings: Settings,
    box: Optional[Rectangle] = None,
    lemma_disk: bool = False,
) -> SpectrumReport:
    """
    Count roots per n in a window, or with lemma_disk in each mode's
    certification disk (the Lemma disk when no disk certifies). The verdict
    is EMPTY when every count is zero.
    """
    window = _sized(box or Rectangle.from_bounds(STABLE_WINDOW), settings)

    def one(n: int) -> int:
        mode = family.mode(n)
        contour = window
        if lemma_disk:
            contour = _mode_disk(family, mode, settings)
        return winding_number(family, mode, contour, settings.guard_eps)

    counts = _sweep(one, ns, settings)
    table = [{"n": n, "count": count} for n, count in zip(ns, counts)]
    verdict = "EMPTY" if all(c == 0 for c in counts) else "NONEMPTY"
    meta = {
        "verdict": verdict,
        "contour": "lemma-disk" if lemma_disk else [window.x_min, window.x_max, window.y_min, window.y_max],
    }
    logger.info(f"stablecheck {family.token}: {verdict}")
    return SpectrumReport(command="stablecheck", family=family, table=table, meta=meta, settings=settings)


def run_simulate(
    family: SymbolFamily,
    n: int,
    settings: Settings,
    t_end: Optional[float] = None,
    dt: float = 0.01,
    history: Optional[HistorySpec] = None,
    box: Optional[Rectangle] = None,
    compare: bool = True,
    trajectory_path: Optional[str] = None,
) -> SpectrumReport:
    """
    Simulate one mode, fit its growth and optionally compare with the abscissa.
    t_end defaults to 80 delays, the span cross_validate fits over.
    """
    mode = family.mode(n)
    if t_end is None:
        t_end = CROSS_VALIDATE_DELAYS * family.h
    trajectory = simulate_mode(family, mode, history or HistorySpec(), t_end, dt)
    if trajectory_path:
        trajectory.export(trajectory_path)
    growth = estimate_growth(trajectory, settings.window_fraction)

    row: Dict[str, Any] = {
        "n": n,
        "sigma_hat": growth.sigma_hat,
        "r_squared": growth.r_squared,
        "peaks_used": growth.peaks_used,
        "reliable": growth.reliable,
        "abscissa": None,
        "rel_error": None,
    }
    if compare:
        window = _sized(box or Rectangle.from_bounds(DEFAULT_BOX), settings)
        abscissa = spectral_abscissa_window(family, mode, window, **_root_options(settings))
        row["abscissa"] = abscissa
        if abscissa is not None:
            row["rel_error"] = abs(growth.sigma_hat - abscissa) / max(1.0, abs(abscissa))

    meta = {
        "t_end": t_end,
        "dt": dt,
        "fit_window": list(growth.fit_window),
        "blow_up_index": trajectory.blow_up_index,
        "trajectory": trajectory_path,
    }
    return SpectrumReport(command="simulate", family=family, table=[row], meta=meta, settings=settings)
