import logging
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, ValidationError

from . import __version__
from .cli import parse_n_range
from .config import Settings, load_settings
from .exceptions import CertificationError, SpectralError, UsageError
from .integrator import HistorySpec
from .report import (
    ReportManager,
    SpectrumReport,
    run_asymptote,
    run_certify,
    run_simulate,
    run_spectrum,
    run_stablecheck,
)
from .rootfinder import Rectangle
from .symbols import FamilyKind, SymbolFamily

# Load environment variables
load_dotenv()

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Quasiroots",
    description="Characteristic roots, certification and growth rates of delay-PDE modal equations",
    version=__version__,
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

report_manager = ReportManager()


# Pydantic models for request validation
class ModeSelection(BaseModel):
    n: Optional[int] = Field(None, ge=1, description="Single mode index")
    n_range: Optional[str] = Field(None, description="a:b (inclusive) or a:b:log (decades)")

    def modes(self) -> List[int]:
        if (self.n is None) == (self.n_range is None):
            raise UsageError("Give exactly one of n and n_range")
        return [self.n] if self.n is not None else parse_n_range(self.n_range)


class FamilyRequest(ModeSelection):
    family: str = Field(..., description="Family token, e.g. parabolic-delay")
    h: float = Field(1.0, gt=0, description="Delay")
    theta: float = Field(2.0, gt=0, description="Coefficient exponent")

    def symbol_family(self) -> SymbolFamily:
        return SymbolFamily(kind=FamilyKind.from_token(self.family), h=self.h, theta=self.theta)


class SpectrumRequest(FamilyRequest):
    box: Optional[List[float]] = Field(None, min_length=4, max_length=4, description="x_min, x_max, y_min, y_max")


class CertifyRequest(ModeSelection):
    b: int = Field(..., ge=1, le=2, description="1 for parabolic-delay, 2 for hyperbolic-delay")
    theta: float = Field(2.0, gt=0, description="Coefficient exponent")


class StablecheckRequest(FamilyRequest):
    family: str = Field(FamilyKind.STABLE_PARABOLIC_DELAY.value, description="Family token")
    box: Optional[List[float]] = Field(None, min_length=4, max_length=4, description="x_min, x_max, y_min, y_max")
    lemma_disk: bool = Field(False, description="Count inside each mode's Lemma disk")


class SimulateRequest(BaseModel):
    family: str = Field(..., description="Family token")
    n: int = Field(..., ge=1, description="Mode index")
    h: float = Field(1.0, gt=0, description="Delay")
    theta: float = Field(2.0, gt=0, description="Coefficient exponent")
    t_end: Optional[float] = Field(None, gt=0, description="Final time (default 80 delays)")
    dt: float = Field(0.01, gt=0, description="Time step, h/m for an integer m >= 50")
    history: str = Field("constant:1", description="constant:c | sinusoid:A,f,phi | polynomial:c0,...")
    derivative_history: Optional[str] = Field(None, description="History of T' for second-order families")
    box: Optional[List[float]] = Field(None, min_length=4, max_length=4, description="Abscissa comparison window")
    compare: bool = Field(True, description="Compare with the spectral abscissa")


# Dependency to get the effective settings
def get_settings() -> Settings:
    return load_settings()


def _box(values: Optional[List[float]]) -> Optional[Rectangle]:
    if values is None:
        return None
    try:
        return Rectangle.from_bounds(values)
    except ValidationError as e:
        raise UsageError(f"Invalid box {values}: {e}")


def _http_error(e: Exception) -> HTTPException:
    if isinstance(e, (UsageError, ValidationError)):
        return HTTPException(status_code=400, detail=str(e))
    if isinstance(e, CertificationError):
        return HTTPException(status_code=409, detail={"error": type(e).__name__, "message": str(e), "detail": e.detail})
    if isinstance(e, SpectralError):
        return HTTPException(status_code=422, detail={"error": type(e).__name__, "message": str(e), "detail": e.detail})
    logger.exception("Unexpected error")
    return HTTPException(status_code=500, detail=str(e))


def _respond(report: SpectrumReport) -> Dict[str, Any]:
    return report_manager.to_dict(report)


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    return JSONResponse(status_code=400, content={"detail": jsonable_encoder(exc.errors())})


@app.get("/", tags=["Health"])
async def root():
    """Health check endpoint"""
    return {"status": "healthy", "message": "Quasiroots service is running", "version": __version__}


@app.get("/families", tags=["Families"])
async def list_families():
    """List the quasipolynomial family tokens"""
    return {"families": [kind.value for kind in FamilyKind]}


@app.post("/spectrum", tags=["Roots"])
def spectrum(request: SpectrumRequest, settings: Settings = Depends(get_settings)):
    """Roots of each mode inside a box (closed form for maxwell-cattaneo without a box)"""
    try:
        return _respond(run_spectrum(request.symbol_family(), request.modes(), settings, _box(request.box)))
    except Exception as e:
        raise _http_error(e)


@app.post("/certify", tags=["Roots"])
def certify(request: CertifyRequest, settings: Settings = Depends(get_settings)):
    """Certify the unstable root per mode; any failure answers 409"""
    try:
        report = run_certify(request.b, request.modes(), settings, theta=request.theta)
    except Exception as e:
        raise _http_error(e)
    if report.meta.get("failures"):
        raise HTTPException(status_code=409, detail={"failures": report.meta["failures"], "report": _respond(report)})
    return _respond(report)


@app.post("/asymptote", tags=["Asymptotics"])
def asymptote(request: FamilyRequest, settings: Settings = Depends(get_settings)):
    """Compare predicted and found real parts per mode"""
    try:
        return _respond(run_asymptote(request.symbol_family(), request.modes(), settings))
    except Exception as e:
        raise _http_error(e)


@app.post("/stablecheck", tags=["Roots"])
def stablecheck(request: StablecheckRequest, settings: Settings = Depends(get_settings)):
    """Count roots per mode in a window and report EMPTY or NONEMPTY"""
    try:
        report = run_stablecheck(
            request.symbol_family(), request.modes(), settings, _box(request.box), request.lemma_disk
        )
        return _respond(report)
    except Exception as e:
        raise _http_error(e)


@app.post("/simulate", tags=["Simulation"])
def simulate(request: SimulateRequest, settings: Settings = Depends(get_settings)):
    """Integrate one mode, fit its growth rate and compare with the abscissa"""
    try:
        family = SymbolFamily(kind=FamilyKind.from_token(request.family), h=request.h, theta=request.theta)
        history = HistorySpec.parse(request.history, request.derivative_history)
        report = run_simulate(
            family, request.n, settings, request.t_end, request.dt, history,
            box=_box(request.box), compare=request.compare,
        )
        return _respond(report)
    except Exception as e:
        raise _http_error(e)
