"""Wire billiards: chord reflection on closed curves in R^n."""

import os as _os

# must happen before numpy loads its BLAS
if _os.environ.get("WIREBILL_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["WIREBILL_THREADS"])

from .errors import (
    ConvergenceError,
    CurveConstructionError,
    DiagonalChordError,
    NicenessError,
    NumericalError,
    SpecError,
    WireBilliardError,
)
from .curves import Curve, CurvePoint, CurveSpec, build_curve
from .chords import ChordFrame, chord_frame, chord_length, phase_area
from .reflection import (
    NicenessReport,
    Orbit,
    billiard_map,
    check_nice,
    iterate_orbit,
    jacobian_check,
    reflect,
    start_from_angle,
)
from .caustics import ChordFamily, StrictionProfile, gutkin_roots, striction_profile, string_invariant
from . import ellipsoid, phase

__version__ = "0.1.0"
