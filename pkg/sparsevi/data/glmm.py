"""
Mixed-Model Datasets
====================

Design-matrix construction for the epilepsy (Poisson), toenail (logistic)
and polypharmacy (logistic) longitudinal studies.
"""

import logging
from typing import Union

import numpy as np

from sparsevi.data.tables import LongitudinalTable, TableSchema
from sparsevi.exceptions import DataError, ValidationError
from sparsevi.models import GlmmFamily
from sparsevi.targets.glmm import GlmmSpec

logger = logging.getLogger(__name__)

EPILEPSY_SCHEMA = TableSchema(
    name="epilepsy",
    numeric=("visit", "seizures", "base", "age"),
    categorical={"trt": {"placebo": 0, "progabide": 1}},
)

TOENAIL_SCHEMA = TableSchema(
    name="toenail",
    numeric=("visit", "time"),
    categorical={
        "outcome": {"none or mild": 0, "moderate or severe": 1},
        "treatment": {"itraconazole": 0, "terbinafine": 1},
    },
)

POLYPHARMACY_SCHEMA = TableSchema(
    name="polypharmacy",
    numeric=("year", "age", "mhv", "inptmhv", "race"),
    categorical={
        "polypharmacy": {"no": 0, "yes": 1},
        "gender": {"female": 0, "male": 1},
    },
)

VISIT_CODES = {1: -0.3, 2: -0.1, 3: 0.1, 4: 0.3}


def parse_epilepsy_variant(variant: Union[str, int]) -> int:
    """Accept 1/2, "I"/"II" or "epilepsy1"/"epilepsy2"."""
    text = str(variant).strip().lower().replace("epilepsy", "")
    lookup = {"1": 1, "i": 1, "2": 2, "ii": 2}
    if text not in lookup:
        raise ValidationError(f"Unknown epilepsy model variant {variant!r}; use I or II")
    return lookup[text]


def _require_positive(table: LongitudinalTable, name: str) -> np.ndarray:
    values = table.column(name)
    if np.any(values <= 0):
        k = int(np.argmax(values <= 0))
        raise DataError(
            f"Column '{name}' must be positive to take logs; row {k + 2} has {values[k]!r}",
            details={"File": table.source, "Column": name},
        )
    return values


def build_epilepsy_model(
    table: LongitudinalTable,
    variant: Union[str, int] = "I",
    log_covariates: bool = True,
) -> GlmmSpec:
    """
    Poisson random-effects model for seizure counts.

    Base is log(baseline count / 4) and Age is log(age), centered over
    subjects. With ``log_covariates=False`` the raw baseline count and raw
    age (still centered) are used instead.

    Model I: fixed (1, Base, Trt, Age, Base×Trt, V4), random intercept.
    Model II: fixed (1, Base, Trt, Age, Base×Trt, Visit), random (1, Visit)
    with Visit coded −0.3, −0.1, 0.1, 0.3.
    """
    model = parse_epilepsy_variant(variant)
    if log_covariates:
        base = np.log(_require_positive(table, "base") / 4.0)
        subject_age = np.log(_require_positive(table, "age"))
    else:
        base = table.column("base")
        subject_age = table.column("age")

    # centered over subjects, one age per subject
    _, first = np.unique(table.subject, return_index=True)
    age = subject_age - subject_age[first].mean()

    trt = table.column("trt")
    visit = table.column("visit")
    ones = np.ones(table.n_rows)

    if model == 1:
        last_visit = (visit == 4).astype(float)
        X = np.column_stack([ones, base, trt, age, base * trt, last_visit])
        Z = ones[:, None]
        fixed_names = ["(Intercept)", "Base", "Trt", "Age", "Base:Trt", "V4"]
        random_names = ["(Intercept)"]
    else:
        unknown = ~np.isin(visit, list(VISIT_CODES))
        if np.any(unknown):
            k = int(np.argmax(unknown))
            raise DataError(
                f"Visit must be 1-4 for Model II; row {k + 2} has {visit[k]!r}",
                details={"File": table.source, "Column": "visit"},
            )
        coded = np.array([VISIT_CODES[int(v)] for v in visit])
        X = np.column_stack([ones, base, trt, age, base * trt, coded])
        Z = np.column_stack([ones, coded])
        fixed_names = ["(Intercept)", "Base", "Trt", "Age", "Base:Trt", "Visit"]
        random_names = ["(Intercept)", "Visit"]

    spec = GlmmSpec(
        family=GlmmFamily.POISSON_LOG,
        y=table.column("seizures"),
        X=X,
        Z=Z,
        subject=table.subject,
        n_subjects=table.n_subjects,
        fixed_names=fixed_names,
        random_names=random_names,
    )
    logger.info(
        "Epilepsy model %s: %d subjects, %d observations, d=%d",
        "I" if model == 1 else "II", spec.n_subjects, spec.n_obs, spec.dim,
    )
    return spec


def build_toenail_model(table: LongitudinalTable) -> GlmmSpec:
    """Logistic random-intercept model with fixed effects (1, Trt, t, Trt×t)."""
    trt = table.column("treatment")
    t = table.column("time")
    outcome = table.column("outcome")
    if np.any((outcome != 0) & (outcome != 1)):
        raise DataError("Toenail outcome must be 0/1", details={"File": table.source})
    ones = np.ones(table.n_rows)
    spec = GlmmSpec(
        family=GlmmFamily.BERNOULLI_LOGIT,
        y=outcome,
        X=np.column_stack([ones, trt, t, trt * t]),
        Z=ones[:, None],
        subject=table.subject,
        n_subjects=table.n_subjects,
        fixed_names=["(Intercept)", "Trt", "t", "Trt:t"],
        random_names=["(Intercept)"],
    )
    logger.info("Toenail model: %d subjects, %d observations, d=%d",
                spec.n_subjects, spec.n_obs, spec.dim)
    return spec


def mhv_indicators(mhv: np.ndarray) -> np.ndarray:
    """
    Outpatient mental-health visit bands as three 0/1 columns:
    1-5, 6-14 and 15 or more.

    Example:
        >>> mhv_indicators(np.array([8.0]))
        array([[0., 1., 0.]])
    """
    mhv = np.asarray(mhv, dtype=float)
    return np.column_stack([
        (mhv >= 1) & (mhv <= 5),
        (mhv >= 6) & (mhv <= 14),
        mhv >= 15,
    ]).astype(float)


def build_polypharmacy_model(table: LongitudinalTable) -> GlmmSpec:
    """
    Logistic random-intercept model with fixed effects
    (1, Gender, Race, Age, MHV_1, MHV_2, MHV_3, INPTMHV).
    """
    response = table.column("polypharmacy")
    if np.any((response != 0) & (response != 1)):
        raise DataError("Polypharmacy response must be 0/1", details={"File": table.source})
    race = (table.column("race") != 0).astype(float)
    inpatient = (table.column("inptmhv") > 0).astype(float)
    ones = np.ones(table.n_rows)
    X = np.column_stack([
        ones,
        table.column("gender"),
        race,
        table.column("age"),
        mhv_indicators(table.column("mhv")),
        inpatient,
    ])
    spec = GlmmSpec(
        family=GlmmFamily.BERNOULLI_LOGIT,
        y=response,
        X=X,
        Z=ones[:, None],
        subject=table.subject,
        n_subjects=table.n_subjects,
        fixed_names=["(Intercept)", "Gender", "Race", "Age", "MHV_1", "MHV_2", "MHV_3", "INPTMHV"],
        random_names=["(Intercept)"],
    )
    logger.info("Polypharmacy model: %d subjects, %d observations, d=%d",
                spec.n_subjects, spec.n_obs, spec.dim)
    return spec
