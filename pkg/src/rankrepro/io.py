"""CSV ingestion and the canonical result document.

Loaders reject malformed rows with the offending line number instead of
coercing. The result document is a versioned JSON object whose canonical
byte form is deterministic for a fixed seed (volatile wall time is stored as
null; the measured value goes to the diagnostic stream).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError
from .pl import PlInstance, TopChoiceTrial
from .regression import RegressionInstance, build_design

RESULT_SCHEMA_VERSION = 1


def _read_rows(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise DataFormatError(f"no such file: {path}") from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path} is not valid UTF-8") from exc


def load_populations_csv(path):
    """Read a ``population_id,value`` file into per-population sample lists.

    Rows are grouped by id preserving file order; ids are returned sorted
    lexicographically for stable indexing.

    Returns
    -------
    (ids, samples) : (list of str, list of np.ndarray)
    """
    rows = _read_rows(path)
    if not rows or [c.strip() for c in rows[0]] != ["population_id", "value"]:
        raise DataFormatError("expected header 'population_id,value'", line=1)
    groups: dict = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue
        if len(row) != 2:
            raise DataFormatError(f"expected 2 columns, got {len(row)}", line=lineno)
        pid = row[0].strip()
        if pid == "":
            raise DataFormatError("empty population_id", line=lineno)
        try:
            value = float(row[1])
        except ValueError:
            raise DataFormatError(f"non-numeric value {row[1]!r}", line=lineno) from None
        if not np.isfinite(value):
            raise DataFormatError(f"non-finite value {row[1]!r}", line=lineno)
        groups.setdefault(pid, []).append(value)
    if not groups:
        raise DataFormatError("file contains no data rows")
    for pid, vals in groups.items():
        if len(vals) == 0:
            raise DataFormatError(f"population {pid!r} has no observations")
    ids = sorted(groups)
    return ids, [np.array(groups[pid], dtype=float) for pid in ids]


_MATCH_HEADERS = (
    ["home_id", "away_id", "home_goals", "away_goals"],
    ["home_id", "away_id", "score_diff"],
)


def load_matches_csv(path, intercept: bool = True) -> RegressionInstance:
    """Read match results into a regression instance with a +1/-1 design.

    Accepts ``home_id,away_id,home_goals,away_goals`` (score difference is
    derived) or ``home_id,away_id,score_diff``. Duplicate fixtures stack.
    """
    rows = _read_rows(path)
    if not rows:
        raise DataFormatError("empty file", line=1)
    header = [c.strip() for c in rows[0]]
    if header not in [list(h) for h in _MATCH_HEADERS]:
        raise DataFormatError(
            "expected header 'home_id,away_id,home_goals,away_goals' or "
            "'home_id,away_id,score_diff'",
            line=1,
        )
    goals_schema = len(header) == 4
    raw_matches = []
    diffs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue
        if len(row) != len(header):
            raise DataFormatError(f"expected {len(header)} columns, got {len(row)}", line=lineno)
        home, away = row[0].strip(), row[1].strip()
        if home == "" or away == "":
            raise DataFormatError("empty team id", line=lineno)
        if home == away:
            raise DataFormatError(f"team {home!r} cannot play itself", line=lineno)
        try:
            if goals_schema:
                hg, ag = float(row[2]), float(row[3])
                diff = hg - ag
            else:
                diff = float(row[2])
        except ValueError:
            raise DataFormatError("non-numeric score", line=lineno) from None
        raw_matches.append((home, away))
        diffs.append(diff)
    if not raw_matches:
        raise DataFormatError("file contains no match rows")
    teams = sorted({t for pair in raw_matches for t in pair})
    index = {t: i for i, t in enumerate(teams)}
    matches = [(index[h], index[a]) for h, a in raw_matches]
    design = build_design(matches, teams, intercept=intercept)
    return RegressionInstance(
        design=design, y=np.array(diffs), teams=tuple(teams), intercept=intercept
    )


def load_trials_csv(path) -> PlInstance:
    """Read ``item1,item2,item3,chosen`` top-choice trials.

    Items must be ascending within each row and the chosen item a member of
    the triple. Unequal per-subset repetition counts are accepted but flagged
    on the instance as ragged.
    """
    rows = _read_rows(path)
    if not rows or [c.strip() for c in rows[0]] != ["item1", "item2", "item3", "chosen"]:
        raise DataFormatError("expected header 'item1,item2,item3,chosen'", line=1)
    trials = []
    max_item = -1
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue
        if len(row) != 4:
            raise DataFormatError(f"expected 4 columns, got {len(row)}", line=lineno)
        try:
            i1, i2, i3, chosen = (int(c) for c in row)
        except ValueError:
            raise DataFormatError("non-integer item id", line=lineno) from None
        if not i1 < i2 < i3:
            raise DataFormatError(f"items must be sorted ascending, got {(i1, i2, i3)}", line=lineno)
        if chosen not in (i1, i2, i3):
            raise DataFormatError(f"chosen item {chosen} not in triple", line=lineno)
        if min(i1, i2, i3) < 0:
            raise DataFormatError("item ids must be nonnegative", line=lineno)
        trials.append(TopChoiceTrial(subset=(i1, i2, i3), chosen=chosen))
        max_item = max(max_item, i3)
    if not trials:
        raise DataFormatError("file contains no trial rows")
    counts = {}
    for t in trials:
        counts[t.subset] = counts.get(t.subset, 0) + 1
    ragged = len(set(counts.values())) > 1
    return PlInstance(K=max_item + 1, trials=tuple(trials), ragged=ragged)


@dataclass
class ResultDocument:
    """Serializable record of one pipeline run, replayable from its seed."""

    method: str
    alpha: float
    K: int
    orientation: str
    populations: list
    marginal: list  # [[population, lo, hi], ...]
    joint_size: int | None
    candidate: dict
    acceptance_region: dict
    seed: int
    versions: dict = field(default_factory=dict)
    runtime_seconds: float | None = None
    notes: str = ""
    schema_version: int = RESULT_SCHEMA_VERSION

    def to_dict(self, canonical: bool = True) -> dict:
        return {
            "schema_version": self.schema_version,
            "method": self.method,
            "alpha": self.alpha,
            "K": self.K,
            "orientation": self.orientation,
            "populations": list(self.populations),
            "marginal": [[str(p), int(lo), int(hi)] for p, lo, hi in self.marginal],
            "joint_size": self.joint_size,
            "candidate": self.candidate,
            "acceptance_region": self.acceptance_region,
            "seed": self.seed,
            "versions": self.versions,
            # excluded from the canonical byte form; see module docstring
            "runtime_seconds": None if canonical else self.runtime_seconds,
            "notes": self.notes,
        }

    def to_json(self, canonical: bool = True) -> str:
        return json.dumps(self.to_dict(canonical=canonical), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultDocument":
        raw = json.loads(text)
        if raw.get("schema_version") != RESULT_SCHEMA_VERSION:
            raise DataFormatError(
                f"unsupported result schema version {raw.get('schema_version')!r}"
            )
        return cls(
            method=raw["method"],
            alpha=raw["alpha"],
            K=raw["K"],
            orientation=raw["orientation"],
            populations=raw["populations"],
            marginal=[(p, int(lo), int(hi)) for p, lo, hi in raw["marginal"]],
            joint_size=raw["joint_size"],
            candidate=raw["candidate"],
            acceptance_region=raw["acceptance_region"],
            seed=raw["seed"],
            versions=raw["versions"],
            runtime_seconds=raw.get("runtime_seconds"),
            notes=raw.get("notes", ""),
        )

    def marginals_csv(self) -> str:
        lines = ["population,rank_lo,rank_hi"]
        for p, lo, hi in self.marginal:
            lines.append(f"{p},{lo},{hi}")
        return "\n".join(lines) + "\n"


def result_from_pipeline(method, result, inst_populations, alpha, seed) -> ResultDocument:
    """Build the document for a finished pipeline run."""
    import scipy

    from . import __version__

    refined = result.refined
    intervals = refined.marginal_intervals()
    marginal = [(iv.population, iv.lo, iv.hi) for iv in intervals]
    cand = result.candidates
    if cand is None:
        candidate_info = {"skipped": True}
    else:
        candidate_info = {
            "c": cand.budget.c,
            "method": cand.budget.method,
            "p_star": cand.budget.p_star,
            "accepted_draws": cand.accepted_draws,
            "total_draws": cand.total_draws,
            "distinct_rankings": cand.size,
            "infeasible_draws": result.diagnostics.get("infeasible_draws", 0),
        }
    return ResultDocument(
        method=method,
        alpha=alpha,
        K=refined.K,
        orientation=refined.orientation,
        populations=list(inst_populations),
        marginal=marginal,
        joint_size=refined.joint_size,
        candidate=candidate_info,
        acceptance_region={
            "draws": refined.metadata.get("region_draws"),
            "accepted": refined.metadata.get("region_accepted"),
        },
        seed=seed,
        versions={
            "rankrepro": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    )
