"""JSON model files.

A model file looks like::

    {
      "variables":  [{"name": "A", "domain": [0, 1]}, ...],
      "exogenous":  [{"name": "U", "domain": [0, 1]}],
      "pmf":        {"joint": [{"u": {"U": 0}, "p": "1/2"}, ...]},
      "mechanisms": [{"var": "A", "parents": ["U"], "expr": "U"},
                     {"var": "Y", "parents": ["A", "U"],
                      "table": {"0,0": 0, "0,1": 1, "1,0": 1, "1,1": 0}}],
      "reward":     {"var": "Y", "map": {"0": 0.0, "1": 1.0}},
      "metadata":   {...}
    }

Table keys join parent values with commas in ``parents`` order (the empty
string for a parentless mechanism). Probabilities are numbers or exact
``"p/q"`` strings.
"""
from __future__ import annotations

import itertools
import json
from fractions import Fraction
from pathlib import Path

import jsonschema

from cftwin.errors import CftwinError, ModelError, StructuralError
from cftwin.expr import ExprRangeError, ExprSyntaxError, compile_table
from cftwin.graph import PRIME
from cftwin.scm import Mechanism, Scm, make_scm

LOAD_TOLERANCE = 1e-9

_prob = {"oneOf": [{"type": "number", "minimum": 0},
                   {"type": "string", "pattern": r"^\s*\d+\s*(/\s*\d+\s*)?$"}]}
_var = {
    "type": "object",
    "required": ["name", "domain"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "domain": {"type": "array", "minItems": 1, "items": {"type": "integer"}},
    },
    "additionalProperties": False,
}
SCHEMA = {
    "type": "object",
    "required": ["variables", "exogenous", "pmf", "mechanisms", "reward"],
    "properties": {
        "variables": {"type": "array", "items": _var},
        "exogenous": {"type": "array", "items": _var},
        "pmf": {
            "type": "object",
            "required": ["joint"],
            "properties": {"joint": {"type": "array", "items": {
                "type": "object",
                "required": ["u", "p"],
                "properties": {
                    "u": {"type": "object", "additionalProperties": {"type": "integer"}},
                    "p": _prob,
                },
                "additionalProperties": False,
            }}},
            "additionalProperties": False,
        },
        "mechanisms": {"type": "array", "items": {
            "type": "object",
            "required": ["var", "parents"],
            "properties": {
                "var": {"type": "string"},
                "parents": {"type": "array", "items": {"type": "string"}},
                "table": {"type": "object", "additionalProperties": {"type": "integer"}},
                "expr": {"type": "string"},
            },
            "oneOf": [{"required": ["table"]}, {"required": ["expr"]}],
            "additionalProperties": False,
        }},
        "reward": {
            "type": "object",
            "required": ["var"],
            "properties": {
                "var": {"type": "string"},
                "map": {"type": "object", "additionalProperties": {"type": "number"}},
            },
            "additionalProperties": False,
        },
        "metadata": {"type": "object"},
    },
    "additionalProperties": False,
}


class ScmFileError(CftwinError, ValueError):
    """Invalid model file; ``problems`` lists ``(json path, message)`` pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        text = "; ".join(f"{p}: {m}" for p, m in self.problems)
        super().__init__(text)


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _parse_prob(p):
    if isinstance(p, str):
        return Fraction(p.replace(" ", ""))
    if isinstance(p, int):
        return Fraction(p)
    return float(p)


def scm_from_dict(doc: dict) -> Scm:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ScmFileError((_path(e.absolute_path), e.message) for e in errors)

    problems = []
    endo = [v["name"] for v in doc["variables"]]
    exo = [v["name"] for v in doc["exogenous"]]
    domains = {v["name"]: v["domain"] for v in doc["variables"] + doc["exogenous"]}

    mechanisms = {}
    for i, m in enumerate(doc["mechanisms"]):
        where = f"$.mechanisms[{i}]"
        name, parents = m["var"], tuple(m["parents"])
        unknown = [p for p in parents if p not in domains]
        if name not in endo:
            problems.append((where + ".var", f"{name!r} is not a declared variable"))
            continue
        if unknown:
            problems.append((where + ".parents", f"undeclared parents {unknown}"))
            continue
        if name in mechanisms:
            problems.append((where + ".var", f"second mechanism for {name!r}"))
            continue
        if "expr" in m:
            try:
                table = compile_table(m["expr"], parents, domains, domains[name])
            except (ExprSyntaxError, ExprRangeError) as err:
                problems.append((where + ".expr", str(err)))
                continue
            mechanisms[name] = Mechanism(parents, table, m["expr"])
        else:
            table = {}
            for key, val in m["table"].items():
                try:
                    combo = tuple(int(x) for x in key.split(",")) if key else ()
                except ValueError:
                    problems.append((where + f".table.{key}", "keys are comma-joined integers"))
                    continue
                table[combo] = val
            for combo in itertools.product(*(domains[p] for p in parents)):
                if combo not in table:
                    key = ",".join(map(str, combo))
                    problems.append((where + ".table", f"missing row {key!r}"))
                    break
            mechanisms[name] = Mechanism(parents, table)

    for j, name in enumerate(endo):
        if name.endswith(PRIME):
            src = name[:-len(PRIME)]
            mech = mechanisms.get(name)
            if src not in endo or mech is None or mech.parents != (src,):
                problems.append((f"$.variables[{j}].name",
                                 f"{name!r} ends with {PRIME!r}; such names are reserved for "
                                 f"twin copies whose only parent is {src!r}"))

    pmf = {}
    for i, row in enumerate(doc["pmf"]["joint"]):
        u = row["u"]
        if set(u) != set(exo):
            problems.append((f"$.pmf.joint[{i}].u", f"must assign exactly {exo}"))
            continue
        pmf[tuple(u[n] for n in exo)] = _parse_prob(row["p"])
    if pmf:
        total = sum(pmf.values())
        if abs(total - 1) > LOAD_TOLERANCE:
            problems.append(("$.pmf", f"probabilities sum to {float(total)!r}, not 1"))

    reward = doc["reward"]
    rmap = None
    if "map" in reward:
        rmap = {int(k): float(v) for k, v in reward["map"].items()}
    if problems:
        raise ScmFileError(problems)
    try:
        return make_scm(endo, exo, domains, mechanisms, pmf, reward["var"], rmap,
                        doc.get("metadata"), pmf_tolerance=LOAD_TOLERANCE)
    except StructuralError as err:
        path = "$.mechanisms"
        if err.edge is not None:
            path += f" ({err.edge[0]}->{err.edge[1]})"
        raise ScmFileError([(path, str(err))]) from None
    except ModelError as err:
        raise ScmFileError([("$", str(err))]) from None


def load_scm(path) -> Scm:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ScmFileError([("$", f"cannot read {path}: {err.strerror}")]) from None
    except json.JSONDecodeError as err:
        raise ScmFileError([("$", f"invalid JSON: {err}")]) from None
    return scm_from_dict(doc)


def _prob_out(p):
    if isinstance(p, Fraction):
        return f"{p.numerator}/{p.denominator}" if p.denominator != 1 else int(p)
    return p


def scm_to_dict(scm: Scm) -> dict:
    doc = {
        "variables": [{"name": n, "domain": list(scm.domains[n])} for n in scm.endogenous],
        "exogenous": [{"name": n, "domain": list(scm.domains[n])} for n in scm.exogenous],
        "pmf": {"joint": [{"u": dict(zip(scm.exogenous, vals)), "p": _prob_out(p)}
                          for vals, p in scm.exogenous_pmf]},
        "mechanisms": [],
        "reward": {"var": scm.reward_var,
                   "map": {str(k): float(v) for k, v in scm.reward_map.items()}},
    }
    for n in scm.endogenous:
        mech = scm.mechanisms[n]
        entry = {"var": n, "parents": list(mech.parents)}
        if mech.expr is not None:
            entry["expr"] = mech.expr
        else:
            entry["table"] = {",".join(map(str, k)): v for k, v in mech.table.items()}
        doc["mechanisms"].append(entry)
    if scm.metadata:
        doc["metadata"] = dict(scm.metadata)
    return doc


def dumps(scm: Scm) -> str:
    return json.dumps(scm_to_dict(scm), indent=2) + "\n"


def save_scm(scm: Scm, path) -> None:
    Path(path).write_text(dumps(scm))
