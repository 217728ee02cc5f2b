import csv
import io
import json
import math
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from tailoredbell.exceptions import ScenarioError
from tailoredbell.mixins.analysis import RatioTable
from tailoredbell.mixins.kernel import Behaviour
from tailoredbell.mixins.scenario import Scenario

BEHAVIOUR_LAYOUT = "xyab"


class Report:
    float_digits = 17
    table_decimals = 3

    @staticmethod
    def _encode(value: Any) -> str:
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            value = float(value)
            if not math.isfinite(value):
                return json.dumps(value)
            return format(value, f".{Report.float_digits}g")
        if isinstance(value, dict):
            return "{" + ", ".join(f"{json.dumps(str(k))}: {Report._encode(v)}" for k, v in value.items()) + "}"
        if isinstance(value, (list, tuple)):
            return "[" + ", ".join(Report._encode(v) for v in value) + "]"
        if isinstance(value, np.ndarray):
            return Report._encode(value.tolist())
        if hasattr(value, "value") and isinstance(value.value, str):
            return json.dumps(value.value)
        return json.dumps(value)

    @staticmethod
    def to_json(document: Any) -> str:
        """
        JSON text with every float written to 17 significant digits.
        :param document: dicts, lists and scalars, numpy values allowed
        :return: str
        """
        return Report._encode(document)

    @staticmethod
    def to_csv(table: RatioTable) -> str:
        """Header `d\\m,2,3,...`, one row per d, 3 decimals."""
        lines = ["d\\m," + ",".join(str(m) for m in table.m_values)]
        for d, row in zip(table.d_values, table.entries):
            lines.append(f"{d}," + ",".join(f"{v:.{Report.table_decimals}f}" for v in row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def flatten_record(record: Dict, prefix: str = "") -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
        """
        Split a command record into dotted scalar columns and the rows of its one list of records.
        Nested dicts become `outer.inner` columns, lists of scalars `name.0`, `name.1`, ...
        :param record: command record
        :param prefix: column prefix of a nested record
        :return: scalar columns and the flattened rows, empty when the record holds no list of records
        """
        columns, rows = {}, []
        for key, value in record.items():
            name = f"{prefix}{key}"
            if isinstance(value, np.ndarray):
                value = value.tolist()
            if isinstance(value, dict):
                inner, inner_rows = Report.flatten_record(value, f"{name}.")
                columns.update(inner)
                rows = Report._take_rows(rows, inner_rows, name)
            elif isinstance(value, (list, tuple)) and value and all(isinstance(v, dict) for v in value):
                flat = []
                for item in value:
                    inner, inner_rows = Report.flatten_record(item, f"{name}.")
                    if inner_rows:
                        raise ScenarioError(f"{name} nests lists of records, which CSV cannot hold")
                    flat.append(inner)
                rows = Report._take_rows(rows, flat, name)
            elif isinstance(value, (list, tuple)):
                columns.update({f"{name}.{i}": v for i, v in enumerate(value)})
            else:
                columns[name] = value
        return columns, rows

    @staticmethod
    def _take_rows(rows: List[Dict], new_rows: List[Dict], name: str) -> List[Dict]:
        if rows and new_rows:
            raise ScenarioError(f"{name} is a second list of records, CSV holds one per record")
        return rows or new_rows

    @staticmethod
    def _csv_cell(value: Any) -> Any:
        if isinstance(value, (float, np.floating)):
            return format(float(value), f".{Report.float_digits}g")
        if hasattr(value, "value") and isinstance(value.value, str):
            return value.value
        return value

    @staticmethod
    def records_to_csv(records: List[Dict]) -> str:
        """
        One CSV row per record, or per entry of the record's list of records (noise points, say),
        with the record's own columns repeated on each.
        :param records: command records
        :return: str
        """
        lines = []
        for record in records:
            columns, rows = Report.flatten_record(record)
            lines.extend([{**columns, **row} for row in rows] or [columns])
        header = list(dict.fromkeys(key for line in lines for key in line))
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=header, restval="", lineterminator="\n")
        writer.writeheader()
        for line in lines:
            writer.writerow({k: Report._csv_cell(v) for k, v in line.items()})
        return out.getvalue()

    @staticmethod
    def table_to_text(table: RatioTable) -> str:
        width = Report.table_decimals + 4
        header = "d\\m".ljust(5) + "".join(str(m).rjust(width) for m in table.m_values)
        lines = [table.kind.label, header]
        for d, row in zip(table.d_values, table.entries):
            lines.append(str(d).ljust(5) + "".join(f"{v:{width}.{Report.table_decimals}f}" for v in row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def to_text(document: Union[Dict, List], indent: int = 0) -> str:
        pad = "  " * indent
        lines = []
        items = document.items() if isinstance(document, dict) else enumerate(document)
        for key, value in items:
            nested = isinstance(value, dict) or (isinstance(value, list) and value and isinstance(value[0], dict))
            if nested:
                lines.append(f"{pad}{key}:")
                lines.append(Report.to_text(value, indent + 1).rstrip("\n"))
            elif isinstance(value, float):
                lines.append(f"{pad}{key}: {value:.10g}")
            elif isinstance(value, list):
                lines.append(f"{pad}{key}: " + ", ".join(f"{v:.10g}" if isinstance(v, float) else str(v)
                                                        for v in value))
            else:
                lines.append(f"{pad}{key}: {value}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def serialize_behaviour(b: Behaviour) -> Dict:
        return {**b.scenario.to_dict(), "layout": BEHAVIOUR_LAYOUT, "p": b.flat().tolist()}

    @staticmethod
    def deserialize_behaviour(document: Union[str, Dict]) -> Behaviour:
        """
        Rebuild a behaviour from its JSON document.
        :param document: JSON text or the parsed dict
        :return: Behaviour
        """
        if isinstance(document, str):
            try:
                document = json.loads(document)
            except json.JSONDecodeError as e:
                raise ScenarioError(f"behaviour document is not JSON: {e}")
        missing = {"m", "d", "layout", "p"} - set(document)
        if missing:
            raise ScenarioError(f"behaviour document lacks {sorted(missing)}")
        if document["layout"] != BEHAVIOUR_LAYOUT:
            raise ScenarioError(f"unsupported layout {document['layout']!r}, expected {BEHAVIOUR_LAYOUT!r}")
        s = Scenario(document["m"], document["d"])
        p = np.array(document["p"], dtype=float)
        if p.ndim != 1 or p.size != (s.m * s.d) ** 2:
            raise ScenarioError(f"behaviour document needs a flat list of {(s.m * s.d) ** 2} probabilities")
        return Behaviour(s, p)
