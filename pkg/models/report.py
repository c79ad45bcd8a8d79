from dataclasses import dataclass, field
import csv
import io
import json

CSV_COLUMNS = ["kind", "name", "value", "order", "outputs", "mean_ns", "R", "RR"]


@dataclass(frozen=True)
class DerivativeRow:
    request: str
    value: float

    def to_dict(self):
        return {
            'request': self.request,
            'value': self.value,
        }


@dataclass(frozen=True)
class BenchRow:
    """Timing of one full-tensor order; RR is undefined for the first order."""
    order: int
    outputs: int
    mean_ns: float
    R: float
    RR: float | None

    def to_dict(self):
        return {
            'order': self.order,
            'outputs': self.outputs,
            'mean_ns': self.mean_ns,
            'R': self.R,
            'RR': self.RR,
        }


@dataclass
class RunReport:
    primal: dict[str, float] = field(default_factory=dict)
    derivatives: list[DerivativeRow] = field(default_factory=list)
    bench: list[BenchRow] = field(default_factory=list)

    def add_derivative(self, request: str, value: float):
        self.derivatives.append(DerivativeRow(request, float(value)))

    def to_dict(self):
        return {
            'primal': dict(self.primal),
            'derivatives': [row.to_dict() for row in self.derivatives],
            'bench': [row.to_dict() for row in self.bench],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            primal={name: float(value) for name, value in data.get('primal', {}).items()},
            derivatives=[DerivativeRow(row['request'], float(row['value']))
                         for row in data.get('derivatives', [])],
            bench=[BenchRow(int(row['order']), int(row['outputs']), float(row['mean_ns']),
                            float(row['R']), None if row.get('RR') is None else float(row['RR']))
                   for row in data.get('bench', [])],
        )

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for name, value in self.primal.items():
            writer.writerow({'kind': 'primal', 'name': name, 'value': repr(value)})
        for row in self.derivatives:
            writer.writerow({'kind': 'derivative', 'name': row.request, 'value': repr(row.value)})
        for row in self.bench:
            writer.writerow({
                'kind': 'bench',
                'order': row.order,
                'outputs': row.outputs,
                'mean_ns': repr(row.mean_ns),
                'R': repr(row.R),
                'RR': '' if row.RR is None else repr(row.RR),
            })
        return out.getvalue()
