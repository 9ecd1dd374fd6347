from typing import List, Sequence


def parse_int_list(value) -> List[int]:
    """'1,2,5' or a sequence of ints -> [1, 2, 5]."""
    if isinstance(value, str):
        return [int(part) for part in value.split(",") if part.strip()]
    return [int(part) for part in value]


def parse_float_list(value) -> List[float]:
    if isinstance(value, str):
        return [float(part) for part in value.split(",") if part.strip()]
    return [float(part) for part in value]


def seed_range(seed: int, repeats: int) -> List[int]:
    return list(range(seed, seed + repeats))


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(value) for value in row) for row in rows)
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}" if abs(value) >= 1e-3 or value == 0 else f"{value:.6g}"
    return str(value)


def one_line(message) -> str:
    """First line of a message, for diagnostics."""
    text = str(message).strip()
    return text.splitlines()[0] if text else ""
