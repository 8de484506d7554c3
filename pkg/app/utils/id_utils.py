"""Deterministic record identifiers."""


def build_record_id(prefix: str, *parts: object) -> str:
    """Pattern: prefix-part1-part2-... ; equal job coordinates give equal ids."""
    return "-".join([prefix, *(str(part) for part in parts)])
