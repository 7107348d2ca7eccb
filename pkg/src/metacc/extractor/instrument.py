"""Timing and energy variants of a clean loop file."""

from __future__ import annotations

from .outline import NEST_BEGIN, NEST_END

PROFILE_HEADER = "mc_profile.h"
MARKER_HEADER = "mc_markers.h"


def _wrap(clean: str, include: str, before: list[str], after: list[str]) -> str:
    lines = clean.splitlines()
    try:
        b = next(i for i, l in enumerate(lines) if l.strip() == NEST_BEGIN)
        e = next(i for i, l in enumerate(lines) if l.strip() == NEST_END)
    except StopIteration:
        raise ValueError("not a clean loop file: nest markers missing") from None
    out = [f'#include "{include}"']
    out += lines[:b] + [f"    {s}" for s in before] + lines[b:e + 1] + [f"    {s}" for s in after] + lines[e + 1:]
    return "\n".join(out) + "\n"


def instrument_timing(loop_file_clean: str, loop_id: str) -> str:
    """Clock reads around the nest and one MC record per execution."""
    return _wrap(
        loop_file_clean, PROFILE_HEADER,
        ["unsigned long long mc_t0, mc_t1;", "mc_t0 = mc_now_ns();"],
        ["mc_t1 = mc_now_ns();", f'mc_record("{loop_id}", mc_t1 - mc_t0);'],
    )


def instrument_energy(loop_file_clean: str, loop_id: str) -> str:
    """Marker region keyed by loop_id; the shim makes these no-ops unless enabled."""
    return _wrap(
        loop_file_clean, MARKER_HEADER,
        ["MC_MARKER_INIT;", f'MC_MARKER_START("{loop_id}");'],
        [f'MC_MARKER_STOP("{loop_id}");', "MC_MARKER_CLOSE;"],
    )
