"""Deviation metrics between projected and ground-truth configurations.

Both metrics are reported in degrees over the per-joint absolute angle
differences: the maximum, and the arithmetic mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DeviationReport:
    m_max: float       # degrees
    m_avg: float       # degrees
    per_joint: np.ndarray  # degrees, shape (n,)

    def as_dict(self):
        return {
            "m_max_deg": self.m_max,
            "m_avg_deg": self.m_avg,
            "per_joint_deg": self.per_joint.tolist(),
        }


def deviation(projected, ground_truth):
    """Per-joint absolute deviations in degrees, with max and mean."""
    a = np.asarray(projected, dtype=np.float64)
    b = np.asarray(ground_truth, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"configurations must be 1-D and equal-shaped, got {a.shape} and {b.shape}")
    per_joint = np.degrees(np.abs(a - b))
    per_joint.flags.writeable = False
    return DeviationReport(
        m_max=float(per_joint.max()),
        m_avg=float(per_joint.mean()),
        per_joint=per_joint,
    )


CSV_HEADER = "frame,m_max_deg,m_avg_deg"


def csv_row(frame, report):
    return f"{frame},{report.m_max:.9g},{report.m_avg:.9g}"
