#!/usr/bin/env python3
"""Converts the WLTC class 3b speed profile into a motor speed/torque trace.

The speed profile comes from the `wltp` package (pip install wltp==0.1.2a0).
A longitudinal vehicle model gives the wheel force; speed and torque are then
scaled linearly so that their maxima are the requested motor peaks.
"""

import argparse
import csv
import sys

import numpy as np


def vehicle_force(v, mass, f0, f1, f2, rot_factor):
    a = np.gradient(v)
    vk = v * 3.6
    road = np.where(v > 0.0, f0 + f1 * vk + f2 * vk**2, 0.0)
    return rot_factor * mass * a + road


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="-")
    ap.add_argument("--max-rpm", type=float, default=27000.0)
    ap.add_argument("--max-torque", type=float, default=160.0)
    ap.add_argument("--mass", type=float, default=1800.0, help="test mass, kg")
    ap.add_argument("--f0", type=float, default=150.0, help="road load, N")
    ap.add_argument("--f1", type=float, default=0.5, help="road load, N/(km/h)")
    ap.add_argument("--f2", type=float, default=0.035, help="road load, N/(km/h)^2")
    ap.add_argument("--rot-factor", type=float, default=1.03)
    args = ap.parse_args()

    from wltp.cycles.class3 import class_data_b

    v = np.asarray(class_data_b()["cycle"], dtype=float) / 3.6
    t = np.arange(v.size, dtype=float)
    force = vehicle_force(v, args.mass, args.f0, args.f1, args.f2, args.rot_factor)
    rpm = v / v.max() * args.max_rpm
    torque = force / force.max() * args.max_torque

    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["time_s", "speed_rpm", "torque_Nm"])
    for row in zip(t, rpm, torque):
        w.writerow([f"{row[0]:.0f}", f"{row[1]:.3f}", f"{row[2]:.4f}"])


if __name__ == "__main__":
    main()
