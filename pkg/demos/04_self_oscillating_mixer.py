"""The oscillator as a mixer: conversion products and RF metrology.

No separate local oscillator is needed. A small RF current added to the
bias beats against the junction's own precession, and the resistance
nonlinearity writes the product onto the output voltage as sidebands at
f_osc +- f_rf. Part one makes the sidebands visible; part two sweeps
the drive amplitude and extracts the standard receiver figures of
merit: conversion gain, the 1 dB compression point, and the
third-order intercept.
"""

import math

import numpy as np

import stolab as sl
from stolab import mixer as mx
from stolab import presets
from stolab import spectral as sp

cfg = sl.StepperConfig(dt=1e-12, scheme="heun")

# --- part one: see the sidebands ------------------------------------
# a larger free layer keeps the thermal floor low enough to show the
# conversion products cleanly at 300 K
scale = 1000.0
dev = presets.nominal_device(scale)
i_dc = presets.nominal_bias(scale)
i_ac = 20e-6 * scale
f_rf = 0.3e9

print(f"single junction at 300 K, i_dc = {i_dc * 1e3:.1f} mA, "
      f"RF drive {i_ac * 1e3:.1f} mA at {f_rf / 1e9:.1f} GHz")
net = sl.NetworkConfig(oscillators=[dev], g_m=0.0, topology="none",
                       i_dc=i_dc,
                       rf_tones=[sl.RFTone(amplitude=i_ac, frequency=f_rf)])
tr = sl.simulate_network(net, cfg, 6.4e-6, sample_stride=16, master_seed=5)
fs = tr.sample_rate
v = tr.voltage[0, int(0.4e-6 * fs):]
s = sp.welch_psd(v, fs, 65536, check_parseval=False)
f0, _ = sp.find_carrier(s, 0.54e9, 1.26e9)
print(f"carrier found at {f0 / 1e9:.4f} GHz")
for name, fc in (("f_osc - f_rf", f0 - f_rf), ("f_osc + f_rf", f0 + f_rf)):
    p_sb, f_pk = mx.sideband_power(s, fc, dev.r_av)
    floor = mx.local_noise_floor(s, f_pk, dev.r_av)
    print(f"  {name}: {p_sb:7.1f} dBm at {f_pk / 1e9:.4f} GHz, "
          f"{p_sb - floor:5.1f} dB above the local floor")

# --- part two: sweep the drive and read off the figures of merit ----
# zero temperature isolates compression from thermal smearing
dev0 = presets.nominal_device(temperature=0.0)
grid = tuple(math.sqrt(2.0 * 1e-3 * 10 ** (p / 10.0) / 500.0)
             for p in np.arange(-58.0, -29.0, 2.0))
spec = mx.SweepSpec(i_ac_grid=grid, f_rf=0.2e9,
                    settle_time=0.6e-6, measure_time=1.2e-6)
print(f"\ndrive sweep, {len(grid)} points, "
      f"{grid[0] * 1e6:.1f} to {grid[-1] * 1e6:.1f} uA "
      f"(-58 to -30 dBm into {500:.0f} ohm) ...")
pts = mx.mixer_sweep(dev0, presets.NOMINAL_I_DC, spec, cfg, threads=4,
                     f_osc_hint=presets.F_OSC_NOMINAL)

print(f"{'P_in (dBm)':>11} {'P_sb (dBm)':>11} {'gain (dB)':>10} "
      f"{'P_3rd (dBm)':>12}")
for p in pts:
    third = "      -" if p.p_third_dbm is None else f"{p.p_third_dbm:12.1f}"
    print(f"{p.p_in_dbm:>11.1f} {p.p_sideband_low_dbm:>11.1f} "
          f"{p.conversion_gain_db:>10.2f} {third:>12}")

p1 = mx.p1db_from_points(pts)
r = mx.iip3_from_points(pts, p1)
print(f"\ninput P1dB: {p1:.2f} dBm")
print(f"IIP3: {r.iip3_dbm:.2f} dBm, OIP3: {r.oip3_dbm:.2f} dBm "
      f"(fundamental slope {r.slope_fund:.2f}, third {r.slope_third:.2f})")
print()
print("Gain holds flat at small drive, compresses past the knee, and")
print("the third-order product climbs three times as fast: textbook")
print("mixer behavior from a single magnetic junction.")
