"""A single spin-torque oscillator from bias current to RF spectrum.

A DC current through the magnetic tunnel junction cancels the damping of
the free layer and sustains a large-angle precession orbit. The orbit
modulates the junction resistance, so a constant bias current reads out
as an RF voltage. This script runs the zero-temperature dynamics at a
few bias points and shows how the carrier frequency and output power
move with current.
"""

import numpy as np

import stolab as sl
from stolab import presets
from stolab import spectral as sp

dev = presets.nominal_device(temperature=0.0)
cfg = sl.StepperConfig(dt=1e-12, scheme="heun")
m0 = sl.unit([1.0, 0.0, 0.02])  # near the easy axis, slightly canted

print("device: Ms = %.0f A/m, volume = %.2e m^3, R_P/R_AP = %.0f/%.0f ohm"
      % (dev.ms, dev.volume, dev.r_p, dev.r_ap))
print()
print("bias sweep (0.5 us per point, zero temperature):")
print(f"{'i_dc (uA)':>10} {'f_osc (GHz)':>12} {'v_rms (mV)':>11} "
      f"{'<m_z>':>7}")

for scale in (0.8, 0.9, 1.0, 1.1, 1.2):
    i_dc = presets.NOMINAL_I_DC * scale
    tr = sl.run_trajectory(m0, i_dc, dev, cfg, 5e-7,
                           sample_stride=16, master_seed=0)
    # discard the spin-up transient before measuring anything
    h = int(0.1e-6 * tr.sample_rate)
    v = tr.voltage[0, h:]
    s = sp.welch_psd(v, tr.sample_rate, 8192, check_parseval=False)
    f0, _ = sp.find_carrier(s, 0.3e9, 3e9)
    v_ac = v - v.mean()
    print(f"{i_dc * 1e6:>10.1f} {f0 / 1e9:>12.4f} "
          f"{np.sqrt(np.mean(v_ac ** 2)) * 1e3:>11.2f} "
          f"{tr.m[0, h:, 2].mean():>7.3f}")

print()
print("The moment circulates in the easy plane; the torque from the")
print("out-of-plane polarizer lifts the orbit, and that lift sets the")
print("precession rate. More current, more lift, higher frequency.")

# one waveform close up: the limit cycle is periodic to high accuracy
i_dc = presets.NOMINAL_I_DC
tr = sl.run_trajectory(m0, i_dc, dev, cfg, 5e-7, sample_stride=1,
                       master_seed=0)
fs = tr.sample_rate
s = sp.welch_psd(tr.voltage[0, int(0.1e-6 * fs):], fs, 65536,
                 check_parseval=False)
f0, _ = sp.find_carrier(s, 0.3e9, 3e9)
period = int(round(fs / f0))
tail = tr.voltage[0, -4 * period:]
wrap = tail[:period] - tail[2 * period:3 * period]
print()
print(f"carrier at {f0 / 1e9:.4f} GHz, period {period} samples at "
      f"{fs / 1e9:.0f} GS/s")
print(f"cycle-to-cycle waveform deviation: {np.max(np.abs(wrap)) * 1e6:.2f} uV "
      f"on a {np.ptp(tail) * 1e3:.1f} mV swing")
