"""Mutual synchronization of three oscillators through a feedback path.

Each junction's RF voltage is high-pass filtered, converted to a current
by a transconductance stage, and injected into the other junctions. At
300 K every oscillator wanders in phase on its own; with the feedback
enabled the three pull each other onto a common rhythm. The signature
is a narrower spectral line carrying more power at the carrier.

Runs the same seeds with the coupling off and on, so the thermal noise
histories are directly comparable.
"""

import numpy as np

import stolab as sl
from stolab import presets
from stolab import spectral as sp

SEEDS = (0, 1, 2)
DUR, SETTLE, STRIDE = 2.2e-6, 0.2e-6, 16

scale = presets.PSD_VOLUME_SCALE
dev = presets.nominal_device(scale)
i_dc = presets.nominal_bias(scale)
cfg = sl.StepperConfig(dt=1e-12, scheme="heun")


def carrier_stats(g_m: float, seed: int):
    net = sl.NetworkConfig(oscillators=[dev] * 3, g_m=g_m, topology="global",
                           hp_cutoff=presets.NOMINAL_HP_CUTOFF, i_dc=i_dc)
    tr = sl.simulate_network(net, cfg, DUR, sample_stride=STRIDE,
                             master_seed=seed)
    fs = tr.sample_rate
    v = tr.voltage[0, int(SETTLE * fs):]
    s = sp.welch_psd(v, fs, 32768, check_parseval=False)
    f0, p_band = sp.find_carrier(s, 0.3e9, 3e9)
    return f0, sp.linewidth(s, f0).value_hz, p_band


print(f"three oscillators, g_m = {presets.NOMINAL_G_M * 1e3:.1f} mS, "
      f"high-pass corner {presets.NOMINAL_HP_CUTOFF / 1e6:.0f} MHz, 300 K")
print()
print(f"{'seed':>4}   {'state':>9} {'f_0 (GHz)':>10} {'FWHM (MHz)':>11} "
      f"{'P_band (V^2)':>13}")

lw = {0.0: [], presets.NOMINAL_G_M: []}
bp = {0.0: [], presets.NOMINAL_G_M: []}
for seed in SEEDS:
    for g_m, label in ((0.0, "free"), (presets.NOMINAL_G_M, "coupled")):
        f0, width, p_band = carrier_stats(g_m, seed)
        lw[g_m].append(width)
        bp[g_m].append(p_band)
        print(f"{seed:>4}   {label:>9} {f0 / 1e9:>10.4f} "
              f"{width / 1e6:>11.2f} {p_band:>13.3e}")

print()
print(f"median linewidth: {np.median(lw[0.0]) / 1e6:.2f} MHz free -> "
      f"{np.median(lw[presets.NOMINAL_G_M]) / 1e6:.2f} MHz coupled")
print(f"median band power: {np.median(bp[0.0]):.3e} V^2 free -> "
      f"{np.median(bp[presets.NOMINAL_G_M]):.3e} V^2 coupled")
print()
print("Feedback coupling trades three wandering lines for one stiffer")
print("one: the array behaves as a single oscillator with a cleaner")
print("carrier, which is what makes it usable as a mixer LO.")
