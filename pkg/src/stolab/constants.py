"""Physical constants (SI, CODATA 2018 exact values where defined)."""

# reduced Planck constant [J s]
HBAR = 1.054571817e-34

# elementary charge [C]
E_CHARGE = 1.602176634e-19

# Boltzmann constant [J/K]
K_B = 1.380649e-23

# default gyromagnetic ratio [rad s^-1 T^-1]
GAMMA_DEFAULT = 1.76e11

TWO_PI = 6.283185307179586
