"""Metal unit system: Å, ps, eV, K, g/mol.

Every mass·velocity² → energy conversion in the package goes through
:data:`MVV2E`; nothing else hard-codes it.
"""

#: Boltzmann constant, eV/K.
KB = 8.617333262e-5

#: (g/mol)·(Å/ps)² → eV.
MVV2E = 1.0364269e-4

#: eV/Å / (g/mol) → Å/ps².
FTM2V = 1.0 / MVV2E

#: eV/Å³ → GPa.
EV_A3_TO_GPA = 160.21766208

#: 1/s → 1/ps.
PER_S_TO_PER_PS = 1.0e-12
