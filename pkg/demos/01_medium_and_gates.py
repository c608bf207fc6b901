"""
Programming gates through a scattering medium
=============================================

A random multimode fibre sits between two pairs of phase planes. Wavefront
matching finds plane phases that make the whole circuit act as a chosen
8 x 8 gate. Only the phases change between gates.
"""

# %%
# Sample a seeded medium: 32 fibre modes per polarization, 64 pixels per port.
import numpy as np

from mmfnet.circuit import PhasePlanes, gate_fidelity, gate_library, realize
from mmfnet.medium import sample_medium
from mmfnet.modes import port_modes
from mmfnet.wfm import WfmOptions, design_all_gates

medium = sample_medium(N=32, M=64, seed=0)
print("U1 unitary:", np.allclose(medium.U1.conj().T @ medium.U1, np.eye(64)))

# %%
# With flat planes the circuit is a speckle map with no resemblance to a gate.
inputs, outputs = port_modes(64, 4, seed=0)
T0 = realize(medium, PhasePlanes.zeros(64), inputs, outputs)
print("flat planes, F(T_I) = %.3f" % gate_fidelity(T0, gate_library("T_I"))[0])

# %%
# Design the four network gates against the same medium.
designs = design_all_gates(medium, ["T_I", "T_X", "T_M", "T_S"], opts=WfmOptions(max_iters=200))
for name, d in designs.items():
    print(f"{name}: F_gate = {d.fidelity:.4f}, transmission = {d.transmission:.3f}")

# %%
# The realized T_S block structure: a beam-splitter-like coupling per channel.
T = realize(medium, designs["T_S"].planes, designs["T_S"].inputs, designs["T_S"].outputs)
np.set_printoptions(precision=2, suppress=True)
print(np.abs(T) ** 2 / np.max(np.abs(T) ** 2))
