"""Model forms, data blocks, and serialization round trips.

A tour of the lower-level building blocks: innovations/predictor forms,
Markov parameters, Hankel data blocks, the future-input projector, and the
JSON model format shared with the command-line tools.

Run with:  python demos/04_models_blocks_and_io.py
"""

import tempfile
from pathlib import Path

import numpy as np

import parsimid as ps

# ----------------------------------------------------------------------
# A small model and its two parameterizations.
# ----------------------------------------------------------------------
model = ps.StateSpaceModel(A=[[0.7, -0.2], [1.0, 0.0]], B=[1.0, 0.5],
                           C=[1.0, -0.4], D=0.0, K=[0.3, 0.1], sigma_e2=0.5)
pred = ps.to_predictor_form(model)
print("innovations-form poles:", np.round(np.linalg.eigvals(model.A), 4))
print("predictor-form poles  :", np.round(np.linalg.eigvals(pred.A_bar), 4))
print("input Markov params   :", np.round(ps.markov_g(model, 5), 4))
print("noise Markov params   :", np.round(ps.markov_h(model, 5), 4))

# The two channels of the impulse response agree with a direct simulation.
imp = np.zeros(6)
imp[0] = 1.0
print("impulse via simulate  :", np.round(ps.simulate(model, imp), 4))
print("impulse via markov    :", np.round(ps.impulse_response(model, 6), 4))

# ----------------------------------------------------------------------
# Data blocks: past/future Hankel stacks share their columns, and the
# future-input projector annihilates exactly the rows it should.
# ----------------------------------------------------------------------
rng = np.random.default_rng(5)
u = rng.standard_normal(400)
rec = ps.SignalRecord(u=u, y=ps.simulate(model, u, 0.5 * rng.standard_normal(400)))
blocks = ps.assemble_blocks(rec, f=4, p=6)
print(f"\nblocks: f={blocks.f}, p={blocks.p}, shared columns N={blocks.N}")
print("Z_p stacks past outputs over past inputs:", blocks.Z_p.shape)

proj = ps.orth_projection_complement(blocks.U_f)
print("projector annihilation |U_f P| =", f"{np.linalg.norm(proj.apply(blocks.U_f)):.2e}")

# ----------------------------------------------------------------------
# JSON round trip: the model document is plain nested arrays and doubles
# survive exactly (shortest-representation decimal encoding).
# ----------------------------------------------------------------------
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.json"
    ps.save_model(model, path)
    back = ps.load_model(path)
    print("\nserialized keys:", sorted(ps.model_to_dict(model)))
    print("bit-exact round trip:",
          all(np.array_equal(getattr(back, f), getattr(model, f))
              for f in ("A", "B", "C", "D", "K")))
