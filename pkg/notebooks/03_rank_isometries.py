"""
Recovering a J(x) b from a black-box rank isometry
==================================================

A bijective map on M_n that preserves rank has the form x -> a J(x) b with
J the identity or the transpose, possibly composed with entrywise
conjugation.  ``decompose`` finds a, b, J and the flag from the operator
alone; a small perturbation destroys the structure and is rejected.
"""

import numpy as np

from fkrank import decompose, from_form, reject_probe
from fkrank.harness.generators import canonical_form, perturbed_form

rng = np.random.default_rng(2)

for jordan in ("identity", "transpose"):
    for conj in (False, True):
        form = canonical_form(rng, 4, jordan=jordan, conjugated=conj)
        r = decompose(from_form(form))
        print(f"{jordan:<9} conj={conj!s:<5} -> {r.classification:<16} residual {r.residual:.1e}")

f = perturbed_form(rng, 4, eps=1e-2)
r = decompose(f)
print("perturbed:", r.classification, "-", r.detail)
print("rejecting probe:\n", np.round(reject_probe(f), 3))

# determinant mode works from determinant preservation alone
form = canonical_form(rng, 3, unital=True)
r = decompose(from_form(form), mode="det")
ab = r.form.a @ r.form.b
print("det mode:", r.classification, " a b / (a b)_00 =\n", np.round(ab / ab[0, 0], 12))
