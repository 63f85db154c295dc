"""Explicit dynamics of perfect plasticity with dissipative boundary conditions.

The heavy lifting lives in the compiled extension ``plastlab._core``; this
package re-exports its public surface:

- :class:`ElasticitySet` with the ``ball``, ``deviatoric_cylinder``, and
  ``halfspace_intersection`` factories, and pointwise ``project`` /
  ``support`` / ``contains`` / ``margin_distance`` queries,
- the boundary trace law: ``project_traction``, ``psi``, ``psi_grad``,
  ``boundary_dissipation_density``, and ``moreau_yosida_H``,
- ``canonical_config`` for config validation, canonicalization, and hashing,
- ``simulate`` (in-memory run returning the energy ledger and final fields),
  ``simulate_to_dir`` (writes the manifest/ledger/snapshot artifacts), and
  ``verify_dir`` (post-hoc audit of a run directory).
"""

from ._core import (
    ConfigError,
    ElasticitySet,
    IoError,
    __version__,
    boundary_dissipation_density,
    canonical_config,
    moreau_yosida_H,
    project_traction,
    psi,
    psi_grad,
    simulate,
    simulate_to_dir,
    verify_dir,
)

__all__ = [
    "ConfigError",
    "ElasticitySet",
    "IoError",
    "__version__",
    "boundary_dissipation_density",
    "canonical_config",
    "moreau_yosida_H",
    "project_traction",
    "psi",
    "psi_grad",
    "simulate",
    "simulate_to_dir",
    "verify_dir",
]
