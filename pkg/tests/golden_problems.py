"""The three problems behind the golden SDPA files; run as a script to rewrite them."""
from pathlib import Path

from spinbound.config import RelaxationConfig
from spinbound.models import ModelSpec, observable
from spinbound.moments import SDPProblem
from spinbound.relaxation import assemble, symmetry_group
from spinbound.sdp import export_sdpa

DATA = Path(__file__).parent / "data"


def chain4_minimal():
    return assemble(ModelSpec("chain", 4), RelaxationConfig(d=2, r=1))


def chain6_window():
    model = ModelSpec("chain", 6)
    cfg = RelaxationConfig(d=2, r=2, rdm_k=[3])
    base = assemble(model, cfg)
    obs = observable(model, "c2", symmetry_group(model, cfg))
    return SDPProblem(base.variables, obs, base.blocks, base.equalities, (base.objective, -2.7, -2.6), "max",
                      base.unit_box, base.lattice, base.label + " c2 window")


def square3_singles():
    return assemble(ModelSpec("square", 3), RelaxationConfig(d=1))


GOLDEN = {"chain4_minimal.dat-s": chain4_minimal, "chain6_window.dat-s": chain6_window,
          "square3_singles.dat-s": square3_singles}

if __name__ == "__main__":
    DATA.mkdir(exist_ok=True)
    for name, build in GOLDEN.items():
        export_sdpa(build(), DATA / name)
