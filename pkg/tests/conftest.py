import numpy as np
import pytest

from mpemba_lab import fermion_dense, freefermion, gge_flow, model


@pytest.fixture(scope="session")
def chain8():
    """Shared L=8 integrable setup: dense fermions, tables, kernels per parity."""
    L, J, h_z = 8, 0.75, 1.0
    c_ops = fermion_dense.annihilation_ops(L)
    sectors = {}
    for parity in (freefermion.Parity.EVEN, freefermion.Parity.ODD):
        grid = freefermion.momentum_grid(L, parity)
        table = freefermion.bogoliubov(J, h_z, grid)
        sectors[parity] = {
            "grid": grid,
            "table": table,
            "kernels": gge_flow.scattering_kernels(table),
        }
    return {"L": L, "J": J, "h_z": h_z, "c_ops": c_ops, "sectors": sectors}


@pytest.fixture(scope="session")
def majoranas8(chain8):
    return fermion_dense.majorana_ops(chain8["L"], chain8["c_ops"])


def ptrace_left(rho, ell, L):
    d1, d2 = 2**ell, 2 ** (L - ell)
    return np.einsum("abcb->ac", rho.reshape(d1, d2, d1, d2))


@pytest.fixture(scope="session")
def flow_engine400():
    """The paper-scale weak-coupling engine (L = 400 integrable chain)."""
    from mpemba_lab import mpemba

    spec = model.build_tfim(400, 0.75, 1.0, 0.0, model.Boundary.PERIODIC)
    dis = model.build_lindblad_hop(400, 1.0, model.Boundary.PERIODIC)
    return mpemba.GgeFlowEngine(spec, dis)


@pytest.fixture(scope="session")
def hop_jump_ops():
    """Dense per-sector fermionized hop jump operators (boundary twist included)."""

    def build(L, parity, c_ops):
        ops = []
        for j in range(L):
            k = (j + 1) % L
            sign = 1.0
            if k != j + 1:
                sign = -1.0 if parity == freefermion.Parity.EVEN else 1.0
            ops.append(c_ops[j].conj().T @ (sign * c_ops[k] + c_ops[j]))
        return ops

    return build
