import json

import numpy as np
import pytest

from prophunt import gf2
from prophunt.codes import (
    CssCode,
    code_from_dict,
    code_to_dict,
    compute_logicals,
    load_code,
    make_rotated_surface,
    resolve_code,
    save_code,
)
from prophunt.gf2 import BitMatrix

from helpers import HX_D3, HZ_D3, LX_D3, LZ_D3, random_css_pair, toy_ldpc_code


def row_set(m: BitMatrix) -> set[frozenset[int]]:
    return {frozenset(m.row_support(i)) for i in range(m.rows)}


def test_d3_matches_reference_matrices():
    code = make_rotated_surface(3)
    assert code.n == 9 and code.k == 1
    assert code.num_x_checks == 4 and code.num_z_checks == 4
    assert row_set(code.hx) == row_set(BitMatrix.from_dense(HX_D3))
    assert row_set(code.hz) == row_set(BitMatrix.from_dense(HZ_D3))


def test_d3_logicals_homologous_to_reference():
    code = make_rotated_surface(3)
    # same coset as the reference row/column logicals
    lx_ref = np.array(LX_D3, dtype=np.uint8)
    lz_ref = np.array(LZ_D3, dtype=np.uint8)
    assert gf2.in_rowspace(code.hx, code.lx.to_dense()[0] ^ lx_ref)
    assert gf2.in_rowspace(code.hz, code.lz.to_dense()[0] ^ lz_ref)


def test_d5_parameters():
    code = make_rotated_surface(5)
    assert code.n == 25 and code.k == 1
    assert code.num_x_checks == 12 and code.num_z_checks == 12


def test_d11_qubit_count():
    code = make_rotated_surface(11)
    assert code.n == 121
    assert code.n + code.num_checks == 241


@pytest.mark.parametrize("d", [3, 5, 7])
def test_surface_stabilizer_weights(d):
    code = make_rotated_surface(d)
    for s in range(code.num_checks):
        w = len(code.check_support(s))
        assert w in (2, 4)
    weights = [len(code.check_support(s)) for s in range(code.num_checks)]
    assert weights.count(2) == 2 * (d - 1)


def test_bad_distance_rejected():
    with pytest.raises(ValueError):
        make_rotated_surface(4)
    with pytest.raises(ValueError):
        make_rotated_surface(1)


def test_compute_logicals_k0():
    hx = BitMatrix.from_dense([[1, 1, 0, 0], [0, 0, 1, 1]])
    hz = BitMatrix.from_dense([[1, 1, 1, 1], [1, 1, 0, 0]])
    lx, lz = compute_logicals(hx, hz)
    assert lx.rows == 0 and lz.rows == 0


def test_compute_logicals_rejects_non_orthogonal():
    hx = BitMatrix.from_dense([[1, 1, 0]])
    hz = BitMatrix.from_dense([[0, 1, 1]])
    with pytest.raises(ValueError, match="CSS"):
        compute_logicals(hx, hz)


def test_compute_logicals_d3_weight3():
    code = make_rotated_surface(3)
    lx, lz = compute_logicals(code.hx, code.hz)
    assert lx.rows == 1 and lz.rows == 1
    assert lx.row_weight(0) == 3 and lz.row_weight(0) == 3
    rebuilt = CssCode(name="t", n=9, k=1, hx=code.hx, hz=code.hz, lx=lx, lz=lz)
    rebuilt.validate()


def test_compute_logicals_toy_code_k3():
    code = toy_ldpc_code()
    assert code.k == 3
    weights = sorted(len(code.check_support(s)) for s in range(code.num_checks))
    assert weights[0] >= 3 and weights[-1] == 6


def test_compute_logicals_random_css():
    rng = np.random.default_rng(42)
    produced = 0
    while produced < 20:
        hx, hz = random_css_pair(rng, n=10, mx=3, mz=3)
        k = 10 - gf2.rank(hx) - gf2.rank(hz)
        if k == 0:
            continue
        produced += 1
        lx, lz = compute_logicals(hx, hz)
        code = CssCode(name="r", n=10, k=k, hx=hx, hz=hz, lx=lx, lz=lz)
        code.validate()


def test_code_file_roundtrip(tmp_path):
    code = make_rotated_surface(3)
    path = tmp_path / "surface3.json"
    save_code(code, path)
    loaded = load_code(path)
    assert loaded.hx == code.hx and loaded.hz == code.hz
    assert loaded.lx == code.lx and loaded.lz == code.lz


def test_load_without_logicals(tmp_path):
    code = make_rotated_surface(3)
    data = code_to_dict(code)
    del data["lx"], data["lz"]
    path = tmp_path / "nolog.json"
    path.write_text(json.dumps(data))
    loaded = load_code(path)
    assert loaded.k == 1
    loaded.validate()


def test_load_orthogonality_error(tmp_path):
    data = {
        "name": "broken",
        "n": 3,
        "hx": [[0, 1]],
        "hz": [[1, 2]],
    }
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ValueError, match="Hx @ Hz"):
        load_code(path)


def test_load_parse_error(tmp_path):
    path = tmp_path / "garbage.json"
    path.write_text("{not json")
    with pytest.raises(ValueError, match="parse"):
        load_code(path)


def test_user_supplied_ldpc_file(tmp_path):
    code = toy_ldpc_code()
    path = tmp_path / "toy.json"
    save_code(code, path)
    loaded = load_code(path)
    assert loaded.n == 24 and loaded.k == 3


def test_resolve_code_shorthand():
    assert resolve_code("surface:5").n == 25


def test_code_from_dict_missing_field():
    with pytest.raises(ValueError, match="malformed"):
        code_from_dict({"name": "x", "hx": []})
