"""Smoke test for the mdpipe_py extension module.

Build and run:
    cargo build --release -p mdpipe-py
    python python/smoke_test.py target/release
"""

import json
import math
import sys
from pathlib import Path

if len(sys.argv) > 1:
    lib_dir = Path(sys.argv[1])
    so = lib_dir / "mdpipe_py.so"
    if not so.exists():
        so.symlink_to((lib_dir / "libmdpipe_py.so").resolve())
    sys.path.insert(0, str(lib_dir))

import mdpipe_py as md

PDB = """\
ATOM      1  N   ALA A   1       0.000   0.000   0.000  1.00  0.00           N
ATOM      2  CA  ALA A   1       1.458   0.000   0.000  1.00  0.00           C
ATOM      3  C   ALA A   1       2.009   1.420   0.000  1.00  0.00           C
ATOM      4  O   ALA A   1       1.251   2.390   0.000  1.00  0.00           O
ATOM      5  CB  ALA A   1       1.988  -0.773  -1.199  1.00  0.00           C
END
"""

SPEC = """\
label: smoke
pdb_id: 1L2Y
case_type: solution
temperature: 300
hmr: true
cell: {a: 50, b: 50, c: 50}
"""


def rotate_z(points, angle):
    c, s = math.cos(angle), math.sin(angle)
    return [(c * x - s * y + 3.0, s * x + c * y - 1.0, z + 0.5) for x, y, z in points]


def main():
    s = md.Structure.from_pdb(PDB)
    assert len(s) == 5 and s.n_residues == 1, s
    assert s.elements() == ["N", "C", "C", "O", "C"]
    assert s.radius_of_gyration() > 0.0

    xyz = s.positions()
    moved = rotate_z(xyz, 0.7)
    assert md.rmsd(moved, xyz) < 1e-9
    assert md.rmsd(moved, xyz, superpose=False) > 1.0
    rot, _, err = md.kabsch(moved, xyz)
    det = (
        rot[0][0] * (rot[1][1] * rot[2][2] - rot[1][2] * rot[2][1])
        - rot[0][1] * (rot[1][0] * rot[2][2] - rot[1][2] * rot[2][0])
        + rot[0][2] * (rot[1][0] * rot[2][1] - rot[1][1] * rot[2][0])
    )
    assert abs(det - 1.0) < 1e-9 and err < 1e-9

    area = s.sasa()
    assert area["total"] > 0.0
    assert abs(area["polar"] + area["apolar"] - area["total"]) < 1e-6

    report = json.loads(md.validate(SPEC))
    assert report["verdict"] != "error", report

    configs = md.generate_namd(SPEC)
    assert sorted(configs) == ["smoke_equilibration.conf", "smoke_minimization.conf", "smoke_production.conf"]
    assert "timestep" in configs["smoke_production.conf"]
    assert "hmr: true" in md.normalize_jobspec(SPEC)

    try:
        md.Structure.from_pdb("ATOM   garbage\n")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed PDB accepted")

    print(f"mdpipe_py {md.__version__}: ok")


if __name__ == "__main__":
    main()
