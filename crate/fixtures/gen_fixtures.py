"""Regenerates the replay fixtures, Table 1 configs and the scripted proposer.

Run from the repository root: python3 fixtures/gen_fixtures.py
"""

import difflib
import hashlib
import json
from pathlib import Path

HERE = Path(__file__).resolve().parent

# (pdk, design, CORE_UTIL, PLACEMENT_LB_ADDON, CORE_ASPECT_RATIO, CORE_MARGIN)
TABLE1 = [
    ("ASAP7", "aes", 75, 0.2, None, None),
    ("ASAP7", "ibex", 70, 0.2, None, None),
    ("ASAP7", "jpeg", 70, 0.2, None, None),
    ("SKY130HD", "aes", 30, 0.2, None, None),
    ("SKY130HD", "ibex", 50, 0.2, None, None),
    ("SKY130HD", "jpeg", 60, 0.2, None, None),
    ("Nangate45", "aes", 85, 0.2, None, None),
    ("Nangate45", "ibex", 30, 0.2, None, None),
    ("Nangate45", "jpeg", 30, 0.2, None, None),
    ("Nangate45", "bp_fe", 30, 0.11, None, None),
    ("Nangate45", "ariane133", 30, None, 1, 5),
    ("Nangate45", "ariane136", 30, None, None, None),
    ("Nangate45", "swerv_wrapper", 30, 0.08, 1, 5),
]

# (pdk, design, base rWL or None, new rWL)
TABLE2 = [
    ("ASAP7", "aes", 64640, 62710),
    ("ASAP7", "ibex", 80402, 80823),
    ("ASAP7", "jpeg", 154484, 152232),
    ("SKY130HD", "aes", 659778, 633899),
    ("SKY130HD", "ibex", 646855, 643006),
    ("SKY130HD", "jpeg", None, 1201778),
    ("Nangate45", "aes", 230044, 217415),
    ("Nangate45", "ibex", 248641, 248429),
    ("Nangate45", "jpeg", 565979, 554902),
    ("Nangate45", "bp_fe", 1603884, 1634916),
    ("Nangate45", "ariane133", 7831361, 7523708),
    ("Nangate45", "ariane136", 7986048, 7509944),
    ("Nangate45", "swerv_wrapper", 4310916, 4239837),
]

# (design, TCP, base ECP, new ECP)
TABLE4 = [
    ("ariane133", "3.4", 3.59, 3.43),
    ("ariane136", "3.0", 3.78, 3.41),
    ("bp_fe", "1.53", 1.71, 1.65),
    ("swerv_wrapper", "1.7", 2.19, 2.16),
]

TABLE3 = {
    "ariane133": (184314, 132, 195662, 620474),
    "ariane136": (194547, 136, 205959, 643350),
    "bp_fe": (38924, 11, 41418, 114292),
    "swerv_wrapper": (107466, 28, 113694, 358017),
}

TABLE2_PATCH = "table2"
TABLE4_PATCH = "table4"

# Proxy (global-route) rWL of the replay scenario and its three candidates.
PROXY_BASE = 225000
PROXY = [227250, 220500, 218250]
CANDIDATE_LINES = [
    "  return disp * weight + disp / 2;\n",
    "  return disp * (weight - 1);\n",
    "  return (disp * weight) / 2;\n",
]
TARGET_FILE = "src/dpl/Opendp.cpp"


def params(row):
    _, _, util, lb, aspect, margin = row
    p = {"CORE_UTIL": str(util), "ENABLE_DPO": "1", "EQUIVALENCE_CHECK": "0"}
    if lb is not None:
        p["PLACEMENT_LB_ADDON"] = str(lb)
    if aspect is not None:
        p["CORE_ASPECT_RATIO"] = str(aspect)
        p["CORE_MARGIN"] = str(margin)
    return p


def config(pdk, design, stage, extra=None):
    row = next(r for r in TABLE1 if r[0] == pdk and r[1] == design)
    p = params(row)
    p.update(extra or {})
    return {"design": design, "pdk": pdk, "stage": stage, "parameters": dict(sorted(p.items()))}


def report(pdk, design, stage, **metrics):
    r = {"design": design, "pdk": pdk, "stage": stage}
    r.update(metrics)
    return r


def fingerprint(patches):
    if not patches:
        return "baseline"
    return hashlib.sha256("\0".join(patches).encode()).hexdigest()[:32]


def candidate_patches():
    src = (HERE / "eda_repo" / TARGET_FILE).read_text()
    lines = src.splitlines(keepends=True)
    old = "  return disp * weight;\n"
    at = lines.index(old)
    out = []
    for new in CANDIDATE_LINES:
        edited = lines[:at] + [new] + lines[at + 1:]
        diff = difflib.unified_diff(lines, edited, "a/" + TARGET_FILE, "b/" + TARGET_FILE, n=3)
        out.append("".join(diff))
    return out


def line(cfg, patch, rep):
    return json.dumps({"config": cfg, "patch": patch, "report": rep}, sort_keys=False)


def main():
    for row in TABLE1:
        pdk, design = row[0], row[1]
        body = f"DESIGN_NAME={design}\nPLATFORM={pdk}\n"
        body += "".join(f"{k}={v}\n" for k, v in params(row).items())
        (HERE / "table1" / f"{pdk.lower()}_{design}.cfg").write_text(body)

    patches = candidate_patches()
    out = []
    for pdk, design, base, new in TABLE2:
        cfg = config(pdk, design, "Full")
        if base is not None:
            out.append(line(cfg, "baseline", report(pdk, design, "Full", routed_wirelength_um=base, drc_count=0)))
        out.append(line(cfg, TABLE2_PATCH, report(pdk, design, "Full", routed_wirelength_um=new, drc_count=0)))

    proxy_cfg = config("Nangate45", "aes", "GlobalRoute")
    full_cfg = config("Nangate45", "aes", "Full")
    out.append(line(proxy_cfg, "baseline", report("Nangate45", "aes", "GlobalRoute", routed_wirelength_um=PROXY_BASE, drc_count=0)))
    for patch, rwl in zip(patches, PROXY):
        out.append(line(proxy_cfg, fingerprint([patch]), report("Nangate45", "aes", "GlobalRoute", routed_wirelength_um=rwl, drc_count=0)))
    out.append(line(full_cfg, fingerprint([patches[2]]), report("Nangate45", "aes", "Full", routed_wirelength_um=217415, drc_count=0)))
    (HERE / "t2.qor.jsonl").write_text("\n".join(out) + "\n")

    out = []
    for design, tcp, base, new in TABLE4:
        cfg = config("Nangate45", design, "Sta", {"TARGET_CLOCK_PERIOD_NS": tcp})
        out.append(line(cfg, "baseline", report("Nangate45", design, "Sta", ecp_ns=base)))
        out.append(line(cfg, TABLE4_PATCH, report("Nangate45", design, "Sta", ecp_ns=new)))
    (HERE / "t4.qor.jsonl").write_text("\n".join(out) + "\n")

    attrs = {d: dict(zip(["cells", "macros", "nets", "pins"], v)) for d, v in sorted(TABLE3.items())}
    (HERE / "nangate45_designs.json").write_text(json.dumps(attrs, indent=2) + "\n")

    proposer = {"s1": {"candidates": patches, "repairs": []}}
    (HERE / "e2e" / "proposer.json").write_text(json.dumps(proposer, indent=2) + "\n")


if __name__ == "__main__":
    main()
